import json

import numpy as np
import pytest

from weylstab import ColumnMissing, InvalidParameter, NonPositiveData, TooFewPoints, builtin_field
from weylstab.lab.config import ExperimentConfig, build_symbol, config_from_dict
from weylstab.lab.sweeps import (
    FIT_COLUMNS,
    GAPWATCH_COLUMNS,
    HAUSDORFF_COLUMNS,
    QUASIRES_COLUMNS,
    read_csv,
    refit,
    run_edge_sweep,
    run_gapwatch,
    run_hausdorff_sweep,
    run_quasires_sweep,
    run_sweep,
    write_csv,
)

SMALL = {"L": 16, "N": 128}
DELTAS = [0.2, 0.1, 0.05, 0.025]


def cfg(tmp_path, **data):
    base = {"grid": SMALL, "sweep": {"delta": DELTAS}, "out": str(tmp_path)}
    base.update(data)
    return config_from_dict(base)


def test_hausdorff_sweep_files_and_rows(tmp_path):
    res = run_hausdorff_sweep(cfg(tmp_path, mode="hausdorff", name="h", field={"family": "sine", "A": 1.0}))
    cols, rows = read_csv(res.paths["csv"])
    assert tuple(cols) == HAUSDORFF_COLUMNS and len(rows) == len(DELTAS) + 1
    zero = rows[0]
    assert float(zero["delta"]) == 0.0 and float(zero["hausdorff_full"]) == 0.0
    assert all(float(r["grid_doubling_err"]) >= 0 for r in rows)
    fcols, frows = read_csv(res.paths["fit"])
    assert tuple(fcols) == FIT_COLUMNS and {r["quantity"] for r in frows} == {"hausdorff_filtered", "hausdorff_full"}
    meta = json.loads(res.paths["meta"].read_text())
    assert meta["symbol_origin"] == "artifact-chosen test symbol" and meta["mode"] == "hausdorff"


def test_hausdorff_grows_with_delta(tmp_path):
    res = run_hausdorff_sweep(cfg(tmp_path, mode="hausdorff", field={"family": "sine", "A": 1.0}))
    h = res.column("hausdorff_full")
    assert np.all(np.diff(h) >= -1e-12) and h[-1] > 0


def test_constant_field_null_test(tmp_path):
    # h = 0.25 and delta * b in {4, 2, 1, 0.5}: grid translations of an x-localized symbol
    res = run_hausdorff_sweep(cfg(tmp_path, mode="hausdorff", symbol="localized", grid={"L": 32, "N": 256},
                                  field={"family": "constant", "b": 20.0}))
    assert np.max(res.column("hausdorff_full")) < 1e-8
    assert np.max(res.column("hausdorff_filtered")) < 1e-8


def test_empty_sweep_writes_header_then_raises(tmp_path):
    c = ExperimentConfig("hausdorff", build_symbol("cos_xi_plus_cos_x"), builtin_field("sine", A=1.0),
                         config_from_dict({"mode": "hausdorff", "grid": SMALL}).grid, deltas=(),
                         out_dir=tmp_path, name="empty")
    with pytest.raises(TooFewPoints):
        run_hausdorff_sweep(c)
    cols, rows = read_csv(tmp_path / "empty.csv")
    assert tuple(cols) == HAUSDORFF_COLUMNS and [float(r["delta"]) for r in rows] == [0.0]
    _, fits = read_csv(tmp_path / "empty_fit.csv")
    assert fits == []


def test_two_deltas_raise_after_writing(tmp_path):
    c = cfg(tmp_path, mode="gapwatch", name="two", sweep={"delta": [0.2, 0.1]})
    with pytest.raises(TooFewPoints):
        run_gapwatch(c)
    assert (tmp_path / "two.csv").exists()


def test_mode_mismatch(tmp_path):
    with pytest.raises(InvalidParameter):
        run_gapwatch(cfg(tmp_path, mode="hausdorff"))


def test_rerun_is_byte_identical(tmp_path):
    outs = []
    for sub, parallel in (("a", 1), ("b", 1), ("c", 3)):
        c = cfg(tmp_path / sub, mode="hausdorff", name="d", field={"family": "sine", "A": 1.0})
        res = run_sweep(c, parallel=parallel)
        outs.append(tuple(res.paths[k].read_bytes() for k in ("csv", "fit", "meta")))
    assert outs[0] == outs[1] == outs[2]


def test_gapwatch_gapless_model_at_zero(tmp_path):
    # h = 1: cos xi is a single tridiagonal chain with band [-1, 1]
    res = run_gapwatch(cfg(tmp_path, mode="gapwatch", symbol="cos_xi", grid={"L": 64, "N": 128},
                           field={"family": "affine", "b": 0.0}))
    _, rows = read_csv(res.paths["csv"])
    assert tuple(res.columns) == GAPWATCH_COLUMNS
    assert rows[0]["delta"] == "0.0" and rows[0]["gap_count"] == "0"


# narrow deep well inside a wide shallow one: isolated bound states, then a dense cluster
WELL = {"family": "trig_poly_xi", "terms": [
    {"k": 1.0, "coef": 1.0},
    {"k": 0.0, "coef": [{"gaussian": {"amplitude": -5.0, "width": 1.0}},
                        {"gaussian": {"amplitude": -1.5, "width": 6.0}}]}]}


def test_gapwatch_constant_field_keeps_gaps(tmp_path):
    # Jacobi matrix with a potential well: simple spectrum, bound states below the band
    res = run_gapwatch(cfg(tmp_path, mode="gapwatch", symbol=WELL, grid={"L": 32, "N": 64},
                           sweep={"delta": [0.15, 0.1, 0.05]}, field={"family": "constant", "b": 20.0}))
    counts = {r["gap_count"] for r in res.rows}
    widths = res.column("widest_gap")
    assert counts == {2} and np.ptp(widths) < 1e-8


def test_quasires_sweep_small(tmp_path):
    c = cfg(tmp_path, mode="quasires", name="q", field={"family": "affine", "b": 0.0},
            sweep={"delta": [0.2, 0.1, 0.05], "kappa": [0.5], "z_offsets": [0.5, 1.0]},
            quasires={"gap_points": False})
    res = run_quasires_sweep(c)
    assert tuple(res.columns) == QUASIRES_COLUMNS and len(res.rows) == 6
    for r in res.rows:
        assert r["norm"] <= r["bound"] * (1 + 1e-12)
        assert r["defect"] > 0 and r["n_active"] >= 1
    assert sorted({round(r["dist0"], 12) for r in res.rows}) == [0.5, 1.0]
    groups = {f.group for f in res.fits}
    assert len(groups) == 2 and {f.quantity for f in res.fits} == {"defect", "local_mismatch", "commutator"}


def test_edge_sweep_writes_both_edges(tmp_path):
    c = cfg(tmp_path, mode="edges", name="e", symbol="cos_x_gauss_xi", field={"family": "mu_family", "mu": 1.0},
            grid={"L": 16, "N": 128}, sweep={"delta": [0.2, 0.1, 0.05]})
    res = run_edge_sweep(c)
    assert res.paths["minus_csv"].name == "e_minus.csv" and res.paths["minus_fit"].exists()
    assert np.allclose(res.column("rho"), 2 / 3)
    assert "grid_doubling_err" in res.columns
    rec = res.fit_for("drift_abs")
    assert rec.bound_exponent == pytest.approx(2 / 3)


def test_edge_sweep_needs_mu(tmp_path):
    with pytest.raises(InvalidParameter):
        run_edge_sweep(cfg(tmp_path, mode="edges", field={"family": "sine", "A": 1.0}))


def test_refit(tmp_path):
    d = np.array([0.2, 0.1, 0.05, 0.025])
    rows = [{"delta": x, "y": 2 * x**0.5, "err": 1e-9, "z": 0.0} for x in d]
    rows.append({"delta": 0.0, "y": 0.0, "err": 1e-9, "z": 0.0})
    p = write_csv(tmp_path / "t.csv", ("delta", "y", "err", "z"), rows)
    rec = refit(p, "delta", "y", "err", bound_exponent=0.5)
    assert rec.fit.exponent == pytest.approx(0.5, abs=1e-12) and rec.bound_passed
    with pytest.raises(ColumnMissing):
        refit(p, "delta", "missing")
    with pytest.raises(NonPositiveData):
        refit(p, "delta", "z")
    short = write_csv(tmp_path / "s.csv", ("delta", "y"), rows[:2])
    with pytest.raises(TooFewPoints):
        refit(short, "delta", "y")
