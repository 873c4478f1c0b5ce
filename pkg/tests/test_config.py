import math
from pathlib import Path

import numpy as np
import pytest
import yaml

from weylstab import (
    ConfigError,
    Constant,
    Cosine,
    DeltaOutOfRange,
    Gaussian,
    Grid1D,
    InvalidParameter,
    OffsetNotOnGrid,
    build_matrix,
    builtin_field,
)
from weylstab.lab.config import (
    PRESETS,
    ExperimentConfig,
    build_coefficient,
    build_field,
    build_symbol,
    config_from_dict,
    field_mu,
    load_config,
    parse_grid,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def base(**over):
    data = {"mode": "hausdorff", "grid": {"L": 16, "N": 128}, "sweep": {"delta": [0.2, 0.1, 0.05]}}
    data.update(over)
    return data


@pytest.mark.parametrize("name", PRESETS)
def test_presets_build(name):
    sym = build_symbol(name)
    assert sym.name == name
    K = build_matrix(sym, Grid1D(16.0, 128))
    assert np.array_equal(K.matrix, K.matrix.T)


def test_unknown_preset():
    with pytest.raises(InvalidParameter):
        build_symbol("mathieu")


def test_coefficients():
    assert build_coefficient(2) == Constant(2.0)
    assert build_coefficient({"cosine": {"amplitude": 2, "frequency": 3}}) == Cosine(2.0, 3.0, 0.0)
    assert build_coefficient({"gaussian": {"width": 4}}) == Gaussian(1.0, 4.0, 0.0)
    assert build_coefficient({"constant": 0.5}) == Constant(0.5)
    s = build_coefficient([1, {"cosine": {}}])
    assert s(0.0) == pytest.approx(2.0) and s(math.pi) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(InvalidParameter):
        build_coefficient({"bessel": {}})
    with pytest.raises(InvalidParameter):
        build_coefficient("two")


def test_mapping_symbol_matches_preset():
    spec = {"family": "sum", "parts": [
        {"family": "trig_poly_xi", "terms": [{"k": 1.0, "coef": 1.0}]},
        {"family": "trig_poly_xi", "terms": [{"k": 0.0, "coef": {"cosine": {}}}]}]}
    g = Grid1D(16.0, 128)
    a = build_matrix(build_symbol(spec), g).matrix
    b = build_matrix(build_symbol("cos_xi_plus_cos_x"), g).matrix
    assert np.array_equal(a, b)
    gx = build_symbol({"family": "gauss_xi", "coef": {"cosine": {}}, "sigma": 1.0})
    assert np.array_equal(build_matrix(gx, g).matrix, build_matrix(build_symbol("cos_x_gauss_xi"), g).matrix)
    for bad in ({"family": "trig_poly_xi", "terms": []}, {"family": "sum", "parts": []},
                {"family": "bessel"}, {"terms": []}, 3):
        with pytest.raises(InvalidParameter):
            build_symbol(bad)


def test_fields():
    F = build_field({"family": "mu_family", "mu": 0.5})
    assert F(np.array([0.0]))[0] == pytest.approx(1.0) and field_mu(F) == 0.5
    assert math.isinf(field_mu(build_field({"family": "affine", "b": 0.0})))
    with pytest.raises(InvalidParameter):
        field_mu(build_field({"family": "sine", "A": 1.0}))
    with pytest.raises(InvalidParameter):
        build_field({"family": "sine", "frequency": 2})
    with pytest.raises(InvalidParameter):
        build_field([1, 2])


def test_parse_grid():
    g = parse_grid("32,256")
    assert (g.L, g.N) == (32.0, 256)
    for bad in ("32", "32,255", "a,b"):
        with pytest.raises(InvalidParameter):
            parse_grid(bad)


def test_defaults_and_metadata():
    cfg = config_from_dict(base())
    assert cfg.kappas == (0.5,) and cfg.z_offsets == (0.25, 0.5, 1.0) and cfg.translation == "exact"
    meta = cfg.metadata()
    assert meta["symbol_origin"] == "artifact-chosen test symbol"
    assert meta["grid"] == {"L": 16.0, "N": 128} and meta["deltas"] == [0.2, 0.1, 0.05]


@pytest.mark.parametrize("over,exc", [
    ({"mode": "movie"}, InvalidParameter),
    ({"mode": None}, InvalidParameter),
    ({"sweep": {"delta": [0.2, 1.5]}}, DeltaOutOfRange),
    ({"sweep": {"delta": [0.0, 0.1]}}, DeltaOutOfRange),
    ({"sweep": {"delta": [0.1, 0.2, 0.05]}}, InvalidParameter),
    ({"sweep": {"delta": [0.1, 0.1, 0.05]}}, InvalidParameter),
    ({"sweep": {"delta": []}}, InvalidParameter),
    ({"sweep": {"delta": ["x"]}}, InvalidParameter),
    ({"sweep": {"delta": [0.1], "kappa": [0.0]}}, InvalidParameter),
    ({"quasires": {"translation": "spline"}}, InvalidParameter),
    ({"seed": -1}, InvalidParameter),
    ({"seed": 2**64}, InvalidParameter),
    ({"colour": "red"}, InvalidParameter),
    ({"grid": {"L": 16, "N": 15}}, InvalidParameter),
])
def test_validation_errors(over, exc):
    with pytest.raises(exc):
        config_from_dict(base(**over))


def test_offsets_must_be_commensurate():
    # h = 0.3 is not a divisor of the hop offset 1
    with pytest.raises(OffsetNotOnGrid):
        config_from_dict(base(grid={"L": 4.8, "N": 32}, symbol="cos_xi"))


def test_all_errors_are_config_errors():
    with pytest.raises(ConfigError):
        config_from_dict(["mode", "hausdorff"])


def test_direct_construction_allows_empty_sweep():
    cfg = ExperimentConfig("gapwatch", build_symbol("cos_xi"), builtin_field("constant", b=1.0),
                           Grid1D(16.0, 128), deltas=())
    assert cfg.deltas == ()


def test_load_yaml(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(yaml.safe_dump(base(name="demo", field={"family": "affine", "slope": 0.5, "b": 1.0})))
    cfg = load_config(p)
    assert cfg.name == "demo" and cfg.field(np.array([2.0]))[0] == pytest.approx(2.0)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    (tmp_path / "bad.yaml").write_text("mode: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.yaml")


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.yaml")), ids=lambda p: p.stem)
def test_shipped_configs_load(path):
    cfg = load_config(path)
    assert cfg.grid.N == 1024 and cfg.deltas == (0.2, 0.1, 0.05, 0.025, 0.0125)
