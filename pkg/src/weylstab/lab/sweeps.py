"""Sweep runners: one per experiment mode, each writing a CSV, a fit CSV and a metadata JSON."""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg

from ..edges import EDGE_COLUMNS, edge_experiment, variational_edge
from ..errors import ColumnMissing, EmptySet, InvalidParameter, NonPositiveData, TooFewPoints
from ..quantize import Grid1D, build_matrix
from ..spectra import bulk_distance, default_gap_tol, find_gaps, hausdorff, spectrum
from ..stability import defect_diagnostics, make_partition
from ..symbols import perturb
from .config import ExperimentConfig
from .fit import PowerLawFit, above_floor, bound_check, fit_power_law

HAUSDORFF_COLUMNS = ("delta", "hausdorff_full", "hausdorff_filtered", "grid_doubling_err",
                     "grid_doubling_err_full")
GAPWATCH_COLUMNS = ("delta", "gap_count", "widest_gap", "gap_edges", "grid_doubling_err")
QUASIRES_COLUMNS = ("delta", "kappa", "z", "dist0", "defect", "reverse_defect", "local_mismatch", "commutator",
                    "snap_error", "dist_delta", "norm", "bound", "n_active", "grid_doubling_err")
FIT_COLUMNS = ("quantity", "group", "exponent", "log_c", "r_squared", "points", "bound_exponent",
               "c_hat", "worst_ratio", "bound_passed")


@dataclass
class FitRecord:
    quantity: str
    group: str
    fit: PowerLawFit | None
    bound_exponent: float | None = None
    c_hat: float | None = None
    worst_ratio: float | None = None
    bound_passed: bool | None = None

    def as_dict(self) -> dict:
        f = self.fit
        return {"quantity": self.quantity, "group": self.group,
                "exponent": f.exponent if f else None, "log_c": f.log_c if f else None,
                "r_squared": f.r_squared if f else None, "points": f.points if f else 0,
                "bound_exponent": self.bound_exponent, "c_hat": self.c_hat,
                "worst_ratio": self.worst_ratio, "bound_passed": self.bound_passed}


@dataclass
class SweepResult:
    mode: str
    columns: tuple[str, ...]
    rows: list[dict]
    fits: list[FitRecord] = field(default_factory=list)
    paths: dict[str, Path] = field(default_factory=dict)

    def column(self, name: str, where=None) -> np.ndarray:
        rows = self.rows if where is None else [r for r in self.rows if where(r)]
        return np.array([r[name] for r in rows], dtype=float)

    def fit_for(self, quantity: str, group: str = "") -> FitRecord:
        for rec in self.fits:
            if rec.quantity == quantity and rec.group == group:
                return rec
        raise KeyError((quantity, group))


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in columns])
    return path


def read_csv(path) -> tuple[list[str], list[dict]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return list(reader.fieldnames or []), list(reader)


def fitted(quantity: str, deltas, values, errors, group: str = "",
           bound_exponent: float | None = None, slack: float = 1.1) -> FitRecord:
    """Floor rule, then a power-law fit and optionally a pinned-constant bound check."""
    deltas, values, errors = (np.asarray(x, dtype=float) for x in (deltas, values, errors))
    keep = (deltas > 0) & above_floor(values, errors)
    pts = list(zip(deltas[keep], values[keep]))
    fit = fit_power_law(pts) if len(pts) >= 3 else None
    rec = FitRecord(quantity, group, fit)
    if bound_exponent is not None:
        chk = bound_check(deltas[keep], values[keep], bound_exponent, slack)
        rec.bound_exponent = bound_exponent
        rec.c_hat, rec.worst_ratio, rec.bound_passed = chk.c_hat, chk.worst_ratio, chk.passed
    return rec


def _map(fn, items, parallel: int):
    items = list(items)
    if parallel <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(fn, items))


def _require_points(cfg: ExperimentConfig):
    if len(cfg.deltas) < 3:
        raise TooFewPoints(f"sweep has {len(cfg.deltas)} delta values, a fit needs at least 3")


def _finish(cfg: ExperimentConfig, result: SweepResult, suffix: str = "") -> SweepResult:
    out = Path(cfg.out_dir)
    stem = cfg.name + suffix
    result.paths["csv"] = write_csv(out / f"{stem}.csv", result.columns, result.rows)
    result.paths["fit"] = write_csv(out / f"{stem}_fit.csv", FIT_COLUMNS, [f.as_dict() for f in result.fits])
    meta = out / f"{stem}_meta.json"
    meta.write_text(json.dumps(cfg.metadata(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    result.paths["meta"] = meta
    return result


def _check_mode(cfg: ExperimentConfig, mode: str):
    if cfg.mode != mode:
        raise InvalidParameter(f"config mode is {cfg.mode!r}, expected {mode!r}")


def _eigvals(K) -> np.ndarray:
    return linalg.eigvalsh(K.matrix, check_finite=False)


def _bulk(report) -> np.ndarray:
    # fully extended models (e.g. cos xi) leave nothing central; the whole spectrum is bulk then
    ev = report.central
    return np.sort(ev if ev.size >= 2 else report.eigenvalues)


def _bulk_distance(A, B) -> float:
    try:
        return bulk_distance(A, B)
    except EmptySet:
        return hausdorff(A.eigenvalues, B.eigenvalues)


def run_hausdorff_sweep(cfg: ExperimentConfig, parallel: int = 1) -> SweepResult:
    """Hausdorff distance between perturbed and unperturbed spectra over the delta sweep.

    ``grid_doubling_err`` is the bulk discrepancy of the unperturbed spectrum
    when the box and node count are both doubled; the ``_full`` variant uses
    the whole spectrum.  Models without centrally localized eigenvectors fall
    back to the whole spectrum for the filtered columns too.
    """
    _check_mode(cfg, "hausdorff")
    r0 = spectrum(build_matrix(cfg.symbol, cfg.grid), localization=True)
    r0d = spectrum(build_matrix(cfg.symbol, cfg.grid.doubled()), localization=True)
    err = _bulk_distance(r0, r0d)
    err_full = hausdorff(r0.eigenvalues, r0d.eigenvalues)

    def cell(delta):
        rd = spectrum(build_matrix(perturb(cfg.symbol, cfg.field, delta), cfg.grid), localization=True)
        return {"delta": float(delta), "hausdorff_full": hausdorff(rd.eigenvalues, r0.eigenvalues),
                "hausdorff_filtered": _bulk_distance(rd, r0), "grid_doubling_err": err,
                "grid_doubling_err_full": err_full}

    rows = [{"delta": 0.0, "hausdorff_full": 0.0, "hausdorff_filtered": 0.0,
             "grid_doubling_err": err, "grid_doubling_err_full": err_full}]
    rows += _map(cell, cfg.deltas, parallel)
    rows.sort(key=lambda r: r["delta"])
    res = SweepResult("hausdorff", HAUSDORFF_COLUMNS, rows)
    if len(cfg.deltas) >= 3:
        d = res.column("delta")
        res.fits.append(fitted("hausdorff_filtered", d, res.column("hausdorff_filtered"),
                               res.column("grid_doubling_err"), bound_exponent=0.5))
        res.fits.append(fitted("hausdorff_full", d, res.column("hausdorff_full"),
                               res.column("grid_doubling_err_full"), bound_exponent=0.5))
    _finish(cfg, res)
    _require_points(cfg)
    return res


def _central_gaps(report) -> list[tuple[float, float]]:
    ev = _bulk(report)
    if ev.size < 2:
        return []
    return find_gaps(ev, default_gap_tol(ev))


def run_gapwatch(cfg: ExperimentConfig, parallel: int = 1) -> SweepResult:
    """Inner gaps of the bulk spectrum of K_delta for delta = 0 and each sweep value.

    The bulk is the localization-filtered spectrum, or the whole spectrum when
    no eigenvector is centrally localized.
    """
    _check_mode(cfg, "gapwatch")
    r0 = spectrum(build_matrix(cfg.symbol, cfg.grid), localization=True)
    r0d = spectrum(build_matrix(cfg.symbol, cfg.grid.doubled()), localization=True)
    err = _bulk_distance(r0, r0d)

    def row(delta, report):
        gaps = _central_gaps(report)
        widest = max((hi - lo for lo, hi in gaps), default=0.0)
        edges = ";".join(f"{lo!r}:{hi!r}" for lo, hi in gaps)
        return {"delta": float(delta), "gap_count": len(gaps), "widest_gap": float(widest),
                "gap_edges": edges, "grid_doubling_err": err}

    def cell(delta):
        K = build_matrix(perturb(cfg.symbol, cfg.field, delta), cfg.grid)
        return row(delta, spectrum(K, localization=True))

    rows = [row(0.0, r0)] + _map(cell, cfg.deltas, parallel)
    rows.sort(key=lambda r: r["delta"])
    res = SweepResult("gapwatch", GAPWATCH_COLUMNS, rows)
    if len(cfg.deltas) >= 3:
        res.fits.append(fitted("widest_gap", res.column("delta"), res.column("widest_gap"),
                               res.column("grid_doubling_err")))
    _finish(cfg, res)
    _require_points(cfg)
    return res


def quasires_points(cfg: ExperimentConfig, eigenvalues: np.ndarray, report=None) -> list[float]:
    """Spectral parameters above the top edge at the configured offsets, plus the widest bulk gap midpoint."""
    top = float(eigenvalues[-1])
    zs = [top + float(o) for o in cfg.z_offsets]
    if cfg.gap_points and report is not None:
        gaps = _central_gaps(report)
        if gaps:
            lo, hi = max(gaps, key=lambda g: g[1] - g[0])
            zs.append(0.5 * (lo + hi))
    return sorted(set(zs))


def _dist(eigs: np.ndarray, z: float) -> float:
    return float(np.min(np.abs(eigs - z)))


def run_quasires_sweep(cfg: ExperimentConfig, parallel: int = 1) -> SweepResult:
    """Quasi-resolvent defects over (delta, kappa, z).

    ``grid_doubling_err`` is the change of dist(z, spec K_delta) when the grid is doubled.
    """
    _check_mode(cfg, "quasires")
    base = make_partition(cfg.r_g)
    K0 = build_matrix(cfg.symbol, cfg.grid)
    r0 = spectrum(K0, localization=True)
    ev0 = r0.eigenvalues
    zs = quasires_points(cfg, ev0, r0)
    big = cfg.grid.doubled()

    def per_delta(delta):
        sym = perturb(cfg.symbol, cfg.field, delta)
        Kd = build_matrix(sym, cfg.grid)
        return Kd, _eigvals(Kd), _eigvals(build_matrix(sym, big))

    perturbed = dict(zip(cfg.deltas, _map(per_delta, cfg.deltas, parallel)))

    def cell(key):
        delta, kappa, z = key
        Kd, evd, evd2 = perturbed[delta]
        rep = defect_diagnostics(K0, Kd, z, delta, kappa, cfg.field, base, mode=cfg.translation,
                                 eigenvalues0=ev0, eigenvalues_delta=evd, reverse=cfg.reverse)
        dd = _dist(evd, z)
        return {"delta": float(delta), "kappa": float(kappa), "z": float(z), "dist0": rep.dist0,
                "defect": rep.defect, "reverse_defect": rep.reverse_defect, "local_mismatch": rep.local_mismatch,
                "commutator": rep.commutator, "snap_error": rep.snap_error, "dist_delta": dd,
                "norm": rep.norm, "bound": rep.bound, "n_active": rep.n_active,
                "grid_doubling_err": abs(dd - _dist(evd2, z))}

    keys = [(d, k, z) for d in cfg.deltas for k in cfg.kappas for z in zs]
    rows = _map(cell, keys, parallel)
    rows.sort(key=lambda r: (r["delta"], r["kappa"], r["z"]))
    res = SweepResult("quasires", QUASIRES_COLUMNS, rows)
    if len(cfg.deltas) >= 3:
        for kappa in cfg.kappas:
            for z in zs:
                sel = lambda r, k=kappa, zz=z: r["kappa"] == k and r["z"] == zz
                d, err = res.column("delta", sel), res.column("grid_doubling_err", sel)
                group = f"kappa={kappa!r};z={z!r}"
                for q in ("defect", "local_mismatch", "commutator"):
                    res.fits.append(fitted(q, d, res.column(q, sel), err, group=group))
    _finish(cfg, res)
    _require_points(cfg)
    return res


def _edge_rows(cfg: ExperimentConfig, edge: str, parallel: int) -> tuple[list[dict], float]:
    sym = cfg.symbol if edge == "+" else -cfg.symbol
    e0 = variational_edge(build_matrix(sym, cfg.grid))
    e0d = variational_edge(build_matrix(sym, cfg.grid.doubled()))
    err = abs(e0 - e0d)
    chunks = _map(lambda d: edge_experiment(cfg.symbol, cfg.field, [d], cfg.grid, edge=edge),
                  cfg.deltas, parallel)
    rows = [dict(r.as_dict(), grid_doubling_err=err) for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: r["delta"])
    return rows, err


def run_edge_sweep(cfg: ExperimentConfig, parallel: int = 1) -> SweepResult:
    """Top-edge drift with the balanced schedule; the bottom edge goes to ``<name>_minus.csv``."""
    _check_mode(cfg, "edges")
    if cfg.field.mu is None:
        raise InvalidParameter(f"field {cfg.field.name} declares no decay exponent mu")
    columns = EDGE_COLUMNS + ("grid_doubling_err",)
    results = []
    for edge, suffix in (("+", ""), ("-", "_minus")):
        rows, _ = _edge_rows(cfg, edge, parallel)
        res = SweepResult("edges", columns, rows)
        if len(cfg.deltas) >= 3:
            d, err = res.column("delta"), res.column("grid_doubling_err")
            rho = rows[0]["rho"]
            res.fits.append(fitted("drift_abs", d, res.column("drift_abs"), err, bound_exponent=rho))
            res.fits.append(fitted("weighted_vs_base", d, res.column("weighted_vs_base"), err))
            res.fits.append(fitted("weighted_vs_perturbed", d, res.column("weighted_vs_perturbed"), err))
        results.append(_finish(cfg, res, suffix))
    _require_points(cfg)
    main, minus = results
    main.paths["minus_csv"] = minus.paths["csv"]
    main.paths["minus_fit"] = minus.paths["fit"]
    return main


RUNNERS = {"hausdorff": run_hausdorff_sweep, "gapwatch": run_gapwatch,
           "quasires": run_quasires_sweep, "edges": run_edge_sweep}


def run_sweep(cfg: ExperimentConfig, parallel: int = 1) -> SweepResult:
    return RUNNERS[cfg.mode](cfg, parallel=parallel)


def refit(csv_path, x_col: str, y_col: str, floor_col: str | None = None,
          bound_exponent: float | None = None) -> FitRecord:
    """Offline fit of one column of an emitted CSV, with the floor rule when ``floor_col`` is given."""
    cols, rows = read_csv(csv_path)
    for c in (x_col, y_col) + ((floor_col,) if floor_col else ()):
        if c not in cols:
            raise ColumnMissing(f"column {c!r} not in {csv_path}")
    x = np.array([float(r[x_col]) for r in rows])
    y = np.array([float(r[y_col]) for r in rows])
    e = np.array([float(r[floor_col]) for r in rows]) if floor_col else np.zeros_like(x)
    keep = x > 0
    if floor_col is None and np.any(y[keep] <= 0):
        raise NonPositiveData(f"column {y_col!r} has non-positive values")
    rec = fitted(y_col, x[keep], y[keep], e[keep], bound_exponent=bound_exponent)
    if rec.fit is None:
        raise TooFewPoints(f"fewer than 3 usable points in {csv_path}")
    return rec

