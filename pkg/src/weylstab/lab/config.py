"""YAML experiment files and the builders that turn them into symbols, fields and grids.

Schema (all keys optional except ``mode``)::

    name: hausdorff_sine
    mode: hausdorff            # hausdorff | edges | quasires | gapwatch
    symbol: cos_xi_plus_cos_x  # preset name or a mapping, see build_symbol
    field: {family: sine, A: 1.0}
    grid: {L: 64, N: 1024}
    sweep:
      delta: [0.2, 0.1, 0.05, 0.025, 0.0125]
      kappa: [0.5]
      z_offsets: [0.25, 0.5, 1.0]
    seed: 0
    out: out
    quasires: {translation: exact, r_g: 1.0, reverse: true, gap_points: true}
    edges: {n_probes: 32}
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from ..errors import ConfigError, DeltaOutOfRange, InvalidParameter
from ..quantize import Grid1D, weyl_kernel
from ..symbols import (
    Coefficient,
    CoefficientSum,
    Constant,
    Cosine,
    Gaussian,
    PerturbField,
    SymbolSpec,
    builtin_field,
    gauss_xi,
    symbol_sum,
    trig_poly_xi,
)

MODES = ("hausdorff", "edges", "quasires", "gapwatch")
DEFAULT_DELTAS = (0.2, 0.1, 0.05, 0.025, 0.0125)
DEFAULT_GRID = (64.0, 1024)


def _preset(name: str) -> SymbolSpec:
    if name == "cos_xi_plus_cos_x":
        return symbol_sum(trig_poly_xi([(1.0, 1.0)]), trig_poly_xi([(0.0, Cosine(1.0, 1.0, 0.0))]),
                          name="cos_xi_plus_cos_x")
    if name == "cos_x_gauss_xi":
        return gauss_xi(Cosine(1.0, 1.0, 0.0), 1.0, name="cos_x_gauss_xi")
    if name == "cos_xi":
        return trig_poly_xi([(1.0, 1.0)], name="cos_xi")
    if name == "bump_gauss_xi":
        # flat band [0, 1] plus bound states above it that do not feel the box
        return gauss_xi(CoefficientSum((Constant(1.0), Gaussian(1.0, 4.0, 0.0))), 1.0, name="bump_gauss_xi")
    if name == "localized":
        # x-localized: translations that stay well inside the box leave the spectrum alone
        return symbol_sum(trig_poly_xi([(1.0, Gaussian(1.0, 4.0, 0.0))]),
                          gauss_xi(Gaussian(0.5, 3.0, 0.0), 1.0), name="localized")
    raise InvalidParameter(f"unknown symbol preset {name!r}")


PRESETS = ("cos_xi_plus_cos_x", "cos_x_gauss_xi", "cos_xi", "bump_gauss_xi", "localized")


def build_coefficient(spec) -> Coefficient:
    """A number, ``{cosine: {...}}``, ``{gaussian: {...}}`` or a list of those (summed)."""
    if isinstance(spec, (int, float)):
        return Constant(float(spec))
    if isinstance(spec, list):
        return CoefficientSum(tuple(build_coefficient(s) for s in spec))
    if isinstance(spec, dict) and len(spec) == 1:
        (kind, params), = spec.items()
        params = params or {}
        if kind == "cosine":
            return Cosine(float(params.get("amplitude", 1.0)), float(params.get("frequency", 1.0)),
                          float(params.get("phase", 0.0)))
        if kind == "gaussian":
            return Gaussian(float(params.get("amplitude", 1.0)), float(params.get("width", 1.0)),
                            float(params.get("center", 0.0)))
        if kind == "constant":
            return Constant(float(params if not isinstance(params, dict) else params.get("value", 1.0)))
    raise InvalidParameter(f"cannot read coefficient {spec!r}")


def build_symbol(spec) -> SymbolSpec:
    """Preset name, or a mapping with ``family`` in trig_poly_xi / gauss_xi / sum.

    ``trig_poly_xi`` takes ``terms: [{k: 1.0, coef: ...}]``, ``gauss_xi`` takes
    ``coef`` and ``sigma``, ``sum`` takes ``parts: [...]``.
    """
    if isinstance(spec, str):
        return _preset(spec)
    if not isinstance(spec, dict) or "family" not in spec:
        raise InvalidParameter(f"cannot read symbol {spec!r}")
    fam = spec["family"]
    name = spec.get("name", fam)
    if fam == "trig_poly_xi":
        terms = [(float(t.get("k", 0.0)), build_coefficient(t.get("coef", 1.0))) for t in spec.get("terms", [])]
        if not terms:
            raise InvalidParameter("trig_poly_xi needs at least one term")
        return trig_poly_xi(terms, name=name)
    if fam == "gauss_xi":
        return gauss_xi(build_coefficient(spec.get("coef", 1.0)), float(spec.get("sigma", 1.0)), name=name)
    if fam == "sum":
        parts = [build_symbol(p) for p in spec.get("parts", [])]
        if not parts:
            raise InvalidParameter("sum needs at least one part")
        return symbol_sum(*parts, name=name)
    raise InvalidParameter(f"unknown symbol family {fam!r}")


def build_field(spec) -> PerturbField:
    if isinstance(spec, str):
        return builtin_field(spec)
    if not isinstance(spec, dict) or "family" not in spec:
        raise InvalidParameter(f"cannot read field {spec!r}")
    params = {k: v for k, v in spec.items() if k != "family"}
    try:
        return builtin_field(spec["family"], **params)
    except (KeyError, TypeError) as exc:
        raise InvalidParameter(f"bad parameters for field {spec['family']!r}: {exc}") from exc


def parse_grid(text: str) -> Grid1D:
    """``"L,N"`` as accepted by ``--grid``."""
    try:
        L, N = text.split(",")
        return Grid1D(float(L), int(N))
    except ValueError as exc:
        raise InvalidParameter(f"--grid expects L,N, got {text!r}") from exc


def _floats(values, what: str) -> tuple[float, ...]:
    try:
        out = tuple(float(v) for v in (values or ()))
    except (TypeError, ValueError) as exc:
        raise InvalidParameter(f"{what} must be a list of numbers") from exc
    return out


def _monotone(values) -> bool:
    pairs = list(zip(values, values[1:]))
    return all(a < b for a, b in pairs) or all(a > b for a, b in pairs)


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    symbol: SymbolSpec
    field: PerturbField
    grid: Grid1D
    deltas: tuple[float, ...] = DEFAULT_DELTAS
    kappas: tuple[float, ...] = (0.5,)
    z_offsets: tuple[float, ...] = (0.25, 0.5, 1.0)
    seed: int = 0
    name: str = "experiment"
    out_dir: Path = Path("out")
    translation: str = "exact"
    r_g: float = 1.0
    reverse: bool = True
    gap_points: bool = True
    n_probes: int = 32
    raw: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        validate(self)

    def with_grid(self, grid: Grid1D) -> "ExperimentConfig":
        return replace(self, grid=grid)

    def metadata(self) -> dict:
        return {"name": self.name, "mode": self.mode, "symbol": self.raw.get("symbol", self.symbol.name),
                "symbol_origin": "artifact-chosen test symbol", "field": self.field.name,
                "grid": {"L": self.grid.L, "N": self.grid.N}, "deltas": list(self.deltas),
                "kappas": list(self.kappas), "z_offsets": list(self.z_offsets), "seed": self.seed,
                "translation": self.translation, "r_g": self.r_g}


def validate(cfg: ExperimentConfig) -> None:
    if cfg.mode not in MODES:
        raise InvalidParameter(f"mode must be one of {MODES}, got {cfg.mode!r}")
    for v0, _ in weyl_kernel(cfg.symbol).singular:
        cfg.grid.offset_steps(v0)
    for d in cfg.deltas:
        if not 0 < d <= 1:
            raise DeltaOutOfRange(f"sweep delta {d} outside (0, 1]")
    for k in cfg.kappas:
        if not 0 < k <= 1:
            raise InvalidParameter(f"sweep kappa {k} outside (0, 1]")
    for name, vals in (("delta", cfg.deltas), ("kappa", cfg.kappas), ("z_offsets", cfg.z_offsets)):
        if not _monotone(list(vals)):
            raise InvalidParameter(f"sweep list {name} must be sorted without repeats")
    if cfg.translation not in ("exact", "grid"):
        raise InvalidParameter("translation must be 'exact' or 'grid'")
    if cfg.seed < 0 or cfg.seed >= 2**64:
        raise InvalidParameter("seed must fit in an unsigned 64-bit integer")


def config_from_dict(data: dict, base_dir: Path | None = None) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    unknown = set(data) - {"name", "mode", "symbol", "field", "grid", "sweep", "seed", "out",
                           "quasires", "edges"}
    if unknown:
        raise InvalidParameter(f"unknown configuration keys: {sorted(unknown)}")
    grid = data.get("grid", {})
    L, N = float(grid.get("L", DEFAULT_GRID[0])), int(grid.get("N", DEFAULT_GRID[1]))
    sweep = data.get("sweep", {}) or {}
    quas = data.get("quasires", {}) or {}
    edges = data.get("edges", {}) or {}
    out = Path(data.get("out", "out"))
    if base_dir is not None and not out.is_absolute():
        out = base_dir / out
    deltas = _floats(sweep.get("delta", DEFAULT_DELTAS), "sweep.delta")
    if not deltas:
        raise InvalidParameter("sweep.delta must not be empty")
    return ExperimentConfig(
        mode=str(data.get("mode", "")),
        symbol=build_symbol(data.get("symbol", "cos_xi_plus_cos_x")),
        field=build_field(data.get("field", {"family": "sine", "A": 1.0})),
        grid=Grid1D(L, N),
        deltas=deltas,
        kappas=_floats(sweep.get("kappa", (0.5,)), "sweep.kappa") or (0.5,),
        z_offsets=_floats(sweep.get("z_offsets", (0.25, 0.5, 1.0)), "sweep.z_offsets"),
        seed=int(data.get("seed", 0)),
        name=str(data.get("name", "experiment")),
        out_dir=out,
        translation=str(quas.get("translation", "exact")),
        r_g=float(quas.get("r_g", 1.0)),
        reverse=bool(quas.get("reverse", True)),
        gap_points=bool(quas.get("gap_points", True)),
        n_probes=int(edges.get("n_probes", 32)),
        raw={"symbol": data.get("symbol", "cos_xi_plus_cos_x"), "field": data.get("field")},
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return config_from_dict(data or {})


def field_mu(F: PerturbField) -> float:
    if F.mu is None:
        raise InvalidParameter(f"field {F.name} declares no decay exponent")
    return math.inf if math.isinf(F.mu) else float(F.mu)
