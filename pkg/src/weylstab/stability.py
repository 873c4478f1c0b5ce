"""Quasi-resolvents built from translated resolvents glued by a quadratic partition of unity.

The lattice is ``z_gamma = delta^kappa * gamma`` and the cutoffs are
``g_gamma(x) = g(delta^(1 - kappa) F(x) - gamma)``.  On the support of
``g_gamma`` the perturbed operator looks like the unperturbed one translated
by ``z_gamma``, so ``sum_gamma G_gamma (tau K0 tau - z)^-1 G_gamma`` is an
approximate inverse of ``K_delta - z``.

Translated operators come in two flavours.  ``"exact"`` re-quantizes the
translated symbol ``a(x + z_gamma, xi)`` on the same grid, so both operators
share the same Dirichlet boundary.  ``"grid"`` shifts matrix indices by the
nearest whole number of grid steps and fills with zeros.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import CoverageFailure, InvalidParameter, ShiftTooLarge, TooCloseToSpectrum
from .quantize import Grid1D, WeylOperator, build_matrix
from .symbols import PerturbField, translate_symbol

__all__ = [
    "RESOLVENT_MARGIN",
    "ACTIVE_TOL",
    "PartitionBase",
    "CutoffFamily",
    "QuasiResolvent",
    "make_partition",
    "smooth_bump",
    "cutoffs",
    "translate_operator",
    "resolvent",
    "spectral_norm",
    "quasi_resolvent",
    "reverse_quasi_resolvent",
    "defect",
    "reverse_defect",
    "local_mismatch",
    "commutator_defect",
    "DefectReport",
    "defect_diagnostics",
]

RESOLVENT_MARGIN = 1e-6
ACTIVE_TOL = 1e-14
TRANSLATION_MODES = ("exact", "grid")


def smooth_bump(z, r: float) -> np.ndarray:
    """exp(-1 / (1 - (z/r)^2)) inside (-r, r), zero outside."""
    t = np.asarray(z, dtype=float) / r
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


@dataclass(frozen=True)
class PartitionBase:
    """Bump g supported in [-r_g, r_g] with sum_gamma g(z - gamma)^2 = 1."""

    r_g: float

    @property
    def n_g(self) -> int:
        """Number of integer offsets d with overlapping supports, |d| < 2 r_g."""
        m = math.ceil(2 * self.r_g) - 1
        return 2 * m + 1

    def _offsets(self) -> np.ndarray:
        m = math.ceil(self.r_g) + 1
        return np.arange(-m, m + 1)

    def coverage(self, z) -> np.ndarray:
        """sum_gamma h(z - gamma)^2 for the raw bump h."""
        z = np.asarray(z, dtype=float)
        frac = z - np.floor(z)
        shifts = self._offsets()
        return np.sum(smooth_bump(frac[..., None] - shifts, self.r_g) ** 2, axis=-1)

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        out = np.zeros_like(z)
        inside = np.abs(z) < self.r_g
        out[inside] = smooth_bump(z[inside], self.r_g) / np.sqrt(self.coverage(z[inside]))
        return out


def make_partition(r_g: float = 1.0) -> PartitionBase:
    if not 0 < r_g <= 2:
        raise InvalidParameter("support radius must lie in (0, 2]")
    base = PartitionBase(float(r_g))
    cov = base.coverage(np.linspace(0.0, 1.0, 2001))
    if not np.min(cov) > 0:
        raise CoverageFailure(f"unit translates of a radius-{r_g:g} bump do not cover the line")
    return base


@dataclass(frozen=True, eq=False)
class CutoffFamily:
    """Sampled cutoffs ``values[i, j] = g(delta^(1-kappa) F(x_j) - gammas[i])``."""

    gammas: np.ndarray
    values: np.ndarray
    grid: Grid1D
    delta: float
    kappa: float
    base: PartitionBase

    def lattice_point(self, gamma: int) -> float:
        return self.delta**self.kappa * gamma

    def row(self, gamma: int) -> np.ndarray:
        idx = np.nonzero(self.gammas == gamma)[0]
        if idx.size == 0:
            return np.zeros(self.grid.N)
        return self.values[idx[0]]

    def G(self, gamma: int) -> np.ndarray:
        return np.diag(self.row(gamma))

    def support(self, gamma: int) -> np.ndarray:
        return np.nonzero(self.row(gamma) > 0)[0]

    def identity_error(self) -> float:
        return float(np.max(np.abs(np.sum(self.values**2, axis=0) - 1.0)))


def cutoffs(base: PartitionBase, F: PerturbField, delta: float, kappa: float, grid: Grid1D) -> CutoffFamily:
    if not 0 <= delta <= 1:
        raise InvalidParameter("delta must lie in [0, 1]")
    if not 0 < kappa <= 1:
        raise InvalidParameter("kappa must lie in (0, 1]")
    s = (delta ** (1.0 - kappa) if delta > 0 else 0.0) * F(grid.nodes)
    lo = math.floor(float(np.min(s)) - base.r_g)
    hi = math.ceil(float(np.max(s)) + base.r_g)
    gammas = np.arange(lo, hi + 1)
    values = base(s[None, :] - gammas[:, None])
    keep = np.max(values, axis=1) > ACTIVE_TOL
    return CutoffFamily(gammas[keep], values[keep], grid, float(delta), float(kappa), base)


def translate_operator(K: WeylOperator, z0: float) -> WeylOperator:
    """Index shift by the nearest whole number of grid steps, zero fill."""
    N, h = K.grid.N, K.grid.h
    s = int(round(z0 / h))
    if abs(s) > N // 4:
        raise ShiftTooLarge(f"shift of {s} steps exceeds N/4 = {N // 4}")
    snap = abs(z0 - s * h)
    M = np.zeros_like(K.matrix)
    lo, hi = max(0, -s), min(N, N - s)
    M[lo:hi, lo:hi] = K.matrix[lo + s:hi + s, lo + s:hi + s]
    extra = dict(K.extra, shift=z0, snap_error=snap)
    return WeylOperator(M, K.grid, K.symbol, K.asymmetry_residual, K.label, extra)


def _matrix(K) -> np.ndarray:
    return K.matrix if isinstance(K, WeylOperator) else np.asarray(K, dtype=float)


def resolvent(K, z: float, margin: float = RESOLVENT_MARGIN, eigenvalues=None) -> np.ndarray:
    M = _matrix(K)
    ev = linalg.eigvalsh(M) if eigenvalues is None else np.asarray(eigenvalues)
    if np.min(np.abs(ev - z)) <= margin:
        raise TooCloseToSpectrum(f"z = {z:g} within {margin:g} of the spectrum")
    return linalg.solve(M - z * np.eye(M.shape[0]), np.eye(M.shape[0]), assume_a="sym")


def spectral_norm(M) -> float:
    M = np.asarray(M, dtype=float)
    if M.size == 0 or not np.any(M):
        return 0.0
    return float(linalg.svdvals(M)[0])


def _translated(K: WeylOperator, z0: float, mode: str) -> WeylOperator:
    if mode == "grid":
        return translate_operator(K, z0)
    if mode != "exact":
        raise InvalidParameter(f"translation mode must be one of {TRANSLATION_MODES}")
    if K.symbol is None:
        raise InvalidParameter("exact translation needs the operator's symbol")
    if z0 == 0:
        return K
    return build_matrix(translate_symbol(K.symbol, z0), K.grid)


@dataclass(frozen=True, eq=False)
class QuasiResolvent:
    matrix: np.ndarray
    norm: float
    bound: float
    dist0: float
    n_active: int
    snap_error: float
    family: CutoffFamily = field(repr=False)

    @property
    def within_bound(self) -> bool:
        return self.norm <= self.bound


def _resolvent_columns(Kg: WeylOperator, z: float, S: np.ndarray, margin: float) -> np.ndarray:
    """Columns ``S`` of (Kg - z)^-1 from one LU factorization."""
    N = Kg.grid.N
    try:
        lu = linalg.lu_factor(Kg.matrix - z * np.eye(N), check_finite=False)
    except linalg.LinAlgError as exc:
        raise TooCloseToSpectrum(str(exc)) from exc
    rhs = np.zeros((N, S.size))
    rhs[S, np.arange(S.size)] = 1.0
    cols = linalg.lu_solve(lu, rhs, check_finite=False)
    if not np.all(np.isfinite(cols)) or np.max(np.abs(cols)) > 1.0 / margin:
        raise TooCloseToSpectrum(f"translated operator is singular at z = {z:g}")
    return cols


def _glue(K: WeylOperator, z: float, fam: CutoffFamily, sign: int, mode: str,
          margin: float) -> tuple[np.ndarray, float]:
    N = K.grid.N
    out = np.zeros((N, N))
    snap = 0.0
    for gamma, g in zip(fam.gammas, fam.values):
        S = np.nonzero(g > 0)[0]
        if S.size == 0:
            continue
        Kg = _translated(K, sign * fam.lattice_point(int(gamma)), mode)
        snap = max(snap, Kg.extra.get("snap_error", 0.0))
        block = _resolvent_columns(Kg, z, S, margin)[S]
        out[np.ix_(S, S)] += g[S][:, None] * block * g[S][None, :]
    return out, snap


def _dist(K: WeylOperator, z: float, eigenvalues, margin: float) -> float:
    ev = linalg.eigvalsh(K.matrix) if eigenvalues is None else np.asarray(eigenvalues)
    d = float(np.min(np.abs(ev - z)))
    if d <= margin:
        raise TooCloseToSpectrum(f"z = {z:g} within {margin:g} of the spectrum")
    return d


def quasi_resolvent(K0: WeylOperator, z: float, delta: float, kappa: float, F: PerturbField,
                    base: PartitionBase, mode: str = "exact", eigenvalues=None,
                    margin: float = RESOLVENT_MARGIN, family: CutoffFamily | None = None) -> QuasiResolvent:
    """T(z) = sum_gamma G_gamma (tau_{-z_gamma} K0 tau_{z_gamma} - z)^-1 G_gamma.

    ``eigenvalues`` may pass the precomputed spectrum of K0.
    """
    d0 = _dist(K0, z, eigenvalues, margin)
    fam = family or cutoffs(base, F, delta, kappa, K0.grid)
    T, snap = _glue(K0, z, fam, +1, mode, margin)
    bound = math.sqrt((base.n_g + 1) / 2) / d0
    return QuasiResolvent(T, spectral_norm(T), bound, d0, int(fam.gammas.size), snap, fam)


def reverse_quasi_resolvent(Kd: WeylOperator, z: float, delta: float, kappa: float, F: PerturbField,
                            base: PartitionBase, mode: str = "exact", eigenvalues=None,
                            margin: float = RESOLVENT_MARGIN,
                            family: CutoffFamily | None = None) -> QuasiResolvent:
    """S(z) = sum_gamma G_gamma (tau_{z_gamma} K_delta tau_{-z_gamma} - z)^-1 G_gamma."""
    d = _dist(Kd, z, eigenvalues, margin)
    fam = family or cutoffs(base, F, delta, kappa, Kd.grid)
    S, snap = _glue(Kd, z, fam, -1, mode, margin)
    bound = math.sqrt((base.n_g + 1) / 2) / d
    return QuasiResolvent(S, spectral_norm(S), bound, d, int(fam.gammas.size), snap, fam)


def defect(K, T, z: float) -> float:
    """||(K - z) T - 1|| in the spectral norm."""
    M = _matrix(K)
    T = T.matrix if isinstance(T, QuasiResolvent) else np.asarray(T, dtype=float)
    P = M @ T - z * T
    P[np.diag_indices_from(P)] -= 1.0
    return spectral_norm(P)


def reverse_defect(K0, S, z: float) -> float:
    return defect(K0, S, z)


def _gammas(fam: CutoffFamily, gamma: int | None) -> list[int]:
    return [int(x) for x in fam.gammas] if gamma is None else [int(gamma)]


def local_mismatch(Kd: WeylOperator, K0: WeylOperator, gamma: int | None, delta: float, kappa: float,
                   F: PerturbField, base: PartitionBase, mode: str = "exact",
                   family: CutoffFamily | None = None) -> float:
    """||(K_delta - tau_{-z_gamma} K0 tau_{z_gamma}) G_gamma||; ``gamma=None`` takes the sup over the family."""
    if delta == 0:
        return 0.0
    fam = family or cutoffs(base, F, delta, kappa, K0.grid)
    worst = 0.0
    for gm in _gammas(fam, gamma):
        g = fam.row(gm)
        S = np.nonzero(g > 0)[0]
        if S.size == 0:
            continue
        Kg = _translated(K0, fam.lattice_point(gm), mode)
        D = (Kd.matrix[:, S] - Kg.matrix[:, S]) * g[S][None, :]
        worst = max(worst, spectral_norm(D))
    return worst


def _cross_norm(cols: np.ndarray, S: np.ndarray, g: np.ndarray) -> float:
    """Norm of C = R G - G R for symmetric R, given the columns R[:, S].

    C vanishes outside rows S and columns S, so C = X Y^T with 2|S| columns.
    """
    N, m = cols.shape
    A = cols * (g[S][None, :] - g[:, None])
    B = -A.T.copy()
    B[:, S] = 0.0
    X = np.zeros((N, 2 * m))
    Y = np.zeros((N, 2 * m))
    X[:, :m] = A
    Y[S, np.arange(m)] = 1.0
    X[S, m + np.arange(m)] = 1.0
    Y[:, m:] = B.T
    if 2 * m >= N:
        return spectral_norm(X @ Y.T)
    rx = linalg.qr(X, mode="r", check_finite=False)[0]
    ry = linalg.qr(Y, mode="r", check_finite=False)[0]
    return spectral_norm(rx @ ry.T)


def commutator_defect(K0: WeylOperator, z: float, gamma: int | None, delta: float, kappa: float,
                      F: PerturbField, base: PartitionBase, mode: str = "exact",
                      margin: float = RESOLVENT_MARGIN, family: CutoffFamily | None = None) -> float:
    """||[tau_{-z_gamma} R0(z) tau_{z_gamma}, G_gamma]||; ``gamma=None`` takes the sup over the family."""
    fam = family or cutoffs(base, F, delta, kappa, K0.grid)
    worst = 0.0
    for gm in _gammas(fam, gamma):
        g = fam.row(gm)
        S = np.nonzero(g > 0)[0]
        if S.size == 0 or np.all(g[S] == g[S][0]) and S.size == g.size:
            continue
        Kg = _translated(K0, fam.lattice_point(gm), mode)
        worst = max(worst, _cross_norm(_resolvent_columns(Kg, z, S, margin), S, g))
    return worst


@dataclass(frozen=True)
class DefectReport:
    """All stability diagnostics for one (delta, kappa, z) cell."""

    delta: float
    kappa: float
    z: float
    dist0: float
    defect: float
    reverse_defect: float
    local_mismatch: float
    commutator: float
    norm: float
    bound: float
    snap_error: float
    n_active: int


def defect_diagnostics(K0: WeylOperator, Kd: WeylOperator, z: float, delta: float, kappa: float,
                       F: PerturbField, base: PartitionBase, mode: str = "exact", eigenvalues0=None,
                       eigenvalues_delta=None, reverse: bool = True,
                       margin: float = RESOLVENT_MARGIN) -> DefectReport:
    """One pass over the cutoff family that assembles T and, from the same
    translated resolvent columns, the sup over gamma of the local
    mismatch and commutator norms."""
    d0 = _dist(K0, z, eigenvalues0, margin)
    fam = cutoffs(base, F, delta, kappa, K0.grid)
    N = K0.grid.N
    T = np.zeros((N, N))
    snap = mismatch = comm = 0.0
    for gamma, g in zip(fam.gammas, fam.values):
        S = np.nonzero(g > 0)[0]
        if S.size == 0:
            continue
        Kg = _translated(K0, fam.lattice_point(int(gamma)), mode)
        snap = max(snap, Kg.extra.get("snap_error", 0.0))
        cols = _resolvent_columns(Kg, z, S, margin)
        T[np.ix_(S, S)] += g[S][:, None] * cols[S] * g[S][None, :]
        mismatch = max(mismatch, spectral_norm((Kd.matrix[:, S] - Kg.matrix[:, S]) * g[S][None, :]))
        comm = max(comm, _cross_norm(cols, S, g))
    rev = math.nan
    if reverse:
        _dist(Kd, z, eigenvalues_delta, margin)
        S_rev, _ = _glue(Kd, z, fam, -1, mode, margin)
        rev = defect(K0, S_rev, z)
    return DefectReport(float(delta), float(kappa), float(z), d0, defect(Kd, T, z), rev, mismatch, comm,
                        spectral_norm(T), math.sqrt((base.n_g + 1) / 2) / d0, snap, int(fam.gammas.size))
