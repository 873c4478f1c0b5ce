"""Weyl quantization of separable symbols on a truncated uniform grid.

The midpoint/difference kernel of Op^w(a) is
``Kt(z, v) = (2 pi)^-1 int exp(i eta v) a(z, eta) d eta``.  For ``cos(k xi)``
profiles it is a pair of point masses at ``v = +-k`` (hops on the grid), for
Gaussian profiles a smooth Gaussian in ``v`` (a quadrature-weighted dense
block).  Hops that leave ``[-L, L)`` are dropped (Dirichlet truncation).
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import linalg

from .errors import GridTooSmall, InvalidParameter, OffsetNotOnGrid, UnsupportedFamily
from .symbols import Coefficient, CosXi, GaussProfile, PerturbField, SymbolSpec, perturb, seminorm

__all__ = [
    "Grid1D",
    "KernelRep",
    "WeylOperator",
    "weyl_kernel",
    "build_matrix",
    "assemble_matrix",
    "kernel_decay_check",
    "operator_norm",
    "cv_ratio",
    "kernel_difference_check",
    "save_matrix",
    "load_matrix",
    "save_matrix_csv",
]

REGULAR_DECAY_TOL = 1e-12
OFFSET_TOL = 1e-12
MATRIX_MAGIC = b"WEYLMAT1"


@dataclass(frozen=True)
class Grid1D:
    """Nodes ``x_j = -L + j h``, ``j = 0..N-1``, ``h = 2L/N``."""

    L: float
    N: int

    def __post_init__(self):
        if not self.L > 0:
            raise InvalidParameter("grid half-width must be positive")
        if self.N < 16 or self.N % 2:
            raise InvalidParameter("grid needs an even number of points >= 16")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def nodes(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.N)

    @property
    def midpoints(self) -> np.ndarray:
        """All values of (x_j + x_k)/2, indexed by j + k."""
        return -self.L + 0.5 * self.h * np.arange(2 * self.N - 1)

    @property
    def differences(self) -> np.ndarray:
        """All values of x_j - x_k, indexed by j - k + N - 1."""
        return self.h * np.arange(-(self.N - 1), self.N)

    def doubled(self) -> "Grid1D":
        return Grid1D(2 * self.L, 2 * self.N)

    def offset_steps(self, v0: float) -> int:
        """Number of grid steps for the hop ``v0``; raises if not commensurate."""
        s = v0 / self.h
        if abs(s - round(s)) > OFFSET_TOL * max(1.0, abs(s)):
            raise OffsetNotOnGrid(f"offset {v0:g} is not a multiple of h = {self.h:g}")
        return int(round(s))


@lru_cache(maxsize=4)
def _index_tables(grid: Grid1D) -> tuple[np.ndarray, np.ndarray]:
    j = np.arange(grid.N, dtype=np.int32)
    return j[:, None] + j[None, :], j[:, None] - j[None, :] + (grid.N - 1)


@dataclass(frozen=True)
class KernelRep:
    """Kt[a] split into point masses ``(v0, c)`` and smooth Gaussian parts ``(b, profile)``."""

    singular: tuple[tuple[float, Coefficient], ...]
    regular: tuple[tuple[Coefficient, GaussProfile], ...]

    def regular_part(self, z, v) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        v = np.asarray(v, dtype=float)
        out = np.zeros(np.broadcast(z, v).shape)
        for b, prof in self.regular:
            out = out + b(z) * prof.kernel(v)
        return out

    def regular_dz(self, z, v, order=1) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        v = np.asarray(v, dtype=float)
        out = np.zeros(np.broadcast(z, v).shape)
        for b, prof in self.regular:
            out = out + b(z, order) * prof.kernel(v)
        return out


def weyl_kernel(a: SymbolSpec) -> KernelRep:
    singular, regular = [], []
    for t in a.terms:
        if isinstance(t.profile, CosXi):
            k = t.profile.k
            if k == 0:
                singular.append((0.0, t.coef))
            else:
                half = _Half(t.coef)
                singular += [(abs(k), half), (-abs(k), half)]
        elif isinstance(t.profile, GaussProfile):
            regular.append((t.coef, t.profile))
        else:
            raise UnsupportedFamily(f"no kernel formula for profile {t.profile!r}")
    return KernelRep(tuple(singular), tuple(regular))


@dataclass(frozen=True)
class _Half(Coefficient):
    base: Coefficient

    def __call__(self, x, order=0):
        return 0.5 * self.base(x, order)


@dataclass(frozen=True, eq=False)
class WeylOperator:
    """Real symmetric truncation of Op^w(a) on ``grid``.

    ``symbol`` is kept so that translated or perturbed copies can be
    re-quantized on the same grid.
    """

    matrix: np.ndarray
    grid: Grid1D
    symbol: SymbolSpec | None = None
    asymmetry_residual: float = 0.0
    label: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def provenance(self) -> dict:
        s = self.symbol
        prov = {"symbol": self.label or (s.base_name or s.name if s else ""),
                "field": s.field_name if s else None,
                "delta": s.delta if s else 0.0}
        prov.update(self.extra)
        return prov

    @property
    def N(self) -> int:
        return self.grid.N


def build_matrix(a: SymbolSpec, grid: Grid1D) -> WeylOperator:
    rep = weyl_kernel(a)
    zmid = grid.midpoints
    singular = [(v0, c(zmid)) for v0, c in rep.singular]
    regular = [(b(zmid), prof) for b, prof in rep.regular]
    M, residual = assemble_matrix(singular, regular, grid)
    return WeylOperator(M, grid, a, residual)


def assemble_matrix(singular, regular, grid: Grid1D) -> tuple[np.ndarray, float]:
    """Symmetrized matrix from coefficient tables sampled on ``grid.midpoints``.

    ``singular`` holds ``(v0, c_table)`` hops and ``regular`` holds
    ``(b_table, GaussProfile)`` pairs.  Returns the matrix and the asymmetry
    residual measured before symmetrization.
    """
    N, h = grid.N, grid.h
    M = np.zeros((N, N))
    for v0, cz in singular:
        s = grid.offset_steps(v0)
        if abs(s) >= N:
            continue
        rows = np.arange(max(s, 0), N + min(s, 0))
        cols = rows - s
        M[rows, cols] += cz[rows + cols]
    if regular:
        S, D = _index_tables(grid)
        diffs = grid.differences
        for bz, prof in regular:
            tail = float(np.max(np.abs(bz))) * float(prof.kernel(2 * grid.L))
            if tail > REGULAR_DECAY_TOL:
                raise GridTooSmall(f"regular kernel still {tail:.2e} at |v| = 2L")
            M += h * bz[S] * prof.kernel(diffs)[D]
    residual = float(np.max(np.abs(M - M.T))) if N else 0.0
    return 0.5 * (M + M.T), residual


def kernel_decay_check(rep: KernelRep, order: int = 4, z=None, v_max: float = 20.0,
                       points: int = 4001) -> float:
    """sup over sampled (z, |v| >= 1) of <v>^order |Kt_reg(z, v)|."""
    if not rep.regular:
        return 0.0
    z = np.linspace(-20.0, 20.0, 401) if z is None else np.asarray(z, dtype=float)
    v = np.linspace(1.0, v_max, points)
    v = np.concatenate([-v[::-1], v])
    vals = np.abs(rep.regular_part(z[:, None], v[None, :])) * (1 + v * v) ** (order / 2)
    return float(np.max(vals))


def operator_norm(K: WeylOperator) -> float:
    if not np.any(K.matrix):
        return 0.0
    ev = linalg.eigvalsh(K.matrix)
    return float(max(abs(ev[0]), abs(ev[-1])))


def cv_ratio(K: WeylOperator, a: SymbolSpec, extent: float = 20.0, points: int = 4001) -> float:
    """||K|| / nu_{7,7}(a); the Calderon-Vaillancourt order at d = 1 is 3d + 4 = 7."""
    norm = operator_norm(K)
    if norm == 0.0:
        return 0.0
    nu = seminorm(a, 7, 7, extent=extent, points=points).value
    return norm / nu if nu > 0 else math.inf


def kernel_difference_check(a: SymbolSpec, F: PerturbField, delta: float, kappa: float, gamma: int,
                            z=None, v=None, nodes: int = 64) -> float:
    """Max mismatch between both sides of the Newton-Leibniz kernel identity.

    Left: ``K_delta(z, v) - K_0(z + delta^kappa gamma, v)``.  Right:
    ``delta^kappa (delta^(1-kappa) F(z) - gamma) int_0^1 dz K_0(Psi_s(z), v) ds``
    with ``Psi_s(z) = z + delta^kappa gamma + s (delta F(z) - delta^kappa gamma)``,
    integrated by Gauss-Legendre.  Point-mass parts compare their coefficients.
    """
    z = np.linspace(-10.0, 10.0, 201) if z is None else np.asarray(z, dtype=float)
    v = np.linspace(-6.0, 6.0, 121) if v is None else np.asarray(v, dtype=float)
    rep0 = weyl_kernel(a)
    rep_d = weyl_kernel(perturb(a, F, delta))
    shift = delta**kappa * gamma
    factor = delta**kappa * (delta ** (1.0 - kappa) * F(z) - gamma)
    s, w = np.polynomial.legendre.leggauss(nodes)
    s, w = 0.5 * (s + 1.0), 0.5 * w
    psi = z[None, :] + shift + s[:, None] * (delta * F(z)[None, :] - shift)

    worst = 0.0
    for (_, c0), (_, cd) in zip(rep0.singular, rep_d.singular):
        left = cd(z) - c0(z + shift)
        right = factor * np.sum(w[:, None] * c0(psi, 1), axis=0)
        worst = max(worst, float(np.max(np.abs(left - right))))
    if rep0.regular:
        left = rep_d.regular_part(z[:, None], v[None, :]) - rep0.regular_part(z[:, None] + shift, v[None, :])
        deriv = np.zeros((z.size, v.size))
        for b, prof in rep0.regular:
            deriv += np.sum(w[:, None] * b(psi, 1), axis=0)[:, None] * prof.kernel(v)[None, :]
        right = factor[:, None] * deriv
        worst = max(worst, float(np.max(np.abs(left - right))))
    return worst


# --------------------------------------------------------------------------
# export


def save_matrix(K: WeylOperator, path) -> Path:
    """Flat binary: magic, uint64 N, float64 L, uint64 meta length, UTF-8 JSON, N*N float64 LE row-major."""
    path = Path(path)
    meta = json.dumps({"N": K.N, "L": K.grid.L, "h": K.grid.h, **K.provenance,
                       "asymmetry_residual": K.asymmetry_residual}, sort_keys=True).encode("utf-8")
    with path.open("wb") as fh:
        fh.write(MATRIX_MAGIC)
        fh.write(struct.pack("<QdQ", K.N, K.grid.L, len(meta)))
        fh.write(meta)
        fh.write(np.ascontiguousarray(K.matrix, dtype="<f8").tobytes())
    return path


def load_matrix(path) -> tuple[np.ndarray, dict]:
    data = Path(path).read_bytes()
    if data[:8] != MATRIX_MAGIC:
        raise ValueError(f"{path}: not a weylstab matrix file")
    N, L, mlen = struct.unpack_from("<QdQ", data, 8)
    start = 8 + struct.calcsize("<QdQ")
    meta = json.loads(data[start:start + mlen].decode("utf-8"))
    M = np.frombuffer(data, dtype="<f8", count=N * N, offset=start + mlen).reshape(N, N).copy()
    return M, meta


def save_matrix_csv(K: WeylOperator, path, max_n: int = 512) -> Path:
    if K.N > max_n:
        raise InvalidParameter(f"CSV export limited to N <= {max_n}")
    path = Path(path)
    np.savetxt(path, K.matrix, delimiter=",", fmt="%.17g")
    return path
