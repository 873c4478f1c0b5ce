"""Spectral-edge drift: Gaussian weights, the weighted operator and the (rho, theta, kappa) schedule.

The weighted operator replaces the perturbed kernel ``K0(z + delta F(z), v)``
by its average ``int du W_kappa(z - u) K0(z + delta F(u), v)``, which moves the
field's argument off the midpoint.  Its top eigenvalue is the edge proxy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, linalg, special

from .errors import InvalidParameter
from .quantize import Grid1D, WeylOperator, assemble_matrix, build_matrix, weyl_kernel
from .symbols import PerturbField, SymbolSpec, perturb

__all__ = [
    "WEIGHT_TAIL",
    "GaussianWeight",
    "WeightIdentityCheck",
    "EdgeSchedule",
    "CutoffField",
    "EdgeRow",
    "weight_identities",
    "schedule",
    "plateau",
    "variational_edge",
    "rayleigh_sup",
    "probe_vectors",
    "weighted_operator",
    "weighted_form_error",
    "edge_experiment",
]

WEIGHT_TAIL = 1e-12


@dataclass(frozen=True)
class GaussianWeight:
    """W_kappa(z) = kappa (4 pi)^-1/2 exp(-(kappa z)^2 / 4), unit mass for every kappa."""

    kappa: float

    def __post_init__(self):
        if not 0 < self.kappa <= 1:
            raise InvalidParameter("kappa must lie in (0, 1]")

    @property
    def amplitude(self) -> float:
        return self.kappa / math.sqrt(4 * math.pi)

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return self.amplitude * np.exp(-0.25 * (self.kappa * z) ** 2)

    def radius(self, tail: float = WEIGHT_TAIL) -> float:
        """Half-width outside of which the weight carries mass below ``tail``."""
        return 2.0 * float(special.erfcinv(tail)) / self.kappa

    def split(self, w, v) -> np.ndarray:
        """exp((kappa v)^2 / 16) sqrt(W(w + v/2)) sqrt(W(w - v/2)), which equals W(w)."""
        w = np.asarray(w, dtype=float)
        v = np.asarray(v, dtype=float)
        return np.exp((self.kappa * v) ** 2 / 16) * np.sqrt(self(w + v / 2)) * np.sqrt(self(w - v / 2))


@dataclass(frozen=True)
class WeightIdentityCheck:
    normalization_err: float
    splitting_err: float


def weight_identities(kappa: float, samples: int = 1000, seed: int = 0, box: float = 5.0) -> WeightIdentityCheck:
    W = GaussianWeight(kappa)
    mass, _ = integrate.quad(W, -np.inf, np.inf)
    rng = np.random.default_rng(seed)
    z, u, v = rng.uniform(-box, box, size=(3, samples))
    split = float(np.max(np.abs(W(z - u) - W.split(z - u, v))))
    return WeightIdentityCheck(abs(mass - 1.0), split)


@dataclass(frozen=True)
class EdgeSchedule:
    mu: float
    delta: float

    @property
    def rho(self) -> float:
        if math.isinf(self.mu):
            return 1.0
        return (1.0 + self.mu) / (2.0 + self.mu)

    @property
    def theta(self) -> float:
        return self.delta ** (1.0 - self.rho)

    @property
    def kappa(self) -> float:
        return self.delta ** (self.rho / 2.0)

    @property
    def predicted_exponent(self) -> float:
        return self.rho

    @property
    def error_exponents(self) -> tuple[float, float, float]:
        """delta-exponents of delta/theta, delta kappa^-2 theta^(1+mu) and delta^2 kappa^-2."""
        rho = self.rho
        middle = math.inf if math.isinf(self.mu) else (2.0 + self.mu) * (1.0 - rho)
        return 1.0 - (1.0 - rho), middle, 2.0 - rho

    @property
    def balancing_residual(self) -> float:
        """|rho - (2 + mu)(1 - rho)|; the middle exponent minus the first."""
        if math.isinf(self.mu):
            return math.inf
        return abs(self.rho - (2.0 + self.mu) * (1.0 - self.rho))


def schedule(mu: float, delta: float) -> EdgeSchedule:
    if not mu > 0:
        raise InvalidParameter("mu must be positive")
    if not 0 < delta <= 1:
        raise InvalidParameter("delta must lie in (0, 1]")
    return EdgeSchedule(float(mu), float(delta))


def _smooth_step(t) -> np.ndarray:
    """0 for t <= 0, 1 for t >= 1, C-infinity in between."""
    t = np.asarray(t, dtype=float)
    left = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    right = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return left / (left + right)


def plateau(v, r: float = 1.0, R: float = 2.0) -> np.ndarray:
    """1 on |v| <= r, 0 on |v| >= R."""
    return _smooth_step((R - np.abs(np.asarray(v, dtype=float))) / (R - r))


@dataclass(frozen=True)
class CutoffField:
    """Split F = F_theta + F_theta_perp with F_theta = chi(theta x) F."""

    field: PerturbField
    theta: float
    r: float = 1.0
    R: float = 2.0

    def chi(self, x) -> np.ndarray:
        return plateau(self.theta * np.asarray(x, dtype=float), self.r, self.R)

    def inner(self, x) -> np.ndarray:
        return self.chi(x) * self.field(x)

    def outer(self, x) -> np.ndarray:
        return (1.0 - self.chi(x)) * self.field(x)


# --------------------------------------------------------------------------
# quadratic forms


def _matrix(K) -> np.ndarray:
    return K.matrix if isinstance(K, WeylOperator) else np.asarray(K, dtype=float)


def rayleigh_sup(K, probes: np.ndarray) -> float:
    """max over columns phi of phi^T K phi / phi^T phi."""
    M = _matrix(K)
    P = np.asarray(probes, dtype=float)
    num = np.einsum("ij,ij->j", P, M @ P)
    return float(np.max(num / np.einsum("ij,ij->j", P, P)))


def variational_edge(K, n_probes: int = 0, seed: int = 0) -> float:
    """Top eigenvalue; random Rayleigh quotients are checked not to exceed it."""
    M = _matrix(K)
    top = float(linalg.eigvalsh(M, subset_by_index=[M.shape[0] - 1, M.shape[0] - 1])[0])
    if n_probes:
        probes = np.random.default_rng(seed).standard_normal((M.shape[0], n_probes))
        best = rayleigh_sup(M, probes)
        if best > top + 1e-9 * max(1.0, abs(top)):
            raise ArithmeticError(f"Rayleigh quotient {best} exceeds top eigenvalue {top}")
    return top


def probe_vectors(grid: Grid1D, n_random: int = 32, K0=None, n_top: int = 4, seed: int = 0) -> np.ndarray:
    """Unit Gaussian bumps at random centres in |x| <= L/2, plus top eigenvectors of K0."""
    rng = np.random.default_rng(seed)
    x = grid.nodes
    centers = rng.uniform(-grid.L / 2, grid.L / 2, n_random)
    widths = rng.uniform(1.0, 4.0, n_random)
    P = np.exp(-0.5 * ((x[:, None] - centers[None, :]) / widths[None, :]) ** 2)
    if K0 is not None and n_top:
        M = _matrix(K0)
        n = M.shape[0]
        _, vecs = linalg.eigh(M, subset_by_index=[n - n_top, n - 1])
        P = np.hstack([P, vecs[:, ::-1]])
    return P / np.linalg.norm(P, axis=0)


# --------------------------------------------------------------------------
# weighted operator


def _averaged(coef, W: GaussianWeight, F: PerturbField, delta: float, zmid: np.ndarray, h: float) -> np.ndarray:
    """sum_u h W(z - u) c(z + delta F(u)) for every midpoint z, u on an h-spaced grid."""
    pad = W.radius()
    m = int(math.ceil(pad / h))
    steps = np.arange(-m, m + 1) * h
    weights = h * W(steps)
    out = np.empty_like(zmid)
    chunk = max(1, 2_000_000 // steps.size)
    for start in range(0, zmid.size, chunk):
        z = zmid[start:start + chunk, None]
        u = z - steps[None, :]
        out[start:start + chunk] = np.sum(weights[None, :] * coef(z + delta * F(u)), axis=1)
    return out


def weighted_operator(a: SymbolSpec, F: PerturbField, delta: float, kappa: float, grid: Grid1D) -> WeylOperator:
    """Matrix of the u-averaged kernel ``int du W_kappa(z - u) K0(z + delta F(u), v)``.

    The u-sum runs over an h-spaced grid wide enough that the weight's tail
    mass is below ``WEIGHT_TAIL``, so it may extend past [-L, L].
    """
    W = GaussianWeight(kappa)
    rep = weyl_kernel(a)
    zmid = grid.midpoints
    singular = [(v0, _averaged(c, W, F, delta, zmid, grid.h)) for v0, c in rep.singular]
    regular = [(_averaged(b, W, F, delta, zmid, grid.h), prof) for b, prof in rep.regular]
    M, residual = assemble_matrix(singular, regular, grid)
    return WeylOperator(M, grid, a, residual, extra={"kappa": kappa, "weighted_delta": delta})


def weighted_form_error(a: SymbolSpec, F: PerturbField, delta: float, kappa: float, grid: Grid1D,
                        probes: np.ndarray, reference: str = "unweighted", K0: WeylOperator | None = None) -> float:
    """max over unit probes of |phi^T M phi - phi^T R phi| with M the weighted operator.

    ``reference="unweighted"`` takes R = K0.  ``"transported"`` takes R = M o E,
    E_jk = exp(-(kappa (x_j - x_k))^2 / 16), the weighted operator with the
    kernel factor removed that the Gaussian splitting introduces.
    """
    M = weighted_operator(a, F, delta, kappa, grid).matrix
    if reference == "unweighted":
        R = (K0 if K0 is not None else build_matrix(a, grid)).matrix
    elif reference == "transported":
        v = grid.nodes[:, None] - grid.nodes[None, :]
        R = M * np.exp(-((kappa * v) ** 2) / 16)
    else:
        raise InvalidParameter("reference must be 'unweighted' or 'transported'")
    P = np.asarray(probes, dtype=float)
    P = P / np.linalg.norm(P, axis=0)
    D = M - R
    return float(np.max(np.abs(np.einsum("ij,ij->j", P, D @ P))))


# --------------------------------------------------------------------------
# experiment


@dataclass(frozen=True)
class EdgeRow:
    delta: float
    mu: float
    rho: float
    theta: float
    kappa: float
    E0: float
    Edelta: float
    Etilde: float

    @property
    def drift_abs(self) -> float:
        return abs(self.Edelta - self.E0)

    @property
    def weighted_vs_base(self) -> float:
        return abs(self.Etilde - self.E0)

    @property
    def weighted_vs_perturbed(self) -> float:
        return abs(self.Etilde - self.Edelta)

    @property
    def bound_delta_rho(self) -> float:
        return self.delta**self.rho

    def as_dict(self) -> dict:
        return {"delta": self.delta, "mu": self.mu, "rho": self.rho, "theta": self.theta,
                "kappa": self.kappa, "E0": self.E0, "Edelta": self.Edelta, "Etilde": self.Etilde,
                "drift_abs": self.drift_abs, "weighted_vs_base": self.weighted_vs_base, "weighted_vs_perturbed": self.weighted_vs_perturbed,
                "bound_delta_rho": self.bound_delta_rho}


EDGE_COLUMNS = tuple(EdgeRow(0, 0, 0, 0, 0, 0, 0, 0).as_dict())


def edge_experiment(a: SymbolSpec, F: PerturbField, deltas, grid: Grid1D, edge: str = "+") -> list[EdgeRow]:
    """Top-edge drift, weighted proxy and schedule for each delta.

    ``edge="-"`` runs the same pipeline on ``-a`` and reports the lower edge
    with its sign restored.
    """
    if F.mu is None:
        raise InvalidParameter(f"field {F.name} declares no decay exponent mu")
    if edge not in ("+", "-"):
        raise InvalidParameter("edge must be '+' or '-'")
    sym = a if edge == "+" else -a
    sign = 1.0 if edge == "+" else -1.0
    E0 = variational_edge(build_matrix(sym, grid))
    rows = []
    for delta in deltas:
        sch = schedule(F.mu, delta)
        Ed = variational_edge(build_matrix(perturb(sym, F, delta), grid))
        Et = variational_edge(weighted_operator(sym, F, delta, sch.kappa, grid))
        rows.append(EdgeRow(float(delta), sch.mu, sch.rho, sch.theta, sch.kappa,
                            sign * E0, sign * Ed, sign * Et))
    return rows
