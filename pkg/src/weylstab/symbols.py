"""Symbols a(x, xi) of class S^0_{0,0} in one dimension and dilation-type perturbations.

A symbol is a finite sum of separable terms ``c(x) * p(xi)`` where the
xi-profile ``p`` is either ``cos(k xi)`` (kernel = point masses at v = +-k) or a
Gaussian ``exp(-xi^2 / 2 sigma^2)`` (kernel = smooth Gaussian in v).  Every
coefficient function carries closed-form derivatives of arbitrary order, which
the perturbation ``x -> x + delta F(x)`` propagates by Faa di Bruno.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import hermite_e

from .errors import DeltaOutOfRange, InvalidParameter, OrderExceeded

MAX_ORDER = 10

__all__ = [
    "MAX_ORDER",
    "Coefficient",
    "Constant",
    "Cosine",
    "Gaussian",
    "CoefficientSum",
    "FunctionCoefficient",
    "Warped",
    "CosXi",
    "GaussProfile",
    "Term",
    "SymbolSpec",
    "PerturbField",
    "SeminormEstimate",
    "trig_poly_xi",
    "gauss_xi",
    "symbol_sum",
    "eval_symbol",
    "seminorm",
    "perturb",
    "translate_symbol",
    "builtin_field",
    "bell_compose",
]


def bell_compose(outer: Sequence[np.ndarray], inner: Sequence[np.ndarray], n: int) -> np.ndarray:
    """n-th derivative of f(g(x)) from ``outer[k] = f^(k)(g(x))`` and ``inner[i] = g^(i)(x)``.

    ``inner[0]`` is ignored (it would be g itself).  Uses incomplete Bell
    polynomials B_{n,k} through the standard recursion.
    """
    if n == 0:
        return np.asarray(outer[0])
    # bell[m][k] = B_{m,k}(g', g'', ...)
    bell = [[None] * (n + 1) for _ in range(n + 1)]
    one = np.ones_like(np.asarray(inner[1], dtype=float))
    bell[0][0] = one
    for m in range(1, n + 1):
        bell[m][0] = 0.0 * one
        for k in range(1, m + 1):
            acc = 0.0 * one
            for i in range(1, m - k + 2):
                prev = bell[m - i][k - 1]
                if prev is None:
                    continue
                acc = acc + math.comb(m - 1, i - 1) * inner[i] * prev
            bell[m][k] = acc
    total = 0.0 * one
    for k in range(1, n + 1):
        total = total + outer[k] * bell[n][k]
    return total


def _hermite_factor(t: np.ndarray, order: int) -> np.ndarray:
    coeffs = np.zeros(order + 1)
    coeffs[order] = 1.0
    return hermite_e.hermeval(t, coeffs)


# --------------------------------------------------------------------------
# coefficient functions c(x)


class Coefficient:
    """Real function of x with derivatives: ``coef(x, order)``."""

    max_order: int = MAX_ORDER

    def __call__(self, x, order: int = 0) -> np.ndarray:
        raise NotImplementedError

    def derivatives(self, x, n: int) -> list[np.ndarray]:
        return [self(x, k) for k in range(n + 1)]

    @property
    def label(self) -> str:
        return type(self).__name__


@dataclass(frozen=True)
class Constant(Coefficient):
    value: float = 1.0

    def __call__(self, x, order=0):
        x = np.asarray(x, dtype=float)
        return np.full_like(x, self.value if order == 0 else 0.0)

    @property
    def label(self):
        return f"{self.value:g}"


@dataclass(frozen=True)
class Cosine(Coefficient):
    """amplitude * cos(frequency * x + phase)."""

    amplitude: float = 1.0
    frequency: float = 1.0
    phase: float = 0.0

    def __call__(self, x, order=0):
        x = np.asarray(x, dtype=float)
        w = self.frequency
        return self.amplitude * w**order * np.cos(w * x + self.phase + order * np.pi / 2)

    @property
    def label(self):
        return f"{self.amplitude:g}cos({self.frequency:g}x+{self.phase:g})"


@dataclass(frozen=True)
class Gaussian(Coefficient):
    """amplitude * exp(-(x - center)^2 / (2 width^2))."""

    amplitude: float = 1.0
    width: float = 1.0
    center: float = 0.0

    def __call__(self, x, order=0):
        t = (np.asarray(x, dtype=float) - self.center) / self.width
        base = self.amplitude * np.exp(-0.5 * t * t)
        if order == 0:
            return base
        return (-1.0 / self.width) ** order * _hermite_factor(t, order) * base

    @property
    def label(self):
        return f"{self.amplitude:g}gauss({self.center:g},{self.width:g})"


@dataclass(frozen=True)
class CoefficientSum(Coefficient):
    parts: tuple[Coefficient, ...]

    def __call__(self, x, order=0):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for p in self.parts:
            out = out + p(x, order)
        return out

    @property
    def label(self):
        return "+".join(p.label for p in self.parts)


@dataclass(frozen=True, eq=False)
class FunctionCoefficient(Coefficient):
    """User-supplied evaluator; derivatives fall back to central differences.

    ``closed_forms`` may list closed-form evaluators for orders 1, 2, ...;
    orders beyond that list use an n-th order central difference with step
    ``eps**(1/(n+2)) * max(1, |x|)`` (``eps**(1/3)`` for first derivatives).
    High orders lose accuracy quickly; prefer closed forms.
    """

    func: Callable[[np.ndarray], np.ndarray]
    closed_forms: tuple[Callable[[np.ndarray], np.ndarray], ...] = ()
    name: str = "f"

    def __call__(self, x, order=0):
        x = np.asarray(x, dtype=float)
        if order == 0:
            return np.asarray(self.func(x), dtype=float)
        if order <= len(self.closed_forms):
            return np.asarray(self.closed_forms[order - 1](x), dtype=float)
        return self.finite_difference(x, order)

    def finite_difference(self, x, order):
        step = np.finfo(float).eps ** (1.0 / (order + 2)) * np.maximum(1.0, np.abs(x))
        acc = np.zeros_like(x)
        for k in range(order + 1):
            acc = acc + (-1) ** k * math.comb(order, k) * self.func(x + (order / 2 - k) * step)
        return acc / step**order

    @property
    def label(self):
        return self.name


@dataclass(frozen=True)
class Warped(Coefficient):
    """x -> base(x + delta * F(x)); derivatives through the chain rule."""

    base: Coefficient
    field: "PerturbField"
    delta: float

    def __call__(self, x, order=0):
        x = np.asarray(x, dtype=float)
        y = x + self.delta * self.field(x)
        if order == 0:
            return self.base(y)
        outer = [self.base(y, k) for k in range(order + 1)]
        inner = [y, 1.0 + self.delta * self.field(x, 1)]
        inner += [self.delta * self.field(x, k) for k in range(2, order + 1)]
        return bell_compose(outer, inner, order)

    @property
    def label(self):
        return f"{self.base.label}[{self.field.name}]_{self.delta:g}"


# --------------------------------------------------------------------------
# xi-profiles


@dataclass(frozen=True)
class CosXi:
    """cos(k xi); its inverse Fourier transform is (delta_k + delta_{-k}) / 2."""

    k: float

    def __call__(self, xi, order=0):
        xi = np.asarray(xi, dtype=float)
        return self.k**order * np.cos(self.k * xi + order * np.pi / 2)


@dataclass(frozen=True)
class GaussProfile:
    """exp(-xi^2 / (2 sigma^2))."""

    sigma: float = 1.0

    def __call__(self, xi, order=0):
        t = np.asarray(xi, dtype=float) / self.sigma
        base = np.exp(-0.5 * t * t)
        if order == 0:
            return base
        return (-1.0 / self.sigma) ** order * _hermite_factor(t, order) * base

    def kernel(self, v):
        """(2 pi)^-1 int exp(i eta v) exp(-eta^2 / 2 sigma^2) d eta."""
        v = np.asarray(v, dtype=float)
        return self.sigma / math.sqrt(2 * math.pi) * np.exp(-0.5 * (self.sigma * v) ** 2)


@dataclass(frozen=True)
class Term:
    coef: Coefficient
    profile: CosXi | GaussProfile


# --------------------------------------------------------------------------
# symbols


@dataclass(frozen=True)
class SymbolSpec:
    """Real symbol a(x, xi) = sum_t c_t(x) p_t(xi).

    ``family`` is one of ``TrigPolyXi``, ``GaussXi`` or ``Sum``.  ``field``
    and ``delta`` record the perturbation history for provenance.
    """

    family: str
    terms: tuple[Term, ...]
    name: str = "a"
    dimension: int = 1
    max_order: int = MAX_ORDER
    base_name: str | None = None
    field_name: str | None = None
    delta: float = 0.0

    def __call__(self, x, xi, alpha: int = 0, beta: int = 0):
        return eval_symbol(self, x, xi, alpha, beta)

    def __neg__(self) -> "SymbolSpec":
        terms = tuple(Term(_Scaled(t.coef, -1.0), t.profile) for t in self.terms)
        return SymbolSpec(self.family, terms, name=f"-{self.name}", max_order=self.max_order,
                          base_name=self.base_name, field_name=self.field_name, delta=self.delta)


@dataclass(frozen=True)
class _Scaled(Coefficient):
    base: Coefficient
    factor: float

    def __call__(self, x, order=0):
        return self.factor * self.base(x, order)

    @property
    def label(self):
        return f"{self.factor:g}*{self.base.label}"


def _as_coef(c) -> Coefficient:
    if isinstance(c, Coefficient):
        return c
    if callable(c):
        return FunctionCoefficient(c)
    return Constant(float(c))


def trig_poly_xi(terms: Sequence[tuple[float, object]], name: str = "a") -> SymbolSpec:
    """sum_k c_k(x) cos(k xi) from ``[(k, c_k), ...]``; ``c_k`` may be a number."""
    parts = tuple(Term(_as_coef(c), CosXi(float(k))) for k, c in terms)
    return SymbolSpec("TrigPolyXi", parts, name=name)


def gauss_xi(coef=1.0, sigma: float = 1.0, name: str = "a") -> SymbolSpec:
    """b(x) exp(-xi^2 / (2 sigma^2))."""
    if sigma <= 0:
        raise InvalidParameter("sigma must be positive")
    return SymbolSpec("GaussXi", (Term(_as_coef(coef), GaussProfile(float(sigma))),), name=name)


def symbol_sum(*symbols: SymbolSpec, name: str | None = None) -> SymbolSpec:
    terms = tuple(t for s in symbols for t in s.terms)
    return SymbolSpec("Sum", terms, name=name or "+".join(s.name for s in symbols),
                      max_order=min(s.max_order for s in symbols))


def eval_symbol(a: SymbolSpec, x, xi, alpha: int = 0, beta: int = 0) -> np.ndarray:
    """d_x^alpha d_xi^beta a(x, xi), broadcasting x against xi."""
    if alpha > a.max_order or beta > a.max_order or alpha < 0 or beta < 0:
        raise OrderExceeded(f"order ({alpha}, {beta}) beyond declared max {a.max_order}")
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    out = np.zeros(np.broadcast(x, xi).shape)
    for t in a.terms:
        out = out + t.coef(x, alpha) * t.profile(xi, beta)
    return out


@dataclass(frozen=True)
class SeminormEstimate:
    n: int
    m: int
    value: float
    extent: float
    points: int
    finite_difference: bool = False


def seminorm(a: SymbolSpec, n: int, m: int, extent: float = 20.0, points: int = 4001) -> SeminormEstimate:
    """Grid-sampled nu_{n,m}(a) on [-extent, extent]^2 (a lower bound of the true sup)."""
    if n > a.max_order or m > a.max_order:
        raise OrderExceeded(f"seminorm order ({n}, {m}) beyond declared max {a.max_order}")
    grid = np.linspace(-extent, extent, points)
    coefs = [np.array([t.coef(grid, al) for t in a.terms]) for al in range(n + 1)]
    profs = [np.array([t.profile(grid, be) for t in a.terms]) for be in range(m + 1)]
    best = 0.0
    for c in coefs:
        for p in profs:
            if len(a.terms) == 1:
                val = np.max(np.abs(c[0])) * np.max(np.abs(p[0]))
            else:
                val = 0.0
                for lo in range(0, points, 512):
                    block = c[:, lo:lo + 512].T @ p
                    val = max(val, float(np.max(np.abs(block))))
            best = max(best, float(val))
    fd = any(isinstance(t.coef, FunctionCoefficient) for t in a.terms)
    return SeminormEstimate(n, m, best, extent, points, fd)


# --------------------------------------------------------------------------
# perturbing fields


@dataclass(frozen=True)
class PerturbField:
    """Displacement field F with derivatives of every order.

    ``mu`` is the decay exponent of F'' (``math.inf`` when F'' == 0, ``None``
    when F'' does not decay) and ``bound`` the constant C_F in
    ``|F''(x)| <= C_F (1 + x^2)^(-(1 + mu) / 2)``.
    """

    family: str
    params: tuple[float, ...]
    mu: float | None
    bound: float

    @property
    def name(self) -> str:
        return f"{self.family}({','.join(f'{p:g}' for p in self.params)})"

    def __call__(self, x, order: int = 0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.family == "affine":
            slope, b = self.params
            if order == 0:
                return slope * x + b
            return np.full_like(x, slope if order == 1 else 0.0)
        if self.family == "sine":
            (amp,) = self.params
            return amp * np.sin(x + order * np.pi / 2)
        if self.family == "mu_family":
            (mu,) = self.params
            p = (1.0 - mu) / 2.0
            t = 1.0 + x * x
            if order == 0:
                return t**p
            outer = [math.prod(p - i for i in range(k)) * t ** (p - k) for k in range(order + 1)]
            inner = [t, 2.0 * x, np.full_like(x, 2.0)] + [np.zeros_like(x)] * max(0, order - 2)
            return bell_compose(outer, inner, order)
        raise InvalidParameter(f"unknown field family {self.family!r}")


def builtin_field(family: str, **params) -> PerturbField:
    """``affine(b, slope=1)``, ``constant(b)``, ``sine(A)`` or ``mu_family(mu)``."""
    allowed = {"affine": {"b", "slope"}, "constant": {"b"}, "sine": {"A"}, "mu_family": {"mu"}}
    if family in allowed and set(params) - allowed[family]:
        raise InvalidParameter(f"field {family!r} takes {sorted(allowed[family])}, got {sorted(params)}")
    if family == "affine":
        return PerturbField("affine", (float(params.get("slope", 1.0)), float(params.get("b", 0.0))), math.inf, 0.0)
    if family == "constant":
        return PerturbField("affine", (0.0, float(params.get("b", 0.0))), math.inf, 0.0)
    if family == "sine":
        return PerturbField("sine", (float(params.get("A", 1.0)),), None, abs(float(params.get("A", 1.0))))
    if family == "mu_family":
        if "mu" not in params:
            raise InvalidParameter("mu_family needs mu")
        mu = float(params["mu"])
        if not mu > 0:
            raise InvalidParameter("mu_family needs mu > 0")
        p = (1.0 - mu) / 2.0
        # F'' = 2p t^(p-1) + 4p(p-1) x^2 t^(p-2), and x^2 t^(p-2) <= t^(p-1)
        return PerturbField("mu_family", (mu,), mu, abs(p) * (2.0 + 4.0 * abs(p - 1.0)))
    raise InvalidParameter(f"unknown field family {family!r}")


def perturb(a: SymbolSpec, F: PerturbField, delta: float) -> SymbolSpec:
    """a[F]_delta(x, xi) = a(x + delta F(x), xi)."""
    if abs(delta) > 1:
        raise DeltaOutOfRange(f"|delta| = {abs(delta)} > 1")
    if delta == 0:
        return a
    terms = tuple(Term(Warped(t.coef, F, float(delta)), t.profile) for t in a.terms)
    return SymbolSpec(a.family, terms, name=f"{a.name}[{F.name}]_{delta:g}", max_order=a.max_order,
                      base_name=a.base_name or a.name, field_name=F.name, delta=float(delta))


def translate_symbol(a: SymbolSpec, z0: float) -> SymbolSpec:
    """a(x + z0, xi); the symbol of tau_{-z0} Op(a) tau_{z0}."""
    if z0 == 0:
        return a
    shift = PerturbField("affine", (0.0, float(z0)), math.inf, 0.0)
    terms = tuple(Term(Warped(t.coef, shift, 1.0), t.profile) for t in a.terms)
    return SymbolSpec(a.family, terms, name=f"{a.name}(.+{z0:g})", max_order=a.max_order,
                      base_name=a.base_name, field_name=a.field_name, delta=a.delta)
