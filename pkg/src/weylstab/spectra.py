"""Dense spectra of truncated operators, Hausdorff distances, edges and gaps."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg

from .errors import EigSolveFailure, EmptySet, GridMismatch, InvalidParameter
from .quantize import Grid1D, WeylOperator

__all__ = [
    "MAX_DENSE_N",
    "SpectrumReport",
    "EdgeDrift",
    "spectrum",
    "find_gaps",
    "default_gap_tol",
    "hausdorff",
    "bulk_distance",
    "edge_drift",
]

MAX_DENSE_N = 4096
LOCALIZATION_MASS = 0.9


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    edge_minus: float
    edge_plus: float
    gaps: list[tuple[float, float]]
    gap_tol: float
    grid: Grid1D | None = None
    localized: np.ndarray | None = field(default=None, repr=False)

    @property
    def central(self) -> np.ndarray:
        """Eigenvalues whose eigenvector keeps >= 90% of its mass in |x| <= L/2."""
        if self.localized is None:
            raise ValueError("spectrum was computed without the localization filter")
        return self.eigenvalues[self.localized]

    def summary(self) -> dict:
        return {"edge_minus": self.edge_minus, "edge_plus": self.edge_plus,
                "gap_tol": self.gap_tol, "gaps": [list(g) for g in self.gaps],
                "count": int(self.eigenvalues.size)}

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["eigenvalue"])
            for ev in self.eigenvalues:
                w.writerow([repr(float(ev))])
        return path

    def summary_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def find_gaps(eigs: np.ndarray, gap_tol: float) -> list[tuple[float, float]]:
    spacing = np.diff(eigs)
    idx = np.nonzero(spacing > gap_tol)[0]
    return [(float(eigs[i]), float(eigs[i + 1])) for i in idx]


def default_gap_tol(eigs: np.ndarray) -> float:
    """10 x the median consecutive spacing."""
    eigs = np.sort(np.asarray(eigs, dtype=float))
    if eigs.size < 2:
        return np.inf
    return 10.0 * float(np.median(np.diff(eigs)))


def spectrum(K, gap_tol: float | None = None, localization: bool = False) -> SpectrumReport:
    """Full dense eigendecomposition of a symmetric matrix or WeylOperator."""
    M = K.matrix if isinstance(K, WeylOperator) else np.asarray(K, dtype=float)
    grid = K.grid if isinstance(K, WeylOperator) else None
    n = M.shape[0]
    if n > MAX_DENSE_N:
        raise InvalidParameter(f"dense eigensolve limited to N <= {MAX_DENSE_N}")
    try:
        if localization:
            if grid is None:
                raise InvalidParameter("localization filter needs a grid")
            eigs, vecs = linalg.eigh(M)
            inner = np.abs(grid.nodes) <= grid.L / 2
            mass = np.sum(vecs[inner] ** 2, axis=0)
            localized = mass >= LOCALIZATION_MASS
        else:
            eigs = linalg.eigvalsh(M)
            localized = None
    except linalg.LinAlgError as exc:
        raise EigSolveFailure(str(exc)) from exc
    if gap_tol is None:
        gap_tol = default_gap_tol(eigs)
    return SpectrumReport(eigs, float(eigs[0]), float(eigs[-1]), find_gaps(eigs, gap_tol),
                          float(gap_tol), grid, localized)


def _one_sided(A: np.ndarray, B_sorted: np.ndarray) -> float:
    pos = np.searchsorted(B_sorted, A)
    left = B_sorted[np.clip(pos - 1, 0, B_sorted.size - 1)]
    right = B_sorted[np.clip(pos, 0, B_sorted.size - 1)]
    return float(np.max(np.minimum(np.abs(A - left), np.abs(A - right))))


def hausdorff(A, B) -> float:
    """max(sup_{a in A} dist(a, B), sup_{b in B} dist(b, A)) for finite sets of reals."""
    A = np.sort(np.asarray(A, dtype=float).ravel())
    B = np.sort(np.asarray(B, dtype=float).ravel())
    if A.size == 0 or B.size == 0:
        raise EmptySet("Hausdorff distance needs two non-empty sets")
    return max(_one_sided(A, B), _one_sided(B, A))


def bulk_distance(A: SpectrumReport, B: SpectrumReport) -> float:
    """max(sup_{a in central(A)} dist(a, sigma(B)), sup_{b in central(B)} dist(b, sigma(A))).

    Eigenvalues whose eigenvectors live near the truncation boundary are not
    required to have partners, since they belong to neither infinite-volume
    spectrum.  Raises EmptySet when neither report has a central eigenvalue.
    """
    ca, cb = A.central, B.central
    if ca.size == 0 and cb.size == 0:
        raise EmptySet("no central eigenvalues on either side")
    out = 0.0
    if ca.size:
        out = max(out, _one_sided(ca, np.sort(B.eigenvalues)))
    if cb.size:
        out = max(out, _one_sided(cb, np.sort(A.eigenvalues)))
    return out


@dataclass(frozen=True)
class EdgeDrift:
    dE_minus: float
    dE_plus: float


def edge_drift(r0: SpectrumReport, rd: SpectrumReport) -> EdgeDrift:
    """Signed edge displacements E(delta) - E(0)."""
    if r0.grid is not None and rd.grid is not None and r0.grid != rd.grid:
        raise GridMismatch(f"{r0.grid} vs {rd.grid}")
    return EdgeDrift(rd.edge_minus - r0.edge_minus, rd.edge_plus - r0.edge_plus)
