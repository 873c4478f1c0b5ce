"""Log-log SVG plots of sweep columns."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..errors import ColumnMissing, NonPositiveData  # noqa: E402
from .fit import PowerLawFit, log_residuals  # noqa: E402
from .sweeps import read_csv  # noqa: E402

# fixed ids and no date stamp so that identical input gives identical bytes
matplotlib.rcParams["svg.hashsalt"] = "weylstab"
matplotlib.rcParams["svg.fonttype"] = "none"


def _columns(csv_path, x_col: str, y_col: str) -> tuple[np.ndarray, np.ndarray]:
    cols, rows = read_csv(csv_path)
    for c in (x_col, y_col):
        if c not in cols:
            raise ColumnMissing(f"column {c!r} not in {csv_path}")
    x = np.array([float(r[x_col]) for r in rows])
    y = np.array([float(r[y_col]) for r in rows])
    keep = x != 0  # the delta = 0 reference row has no place on a log axis
    x, y = x[keep], y[keep]
    if np.any(x <= 0) or np.any(y <= 0):
        raise NonPositiveData(f"log axes need positive {x_col!r} and {y_col!r}")
    return x, y


def emit_plot(csv_path, x_col: str, y_col: str, fit: PowerLawFit | None = None, out=None) -> Path:
    """Scatter ``y_col`` against ``x_col`` on log axes, with the fitted line and its residuals if given."""
    x, y = _columns(csv_path, x_col, y_col)
    out = Path(out) if out else Path(csv_path).with_name(f"{Path(csv_path).stem}_{y_col}.svg")
    if fit is None:
        fig, ax = plt.subplots(figsize=(5, 4))
    else:
        fig, (ax, rax) = plt.subplots(2, 1, figsize=(5, 5.5), sharex=True,
                                      gridspec_kw={"height_ratios": [3, 1]})
    ax.loglog(x, y, "o", label=y_col)
    if fit is not None:
        xs = np.geomspace(x.min(), x.max(), 50)
        ax.loglog(xs, fit(xs), "-", label=f"slope {fit.exponent:.3f}")
        rax.semilogx(x, log_residuals(fit, x, y), "s")
        rax.axhline(0.0, color="0.5", lw=0.8)
        rax.set_ylabel("log residual")
        rax.set_xlabel(x_col)
    else:
        ax.set_xlabel(x_col)
    ax.set_ylabel(y_col)
    ax.legend()
    fig.tight_layout()
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out
