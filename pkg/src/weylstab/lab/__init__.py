"""Experiment configuration, sweeps, fits, plots and the command line."""
from .config import ExperimentConfig, build_field, build_symbol, config_from_dict, load_config
from .fit import BoundCheck, PowerLawFit, above_floor, bound_check, fit_power_law
from .sweeps import (
    SweepResult,
    refit,
    run_edge_sweep,
    run_gapwatch,
    run_hausdorff_sweep,
    run_quasires_sweep,
    run_sweep,
)

__all__ = [
    "ExperimentConfig", "build_field", "build_symbol", "config_from_dict", "load_config",
    "BoundCheck", "PowerLawFit", "above_floor", "bound_check", "fit_power_law",
    "SweepResult", "refit", "run_edge_sweep", "run_gapwatch", "run_hausdorff_sweep",
    "run_quasires_sweep", "run_sweep", "emit_plot",
]


def __getattr__(name):
    # matplotlib is imported only when a plot is requested
    if name == "emit_plot":
        from .plot import emit_plot
        return emit_plot
    raise AttributeError(name)
