"""Command line entry point: ``weylstab {quantize,spectrum,sweep,fit,plot}``."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from ..errors import ConfigError, InvalidParameter, NumericalError
from ..quantize import build_matrix, save_matrix, save_matrix_csv
from ..spectra import spectrum
from ..symbols import perturb
from .config import MODES, load_config, parse_grid
from .plot import emit_plot
from .sweeps import FIT_COLUMNS, refit, run_sweep, write_csv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _common(p: argparse.ArgumentParser, config_required: bool = True):
    p.add_argument("--config", type=Path, required=config_required, help="experiment YAML file")
    p.add_argument("--out", type=Path, help="output directory (overrides the config)")
    p.add_argument("--seed", type=_seed, help="seed for probe vectors")
    p.add_argument("--grid", help="L,N override, e.g. 64,1024")
    p.add_argument("--parallel", type=int, default=1, help="worker threads for sweep cells")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weylstab", description="Weyl-quantized operator stability experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("quantize", help="build a matrix and export it")
    _common(q)
    q.add_argument("--delta", type=float, default=0.0, help="perturbation strength (0 gives the unperturbed matrix)")
    q.add_argument("--csv", action="store_true", help="also write a CSV copy (N <= 512)")

    s = sub.add_parser("spectrum", help="eigenvalues and summary of one matrix")
    _common(s)
    s.add_argument("--delta", type=float, default=0.0)

    w = sub.add_parser("sweep", help="run an experiment sweep")
    _common(w)
    w.add_argument("--mode", choices=MODES, help="must agree with the config mode when both are given")

    f = sub.add_parser("fit", help="refit a column of an emitted CSV")
    f.add_argument("csv", type=Path)
    f.add_argument("--x", default="delta")
    f.add_argument("--y", required=True)
    f.add_argument("--floor", help="grid-doubling error column for the floor rule")
    f.add_argument("--bound-exponent", type=float)
    f.add_argument("--out", type=Path, help="write the fit record as CSV here")

    pl = sub.add_parser("plot", help="log-log SVG of a CSV column")
    pl.add_argument("csv", type=Path)
    pl.add_argument("--x", default="delta")
    pl.add_argument("--y", required=True)
    pl.add_argument("--fit", action="store_true", help="overlay a least-squares power law")
    pl.add_argument("--floor", help="grid-doubling error column for the floor rule")
    pl.add_argument("--out", type=Path)
    return parser


def _config(args):
    cfg = load_config(args.config)
    changes = {}
    if args.out is not None:
        changes["out_dir"] = args.out
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.grid is not None:
        changes["grid"] = parse_grid(args.grid)
    return replace(cfg, **changes) if changes else cfg


def _operator(cfg, delta: float):
    sym = perturb(cfg.symbol, cfg.field, delta) if delta else cfg.symbol
    return build_matrix(sym, cfg.grid)


def _cmd_quantize(args) -> int:
    cfg = _config(args)
    K = _operator(cfg, args.delta)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = save_matrix(K, out / f"{cfg.name}_matrix.bin")
    print(path)
    if args.csv:
        print(save_matrix_csv(K, out / f"{cfg.name}_matrix.csv"))
    return EXIT_OK


def _cmd_spectrum(args) -> int:
    cfg = _config(args)
    rep = spectrum(_operator(cfg, args.delta))
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rep.to_csv(out / f"{cfg.name}_spectrum.csv")
    rep.summary_json(out / f"{cfg.name}_spectrum.json")
    print(json.dumps(rep.summary(), sort_keys=True))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _config(args)
    if args.mode and args.mode != cfg.mode:
        raise InvalidParameter(f"--mode {args.mode} disagrees with config mode {cfg.mode}")
    res = run_sweep(cfg, parallel=max(1, args.parallel))
    for key in sorted(res.paths):
        print(f"{key}: {res.paths[key]}")
    for rec in res.fits:
        d = rec.as_dict()
        print(" ".join(f"{k}={d[k]}" for k in FIT_COLUMNS if d[k] not in (None, "")))
    return EXIT_OK


def _cmd_fit(args) -> int:
    rec = refit(args.csv, args.x, args.y, args.floor, args.bound_exponent)
    d = rec.as_dict()
    if args.out:
        write_csv(args.out, FIT_COLUMNS, [d])
    print(json.dumps(d, sort_keys=True))
    return EXIT_OK


def _cmd_plot(args) -> int:
    fit = refit(args.csv, args.x, args.y, args.floor).fit if args.fit else None
    print(emit_plot(args.csv, args.x, args.y, fit=fit, out=args.out))
    return EXIT_OK


COMMANDS = {"quantize": _cmd_quantize, "spectrum": _cmd_spectrum, "sweep": _cmd_sweep,
            "fit": _cmd_fit, "plot": _cmd_plot}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
