"""Command-line entry point: ``poincare <command> [--config FILE] [options]``.

Exit status is 0 on success, 2 for invalid configs or inputs and 3 when a numerical
failure stops a command that is not a sweep.
"""

import argparse
import json
import logging
import sys

import numpy as np

from . import __version__
from .config import COMMANDS, ConfigError, config_hash, canonical, describe, load
from .errors import InputError, NumericalError
from .experiments import RUNNERS, SWEEPS, model_to_dict
from .results import write_results

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

log = logging.getLogger("poincare")


def build_parser():
    parser = argparse.ArgumentParser(prog="poincare", description="Estimate Poincaré constants from samples.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--out", help="result CSV path; stdout when omitted")
        p.add_argument("--method", choices=("exact", "rf", "dm"), help="estimator")
        p.add_argument("--threads", type=int, help="worker threads")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config key (repeatable)")
        p.add_argument("--list-keys", action="store_true", help="print the config keys of this command and exit")
        p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return parser


def _overrides(args):
    out = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    for key in ("seed", "out", "method", "threads"):
        value = getattr(args, key)
        if value is not None:
            out[key] = value
    return out


def _summary_lines(command, extra):
    if command == "estimate" and extra.get("selected"):
        sel = extra["selected"]
        yield f"selected {sel['point']}: mean {sel['mean']:.6g}, median {sel['median']:.6g}"
    elif command == "mixture-growth":
        fit = extra["fit"]
        yield f"log-linear fit: slope {fit['slope']:.4g}, R^2 {fit['r2']:.4f}"
    elif command == "learn-rc":
        if "angle_deg" in extra:
            yield f"learned angle {extra['angle_deg']:.2f} deg, objective {extra['model'].value:.6g}"
        if "sweep_argmax_deg" in extra:
            yield f"sweep maximum at {extra['sweep_argmax_deg']:.1f} deg, max/min {extra['sweep_ratio']:.3g}"
    elif command == "oracle":
        for kappa, value in extra["table"].items():
            yield f"kappa {kappa:g}: {value:.6g}"
    elif command == "langevin-check":
        yield f"estimated constant {extra['p_hat']:.6g}; {extra['clamped']} clamped variance(s)"


def run(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.list_keys:
        print(describe(args.command), file=stdout)
        return EXIT_OK
    try:
        cfg = load(args.command, args.config, _overrides(args))
        if cfg["threads"] < 1:
            raise ConfigError("threads must be at least 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    header = {
        "tool": f"poincare {__version__}",
        "command": args.command,
        "config_hash": config_hash(cfg),
        "seed": cfg["seed"],
        "config": canonical(cfg),
    }
    status = EXIT_OK
    try:
        with np.errstate(over="ignore", under="ignore"):
            rows, extra = RUNNERS[args.command](cfg)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command not in SWEEPS and any(r.status == "error" for r in rows):
        status = EXIT_NUMERICAL
        print("numerical failure in at least one row; see the status column", file=sys.stderr)

    if cfg["out"]:
        with open(cfg["out"], "w", newline="") as fh:
            write_results(rows, header, fh)
    else:
        write_results(rows, header, stdout)

    if args.command == "learn-rc":
        path = cfg["model_out"] or (cfg["out"] + ".model.json" if cfg["out"] else "")
        if path:
            with open(path, "w") as fh:
                json.dump({"config_hash": header["config_hash"], **model_to_dict(extra["model"])}, fh, indent=1)
    for line in _summary_lines(args.command, extra):
        print(line, file=sys.stderr)
    return status


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
