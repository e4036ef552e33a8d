"""Command line entry point ``discord-dyn``.

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .coeffs import QuadratureError
from .config import ConfigError, load_config
from .discord import EntropyError
from .presets import FAMILIES
from .propagator import RiccatiBlowupError, StepInstabilityError
from .runner import emit_figure_data, run_preset, run_scenario, run_sweep

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3
NUMERICAL_ERRORS = (QuadratureError, StepInstabilityError, RiccatiBlowupError, EntropyError,
                    FloatingPointError, ArithmeticError)

log = logging.getLogger("discord_dyn")


def _parse_axis(text: str):
    if "=" not in text:
        raise ConfigError(f"axis must look like key=v1,v2,..., got {text!r}")
    key, values = text.split("=", 1)
    vals = [v.strip() for v in values.split(",") if v.strip()]
    if not vals:
        raise ConfigError(f"axis {key!r} has no values")
    return key.strip(), vals


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="discord-dyn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one configuration or one figure panel")
    src = sim.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="key = value config file")
    src.add_argument("--preset", help="figure panel such as fig1f (three spectra)")
    sim.add_argument("--out", help="output directory for --preset runs", default="runs")
    sim.add_argument("--long", action="store_true", help="long-time grid for --preset")

    sw = sub.add_parser("sweep", help="cartesian sweep around a base config")
    sw.add_argument("--config", required=True)
    sw.add_argument("--axis", action="append", default=[], metavar="KEY=V1,V2,...")
    sw.add_argument("--out", help="root directory (default: output_dir of the config)")
    sw.add_argument("--cap", type=int, default=256)
    sw.add_argument("--workers", type=int)

    fig = sub.add_parser("figures", help="plot-ready CSVs for a figure family")
    fig.add_argument("--family", required=True, choices=FAMILIES)
    fig.add_argument("--out", required=True)
    fig.add_argument("--long", action="store_true", help="long-time grid (t_end 2000, 40000 steps)")
    fig.add_argument("--t-end", type=float)
    fig.add_argument("--n-steps", type=int)
    fig.add_argument("--workers", type=int)
    return parser


def _dispatch(args) -> int:
    if args.command == "simulate":
        if args.config:
            res = run_scenario(load_config(args.config))
            print(res.csv_path)
        else:
            for res in run_preset(args.preset, args.out, long_time=args.long).values():
                print(res.csv_path)
        return EXIT_OK
    if args.command == "sweep":
        axes = dict(_parse_axis(a) for a in args.axis)
        result = run_sweep(load_config(args.config), axes, args.out, cap=args.cap, workers=args.workers)
        print(result.summary_path)
        for row in result.failed:
            print(f"point {row['point']} failed: {row['error']}", file=sys.stderr)
        return EXIT_NUMERICAL if result.failed else EXIT_OK
    out = emit_figure_data(args.family, args.out, long_time=args.long, t_end=args.t_end,
                           n_steps=args.n_steps, workers=args.workers)
    print(out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return _dispatch(args)
    except ConfigError as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_VALIDATION
    except NUMERICAL_ERRORS as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except ValueError as exc:
        log.error("invalid input: %s", exc)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
