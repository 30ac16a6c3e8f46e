"""Command-line entry point.

Examples::

    lhvkit sweep --model naive --phi-start 0 --phi-end 180 --phi-step 15
    lhvkit chsh --model qm --angles 0,45,22.5,67.5 --format json
    lhvkit adjudicate-eq20 --method monte_carlo --samples 1000000 --out eq20.csv
    lhvkit replay eq20.csv --out eq20-again.csv

Angles are degrees on the command line. Precedence: built-in defaults, then
``--config`` file, then explicit flags.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, LhvError, NumericError, StructuralError
from .reporting import COMMANDS, RunConfig, read_config_file, run, write_result

log = logging.getLogger("lhvkit")

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_STRUCTURAL = 4


def _common(p: argparse.ArgumentParser) -> None:
    # Defaults are None so that only flags given explicitly override the config file.
    p.add_argument("--config", help="key=value file, or an earlier CSV/JSON output to replay")
    p.add_argument("--model", choices=("qm", "naive", "unpolarized", "sign"))
    p.add_argument("--quantity", choices=("coincidence", "correlation"))
    p.add_argument("--phi-start", type=float, help="degrees")
    p.add_argument("--phi-end", type=float, help="degrees")
    p.add_argument("--phi-step", type=float, help="degrees")
    p.add_argument("--angles", help="comma-separated analyzer angles in degrees")
    p.add_argument("--method", choices=("closed_form", "quadrature", "monte_carlo"))
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--group-size", type=int, help="inner batch size of the grouped MC estimator")
    p.add_argument("--scan", type=int, help="chsh: also grid-search this many angles per setting")
    p.add_argument("--omega", type=float, help="precession angular frequency")
    p.add_argument("--t-end", type=float)
    p.add_argument("--t-points", type=int)
    p.add_argument("--search-mode", choices=("factor", "entry"))
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out", help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lhvkit", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        _common(sub.add_parser(name))
    replay = sub.add_parser("replay", help="rerun the configuration embedded in an output file")
    replay.add_argument("source")
    replay.add_argument("--out")
    return parser


_FLAG_KEYS = ("model", "quantity", "phi_start", "phi_end", "phi_step", "angles", "method", "seed",
              "samples", "group_size", "scan", "omega", "t_end", "t_points", "search_mode", "format")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.command == "replay":
        data = read_config_file(args.source)
        data["out"] = args.out
        return RunConfig.from_mapping(data)
    data = read_config_file(args.config) if args.config else {}
    if data.get("command", args.command) != args.command:
        log.warning("config file command %r overridden by %r", data["command"], args.command)
    data["command"] = args.command
    for key in _FLAG_KEYS:
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    data["out"] = args.out
    return RunConfig.from_mapping(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        result = run(cfg)
        text = write_result(result, cfg.out)
    except ConfigError as exc:
        print(f"lhvkit: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"lhvkit: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except StructuralError as exc:
        print(f"lhvkit: structural error: {exc}", file=sys.stderr)
        return EXIT_STRUCTURAL
    except LhvError as exc:
        print(f"lhvkit: {exc}", file=sys.stderr)
        return 1
    if cfg.out:
        log.info("wrote %s", cfg.out)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
