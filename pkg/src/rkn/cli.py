"""Command-line entry point: ``rkn verify | separation | kernel | target``.

Settings come from an optional JSON config (``--config``); flat flags
override it. Exit codes: 0 success, 1 check failure, 2 config error,
3 IO error.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from rkn import checks, separation_lab
from rkn.config import ConfigError, RunConfig
from rkn.kernel_core import NoWitness
from rkn.layered_kernel import NonPositiveSlope, ShiftInfeasible, derivative_grid, fd_derivative
from rkn.param_measure import BadBetas, BadWeights
from rkn.rkhs_repr import slice_target

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

# ValueError also covers an out-of-range B for the bounded-kernel construction
CONSTRUCTION_ERRORS = (BadBetas, BadWeights, NoWitness, NonPositiveSlope, ShiftInfeasible, ConfigError, ValueError)


def _add_common(p):
    p.add_argument("--config", help="JSON config file; flags below override it")
    p.add_argument("--mode", choices=["relu", "general"])
    p.add_argument("--kernel", choices=["relu", "logistic"])
    p.add_argument("--uni", choices=["degenerate_zero", "standard_gaussian"])
    p.add_argument("--dim", type=int)
    p.add_argument("--B", dest="B_list", type=float, nargs="+", metavar="B")
    p.add_argument("--eps", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--panel-size", dest="panel_size", type=int)
    p.add_argument("--n-cap", dest="N_cap", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out-dir", dest="out_dir", help="output directory (default $RKN_OUTPUT_DIR or ./rkn-output)")
    p.add_argument("--json", action="store_true", help="machine-readable output on stdout")


def build_parser():
    parser = argparse.ArgumentParser(prog="rkn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("verify", help="run the invariant suite and print a pass/fail table")
    _add_common(p)
    p = sub.add_parser("separation", help="sweep B and write sample-complexity CSV/JSON")
    _add_common(p)
    for name in ("kernel", "target"):
        p = sub.add_parser(name, help=f"dump the slice {'function G' if name == 'kernel' else 'target h'} as CSV")
        _add_common(p)
        p.add_argument("--out", help="output CSV path (single B only)")
    return parser


CONFIG_FLAGS = ("mode", "kernel", "uni", "dim", "B_list", "eps", "trials", "seed", "panel_size", "N_cap",
                "workers", "out_dir")


def load_config(args) -> RunConfig:
    base = RunConfig.load(args.config) if args.config else RunConfig()
    overrides = {k: getattr(args, k) for k in CONFIG_FLAGS}
    # picking a mode alone implies its kernel
    if overrides["mode"] and not overrides["kernel"]:
        overrides["kernel"] = "relu" if overrides["mode"] == "relu" else "logistic"
    if overrides["kernel"] and not overrides["mode"]:
        overrides["mode"] = "relu" if overrides["kernel"] == "relu" else "general"
    return base.replace(**overrides)


def output_dir(config: RunConfig) -> Path:
    """The configured directory; only the default one is created on demand."""
    path = config.output_dir
    if not path.is_dir():
        if config.out_dir is None:
            path.mkdir(parents=True, exist_ok=True)
        else:
            raise FileNotFoundError(f"output directory {path} does not exist")
    return path


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{float(x):.17g}" for x in row])


def cmd_verify(config: RunConfig, as_json=False) -> int:
    results = [check(config) for check in checks.CHECKS]
    if as_json:
        print(json.dumps({"passed": all(r.passed for r in results), "checks": [r.to_dict() for r in results]},
                         indent=2, sort_keys=True))
    else:
        width = max(len(r.name) for r in results)
        for r in results:
            print(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def cmd_separation(config: RunConfig, as_json=False) -> int:
    out = output_dir(config)
    report = separation_lab.sweep(config)
    separation_lab.write_csv(report, out / "separation.csv")
    separation_lab.write_fits_csv(report, out / "separation_fits.csv")
    separation_lab.write_json(report, out / "separation.json")
    if as_json:
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    else:
        print(",".join(separation_lab.CSV_HEADER))
        for r in report.rows:
            print(f"{r.B:g},{r.m_star:.6g},{r.delta:.6g},{r.N_deep},{r.N_shallow},{r.ratio:.6g},"
                  f"{'true' if r.censored else 'false'}")
        print(f"fitted_exponent: {report.fitted_exponent}")
        print(f"wrote {out / 'separation.csv'} and {out / 'separation.json'}")
    return EXIT_OK


def _slice_dump(config: RunConfig, out_path, which: str):
    paths = []
    if out_path and len(config.B_list) != 1:
        raise ConfigError("--out needs exactly one B")
    s = derivative_grid()
    for B in config.B_list:
        ctx, _, target = separation_lab.build_case(config, B)
        if which == "kernel":
            header = ["s", "G", "G_fd_prime"]
            cols = (s, ctx.slice_values(s), fd_derivative(ctx.slice_values, s))
        else:
            header = ["s", "h", "abs_h_prime"]
            h = lambda x: slice_target(target, ctx, x)  # noqa: E731
            cols = (s, h(s), np.abs(fd_derivative(h, s)))
        path = Path(out_path) if out_path else output_dir(config) / f"{which}_B{B:g}.csv"
        _write_rows(path, header, zip(*cols))
        paths.append(path)
    return paths


def cmd_kernel(config: RunConfig, out=None) -> int:
    for p in _slice_dump(config, out, "kernel"):
        print(f"wrote {p}")
    return EXIT_OK


def cmd_target(config: RunConfig, out=None) -> int:
    for p in _slice_dump(config, out, "target"):
        print(f"wrote {p}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        if args.command == "verify":
            return cmd_verify(config, args.json)
        if args.command == "separation":
            return cmd_separation(config, args.json)
        if args.command == "kernel":
            return cmd_kernel(config, args.out)
        return cmd_target(config, args.out)
    except CONSTRUCTION_ERRORS as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
