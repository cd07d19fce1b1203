"""Command-line entry point: ``dgmg-bench {solve,table1,aniso}``.

Exit status is 0 when every run converged, 2 when any run diverged or
missed the target within the cycle budget and 1 on usage errors.
"""
import argparse
import dataclasses
import json
import logging
import os
import sys

from dgmg.bench.experiment import (
    ANISO_CASES,
    ExperimentConfig,
    emit_results,
    preset_anisotropic,
    preset_table1,
    run,
)

log = logging.getLogger("dgmg.bench")

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED = 0, 1, 2

# flags shared by all commands; None means "not given on the command line"
_RUN_FLAGS = {
    "seed": int,
    "threads": int,
    "target": float,
    "max_cycles": int,
    "penalty_factor": float,
}


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _add_common(p):
    for name, typ in _RUN_FLAGS.items():
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)
    det = p.add_mutually_exclusive_group()
    det.add_argument("--deterministic", dest="deterministic", action="store_true", default=None,
                     help="single-threaded BLAS, bitwise reproducible (default)")
    det.add_argument("--fast", dest="deterministic", action="store_false",
                     help="honour --threads; results may differ in the last bits")
    p.add_argument("--config", help="flat JSON object of ExperimentConfig keys")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors with exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="dgmg-bench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run a single configuration")
    p.add_argument("--P", type=int, dest="P")
    p.add_argument("--ne", type=int)
    p.add_argument("--multipliers", type=_int_list)
    p.add_argument("--kind", choices=("GLL", "GL"))
    p.add_argument("--overlap", choices=("fixed", "relative", "max_relative"))
    p.add_argument("--overlap-value", dest="overlap_value", type=float)
    p.add_argument("--overlap-floor", dest="overlap_floor", type=int)
    p.add_argument("--pre", type=int)
    p.add_argument("--post", type=int)
    p.add_argument("--growth", type=int)
    p.add_argument("--solver", choices=("MG", "MG-CG"))
    _add_common(p)

    p = sub.add_parser("table1", help="isotropic overlap/basis/solver comparison")
    p.add_argument("--rows", type=_int_list, default=[1, 2, 3, 4, 5, 6])
    p.add_argument("--degrees", type=_int_list, default=[4, 8, 16])
    p.add_argument("--ne", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("aniso", help="stretched-box robustness study")
    p.add_argument("--ar", type=_int_list, default=[1, 4, 8, 16])
    p.add_argument("--case", choices=sorted(ANISO_CASES), default="max-var")
    p.add_argument("--P", type=int, dest="P", default=8)
    p.add_argument("--ne", type=int, default=4)
    _add_common(p)
    return parser


_SOLVE_KEYS = ("P", "ne", "multipliers", "kind", "overlap", "overlap_value",
               "overlap_floor", "pre", "post", "growth", "solver")


def _load_config_file(path):
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict) or any(isinstance(v, dict) for v in data.values()):
        raise ValueError("config file must be a flat JSON object")
    return data


def _overrides(args, keys):
    """Config file values updated by every flag given on the command line."""
    data = _load_config_file(args.config) if args.config else {}
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            data[k] = v
    return data


def make_configs(args):
    common = tuple(_RUN_FLAGS) + ("deterministic",)
    if args.command == "solve":
        return [ExperimentConfig.from_dict(_overrides(args, _SOLVE_KEYS + common))]
    over = _overrides(args, common)
    if args.command == "table1":
        base = preset_table1(args.rows, args.ne, args.degrees)
    else:
        base = preset_anisotropic(args.ar, args.case, P=args.P, ne=args.ne)
    return [dataclasses.replace(c, **over) for c in base]


def _report(m):
    c = m.config
    status = "converged" if m.converged else ("DIVERGED" if m.diverged else "not converged")
    lg = f"{-m.lg_rho:.3f}"
    print(f"{c.label or 'run':<16} P={c.P:<3} ne={c.ne:<2} -lg(rho)={lg:>7} "
          f"n10={m.n10 if m.n10 is not None else '-':>4} cycles={m.cycles:<4} "
          f"t_c={m.t_cycle:.3g}s {status}")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        configs = make_configs(args)
    except (ValueError, TypeError, OSError) as exc:
        print(f"dgmg-bench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    ok = True
    for i, cfg in enumerate(configs):
        log.info("running %s", cfg)
        m, _ = run(cfg)
        out = args.out if len(configs) == 1 else os.path.join(args.out, cfg.label or f"run{i:03d}")
        emit_results(m, out)
        _report(m)
        ok &= m.converged
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
