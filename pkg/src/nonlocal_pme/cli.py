"""Command-line front end.

Exit status is 0 when every assertion of the subcommand passed, 1 when a
check failed and 2 on configuration or input errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import config as cfgmod
from . import experiments
from .errors import NonlocalPMEError


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _pairs(text):
    out = []
    for item in text.split(","):
        m, s = item.split(":")
        out.append((float(m), float(s)))
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="nonlocal-pme", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="INI configuration file")
        sp.add_argument("-o", "--output", help="override [output] directory")
        return sp

    add("solve", "evolve the configured problem and write diagnostics and snapshots")
    add("resolvent", "solve the resolvent equation for the configured right-hand side")
    add("converge-h", "grid refinement study").add_argument(
        "--levels", type=_floats, required=True, help="comma-separated spacings")
    add("converge-s", "distance to the local run as the order tends to 2").add_argument(
        "--orders", type=_floats, required=True, help="comma-separated increasing orders")
    sp = add("cont-dep", "continuous dependence on (m, s)")
    sp.add_argument("--pairs", type=_pairs, required=True, help="m1:s1,m2:s2,...")
    sp.add_argument("--target", type=lambda t: _pairs(t)[0], help="m:s (default from config)")
    add("verify", "run the seeded property suite").add_argument("--seed", type=int, default=0)
    return p


def _report(verdicts):
    for v in verdicts:
        print(v.line())
    return 0 if all(v.passed for v in verdicts) else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = cfgmod.load(args.config)
        out = args.output
        if args.command == "solve":
            rep = experiments.run_solve(cfg, out)
            print(f"{rep.steps} steps of dt = {rep.dt:.6g}; mass {rep.mass[0]:.12g} -> {rep.mass[-1]:.12g}")
            return _report(rep.verdicts)
        if args.command == "resolvent":
            res, verdicts = experiments.run_resolvent(cfg, out)
            print(f"{res.iterations} iterations (bound {res.predicted}), q = {res.q:.6g}")
            return _report(verdicts)
        if args.command == "converge-h":
            res = experiments.run_converge_h(cfg, args.levels, out)
        elif args.command == "converge-s":
            res = experiments.run_converge_s(cfg, args.orders, out)
        elif args.command == "cont-dep":
            res = experiments.run_continuous_dependence(cfg, args.pairs, args.target, out)
        else:
            return _report(experiments.run_verify(cfg, args.seed, out))
        print(",".join(res.header))
        for row in res.rows:
            print(",".join(f"{x:.6g}" if isinstance(x, float) else str(x) for x in row))
        return _report(res.verdicts)
    except (NonlocalPMEError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
