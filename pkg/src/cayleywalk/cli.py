"""Command-line interface.

Every subcommand takes ``--seed`` (a random seed is drawn and printed to
stderr when omitted), ``--out``, ``--format csv|json``, ``--jobs``, ``--check``
and ``--config FILE``. A config file is INI: keys in ``[defaults]`` and in the
section named after the subcommand set option defaults, keys in
``[tolerances]`` override check tolerances. Flags beat the file.

Exit codes: 0 success, 1 failed checks (with ``--check``) or a numeric
failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import configparser
import math
import secrets
import sys
from typing import Sequence

import numpy as np

from . import analytic as A
from . import experiments as E
from .geodesic import count_geodesics_oracle
from .perm import CycleStructure, Permutation, cycle_structure
from .samplers import SamplerError, derive, hitting_sample, nu0_sample, sphere_radius, uniform_on_sphere_batch
from .walk import run

FIG2_GRID = tuple(round(0.05 * i, 2) for i in range(1, 10))


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", " ").split()]


def _tol_pair(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    return name.strip(), float(value)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--seed", type=int, help="master seed (random and printed if omitted)")
    g.add_argument("--out", help="output path (default stdout)")
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--jobs", type=int, default=1, help="worker processes; results do not depend on it")
    g.add_argument("--check", action="store_true", help="exit 1 if any check fails")
    g.add_argument("--config", help="INI file with option defaults")
    g.add_argument("--tol", type=_tol_pair, action="append", default=[], metavar="NAME=VALUE",
                   help="override a check tolerance (repeatable)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="cayleywalk", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_, description=help_)

    p = add("speed-curve", "distance of the walk after c n / 2 steps against u(c)")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--c", type=_floats, default=[0.4, 0.8, 1.2, 1.6, 2.0], help="c values, comma separated")
    p.add_argument("--reps", type=int, default=100)

    p = add("thm1", "Gromov product under the hitting law; several --n values add a stability check")
    p.add_argument("--n", type=_ints, default=[2000])
    p.add_argument("--a", type=float, default=0.15)
    p.add_argument("--reps", type=int, default=200)

    p = add("thm8", "distance and Gromov product of two uniform sphere elements")
    p.add_argument("--n", type=int, default=1500)
    p.add_argument("--a", type=float, default=0.5)
    p.add_argument("--reps", type=int, default=100)

    p = add("singularity", "fixed points under the sphere and hitting laws")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--a", type=float, default=0.3)
    p.add_argument("--reps", type=int, default=500)

    p = add("fig2", "support exponent gamma(a) against xi = f^-1(a)")
    p.add_argument("--a", type=_floats, default=list(FIG2_GRID))
    p.add_argument("--n-grid", type=_ints, default=list(A.N_GRID))

    p = add("sphere-sample", "uniform samples from the sphere of radius k (or floor(a n))")
    p.add_argument("--n", type=int, required=True)
    r = p.add_mutually_exclusive_group(required=True)
    r.add_argument("--k", type=int)
    r.add_argument("--a", type=float)
    p.add_argument("--count", type=int, default=1)

    p = add("hitting-sample", "samples of the walk stopped at distance floor(a n)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--no-frag", action="store_true", help="condition on no fragmentation")

    p = add("geodesic-count", "number of geodesics from a permutation to the identity")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--cycles", type=int, nargs="+", help="nontrivial cycle lengths")
    g.add_argument("--perm", help='permutation in cycle notation, e.g. "(1 2 3)(4 5)"')
    p.add_argument("--oracle", action="store_true", help="cross-check by brute-force recursion (n <= 7)")

    p = add("volume", "sphere sizes |{sigma : d(sigma) = k}| and ball volumes")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--a", type=float)
    p.add_argument("--exact", action="store_true", help="print the exact integer")

    p = add("branching-check", "simulated branching laws against their exact counterparts")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--cap", type=int, default=50)

    p = add("walk-trace", "one walk, step by step")
    p.add_argument("--n", type=int, required=True)
    s = p.add_mutually_exclusive_group(required=True)
    s.add_argument("--steps", type=int)
    s.add_argument("--c", type=float)
    return parser


# ---------------------------------------------------------------- config


def _load_config(path: str, command: str, parser: argparse.ArgumentParser) -> tuple[dict, dict]:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise UsageError(f"cannot read config file {path!r}")
    sub = _subparser(parser, command)
    actions = {a.dest: a for a in sub._actions}
    values: dict = {}
    for section in ("defaults", command):
        if not cp.has_section(section):
            continue
        for key, raw in cp.items(section):
            dest = key.replace("-", "_")
            if dest not in actions or dest in ("config", "tol"):
                raise UsageError(f"unknown option {key!r} in [{section}] of {path}")
            act = actions[dest]
            if act.const is True or isinstance(act, argparse._StoreTrueAction):
                values[dest] = cp.getboolean(section, key)
            elif act.type is not None:
                try:
                    values[dest] = act.type(raw)
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    raise UsageError(f"bad value for {key!r} in {path}: {exc}") from None
            else:
                values[dest] = raw
    tols = {k: float(v) for k, v in cp.items("tolerances")} if cp.has_section("tolerances") else {}
    return values, tols


def _subparser(parser, command):
    for act in parser._actions:
        if isinstance(act, argparse._SubParsersAction):
            return act.choices[command]
    raise KeyError(command)


def parse_args(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    tols: dict = {}
    if args.config:
        try:
            values, tols = _load_config(args.config, args.command, parser)
        except UsageError as exc:
            _subparser(parser, args.command).error(str(exc))
        sub = _subparser(parser, args.command)
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    tols.update(dict(args.tol))
    args.tolerances = tols
    return args


# ---------------------------------------------------------------- commands


def _result(name: str, args, **params) -> E.ExperimentResult:
    return E.ExperimentResult(name, {"seed": args.seed, **params})


def cmd_speed_curve(args):
    return E.exp_speed_curve(args.n, args.c, args.reps, args.seed, args.jobs, args.tolerances)


def cmd_thm1(args):
    if len(args.n) > 1:
        return E.exp_thm1_stability(args.n, args.a, args.reps, args.seed, args.jobs, args.tolerances)
    return E.exp_thm1(args.n[0], args.a, args.reps, args.seed, args.jobs, tol=args.tolerances)


def cmd_thm8(args):
    return E.exp_thm8(args.n, args.a, args.reps, args.seed, args.jobs, args.tolerances)


def cmd_singularity(args):
    return E.exp_singularity(args.n, args.a, args.reps, args.seed, args.jobs, args.tolerances)


def cmd_fig2(args):
    bad = [a for a in args.a if not 0 < a < 0.5]
    if bad:
        raise UsageError(f"fig2 needs 0 < a < 1/2, got {bad}")
    return E.exp_fig2(args.a, n_grid=tuple(args.n_grid), tol=args.tolerances)


def cmd_sphere_sample(args):
    k = args.k if args.k is not None else sphere_radius(args.n, args.a)
    out = _result("sphere_sample", args, n=args.n, k=k, count=args.count)
    X = uniform_on_sphere_batch(args.n, k, args.count, derive(args.seed, 0))
    for r, img in enumerate(X):
        p = Permutation._from_array(img)
        out.rows.append({"n": args.n, "seed": args.seed, "rep": r, "distance": args.n - p.cycle_count(),
                         "fixed_points": int(np.sum(img == np.arange(args.n))), "permutation": str(p)})
    return out


def cmd_hitting_sample(args):
    out = _result("hitting_sample", args, n=args.n, a=args.a, count=args.count, no_frag=args.no_frag)
    rng = derive(args.seed, 0)
    draw = nu0_sample if args.no_frag else hitting_sample
    for r in range(args.count):
        h = draw(args.n, args.a, rng)
        out.rows.append({"n": args.n, "seed": args.seed, "rep": r, "hitting_steps": h.hitting_steps,
                         "fragmentations": h.fragmentations, "attempts": h.attempts,
                         "distance": h.distance, "permutation": str(h.perm)})
    return out


def cmd_geodesic_count(args):
    if args.perm is not None:
        try:
            cs = cycle_structure(Permutation.parse(args.perm))
        except ValueError as exc:
            raise UsageError(f"cannot parse permutation: {exc}") from None
    else:
        if any(m < 1 for m in args.cycles):
            raise UsageError("cycle lengths must be positive")
        cs = CycleStructure.from_lengths(args.cycles)
    count = A.geodesic_count_formula(cs)
    if args.oracle:
        other = count_geodesics_oracle(cs.representative())
        if other != count:
            raise ArithmeticError(f"formula gives {count}, oracle gives {other}")
    return f"{count}\n"


def cmd_volume(args):
    if args.k is None and args.a is None:
        raise UsageError("volume needs --k or --a")
    if args.k is not None:
        if not 0 <= args.k <= args.n - 1:
            raise UsageError(f"k must lie in 0..{args.n - 1}")
        if args.exact:
            return f"{A.sphere_size_exact(args.n, args.k)}\n"
        return f"{A.log_sphere_size(args.n, args.k)!r}\n"
    if args.exact:
        k = sphere_radius(args.n, args.a)
        return f"{sum(A.sphere_size_exact(args.n, j) for j in range(k + 1))}\n"
    return f"{A.ball_log_volume(args.n, args.a)!r}\n"


def cmd_branching_check(args):
    return E.exp_branching_check(args.seed, args.samples, args.cap, args.tolerances)


def cmd_walk_trace(args):
    steps = args.steps if args.steps is not None else int(math.floor(args.c * args.n / 2 + 1e-9))
    if steps < 0:
        raise UsageError("steps must be non-negative")
    tr = run(args.n, steps, derive(args.seed, 0), seed=args.seed)
    out = _result("walk_trace", args, n=args.n, steps=steps)
    for ev_step, (a, b, k, d) in enumerate(zip(tr.ti.tolist(), tr.tj.tolist(), tr.kinds.tolist(),
                                               tr.distances.tolist()), start=1):
        out.rows.append({"step": ev_step, "i": a + 1, "j": b + 1,
                         "kind": ("coagulation", "fragmentation")[k], "distance": d})
    out.summary.update(final_distance=int(tr.distance_series[-1]), fragmentations=tr.fragmentations)
    return out


COMMANDS = {
    "speed-curve": cmd_speed_curve, "thm1": cmd_thm1, "thm8": cmd_thm8, "singularity": cmd_singularity,
    "fig2": cmd_fig2, "sphere-sample": cmd_sphere_sample, "hitting-sample": cmd_hitting_sample,
    "geodesic-count": cmd_geodesic_count, "volume": cmd_volume, "branching-check": cmd_branching_check,
    "walk-trace": cmd_walk_trace,
}


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def run_cli(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.seed is None and args.command not in ("geodesic-count", "volume"):
        args.seed = secrets.randbits(32)
        print(f"seed={args.seed}", file=sys.stderr)
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 2
    try:
        res = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"{args.command}: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"{args.command}: invalid input: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, SamplerError, AssertionError) as exc:
        print(f"{args.command}: numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if isinstance(res, str):
        _emit(res, args.out)
        return 0
    res.params.setdefault("command", args.command)
    if args.tolerances:
        res.params["tolerances"] = dict(sorted(args.tolerances.items()))
    _emit(res.render(args.format), args.out)
    if args.check and not res.passed:
        for c in res.checks:
            if not c.passed:
                print(f"FAIL {c.describe()}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
