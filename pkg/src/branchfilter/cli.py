"""Command line entry point: ``branchfilter <command> [options]``.

Exit codes: 0 success, 2 usage, 3 input parse, 4 numerical or degeneracy
failure, 5 infeasible configuration.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    DegeneracyError,
    DegenerateSeriesError,
    DomainError,
    InfeasibleError,
    InsufficientDataError,
    SurvivalConditioningError,
)
from .fixtures import FIXTURES, fixture_csv, fixtures_digest, get_fixture
from .frequentist import estimate_report
from .io import InputParseError, config_hash, dumps, read_series, write_csv
from .liu_west import FilterConfig, run_filter
from .model import ModelParams, compute_moments, gamma2_epidemic, invert_moments, simulate
from .posterior import summarize
from .stochastic import RngStream

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_NUMERICAL = 4
EXIT_INFEASIBLE = 5

FIXTURES_SHA256 = "8a47a8534680296c8a5d0125a349dc87ef95883d77435a8ae9783c16d8e5d918"
SEED_ENV = "BRANCHFILTER_SEED"


class _Fail(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _seed(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _x0_prior(text):
    try:
        lo, hi = (int(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None
    if not 0 <= lo <= hi:
        raise argparse.ArgumentTypeError(f"need 0 <= LO <= HI, got {text!r}")
    return lo, hi


def resolve_seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return _seed(env)
    except argparse.ArgumentTypeError as exc:
        raise _Fail(EXIT_USAGE, f"{SEED_ENV}: {exc}") from None


def _meta(command, config):
    return {
        "program": "branchfilter",
        "version": __version__,
        "command": command,
        "config_sha256": config_hash(config),
        "seed": config.get("seed"),
    }


def _file_sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _params(args):
    try:
        return ModelParams(args.pi, args.lam, args.phi)
    except DomainError as exc:
        raise _Fail(EXIT_INFEASIBLE, str(exc)) from None


def cmd_simulate(args):
    params = _params(args)
    seed = resolve_seed(args)
    config = {
        "pi": params.pi,
        "lambda": params.lam,
        "phi": params.phi,
        "x0": args.x0,
        "n": args.n,
        "seed": seed,
        "condition_survival": args.condition_survival,
        "max_attempts": args.max_attempts,
    }
    try:
        traj = simulate(params, args.x0, args.n, RngStream(seed), args.condition_survival, args.max_attempts)
    except SurvivalConditioningError as exc:
        raise _Fail(EXIT_NUMERICAL, str(exc)) from None
    meta = _meta("simulate", config)
    rows = [(t, x, z) for t, (x, z) in enumerate(zip(traj.x, traj.z))]
    write_csv(args.out, ["n", "x", "z"], rows, meta)
    summary = {
        "meta": meta,
        "config": config,
        "m": compute_moments(params).m,
        "extinct": traj.extinct,
        "x_final": traj.x[-1],
        "z_final": traj.z[-1],
        "output": str(args.out),
    }
    sys.stdout.write(dumps(summary))


def _load_z(path):
    z, _ = read_series(path)
    return z


def cmd_estimate(args):
    z = _load_z(args.input)
    config = {
        "input_sha256": _file_sha256(args.input),
        "phi": args.phi,
        "level": args.level,
        "odd": args.odd,
        "seed": None,
    }
    try:
        report = estimate_report(z, phi=args.phi, level=args.level, odd=args.odd)
    except InsufficientDataError as exc:
        raise _Fail(EXIT_PARSE, f"{args.input}: {exc}") from None
    except DegenerateSeriesError as exc:
        raise _Fail(EXIT_NUMERICAL, f"{args.input}: {exc}") from None
    out = {"meta": _meta("estimate", config), "config": config, "report": report.to_dict()}
    text = dumps(out)
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)


def cmd_filter(args):
    z = _load_z(args.input)
    seed = resolve_seed(args)
    try:
        config = FilterConfig(
            n_particles=args.particles,
            delta=args.delta,
            phi=args.phi,
            x0=args.x0,
            x0_prior=args.x0_prior,
            transition=args.transition,
            kernel=args.kernel,
            resampling=args.resampling,
            jitter=args.jitter,
            round_mu=args.round_mu,
            seed=seed,
        )
    except DomainError as exc:
        raise _Fail(EXIT_INFEASIBLE, str(exc)) from None
    resolved = config.to_dict()
    resolved.update(input_sha256=_file_sha256(args.input), grid_size=args.grid_size, level=args.level)
    meta = _meta("filter", resolved)
    try:
        result = run_filter(z, config)
    except DegeneracyError as exc:
        raise _Fail(
            EXIT_NUMERICAL,
            f"filter degenerated at step {exc.step}: {exc.args[0]}; "
            "retry with --jitter (e.g. 1e-6) or more --particles",
        ) from None
    except InfeasibleError as exc:
        raise _Fail(EXIT_INFEASIBLE, str(exc)) from None
    except (InsufficientDataError, DomainError) as exc:
        raise _Fail(EXIT_PARSE, f"{args.input}: {exc}") from None
    except DegenerateSeriesError as exc:
        raise _Fail(EXIT_NUMERICAL, f"{args.input}: {exc}") from None

    cloud = result.final_cloud
    summary = summarize(cloud, grid_size=args.grid_size, level=args.level)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    posterior = {
        "meta": meta,
        "config": resolved,
        "summary": summary.to_dict(),
        "history": result.history,
        "diagnostics": result.diagnostics,
    }
    _write_text(outdir / "posterior.json", dumps(posterior))
    write_csv(
        outdir / "cloud.csv",
        ["pi", "lambda", "x", "weight"],
        ((float(p), float(l), int(x), float(w)) for (p, l), x, w in zip(cloud.theta, cloud.x, cloud.weights)),
        meta,
    )
    for name, grid in (("pi", summary.marginal_pi), ("lambda", summary.marginal_lambda)):
        rows = [] if grid is None else zip(grid.points.tolist(), grid.density.tolist())
        write_csv(outdir / f"marginal_{name}.csv", [name, "density"], rows, meta)
    joint = summary.joint_grid
    rows = []
    if joint is not None:
        dens = joint["density"]
        rows = (
            (float(p), float(l), float(dens[i, k]))
            for i, p in enumerate(joint["pi"])
            for k, l in enumerate(joint["lambda"])
        )
    write_csv(outdir / "joint_grid.csv", ["pi", "lambda", "density"], rows, meta)
    sys.stdout.write(dumps({"meta": meta, "summary": summary.to_dict(), "outdir": str(outdir)}))


def cmd_moments(args):
    if args.invert:
        if args.m is None or args.gamma2 is None:
            raise _Fail(EXIT_USAGE, "--invert needs --m and --gamma2")
        try:
            inv = invert_moments(args.m, args.gamma2, args.phi)
        except InfeasibleError as exc:
            out = {"feasible": False, "reason": str(exc), "m": args.m, "gamma2": args.gamma2, "phi": args.phi}
        else:
            out = {
                "feasible": True,
                "pi": inv.pi,
                "lambda": inv.lam,
                "n_roots": inv.n_roots,
                "multiple_roots": inv.multiple,
                "candidates": [{"pi": p, "lambda": l} for p, l in inv.candidates],
                "m": args.m,
                "gamma2": args.gamma2,
                "phi": args.phi,
            }
    else:
        if args.pi is None or args.lam is None:
            raise _Fail(EXIT_USAGE, "need --pi and --lambda (or --invert)")
        params = _params(args)
        moments = compute_moments(params)
        out = {"pi": params.pi, "lambda": params.lam, "phi": params.phi, **moments.to_dict()}
        out["gamma2_closed_form"] = gamma2_epidemic(params)
    sys.stdout.write(dumps(out))


def cmd_fixture(args):
    if fixtures_digest() != FIXTURES_SHA256:
        raise _Fail(EXIT_NUMERICAL, "embedded fixtures do not match their recorded digest")
    if args.list:
        sys.stdout.write(dumps([{"name": f.name, "pi": f.params.pi, "lambda": f.params.lam} for f in FIXTURES]))
        return
    try:
        fixture = get_fixture(int(args.name) if args.name.isdigit() else args.name)
    except (KeyError, IndexError) as exc:
        raise _Fail(EXIT_USAGE, str(exc.args[0])) from None
    text = fixture_csv(fixture)
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="branchfilter", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate a partially observed epidemic")
    p.add_argument("--pi", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--phi", type=float, default=0.5)
    p.add_argument("--x0", type=_positive_int, default=100)
    p.add_argument("--n", type=_positive_int, default=30)
    p.add_argument("--seed", type=_seed)
    p.add_argument("--condition-survival", action="store_true")
    p.add_argument("--max-attempts", type=_positive_int, default=10_000)
    p.add_argument("--out", default="trajectory.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="ratio estimators and confidence intervals")
    p.add_argument("input")
    p.add_argument("--phi", type=float, default=0.5)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--odd", action="store_true", help="invert the odd-index estimators for (pi, lambda)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("filter", help="Liu-West posterior for (pi, lambda)")
    p.add_argument("input")
    p.add_argument("--particles", type=_positive_int, default=2000)
    p.add_argument("--delta", type=float, default=0.95)
    p.add_argument("--phi", type=float, default=0.5)
    x0 = p.add_mutually_exclusive_group()
    x0.add_argument("--x0", type=int, help="known initial size (default 100)")
    x0.add_argument("--x0-prior", type=_x0_prior, metavar="LO:HI")
    p.add_argument("--transition", choices=("conditional", "marginal"), default="conditional")
    p.add_argument("--kernel", choices=("transformed", "natural"), default="transformed")
    p.add_argument("--resampling", choices=("multinomial", "systematic"), default="multinomial")
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--round-mu", action="store_true")
    p.add_argument("--grid-size", type=_positive_int, default=512)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--seed", type=_seed)
    p.add_argument("--outdir", default=".")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("moments", help="forward moments or their inversion")
    p.add_argument("--pi", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--phi", type=float, default=0.5)
    p.add_argument("--invert", action="store_true")
    p.add_argument("--m", type=float)
    p.add_argument("--gamma2", type=float)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("fixture", help="export a reference sample as CSV")
    p.add_argument("name", nargs="?", default="0")
    p.add_argument("--list", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fixture)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "filter" and args.x0_prior is None and args.x0 is None:
        args.x0 = 100
    try:
        args.func(args)
    except _Fail as exc:
        print(f"branchfilter: error: {exc}", file=sys.stderr)
        return exc.code
    except InputParseError as exc:
        print(f"branchfilter: error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (InfeasibleError, DomainError) as exc:
        print(f"branchfilter: error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
