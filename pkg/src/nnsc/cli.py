"""Command-line driver: generate bars data, factorize, evaluate, render.

Exit codes: 0 success, 1 solver/runtime failure, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

from . import bars
from .densemat import MatrixError, read_csv, write_csv
from .model import Mode, Problem
from .oracle import OracleError
from .solver import SolverConfig, fit

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v >= 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be a finite value >= 0, got {text}")
    return v


def _positive_float(text: str) -> float:
    v = _nonneg_float(text)
    if v == 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _echo(title: str, params: dict) -> None:
    print(f"# {title}")
    for k, v in params.items():
        print(f"{k}={v}")


def _load(path: str):
    try:
        return read_csv(path)
    except (OSError, MatrixError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def cmd_generate(args) -> int:
    try:
        spec = bars.BarsSpec(
            n_samples=args.samples,
            active_prob=args.active_prob,
            amp_scale=args.amp_scale,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    x, s, a = bars.generate(spec)
    _echo("generate", {
        "samples": spec.n_samples,
        "active_prob": spec.active_prob,
        "amp_scale": spec.amp_scale,
        "seed": spec.seed,
        "image_side": spec.image_side,
        "out": args.out,
        "features_out": args.features_out,
        "components_out": args.components_out,
    })
    write_csv(x, args.out)
    if args.features_out:
        write_csv(a, args.features_out)
    if args.components_out:
        write_csv(s, args.components_out)
    print(f"wrote data {x.rows}x{x.cols}")
    return EXIT_OK


def cmd_factorize(args) -> int:
    x = _load(args.input)
    mode = Mode(args.algo)
    lam = args.lam
    if mode is Mode.NMF and lam:
        print(f"warning: --lambda {lam} is ignored in nmf mode", file=sys.stderr)
    try:
        problem = Problem(x, lam if mode is Mode.NNSC else 0.0)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cfg = SolverConfig(
        mode=mode,
        mu=args.mu,
        max_iters=args.max_iters,
        tol=args.tol,
        seed=args.seed,
        restarts=args.restarts,
    )
    _echo("factorize", {
        "input": args.input,
        "algo": mode.value,
        "components": args.components,
        "lambda": problem.lam,
        "mu": cfg.mu,
        "max_iters": cfg.max_iters,
        "tol": cfg.tol,
        "eps_div": cfg.eps_div,
        "seed": cfg.seed,
        "restarts": cfg.restarts,
        "backtracking": cfg.backtracking,
        "patience": cfg.patience,
    })
    f, trace = fit(problem, args.components, cfg)
    write_csv(f.a, args.out_a)
    write_csv(f.s, args.out_s)
    if args.trace:
        trace.write_csv(args.trace)
    print(f"final_objective={trace.final_objective:.17g}")
    print(f"iterations={trace.iterations}")
    print(f"converged={str(trace.converged).lower()}")
    if cfg.restarts > 1:
        print(f"restart={trace.restart}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    learned = _load(args.learned)
    reference = _load(args.reference)
    try:
        report = bars.match_features(learned, reference, args.threshold)
    except MatrixError as exc:
        raise UsageError(str(exc)) from None
    print(report.to_text())
    print(report.summary())
    return EXIT_OK


def cmd_render(args) -> int:
    m = _load(args.input)
    try:
        bars.write_pgm(m, args.side, args.out)
    except MatrixError as exc:
        raise UsageError(str(exc)) from None
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nnsc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate the 3x3 bars dataset")
    g.add_argument("--samples", type=_positive_int, default=500)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--active-prob", type=_positive_float, default=0.2)
    g.add_argument("--amp-scale", type=_positive_float, default=1.0)
    g.add_argument("--out", required=True, help="data matrix CSV (9 x samples)")
    g.add_argument("--features-out", help="generating features CSV (9 x 10)")
    g.add_argument("--components-out", help="source activations CSV (10 x samples)")
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("factorize", help="learn a basis and components")
    f.add_argument("--input", required=True)
    f.add_argument("--components", type=_positive_int, required=True)
    f.add_argument("--algo", choices=[m.value for m in Mode], default="nnsc")
    f.add_argument("--lambda", dest="lam", type=_nonneg_float, default=0.0)
    f.add_argument("--mu", type=_positive_float, default=SolverConfig.mu)
    f.add_argument("--max-iters", type=_positive_int, default=SolverConfig.max_iters)
    f.add_argument("--tol", type=_positive_float, default=SolverConfig.tol)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--restarts", type=_positive_int, default=1)
    f.add_argument("--out-a", required=True)
    f.add_argument("--out-s", required=True)
    f.add_argument("--trace")
    f.set_defaults(func=cmd_factorize)

    e = sub.add_parser("evaluate", help="match learned features to a reference")
    e.add_argument("--learned", required=True)
    e.add_argument("--reference", required=True)
    e.add_argument("--threshold", type=float, default=0.99)
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("render", help="write features as a plain graymap strip")
    r.add_argument("--input", required=True)
    r.add_argument("--side", type=_positive_int, default=3)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on bad usage
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MatrixError, OracleError, ValueError, ArithmeticError) as exc:
        print(f"{parser.prog} {args.command}: solver failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"{parser.prog} {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
