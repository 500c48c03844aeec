"""Command-line front end.

Subcommands: ``generate``, ``diagonalize``, ``bench-histogram`` and
``check-bounds``. Exit codes: 0 success, 2 usage or input error, 3 I/O error,
4 numerical abort. Every command prints its resolved configuration to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import statistics
import sys
from dataclasses import asdict
from typing import List, Optional, Sequence

from . import experiments
from .asymmetric import asym_solve
from .errors import (
    AlignmentError,
    IllConditionedError,
    PairingError,
    SimDiagError,
    UnidentifiablePairError,
)
from .fileio import ProblemFile
from .jacobi import INITS, METHODS, SHEAR_DIRECTIONS, SolverOptions, jacobi_solve
from .qrj1d import qrj1d_solve
from .synthesis import make_problem

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4
# RuntimeError: synthesis could not draw identifiable weights
NUMERIC_ERRORS = (IllConditionedError, PairingError, UnidentifiablePairError, AlignmentError, RuntimeError)
DEFAULT_NONORTH_COND = 5.0

HISTOGRAM_FIELDS = ("trial", "eps", "final_objective", "final_off_norm", "sweeps", "converged", "seed")
BOUND_FIELDS = ("instance", "eps", "component", "error", "bound", "ratio", "kind")


class UsageError(SimDiagError, ValueError):
    pass


def _eps_list(text: str) -> List[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad eps list {text!r}") from exc
    if not vals or any(not v >= 0 for v in vals):
        raise argparse.ArgumentTypeError("eps list must hold non-negative numbers")
    return vals


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    return str(x)


def _config(command: str, cfg: dict) -> None:
    print(f"simdiag {command} config: " + json.dumps(cfg, sort_keys=True), file=sys.stderr)


def _emit(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _csv(fields: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _solver_options(args, **over) -> SolverOptions:
    opts = SolverOptions(
        method=getattr(args, "method", "jacobi"),
        rank=getattr(args, "rank", None),
        tol=args.tol,
        max_sweeps=args.max_sweeps,
        sort=getattr(args, "sort", None),
        init=args.init,
        seed=args.seed,
        shear_directions=getattr(args, "shear_directions", SHEAR_DIRECTIONS[0]),
    )
    return SolverOptions(**{**asdict(opts), **over})


def cmd_generate(args) -> int:
    kind = args.kind
    if kind == "asymmetric":
        d1 = args.d1 if args.d1 is not None else args.d
        d2 = args.d2 if args.d2 is not None else args.d
        if d1 is None or d2 is None:
            raise UsageError("asymmetric problems need --d1 and --d2 (or --d)")
    else:
        if args.d1 is not None or args.d2 is not None:
            raise UsageError("--d1/--d2 apply only to --kind asymmetric")
        d1 = d2 = args.d if args.d is not None else 15
    k = args.k if args.k is not None else min(d1, d2)
    cond = args.cond
    if cond is None:
        cond = DEFAULT_NONORTH_COND if kind == "nonorthogonal" else 1.0
    elif kind == "orthogonal" and cond != 1.0:
        raise UsageError("--cond applies only to nonorthogonal or asymmetric problems")
    _config(
        "generate",
        {"kind": kind, "d1": d1, "d2": d2, "k": k, "L": args.L, "eps": args.eps, "seed": args.seed,
         "cond": cond, "with_truth": args.with_truth, "out": args.out},
    )
    mset, truth = make_problem(kind, d1, k, args.L, args.eps, args.seed, cond=cond, d2=d2)
    pf = ProblemFile(mset, truth if args.with_truth else None)
    _emit(pf.dumps(), args.out)
    return EXIT_OK


def cmd_diagonalize(args) -> int:
    pf = ProblemFile.read(args.input)
    mset = pf.mset
    opts = _solver_options(args)
    _config("diagonalize", {**asdict(opts), "asymmetric": args.asymmetric, "in": args.input, "out": args.out})
    if args.asymmetric:
        res = asym_solve(mset, opts)
        emb = res.embedded
        payload = {
            "method": emb.method,
            "W": emb.W.tolist(),
            "U_est": res.U_est.tolist(),
            "V_est": res.V_est.tolist(),
            "lambdas": res.lambdas.tolist(),
            "diagonals": emb.diagonals.tolist(),
            "objective_trace": list(emb.objective_trace),
            "converged": emb.converged,
            "sweeps": emb.sweeps,
        }
    else:
        if not mset.is_square or not mset.symmetric:
            raise UsageError("input matrices are not symmetric; use --asymmetric")
        solve = qrj1d_solve if opts.method == "qrj1d" else jacobi_solve
        res = solve(mset, opts)
        payload = {
            "method": res.method,
            "W": res.W.tolist(),
            "U_est": res.U_est.tolist(),
            "lambdas": res.weights.tolist(),
            "diagonals": res.diagonals.tolist(),
            "objective_trace": list(res.objective_trace),
            "converged": res.converged,
            "sweeps": res.sweeps,
        }
    _emit(json.dumps(payload, separators=(",", ":")) + "\n", args.out)
    return EXIT_OK


def cmd_bench_histogram(args) -> int:
    k = args.k if args.k is not None else args.d
    opts = _solver_options(args, method="jacobi", rank=k)
    _config(
        "bench-histogram",
        {"trials": args.trials, "d": args.d, "k": k, "L": args.L, "eps_list": args.eps_list,
         "seed": args.seed, "tol": opts.tol, "max_sweeps": opts.max_sweeps, "init": opts.init, "out": args.out},
    )
    records = experiments.histogram_experiment(args.trials, args.d, k, args.L, args.eps_list, opts, args.seed)
    rows = [[getattr(r, f) for f in HISTOGRAM_FIELDS] for r in records]
    _emit(_csv(HISTOGRAM_FIELDS, rows), args.out)
    for eps in args.eps_list:
        vals = [r.final_off_norm for r in records if r.eps == eps and r.error is None]
        med = statistics.median(vals) if vals else float("nan")
        print(f"eps={eps!r} median_off_norm={med!r} failed={sum(r.error is not None for r in records if r.eps == eps)}",
              file=sys.stderr)
    return EXIT_OK


def cmd_check_bounds(args) -> int:
    k = args.k if args.k is not None else args.d
    method = "jacobi" if args.kind == "orthogonal" else "qrj1d"
    opts = _solver_options(args, method=method, rank=k)
    cond = args.cond if args.kind == "nonorthogonal" else 1.0
    _config(
        "check-bounds",
        {"instances": args.instances, "d": args.d, "k": k, "L": args.L, "kind": args.kind, "cond": cond,
         "eps_list": args.eps_list, "seed": args.seed, "tol": opts.tol, "max_sweeps": opts.max_sweeps,
         "method": method, "out": args.out},
    )
    out = experiments.bound_validation_experiment(
        args.instances, args.eps_list, opts, args.kind, args.d, k, args.L, cond, args.seed
    )
    rows = []
    worst = {}
    dominance_failures = 0
    for r in out["rows"]:
        bounds = r["bounds"]
        if "afsari_exact" in bounds and bounds["afsari_bound"] < bounds["afsari_exact"]:
            dominance_failures += 1
        for name, bound in bounds.items():
            if r["eps"] == 0:
                ratio = "exact"
            else:
                ratio = r["error"] / bound if bound > 0 else float("inf")
                key = (name, r["eps"])
                worst[key] = max(worst.get(key, 0.0), ratio)
            rows.append([r["instance"], r["eps"], r["component"], r["error"], bound, ratio, name])
    _emit(_csv(BOUND_FIELDS, rows), args.out)
    summary = " ".join(f"max_ratio[{n},eps={e!r}]={v:.6g}" for (n, e), v in sorted(worst.items()))
    print(f"summary: {summary} skipped={out['skipped']} dominance_failures={dominance_failures}", file=sys.stderr)
    return EXIT_OK


def _add_solver_flags(p, methods=True):
    if methods:
        p.add_argument("--method", choices=METHODS, default="jacobi")
        p.add_argument("--rank", type=int, default=None)
        p.add_argument("--sort", dest="sort", action="store_true", default=None)
        p.add_argument("--no-sort", dest="sort", action="store_false")
        p.add_argument("--shear-directions", choices=SHEAR_DIRECTIONS, default=SHEAR_DIRECTIONS[0])
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-sweeps", type=int, default=200)
    p.add_argument("--init", choices=INITS, default="identity")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simdiag", description="Joint diagonalization of matrix sets.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a planted problem as a ProblemFile")
    g.add_argument("--kind", choices=("orthogonal", "nonorthogonal", "asymmetric"), default="orthogonal")
    g.add_argument("--d", type=int, default=None)
    g.add_argument("--d1", type=int, default=None)
    g.add_argument("--d2", type=int, default=None)
    g.add_argument("--k", type=int, default=None)
    g.add_argument("--L", type=int, default=15)
    g.add_argument("--eps", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--cond", type=float, default=None)
    g.add_argument("--out", default=None)
    g.add_argument("--with-truth", action="store_true")
    g.set_defaults(func=cmd_generate)

    dg = sub.add_parser("diagonalize", help="jointly diagonalize a ProblemFile")
    dg.add_argument("--in", dest="input", required=True)
    dg.add_argument("--out", default=None)
    dg.add_argument("--asymmetric", action="store_true")
    dg.add_argument("--seed", type=int, default=0, help="seed for the random_projection init")
    _add_solver_flags(dg)
    dg.set_defaults(func=cmd_diagonalize)

    h = sub.add_parser("bench-histogram", help="final objectives over seeded trials (CSV)")
    h.add_argument("--trials", type=int, default=200)
    h.add_argument("--d", type=int, default=15)
    h.add_argument("--k", type=int, default=None)
    h.add_argument("--L", type=int, default=15)
    h.add_argument("--eps-list", type=_eps_list, default=list(experiments.DEFAULT_EPS))
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--out", default=None)
    _add_solver_flags(h, methods=False)
    h.set_defaults(func=cmd_bench_histogram)

    c = sub.add_parser("check-bounds", help="measured error against first-order bounds (CSV)")
    c.add_argument("--instances", type=int, default=20)
    c.add_argument("--d", type=int, default=6)
    c.add_argument("--k", type=int, default=None)
    c.add_argument("--L", type=int, default=10)
    c.add_argument("--kind", choices=("orthogonal", "nonorthogonal"), default="orthogonal")
    c.add_argument("--cond", type=float, default=1.5)
    c.add_argument("--eps-list", type=_eps_list, default=[0.0, 1e-6])
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", default=None)
    _add_solver_flags(c, methods=False)
    c.set_defaults(func=cmd_check_bounds)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except NUMERIC_ERRORS as exc:
        print(f"simdiag: numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"simdiag: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SimDiagError, ValueError) as exc:
        print(f"simdiag: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
