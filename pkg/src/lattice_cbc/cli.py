"""Command-line interface: ``lattice-cbc <command> [options]``.

Exit codes: 0 success, 1 verification failure, 2 invalid input (including
nonprime n), 3 malformed weight specification.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Optional

import numpy as np

from . import approx, bounds, experiments, verify
from .cbc import construct, eval_Sd, generating_vector_from_dict
from .kernel import SUPPORTED_ALPHA
from .linalg_fast import is_prime
from .weights import WeightFamily, WeightSpecError, study_weights, parse_weight_spec

EXIT_VERIFY = 1
EXIT_INPUT = 2
EXIT_WEIGHTS = 3


class InputError(Exception):
    """Invalid command-line input (exit code 2)."""


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_atomic(path: Optional[str], text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file, or to stdout."""
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def resolve_seed(seed: int) -> int:
    env = os.environ.get("LATTICE_CBC_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise InputError(f"LATTICE_CBC_SEED must be an integer, got {env!r}") from None
    return seed


def check_n(n: int) -> int:
    if not is_prime(n):
        raise InputError(f"n = {n} is not prime")
    return n


def check_alpha(alpha: int) -> int:
    if alpha not in SUPPORTED_ALPHA:
        raise InputError(f"alpha must be one of {SUPPORTED_ALPHA}, got {alpha}")
    return alpha


def int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def load_weights(spec: str, d: Optional[int], alpha: int) -> WeightFamily:
    """``study:<product|pod|spod>``, a path to a JSON document, or inline JSON."""
    if spec.startswith("study:"):
        if d is None:
            raise InputError("--d is required with study weights")
        try:
            return study_weights(spec.split(":", 1)[1], d, alpha)
        except ValueError as exc:
            raise WeightSpecError(str(exc)) from None
    text = spec
    if not spec.lstrip().startswith("{"):
        try:
            text = Path(spec).read_text()
        except OSError as exc:
            raise WeightSpecError(f"cannot read weight spec {spec!r}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise WeightSpecError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise WeightSpecError("weight spec must be a JSON object")
    if d is not None:
        doc["d"] = d
    doc.setdefault("alpha", alpha)
    return parse_weight_spec(doc)


# -- commands ----------------------------------------------------------------

def cmd_construct(args) -> int:
    n = check_n(args.n)
    alpha = check_alpha(args.alpha)
    w = load_weights(args.weights, args.d, alpha)
    gv = construct(n, w.d, w, alpha, workers=args.threads)
    if args.format == "csv":
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["s", "z", "T"])
        for s, (z, t) in enumerate(zip(gv.z, gv.T), start=1):
            wr.writerow([s, int(z), fmt(t)])
        text = buf.getvalue()
    else:
        text = gv.to_json() + "\n"
    write_atomic(args.out, text)
    return 0


def cmd_eval_sd(args) -> int:
    if args.vector:
        try:
            doc = json.loads(Path(args.vector).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read generating vector: {exc}") from None
        gv = generating_vector_from_dict(doc)
        n, alpha, z, w = gv.n, gv.alpha, [int(v) for v in gv.z], gv.weights
        if args.weights:
            w = load_weights(args.weights, len(z), alpha)
    else:
        if args.n is None or args.z is None or args.weights is None:
            raise InputError("eval-sd needs --vector, or --n, --z and --weights")
        n, alpha, z = args.n, args.alpha, args.z
        w = load_weights(args.weights, len(z), alpha)
    check_n(n)
    check_alpha(alpha)
    if w is None:
        raise InputError("no weights given")
    if any(not 1 <= v <= n - 1 for v in z):
        raise InputError("components of z must lie in 1..n-1")
    Sd, T = eval_Sd(n, len(z), w, alpha, z, per_step=True)
    out = {"n": n, "d": len(z), "alpha": alpha, "z": z, "T": [float(t) for t in T], "Sd": float(Sd)}
    write_atomic(args.out, json.dumps(out, indent=2) + "\n")
    return 0


def cmd_bound(args) -> int:
    n = check_n(args.n)
    alpha = check_alpha(args.alpha)
    w = load_weights(args.weights, args.d, alpha)
    M = args.M if args.M == "auto" else float(args.M)
    try:
        inp = bounds.BoundInputs(alpha=alpha, lam=args.lam, n=n, d=w.d, weights=w, M=M)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    report = bounds.bound_report(inp)
    report["initial_error"] = bounds.initial_error(w, w.d)
    write_atomic(args.out, json.dumps(report, indent=2) + "\n")
    return 0


def cmd_index_set(args) -> int:
    alpha = check_alpha(args.alpha)
    w = load_weights(args.weights, args.d, alpha)
    A = approx.build_index_set(w, float(args.M), alpha, cap=args.cap)
    write_atomic(args.out, approx.index_set_to_csv(A))
    return 0


def demo_function(d: int, alpha: int):
    """Smooth periodic test function prod_j (1 + j^-2 B_alpha(x_j)) style."""
    from .kernel import bernoulli_poly

    c = np.arange(1, d + 1, dtype=float) ** -2.0

    def f(X):
        X = np.atleast_2d(X)
        return np.prod(1.0 + c[None, :] * bernoulli_poly(alpha, X), axis=1)

    return f


def cmd_approx_demo(args) -> int:
    n = check_n(args.n)
    alpha = check_alpha(args.alpha)
    w = load_weights(args.weights, args.d, alpha)
    gv = construct(n, w.d, w, alpha, workers=args.threads)
    M = float(n) ** 0.5 if args.M == "auto" else float(args.M)
    A = approx.build_index_set(w, M, alpha)
    f = demo_function(w.d, alpha)
    model = approx.approximate(f, A, n, gv.z)
    err = approx.l2_error_estimate(f, model, args.samples, resolve_seed(args.seed))
    report = {
        "n": n, "d": w.d, "alpha": alpha, "z": [int(v) for v in gv.z], "M": M,
        "index_set_size": len(A), "Sd": gv.Sd, "l2_error_estimate": err,
    }
    if args.coeffs_out:
        write_atomic(args.coeffs_out, approx.coefficients_to_csv(A, model.coeffs))
    write_atomic(args.out, json.dumps(report, indent=2) + "\n")
    return 0


def cmd_convergence(args) -> int:
    for n in args.n_list:
        check_n(n)
    for a in args.alpha_list:
        check_alpha(a)
    choices = {a: tuple(args.choices) if args.choices else experiments.STUDY_CHOICES.get(a, ("product",))
               for a in args.alpha_list}
    cfg = experiments.ConvergenceConfig(alphas=tuple(args.alpha_list), d_list=tuple(args.d_list),
                                        n_list=tuple(args.n_list), choices=choices, workers=args.threads or 1)
    try:
        rows = experiments.convergence_study(cfg)
    except ValueError as exc:
        raise WeightSpecError(str(exc)) from None
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["weight_label", "d", "n", "Sd"])
    for r in rows:
        wr.writerow([f"{r.weight_label}_alpha{r.alpha}", r.d, r.n, fmt(r.Sd)])
    slopes = io.StringIO()
    ws = csv.writer(slopes, lineterminator="\n")
    ws.writerow(["weight_label", "d", "slope"])
    for (alpha, label, d), slope in experiments.group_slopes(rows).items():
        ws.writerow([f"{label}_alpha{alpha}", d, fmt(slope)])
    write_atomic(args.out, buf.getvalue())
    if args.slopes_out:
        write_atomic(args.slopes_out, slopes.getvalue())
    elif args.out and args.out != "-":
        p = Path(args.out)
        write_atomic(str(p.with_name(p.stem + "_slopes.csv")), slopes.getvalue())
    else:
        sys.stderr.write(slopes.getvalue())
    return 0


def cmd_verify(args) -> int:
    results = verify.run_checks(seed=resolve_seed(args.seed), names=args.only)
    lines = [f"{'PASS' if r.passed else 'FAIL'} {r.name} ({r.seconds:.2f}s): {r.detail}" for r in results]
    failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} check groups passed")
    text = "\n".join(lines) + "\n"
    if args.out:
        doc = [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results]
        write_atomic(args.out, json.dumps(doc, indent=2) + "\n")
    sys.stdout.write(text)
    return EXIT_VERIFY if failed else 0


def cmd_bench(args) -> int:
    alpha = check_alpha(args.alpha)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["test", "family", "n", "d", "seconds", "ratio", "cap", "status"])
    warnings = []
    for test in experiments.DOUBLING_TESTS:
        res = experiments.run_doubling(test, alpha=alpha, repeats=args.repeats, workers=args.threads or 1)
        for i, (v, t) in enumerate(zip(res["values"], res["seconds"])):
            n, d = (v, test.fixed) if test.vary == "n" else (test.fixed, v)
            ratio = res["ratios"][i - 1] if i else float("nan")
            status = "" if not i else ("ok" if ratio <= test.cap else "WARN")
            wr.writerow([test.label, test.family, n, d, fmt(t), fmt(ratio), fmt(test.cap), status])
        exponent = experiments.scaling_exponent(res["values"], res["seconds"])
        sys.stderr.write(f"{test.label}: ratios {', '.join(f'{r:.2f}' for r in res['ratios'])}"
                         f" (cap {test.cap}), fitted exponent {exponent:.2f}\n")
        if not res["passed"]:
            warnings.append(test.label)
    for label in warnings:
        sys.stderr.write(f"warning: {label} exceeded its time ratio cap\n")
    write_atomic(args.out, buf.getvalue())
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lattice-cbc", description="Fast CBC construction of rank-1 lattice rules")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, n=True, d=True, weights=True):
        if n:
            sp.add_argument("--n", type=int, required=True, help="number of points (prime)")
        if d:
            sp.add_argument("--d", type=int, default=None, help="dimension (overrides the weight spec)")
        sp.add_argument("--alpha", type=int, default=2, help="smoothness (even)")
        if weights:
            sp.add_argument("--weights", default="study:product",
                            help="study:<product|pod|spod>, a JSON file, or inline JSON")
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads for the per-k map (default LATTICE_CBC_THREADS or CPU count)")

    sp = sub.add_parser("construct", help="construct a generating vector")
    common(sp)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("eval-sd", help="score a given generating vector")
    sp.add_argument("--vector", help="generating vector JSON as written by construct")
    sp.add_argument("--n", type=int)
    sp.add_argument("--z", type=int_list, help="comma separated components")
    sp.add_argument("--alpha", type=int, default=2)
    sp.add_argument("--weights", default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_eval_sd)

    sp = sub.add_parser("bound", help="evaluate the a priori bounds")
    common(sp)
    sp.add_argument("--lambda", dest="lam", type=float, default=1.0)
    sp.add_argument("--M", default="auto")
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("index-set", help="enumerate A_d(M) as CSV")
    common(sp, n=False)
    sp.add_argument("--M", type=float, required=True)
    sp.add_argument("--cap", type=int, default=approx.DEFAULT_CAP)
    sp.set_defaults(func=cmd_index_set)

    sp = sub.add_parser("approx-demo", help="approximate a smooth test function on a constructed lattice")
    common(sp)
    sp.add_argument("--M", default="auto")
    sp.add_argument("--samples", type=int, default=2000)
    sp.add_argument("--coeffs-out", default=None)
    sp.set_defaults(func=cmd_approx_demo)

    sp = sub.add_parser("convergence", help="S_d against n for the study weights")
    sp.add_argument("--n-list", type=int_list, default=list(experiments.STUDY_PRIMES))
    sp.add_argument("--d-list", type=int_list, default=[5, 10])
    sp.add_argument("--alpha-list", type=int_list, default=[2, 4])
    sp.add_argument("--choices", type=lambda s: s.split(","), default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--slopes-out", default=None)
    sp.add_argument("--threads", type=int, default=None)
    sp.set_defaults(func=cmd_convergence)

    sp = sub.add_parser("verify", help="run the oracle cross-checks")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--only", nargs="*", default=None, choices=sorted(verify.CHECKS))
    sp.add_argument("--out", default=None, help="also write a JSON report")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("bench", help="time constructions in doubling sequences")
    sp.add_argument("--alpha", type=int, default=2)
    sp.add_argument("--repeats", type=int, default=3)
    sp.add_argument("--out", default=None)
    sp.add_argument("--threads", type=int, default=None)
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except WeightSpecError as exc:
        sys.stderr.write(f"error: weight specification: {exc}\n")
        return EXIT_WEIGHTS
    except (InputError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
