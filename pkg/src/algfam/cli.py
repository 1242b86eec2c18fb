"""Command-line interface: ``algfam <group> <command> ...``.

Exit codes: 0 success, 1 unexpected failure, 2 parse/format error,
3 Gröbner budget exhausted, 4 mathematical domain error (e.g. a matrix
that is not positive definite, an empty variety), 5 numerical
non-convergence.  Data goes to stdout (or ``-o``), diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import asymptotics as asym
from .ideal import (
    DEFAULT_BUDGET,
    BudgetExceededError,
    EmptyVarietyError,
    count_solutions,
    dimension,
    eliminate,
    groebner,
    saturate,
    singular_locus,
)
from .io import FormatError, RunManifest, atomic_write, ideal_to_dict, read_ideal, read_json, read_matrix
from .mle import (
    ConvergenceError,
    NotPositiveDefiniteError,
    boundary_mle,
    fa_critical_ideal,
    fa_solve,
    global_mle_fa,
    lr_stat_ci,
)
from .models import (
    ModelSpec,
    discrete_marginalize,
    epsilon_counterexample,
    gaussian_marginalize,
    GaussianDomain,
    model_ideal,
    nonneg_rank3_evidence,
)
from .poly import ParseError, TermOrder

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_BUDGET, EXIT_DOMAIN, EXIT_CONVERGENCE = 0, 1, 2, 3, 4, 5


class CLIError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _load_ideal(path):
    """Ideal file, or a ModelSpec whose model ideal is used."""
    obj = read_json(path)
    if isinstance(obj, dict) and "domain" in obj:
        return model_ideal(ModelSpec.from_dict(obj))
    return read_ideal(obj)


def _fmt_num(x, digits=4):
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return f"{x:.{digits}f}"


def _matrix_table(M, digits=4):
    M = np.asarray(M, dtype=float)
    cells = [[f"{x:.{digits}f}".rstrip("0").rstrip(".") if float(x).is_integer() else f"{x:.{digits}f}" for x in row]
             for row in M]
    w = max(len(c) for row in cells for c in row)
    return "\n".join("  ".join(c.rjust(w) for c in row) for row in cells)


class Output:
    """Collects the result payload and writes it as JSON or a table."""

    def __init__(self, args, manifest: RunManifest):
        self.args = args
        self.manifest = manifest

    def emit(self, payload: dict, table: str):
        text = json.dumps(payload, indent=2, default=_json_default) + "\n" if self.args.format == "json" else table + "\n"
        out = getattr(self.args, "output", None)
        if out and out != "-":
            atomic_write(out, text)
            self.manifest.outputs.append(str(out))
            self.manifest.write(RunManifest.path_for(out))
        else:
            sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o))


def _manifest(args, command, inputs=()):
    arguments = {k: v for k, v in vars(args).items() if k not in ("func",) and not callable(v)}
    m = RunManifest(command, arguments)
    if getattr(args, "seed", None) is not None:
        m.seeds["seed"] = args.seed
    for p in inputs:
        m.add_input(p)
    return m


# ---------------------------------------------------------------------------
# ideal commands
# ---------------------------------------------------------------------------


def cmd_ideal(args):
    I = _load_ideal(args.file)
    order = TermOrder.from_name(args.order)
    man = _manifest(args, f"ideal {args.action}", [args.file])
    out = Output(args, man)
    if args.action == "gb":
        G = groebner(I, order, args.budget)
        lines = G.format()
        out.emit(ideal_to_dict(G), "\n".join(lines))
    elif args.action == "eliminate":
        if not args.vars:
            raise CLIError("--vars is required for eliminate", EXIT_PARSE)
        J = eliminate(I, [v.strip() for v in args.vars.split(",") if v.strip()], args.budget)
        G = groebner(J, order, args.budget)
        out.emit(ideal_to_dict(G), "\n".join(G.format()) or "0")
    elif args.action == "saturate":
        if not args.by:
            raise CLIError("--by is required for saturate", EXIT_PARSE)
        f = I.ring.parse(args.by)
        J = saturate(I, f, args.budget)
        G = groebner(J, order, args.budget)
        out.emit(ideal_to_dict(G), "\n".join(G.format()))
    elif args.action == "dim":
        d = dimension(I, args.budget)
        out.emit({"dimension": d}, str(d))
    elif args.action == "count":
        G = groebner(I, order, args.budget)
        c = count_solutions(G)
        out.emit({"count": c, "with_multiplicity": True}, str(c))
    elif args.action == "singular-locus":
        J = singular_locus(I, args.codim, args.budget)
        out.emit(ideal_to_dict(J), "\n".join(g.format() for g in J.gens))


# ---------------------------------------------------------------------------
# model commands
# ---------------------------------------------------------------------------


def cmd_model(args):
    if args.action == "epsilon-check":
        return _epsilon_check(args)
    if not args.file:
        raise CLIError("a ModelSpec file is required", EXIT_PARSE)
    spec = ModelSpec.from_dict(read_json(args.file))
    man = _manifest(args, f"model {args.action}", [args.file])
    out = Output(args, man)
    I = model_ideal(spec)
    if args.action == "ci-ideal":
        out.emit(ideal_to_dict(I), "\n".join(g.format() for g in I.gens))
    elif args.action == "marginalize":
        if isinstance(spec.domain, GaussianDomain):
            J = gaussian_marginalize(I, spec.domain, args.budget)
        else:
            J = discrete_marginalize(I, spec.domain, args.budget)
        out.emit(ideal_to_dict(J), "\n".join(g.format() for g in J.gens) or "0")


def _epsilon_check(args):
    man = _manifest(args, "model epsilon-check")
    Q = epsilon_counterexample(args.eps)
    from .ideal import PolyMatrix, determinant  # exact determinant of constants
    from .poly import Ring

    R = Ring(["e"])
    det = determinant(PolyMatrix([[R.const(x) for x in row] for row in Q])).constant_value()
    rep = nonneg_rank3_evidence(Q, restarts=args.restarts, seed=args.seed)
    payload = {
        "eps": str(Fraction(args.eps)),
        "matrix": [[str(x) for x in row] for row in Q],
        "determinant": str(det),
        "nmf": rep.to_dict(),
    }
    table = (
        f"determinant (exact): {det}\n"
        f"best rank-3 nonnegative residual over {rep.restarts} restarts: {rep.best_residual:.6g}\n"
        "(optimization evidence, not a proof)"
    )
    Output(args, man).emit(payload, table)


# ---------------------------------------------------------------------------
# mle commands
# ---------------------------------------------------------------------------


def _point_row(c):
    th = np.asarray(c.theta)
    if np.iscomplexobj(th):
        s = " ".join(f"{z.real:.5g}{z.imag:+.5g}i" for z in th)
    else:
        s = " ".join(f"{x:.5g}" for x in th)
    ll = "" if c.loglik is None else f"{c.loglik:.6f}"
    return f"{c.kind:10s} {ll:>12s}  {s}"


def cmd_mle(args):
    S = read_matrix(args.file)
    man = _manifest(args, f"mle {args.action}", [args.file])
    out = Output(args, man)
    Sf = np.array(S, dtype=float)
    if args.action == "lr":
        if Sf.shape != (3, 3):
            raise CLIError("lr needs a 3x3 matrix", EXIT_DOMAIN)
        val, branch = lr_stat_ci(Sf)
        out.emit({"lambda": val, "branch": branch}, f"{val:.12g} {branch}")
    elif args.action == "fa-solve":
        pts, diag = fa_solve(S, args.starts, args.mode, args.seed, threads=args.threads)
        if not pts:
            print("no start converged", file=sys.stderr)
        payload = {"count": len(pts), "points": [c.to_dict() for c in pts], "diagnostics": diag}
        table = f"{len(pts)} distinct solutions\n" + "\n".join(_point_row(c) for c in pts)
        out.emit(payload, table)
    elif args.action == "fa-global":
        rep = global_mle_fa(S, args.starts, args.seed, threads=args.threads, expected_count=args.expect)
        out.emit(rep.to_dict(), _global_table(rep))
    elif args.action == "fa-ideal":
        # cleared critical ideal; --saturate removes the det K = 0 components
        I = fa_critical_ideal(S, saturated=args.saturate, budget=args.budget)
        out.emit(ideal_to_dict(I, saturated=args.saturate), "\n".join(g.format() for g in I.gens))
    elif args.action == "boundary":
        if args.index is None:
            raise CLIError("--index is required for boundary", EXIT_PARSE)
        fit = boundary_mle(Sf, args.index - 1, seed=args.seed)
        payload = {"index": args.index, "sigma": fit.sigma, "loglik": fit.loglik,
                   "grad_norm": fit.grad_norm, "agreement": fit.agreement}
        out.emit(payload, f"w{args.index} = 0, loglik {fit.loglik:.6f}\n" + _matrix_table(fit.sigma))


def _global_table(rep):
    t = rep.tallies
    lines = [
        f"complex solutions: {t['solutions']}   real: {t['real']}   feasible: {t['feasible']}"
        f"   distinct Sigma: {t['distinct_sigma']}",
        f"purely imaginary loadings with PD K: {t['imaginary_lambda']} "
        f"({t['imaginary_sigma']} distinct matrices)",
        "",
        "feasible critical covariance matrices:",
    ]
    for c in sorted(rep.distinct_sigma, key=lambda c: -c.loglik):
        lines.append(f"  {c.kind}, loglik {c.loglik:.6f}")
        lines.extend("    " + r for r in _matrix_table(c.sigma).splitlines())
    lines.append("boundary fits (w_i = 0):")
    for b in rep.boundary:
        lines.append(f"  i={b.index + 1}: loglik {b.loglik:.6f}")
    lines.append("")
    lines.append(f"verdict: {rep.verdict}")
    if rep.verdict.startswith("boundary"):
        lines.append("(Heywood case: the maximum lies on the boundary of the parameter space)")
    if rep.mle_sigma is not None:
        lines.append(f"MLE (loglik {rep.mle_loglik:.6f}):")
        lines.extend("  " + r for r in _matrix_table(rep.mle_sigma).splitlines())
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# asymptotics commands
# ---------------------------------------------------------------------------


SIGMAS = {
    "identity": np.eye(3),
    "smooth": np.array([[1.0, 0.0, 0.5], [0.0, 1.0, 0.0], [0.5, 0.0, 1.0]]),
}


def cmd_asym(args):
    man = _manifest(args, f"asym {args.action}")
    t0 = time.perf_counter()
    ref = None
    floor = -np.inf
    if args.action == "min-chisq":
        dist = asym.limit_law_min_chisq(args.reps, args.seed, args.threads)
    elif args.action == "lr-sim":
        if args.sigma in SIGMAS:
            sigma0 = SIGMAS[args.sigma]
        else:
            sigma0 = np.array(read_matrix(args.sigma), dtype=float)
            man.add_input(args.sigma)
        dist = asym.simulate_lr_ci(sigma0, args.n, args.reps, args.seed, args.threads)
        if args.sigma == "identity":
            ref = asym.limit_law_min_chisq(args.reps, args.seed + 1, args.threads)
        else:
            ref = lambda x: asym.chisq_cdf(x, 2)  # noqa: E731
    elif args.action == "curves":
        curve = asym.CurveSpec(args.kind)
        dist = asym.simulate_curve_lr(curve, args.n, args.reps, args.seed, args.threads)
        if args.kind == "C1":
            ref, floor = asym.cone_law_cdf, args.floor
    man.extra["generator"] = dist.meta.get("generator")
    man.extra["seconds"] = round(time.perf_counter() - t0, 3)
    path = args.output or f"{args.action}.csv"
    if path == "-":
        np.savetxt(sys.stdout, dist.samples, fmt="%.17g", header="statistic", comments="")
    else:
        dist.to_csv(path)
        man.outputs.append(str(path))
    summary = {"reps": len(dist), "mean": dist.mean(), "quantiles": {str(q): float(dist.quantile(q)) for q in (0.5, 0.9, 0.95, 0.99)}}
    if ref is not None:
        rep = asym.compare(dist, ref, floor)
        summary["comparison"] = rep.to_dict()
    man.extra["summary"] = summary
    if path != "-":
        man.write(RunManifest.path_for(path))
    stream = sys.stderr if path == "-" else sys.stdout
    if args.format == "json":
        stream.write(json.dumps(summary, indent=2) + "\n")
    else:
        stream.write(f"reps {len(dist)}  mean {dist.mean():.6f}\n")
        if "comparison" in summary:
            stream.write(f"KS {summary['comparison']['ks']:.5f}\n")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="algfam", description="Workbench for algebraic exponential families.")
    p.add_argument("--format", choices=["json", "table"], default="table")
    sub = p.add_subparsers(dest="group", required=True)

    def common(sp):
        sp.add_argument("--format", choices=["json", "table"], default=argparse.SUPPRESS)
        sp.add_argument("-o", "--output", help="output file (a manifest is written next to it)")

    pi = sub.add_parser("ideal", help="Gröbner-basis computations on an ideal file or ModelSpec")
    pi.add_argument("action", choices=["gb", "eliminate", "saturate", "dim", "count", "singular-locus"])
    pi.add_argument("file")
    pi.add_argument("--order", default="grevlex", choices=["lex", "grevlex"])
    pi.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="maximum number of S-pairs")
    pi.add_argument("--vars", help="comma-separated variables to eliminate")
    pi.add_argument("--by", help="polynomial to saturate by")
    pi.add_argument("--codim", type=int, help="codimension for the Jacobian minors")
    common(pi)
    pi.set_defaults(func=cmd_ideal)

    pm = sub.add_parser("model", help="model ideals from a ModelSpec")
    pm.add_argument("action", choices=["ci-ideal", "marginalize", "epsilon-check"])
    pm.add_argument("file", nargs="?")
    pm.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    pm.add_argument("--eps", default="1/100")
    pm.add_argument("--restarts", type=int, default=200)
    pm.add_argument("--seed", type=int, default=0)
    common(pm)
    pm.set_defaults(func=cmd_model)

    pl = sub.add_parser("mle", help="likelihood computations on a sample covariance file")
    pl.add_argument("action", choices=["fa-solve", "fa-global", "fa-ideal", "boundary", "lr"])
    pl.add_argument("file")
    pl.add_argument("--starts", type=int, default=20000)
    pl.add_argument("--seed", type=int, default=0)
    pl.add_argument("--mode", choices=["real", "complex"], default="complex")
    pl.add_argument("--index", type=int, help="1-based index i with w_i = 0 (boundary)")
    pl.add_argument("--expect", type=int, default=None,
                    help="known number of complex solutions; a shortfall makes the verdict undetermined")
    pl.add_argument("--threads", type=int, default=1)
    pl.add_argument("--saturate", action="store_true", help="fa-ideal: saturate by det K")
    pl.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    common(pl)
    pl.set_defaults(func=cmd_mle)

    pa = sub.add_parser("asym", help="Monte Carlo for LR limit laws (CSV out)")
    pa.add_argument("action", choices=["min-chisq", "lr-sim", "curves"])
    pa.add_argument("--n", type=float, default=1000)
    pa.add_argument("--reps", type=int, default=20000)
    pa.add_argument("--seed", type=int, default=0)
    pa.add_argument("--sigma", default="identity", help="identity, smooth, or a 3x3 matrix file")
    pa.add_argument("--kind", choices=["C1", "C2"], default="C1")
    pa.add_argument("--floor", type=float, default=1e-3,
                    help="C1 only: compare CDFs on [floor, inf), away from the atom of the cone law")
    pa.add_argument("--threads", type=int, default=1)
    common(pa)
    pa.set_defaults(func=cmd_asym)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.group == "asym" and args.action == "lr-sim":
        args.n = int(args.n)
    try:
        args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ParseError, FormatError, json.JSONDecodeError, FileNotFoundError, KeyError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except BudgetExceededError as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (NotPositiveDefiniteError, EmptyVarietyError, ValueError, IndexError, ArithmeticError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
