"""Command-line entry point: ``strahler-clt <subcommand> ...``.

Exit codes: 0 success, 1 a checked identity or criterion failed, 2 usage error.
Every output starts with the resolved run configuration, as a ``# config``
comment line for text/CSV or a ``"config"`` key for JSON.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import acceptance, exact, hypergeom, moments, montecarlo, trees
from .errors import DomainError, StructureError

MODE_ENV = "STRAHLER_MODE"
MODES = ("exact", "float")
EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def frac_obj(x: Fraction) -> dict:
    x = Fraction(x)
    return {"num": x.numerator, "den": x.denominator}


def frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def resolve_mode(flag: Optional[str]) -> str:
    if flag is not None:
        return flag
    env = os.environ.get(MODE_ENV)
    if env is None:
        return "exact"
    if env not in MODES:
        raise UsageError(f"{MODE_ENV} must be one of {MODES}, got {env!r}")
    return env


def resolve_seed(args: argparse.Namespace) -> int:
    if args.seed is not None:
        return args.seed
    if not args.entropy:
        raise UsageError("randomized commands need --seed (or --entropy for a fresh seed)")
    return int(np.random.SeedSequence().entropy)


def config_of(args: argparse.Namespace, **resolved) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("handler", "output")}
    cfg.update(resolved)
    return cfg


def header(cfg: dict) -> str:
    return "# config " + json.dumps(cfg, sort_keys=True) + "\n"


def csv_text(columns: Sequence[str], rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def json_text(cfg: dict, body: dict) -> str:
    return json.dumps({"config": cfg, **body}, indent=2) + "\n"


# --------------------------------------------------------------------------
# handlers return (text, exit code)

def cmd_enumerate(args):
    cfg = config_of(args)
    if args.count_only:
        return header(cfg) + f"{trees.count_trees(args.n)}\n", EXIT_OK
    lines = list(trees.iter_tree_strings(args.n, args.cap))
    return header(cfg) + "".join(s + "\n" for s in lines), EXIT_OK


def cmd_sample(args):
    seed = resolve_seed(args)
    rng = np.random.Generator(np.random.PCG64(seed))
    lines = [trees.sample_uniform(args.n, rng).to_parens() for _ in range(args.count)]
    return header(config_of(args, seed=seed)) + "".join(s + "\n" for s in lines), EXIT_OK


def cmd_strahler(args):
    prof = trees.strahler(trees.Tree.from_parens(args.tree))
    body = {
        "magnitude": prof.magnitude,
        "strahler_number": prof.strahler_number,
        "counts": {str(r): prof.S(r) for r in range(1, prof.strahler_number + 1)},
    }
    return json_text(config_of(args), body), EXIT_OK


def _float_support(pairs) -> dict:
    return {"support": [{"value": float(v), "num": Fraction(v).numerator, "den": Fraction(v).denominator,
                         "p": float(p)} for v, p in pairs]}


def cmd_dist(args):
    mode = resolve_mode(args.mode)
    cfg = config_of(args, mode=mode)
    if mode == "exact":
        return json_text(cfg, exact.dist_S(args.r, args.n).to_json_obj()), EXIT_OK
    law = exact.dist_S_float(args.r, args.n)
    return json_text(cfg, _float_support((j, p) for j, p in enumerate(law) if p > 0)), EXIT_OK


def cmd_ratio_dist(args):
    mode = resolve_mode(args.mode)
    cfg = config_of(args, mode=mode)
    if mode == "exact":
        return json_text(cfg, exact.dist_ratio(args.q, args.r, args.n).to_json_obj()), EXIT_OK
    return json_text(cfg, _float_support(exact.dist_ratio_float(args.q, args.r, args.n).items())), EXIT_OK


def _float_s2_moment(kind: str, k: int, l: int, n: int) -> float:
    law = exact.dist_S_float(2, n)
    j = np.arange(len(law), dtype=np.float64)
    mask = law > 0
    p, j = law[mask], j[mask]
    if kind == "raw":
        terms = p * j**k
    elif kind == "central":
        terms = p * (j - n / 4) ** k
    elif kind == "negative":
        terms = p * j ** (-float(k))
    else:
        terms = p * j**l * (j - n / 4) ** k
    return float(np.sum(terms))


def _exact_s2_moment(kind: str, k: int, l: int, n: int) -> Fraction:
    if kind == "raw":
        return moments.raw_moment_s2(k, n)
    if kind == "central":
        return moments.central_moment_s2(k, n)
    if kind == "negative":
        return moments.negative_moment_s2(k, n)
    return moments.mixed_moment_s2(l, k, n)


def cmd_moments(args):
    mode = resolve_mode(args.mode)
    cfg = config_of(args, mode=mode)
    if args.target:
        target = moments.parse_target(args.target)
        grid = args.n if len(args.n) > 1 else moments.power_grid(64, args.n[0])
        chk = moments.asymptotic_check(target, grid, backend="exact" if mode == "exact" else "float")
        rows = [{"target": target.label(), "n": n, "backend": b, "value": v, "predicted": pr, "ratio": ra}
                for n, b, v, pr, ra in zip(chk.n_grid, chk.backend, chk.values, chk.predicted, chk.ratios)]
        cols = ("target", "n", "backend", "value", "predicted", "ratio")
        return header(cfg) + csv_text(cols, rows), EXIT_OK
    l = args.l if args.kind == "mixed" else 0
    rows = []
    for n in args.n:
        for k in args.k:
            base = {"kind": args.kind, "k": k, "l": l, "n": n}
            if mode == "exact":
                v = _exact_s2_moment(args.kind, k, l, n)
                rows.append({**base, "numerator": v.numerator, "denominator": v.denominator})
            else:
                rows.append({**base, "value": _float_s2_moment(args.kind, k, l, n)})
    cols = ("kind", "k", "l", "n") + (("numerator", "denominator") if mode == "exact" else ("value",))
    return header(cfg) + csv_text(cols, rows), EXIT_OK


def cmd_mgf(args):
    mode = resolve_mode(args.mode)
    cfg = config_of(args, mode=mode)
    if args.x_den == 0:
        raise UsageError("--x-den must be nonzero")
    x = Fraction(args.x_num, args.x_den)
    if mode == "exact":
        hyp, direct = hypergeom.mgf_s2(args.n, x), hypergeom.mgf_s2_direct(args.n, x)
        residual = hyp - direct
        deriv = hypergeom.check_derivative_identity(args.n, x) if args.n >= 3 and x > 0 else None
        body = {"hypergeometric": frac_obj(hyp), "direct": frac_obj(direct), "residual": frac_obj(residual),
                "derivative_residual": frac_obj(deriv) if deriv is not None else None}
        ok = residual == 0 and (deriv is None or deriv == 0)
    else:
        hyp, direct = hypergeom.mgf_s2(args.n, float(x)), hypergeom.mgf_s2_direct(args.n, float(x))
        residual = hyp - direct
        body = {"hypergeometric": hyp, "direct": direct, "residual": residual}
        ok = abs(residual) <= 1e-9 * max(1.0, abs(direct))
    return json_text(cfg, body), EXIT_OK if ok else EXIT_CHECK


def cmd_clt(args):
    seed = resolve_seed(args)
    exp = montecarlo.CltExperiment(args.kind, r=args.r, n=args.n, samples=args.samples, seed=seed,
                                   q=args.q if args.kind == "ratio" else 1, workers=args.workers)
    summary = montecarlo.run_experiment(exp, hist_bins=args.hist_bins)
    cfg = config_of(args, seed=seed)
    if args.out == "json":
        return json_text(cfg, summary.to_json_obj()), EXIT_OK
    return header(cfg) + csv_text(montecarlo.McSummary.CSV_COLUMNS, [summary.row()]), EXIT_OK


def cmd_horton(args):
    seed = resolve_seed(args)
    counts = montecarlo.draw_counts(args.n, args.samples, seed, args.workers, max(args.r) + 2)
    rows = []
    for r in args.r:
        h = montecarlo.horton_check(r, args.n, args.samples, seed, args.eps, args.workers, counts=counts)
        rows.append({"r": h.r, "n": h.n, "samples": h.samples, "eps": h.eps,
                     "exceed_freq": h.exceed_freq, "zero_freq": h.zero_freq, "mean_ratio": h.mean_ratio})
    cols = ("r", "n", "samples", "eps", "exceed_freq", "zero_freq", "mean_ratio")
    return header(config_of(args, seed=seed)) + csv_text(cols, rows), EXIT_OK


def cmd_verify_all(args):
    # lines go to stdout as they are produced; with --output they are collected instead
    out: list[str] = []

    def echo(line: str) -> None:
        if args.output is None:
            print(line, flush=True)
        else:
            out.append(line)

    echo(header(config_of(args)).rstrip("\n"))
    results = acceptance.verify_all(skip_mc=args.skip_mc, only=args.only, echo=echo)
    failed = [r.cid for r in results if not r.passed]
    echo(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    if args.report_odd:
        for row in acceptance.odd_power_report():
            echo(f"REPORT {row['target']} [{row['variant']}] ratios "
                 + ", ".join(f"{x:.4f}" for x in row["ratios"])
                 + f" rail_ok={row['sanity_rail_ok']}")
        for r in (2, 3):
            for s in (0, 1):
                rep = moments.odd_constant_report(r, s, 4096)
                echo(f"REPORT odd constant r={r} s={s}: fitted/candidate(r-1) {rep['ratio_r_minus_1']:.4f}, "
                     f"fitted/candidate(r-2) {rep['ratio_r_minus_2']:.4f}")
    text = "\n".join(out) + "\n" if args.output else None
    return text, EXIT_CHECK if failed else EXIT_OK


# --------------------------------------------------------------------------
# parser

def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonnegative(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", metavar="PATH", help="write to PATH instead of stdout")

    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--seed", type=int, help="RNG seed (required unless --entropy)")
    seeded.add_argument("--entropy", action="store_true", help="draw a fresh seed from OS entropy and report it")

    moded = argparse.ArgumentParser(add_help=False)
    moded.add_argument("--mode", choices=MODES, default=None, help=f"backend (default: ${MODE_ENV} or exact)")

    p = argparse.ArgumentParser(prog="strahler-clt", description="Branch-count statistics of uniform random binary trees.")
    sub = p.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")

    s = sub.add_parser("enumerate", parents=[common], help="list all trees with n leaves")
    s.add_argument("--n", type=_positive, required=True)
    s.add_argument("--count-only", action="store_true")
    s.add_argument("--cap", type=_positive, default=trees.ENUMERATION_CAP)
    s.set_defaults(handler=cmd_enumerate)

    s = sub.add_parser("sample", parents=[common, seeded], help="draw uniform random trees")
    s.add_argument("--n", type=_positive, required=True)
    s.add_argument("--count", type=_positive, default=1)
    s.set_defaults(handler=cmd_sample)

    s = sub.add_parser("strahler", parents=[common], help="branch counts of a parenthesized tree")
    s.add_argument("--tree", required=True, help='e.g. "(()(()()))"')
    s.set_defaults(handler=cmd_strahler)

    s = sub.add_parser("dist", parents=[common, moded], help="law of the order-r branch count")
    s.add_argument("--r", type=_positive, required=True)
    s.add_argument("--n", type=_positive, required=True)
    s.set_defaults(handler=cmd_dist)

    s = sub.add_parser("ratio-dist", parents=[common, moded], help="law of S_{q+r}/S_q")
    s.add_argument("--q", type=_positive, required=True)
    s.add_argument("--r", type=_positive, required=True)
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(handler=cmd_ratio_dist)

    s = sub.add_parser("moments", parents=[common, moded], help="moments of S_2 or an asymptotic ratio scan")
    s.add_argument("--kind", choices=("raw", "central", "negative", "mixed"), default="raw")
    s.add_argument("--k", type=_nonnegative, nargs="+", default=[1])
    s.add_argument("--l", type=_nonnegative, default=0, help="power of S_2 for --kind mixed")
    s.add_argument("--n", type=_positive, nargs="+", required=True)
    s.add_argument("--target", help='asymptotic target such as "lemma4(l=1,k=2)"; --n gives the grid '
                                     "or, if single, its top (powers of two from 64)")
    s.set_defaults(handler=cmd_moments)

    s = sub.add_parser("mgf", parents=[common, moded], help="S_2 generating function, both pipelines")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--x-num", type=int, required=True)
    s.add_argument("--x-den", type=int, default=1)
    s.set_defaults(handler=cmd_mgf)

    s = sub.add_parser("clt", parents=[common, seeded], help="Monte Carlo check of a limit law")
    s.add_argument("--kind", choices=("ratio", "count"), required=True)
    s.add_argument("--q", type=_positive, default=1)
    s.add_argument("--r", type=_positive, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--samples", type=_positive, required=True)
    s.add_argument("--workers", type=_positive, default=1)
    s.add_argument("--out", choices=("csv", "json"), default="csv", help="output format")
    s.add_argument("--hist-bins", type=_positive, default=None, help="include a histogram (json only)")
    s.set_defaults(handler=cmd_clt)

    s = sub.add_parser("horton", parents=[common, seeded], help="frequency of ratios far from 1/4")
    s.add_argument("--r", type=_positive, nargs="+", default=[1, 2])
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--samples", type=_positive, required=True)
    s.add_argument("--eps", type=float, default=0.05)
    s.add_argument("--workers", type=_positive, default=1)
    s.set_defaults(handler=cmd_horton)

    s = sub.add_parser("verify-all", parents=[common], help="run the acceptance suite")
    s.add_argument("--skip-mc", action="store_true", help="skip the Monte Carlo criteria")
    s.add_argument("--only", type=_positive, nargs="+", default=None, help="criterion ids to run")
    s.add_argument("--report-odd", action="store_true", help="also print report-only odd-power ratios")
    s.set_defaults(handler=cmd_verify_all)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        text, code = args.handler(args)
    except (UsageError, DomainError, StructureError) as exc:
        parser.print_usage(sys.stderr)
        print(f"strahler-clt {args.subcommand}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if text is not None:
        if args.output:
            with open(args.output, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
