"""Command-line front end: ``etaops <command> [options]``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import mpmath

from .characters import (
    EtaCharacter,
    EtaExponents,
    RealDirichlet,
    compatibility_conditions,
    compatible_sample_oracle,
    v_r,
)
from .express import (
    ConditionFailed,
    ExpressProblem,
    build_identity,
    certify_identity,
    check_condition,
    identity_to_json,
    identity_to_latex,
    identity_to_text,
    thresholds,
)
from .heckeops import newman_check
from .metaplectic import MatZ, MetaElem
from .qseries import CoefficientCache, ResourceError, cusp_classes, eta_quotient_series, ord_at_cusp
from .search import (
    admissible_pairs,
    dimension_candidates,
    enumerate_holomorphic_etaquotients,
    findl,
    format_eta,
    nk_rows,
    pairs_to_csv,
    quotients_to_csv,
)

CACHE_ENV = "ETAOPS_CACHE"

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


class UsageError(ValueError):
    pass


# parsing helpers -------------------------------------------------------------


def parse_exps(text: str) -> dict[int, int]:
    """``n:r,n:r`` -> {n: r}."""
    out = {}
    try:
        for item in filter(None, (s.strip() for s in text.split(","))):
            n, r = item.split(":")
            out[int(n)] = out.get(int(n), 0) + int(r)
    except ValueError:
        raise UsageError(f"malformed exponent map {text!r}; expected n:r,n:r,...") from None
    return out


def parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"malformed rational {text!r}") from None


def parse_matrix(text: str) -> MatZ:
    try:
        a, b, c, d = (int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"matrix must be four comma-separated integers, got {text!r}") from None
    try:
        return MatZ(a, b, c, d)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _spec(N: int, text: str) -> EtaExponents:
    try:
        return EtaExponents(N, parse_exps(text))
    except ValueError as e:
        raise UsageError(str(e)) from None


def _chi(N: int, disc: int) -> RealDirichlet:
    try:
        return RealDirichlet(N, disc)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _frac(x) -> str:
    return str(Fraction(x))


# output -----------------------------------------------------------------------


def emit(args, record: dict, text: str, latex: str | None = None):
    if args.format == "json":
        print(json.dumps(record, sort_keys=True))
    elif args.format == "latex" and latex is not None:
        print(latex)
    else:
        print(text)


# commands ---------------------------------------------------------------------


def cmd_char(args) -> int:
    spec = _spec(args.N, args.exps)
    m = parse_matrix(args.mat)
    if m.det != 1 or m.c % args.N:
        raise UsageError(f"{m} is not in Gamma0({args.N})")
    if args.eps not in (1, -1):
        raise UsageError("--eps must be 1 or -1")
    val = v_r(spec, MetaElem(m, args.eps))
    chi = _chi(args.N, args.chi)
    if chi(m.d) == -1:
        val = val * type(val)(12)
    rec = {"N": args.N, "exps": dict(spec.nonzero()), "matrix": list(m.entries()), "eps": args.eps, "exponent": val.exponent}
    rec["exps"] = {str(n): r for n, r in rec["exps"].items()}
    emit(args, rec, f"e({val.exponent}/24)", f"e\\left(\\frac{{{val.exponent}}}{{24}}\\right)")
    return EXIT_OK


def _summarize_residues(ls: list[int]) -> str:
    if not ls:
        return "no admissible l in 1..24"
    return "l ≡ " + ", ".join(str(l) for l in ls) + " (mod 24)"


def cmd_compat(args) -> int:
    N = args.N
    r1, r2 = _spec(N, args.exps1), _spec(N, args.exps2)
    if r1.weight != r2.weight:
        raise UsageError("the two eta-quotients have different weights")
    chi1, chi2 = _chi(N, args.chi1), _chi(N, args.chi2)
    if args.scan:
        ls = list(range(1, 25))
    elif args.l is not None:
        ls = [args.l]
    else:
        raise UsageError("give --l or --scan")
    verdicts = []
    status = EXIT_OK
    for l in ls:
        rep = compatibility_conditions(N, chi1, r1, chi2, r2, l)
        item = {"l": l, "compatible": rep.compatible, "conditions": [rep.cond1, rep.cond2, rep.cond3, rep.cond4]}
        if args.oracle:
            v = compatible_sample_oracle(N, EtaCharacter(r1, chi1), EtaCharacter(r2, chi2), l, args.trials, args.seed)
            item["oracle_counterexample"] = list(v.counterexample.entries()) if v.found else None
            if v.found and rep.compatible:
                item["disagreement"] = True
                status = EXIT_FAIL
        verdicts.append(item)
    good = [v["l"] for v in verdicts if v["compatible"]]
    if args.scan:
        summary = _summarize_residues(good)
    else:
        summary = "compatible" if good else "not compatible"
    lines = [summary]
    for v in verdicts:
        if v.get("disagreement"):
            lines.append(f"oracle disagrees at l={v['l']}: counterexample {v['oracle_counterexample']}")
    emit(args, {"summary": summary, "verdicts": verdicts}, "\n".join(lines))
    return status


def cmd_enumerate(args) -> int:
    k = parse_fraction(args.k)
    quots = enumerate_holomorphic_etaquotients(args.N, k, args.cusp)
    rec = {"N": args.N, "k": _frac(k), "cusp_only": args.cusp, "quotients": [list(q.vector) for q in quots]}
    emit(args, rec, "\n".join(format_eta(q) for q in quots))
    return EXIT_OK


def _adm_record(adm) -> dict:
    if adm is None:
        return {"kind": None}
    if adm.kind == "integral":
        return {"kind": adm.kind, "residues": sorted(adm.residues)}
    return {"kind": adm.kind, "l0": adm.l0, "m2_residues": sorted(adm.m2_residues)}


def cmd_findl(args) -> int:
    k = parse_fraction(args.k)
    N = args.N
    if args.exps1 and args.exps2:
        r1, r2 = _spec(N, args.exps1), _spec(N, args.exps2)
        try:
            adm = findl(N, k, r1, r2)
        except ValueError as e:
            raise UsageError(str(e)) from None
        text = adm.describe() if adm else "no admissible l"
        emit(args, {"N": N, "k": _frac(k), "source": list(r1.vector), "target": list(r2.vector), "admissible": _adm_record(adm)}, text)
        return EXIT_OK
    rows = admissible_pairs([(N, k)], cusp_only=args.cusp)
    recs = [{"source": list(r.vector), "target": list(r2.vector), "admissible": _adm_record(a)} for _, _, r, r2, a in rows]
    text = "\n".join(f"{format_eta(r)} -> {format_eta(r2)}: {a.describe()}" for _, _, r, r2, a in rows)
    emit(args, {"N": N, "k": _frac(k), "pairs": recs}, text or "no admissible pairs")
    return EXIT_OK


def cmd_series(args) -> int:
    spec = _spec(args.N, args.exps)
    s = eta_quotient_series(spec, args.nmax)
    coeffs = [str(c) for c in s.coeffs]
    rec = {"N": args.N, "offset24": s.offset24, "coeffs": coeffs, "trunc": s.trunc}
    text = f"q^({_frac(Fraction(s.offset24, 24))}) * [" + ", ".join(coeffs) + f"] + O(q^({_frac(Fraction(s.prec24, 24))}))"
    emit(args, rec, text)
    return EXIT_OK


def cmd_order(args) -> int:
    spec = _spec(args.N, args.exps)
    rows = []
    for c, width, count in cusp_classes(args.N):
        rows.append({"c": c, "width": width, "count": count, "order": _frac(ord_at_cusp(spec, c))})
    text = "\n".join(f"cusps 1/{r['c']} (width {r['width']}, {r['count']} of them): order {r['order']}" for r in rows)
    emit(args, {"N": args.N, "cusps": rows}, text)
    return EXIT_OK


def cmd_newman(args, cache) -> int:
    rep = newman_check(args.r, args.l, args.nmax, cache)
    rec = {
        "r": rep.r,
        "l": rep.l,
        "nmax": rep.nmax,
        "passed": rep.passed,
        "checked": rep.checked,
        "eigenvalue": _frac(rep.eigenvalue),
        "discrepancy": None if rep.discrepancy is None else [rep.discrepancy[0], _frac(rep.discrepancy[1]), _frac(rep.discrepancy[2])],
    }
    text = f"{'PASS' if rep.passed else 'FAIL'} r={rep.r} l={rep.l} nmax={rep.nmax} eigenvalue={rep.eigenvalue}"
    if rep.discrepancy:
        text += f" first discrepancy at n={rep.discrepancy[0]}"
    emit(args, rec, text)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_express(args, cache) -> int:
    try:
        prob = ExpressProblem(args.r, args.p, args.beta)
    except ValueError as e:
        raise UsageError(str(e)) from None
    cond = check_condition(prob, cache)
    if not cond.holds:
        y0, y1 = thresholds(prob, cache)
        rec = {"r": prob.r, "p": prob.p, "beta": prob.beta, "status": cond.status, "witness": cond.witness, "y0": y0, "y1": y1}
        emit(args, rec, f"condition {cond.status}: {cond.reason}")
        return EXIT_FAIL
    ident = certify_identity(build_identity(prob, cache), args.extra, cache)
    emit(args, identity_to_json(ident), identity_to_text(ident, cache), identity_to_latex(ident, cache))
    return EXIT_OK if ident.status == "verified" else EXIT_FAIL


def cmd_tables(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name, body):
        (out / name).write_text(body)
        written.append(name)

    for strict, name in ((True, "nk_dimone.txt"), (False, "nk_12.txt")):
        put(name, "\n".join(f"{N}: " + ", ".join(_frac(k) for k in ks) for N, ks in nk_rows(strict)) + "\n")
    quot_csv, quot_txt = [], []
    for N, k in dimension_candidates(strict=True):
        quots = enumerate_holomorphic_etaquotients(N, k)
        quot_csv.append(quotients_to_csv(N, k, quots))
        quot_txt.append(f"({N}, {_frac(k)}): " + ", ".join(format_eta(q) for q in quots))
    put("eta_quotients.csv", "".join(quot_csv))
    put("eta_quotients.txt", "\n".join(quot_txt) + "\n")
    rows = admissible_pairs()
    integral = [x for x in rows if x[4].kind == "integral"]
    half = [x for x in rows if x[4].kind == "half_integral"]
    put("l_integral.csv", pairs_to_csv(integral))
    put("l_halfintegral.csv", pairs_to_csv(half))
    cusp42 = admissible_pairs([(4, Fraction(2))], cusp_only=True)
    put("n4k2_l.csv", pairs_to_csv(cusp42))
    counts = {
        "integral_pairs": len(integral),
        "n4k2_cusp_pairs": len(cusp42),
        "integral_total": len(integral) + len(cusp42),
        "half_integral_pairs": len(half),
    }
    put("counts.json", json.dumps(counts, indent=1, sort_keys=True) + "\n")
    emit(args, {"out": str(out), "files": written, "counts": counts}, "\n".join([f"wrote {out / w}" for w in written] + [json.dumps(counts)]))
    return EXIT_OK


# entry point ------------------------------------------------------------------


def _add_common(parser, suppress: bool):
    # options may sit before or after the command; the subcommand copy must not clobber the global value
    def d(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--format", choices=("text", "json", "latex"), default=d("text"))
    parser.add_argument("--cache", default=d(os.environ.get(CACHE_ENV)), help=f"coefficient cache file (default ${CACHE_ENV})")
    parser.add_argument("--seed", type=int, default=d(0))
    parser.add_argument("--precision", type=int, default=d(50), help="working decimal digits (at least 50)")
    parser.add_argument("--max-terms", type=int, default=d(2_000_000), help="largest coefficient prefix the cache may build")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _add_common(common, suppress=True)

    p = argparse.ArgumentParser(prog="etaops", description="Operators T_l on eta-quotients.")
    _add_common(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("char", parents=[common], help="evaluate chi * v_r on a matrix")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--exps", required=True)
    s.add_argument("--mat", required=True, help="a,b,c,d row-major")
    s.add_argument("--eps", type=int, default=1)
    s.add_argument("--chi", type=int, default=1, help="discriminant of a real character")

    s = sub.add_parser("compat", parents=[common], help="decide compatibility for T_l")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--exps1", required=True)
    s.add_argument("--exps2", required=True)
    s.add_argument("--chi1", type=int, default=1)
    s.add_argument("--chi2", type=int, default=1)
    s.add_argument("--l", type=int)
    s.add_argument("--scan", action="store_true", help="scan l = 1..24")
    s.add_argument("--oracle", action="store_true", help="cross-check with random matrices")
    s.add_argument("--trials", type=int, default=1000)

    s = sub.add_parser("enumerate", parents=[common], help="holomorphic eta-quotients of level N, weight k")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--k", required=True)
    s.add_argument("--cusp", action="store_true")

    s = sub.add_parser("findl", parents=[common], help="admissible l between eta-quotients")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--k", required=True)
    s.add_argument("--exps1")
    s.add_argument("--exps2")
    s.add_argument("--cusp", action="store_true")

    s = sub.add_parser("series", parents=[common], help="q-expansion of an eta-quotient")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--exps", required=True)
    s.add_argument("--nmax", type=int, default=20)

    s = sub.add_parser("order", parents=[common], help="orders at the cusps")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--exps", required=True)

    s = sub.add_parser("newman", parents=[common], help="check R(n; r, l) = R(r; r, l) P_r((n - r)/24)")
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--nmax", type=int, default=2000)

    s = sub.add_parser("express", parents=[common], help="write F_{r,p^beta} in level-p eta-quotients")
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--beta", type=int, required=True)
    s.add_argument("--extra", type=int, default=5, help="coefficients beyond the valence budget")

    s = sub.add_parser("tables", parents=[common], help="regenerate the enumeration tables")
    s.add_argument("--out", default="tables")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.precision < 50:
        parser.error("--precision must be at least 50")
    mpmath.mp.dps = args.precision
    cache = CoefficientCache(args.cache or None, max_terms=args.max_terms)
    handlers = {
        "char": cmd_char,
        "compat": cmd_compat,
        "enumerate": cmd_enumerate,
        "findl": cmd_findl,
        "series": cmd_series,
        "order": cmd_order,
        "newman": lambda a: cmd_newman(a, cache),
        "express": lambda a: cmd_express(a, cache),
        "tables": cmd_tables,
    }
    try:
        code = handlers[args.command](args)
    except UsageError as e:
        print(f"etaops: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceError as e:
        print(f"etaops: resource limit: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except ConditionFailed as e:
        print(f"etaops: {e}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as e:
        print(f"etaops: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    cache.save()
    return code


if __name__ == "__main__":
    sys.exit(main())
