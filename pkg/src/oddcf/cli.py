"""Command-line front end.

Exact scalars are passed as strings (``1/3``, ``1.3``, ``(1+1*sqrt(5))/2``,
``g``, ``G``); a float needs ``value@bits`` or the ``--precision`` flag.
Errors are written to stderr as one JSON object and give exit code 2; a
verification that runs but fails gives exit code 1.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from fractions import Fraction

import numpy as np

from . import entropy, matching, natext
from .cf import as_alpha, convergents, expand, orbit
from .errors import OddCFError
from .numeric import format_scalar, make_float, parse_scalar, precision, to_float

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _scalar(args, text: str):
    z = parse_scalar(text)
    if getattr(args, "precision", None):
        return make_float(z, args.precision)
    return z


def _rational(text: str) -> Fraction:
    """Grid endpoint as an exact rational (irrational endpoints are rounded to double)."""
    z = parse_scalar(text)
    return z if isinstance(z, Fraction) else Fraction(to_float(z))


def _emit(args, payload, text: str | None = None, csv_text: str | None = None):
    fmt = args.format
    if fmt == "json":
        out = json.dumps(payload, indent=2)
    elif fmt == "csv" and csv_text is not None:
        out = csv_text.rstrip("\n")
    else:
        out = text if text is not None else json.dumps(payload, indent=2)
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out + "\n")
    else:
        print(out)


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(header), extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_expand(args) -> int:
    alpha = as_alpha(_scalar(args, args.alpha))
    x = _scalar(args, args.x)
    word = expand(alpha, x, args.max_digits)
    conv = convergents(word)
    payload = {
        "alpha": format_scalar(alpha.value),
        "x": format_scalar(x),
        "word": word.to_json(),
        "text": str(word),
        "convergents": [[c.p, c.q] for c in conv],
    }
    text = "\n".join([str(word)] + [f"{c.p}/{c.q}" for c in conv[1:]])
    rows = [{"n": i, "eps": d.eps, "a": d.a, "p": c.p, "q": c.q}
            for i, (d, c) in enumerate(zip(word.digits, conv[1:]), start=1)]
    _emit(args, payload, text, _csv(rows, ["n", "eps", "a", "p", "q"]))
    return EXIT_OK


def cmd_orbit(args) -> int:
    alpha = as_alpha(_scalar(args, args.alpha))
    x = _scalar(args, args.x)
    pts = orbit(alpha, x, args.steps)
    strs = [format_scalar(p) for p in pts]
    rows = [{"n": i, "x": s} for i, s in enumerate(strs)]
    _emit(args, {"alpha": format_scalar(alpha.value), "orbit": strs}, "\n".join(strs),
          _csv(rows, ["n", "x"]))
    return EXIT_OK


def cmd_natext(args) -> int:
    alpha = as_alpha(_scalar(args, args.alpha))
    dom = natext.build_domain(alpha, args.truncation)
    if args.action == "build":
        if args.emit_rects:
            with open(args.emit_rects, "w", encoding="utf-8") as fh:
                fh.write(dom.to_csv())
        payload = dom.to_json()
        text = "\n".join(str(r) for r in dom.rects)
        _emit(args, payload, text, dom.to_csv())
        return EXIT_OK
    if args.action == "mass":
        mass = natext.domain_mass(dom)
        target = natext.total_mass()
        err = abs(mass - target)
        ok = err <= dom.tail_mass_bound + 1e-12
        payload = {
            "alpha": format_scalar(alpha.value),
            "mass": f"{mass:.20g}",
            "three_log_G": f"{target:.20g}",
            "abs_error": float(err),
            "tail_mass_bound": dom.tail_mass_bound,
            "pass": bool(ok),
        }
        _emit(args, payload, f"{mass:.15f}", _csv([payload], list(payload)))
        return EXIT_OK if ok else EXIT_FAIL
    rng = np.random.default_rng(args.seed)
    reports = []
    for k in range(args.seeds):
        x0 = entropy.default_seed_point(alpha, rng)
        rep = natext.simulate_membership(alpha, x0, args.iters, args.burn_in, args.tol, args.truncation)
        reports.append({"seed_index": k, "x0": repr(x0), "violations": rep.violations,
                        "total": rep.total})
    ok = all(r["violations"] == 0 for r in reports)
    total_bad = sum(r["violations"] for r in reports)
    payload = {"alpha": format_scalar(alpha.value), "runs": reports, "violations": total_bad, "pass": ok}
    _emit(args, payload, f"violations {total_bad}", _csv(reports, ["seed_index", "x0", "violations", "total"]))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_entropy(args) -> int:
    ests = entropy.entropy_scan(_rational(args.alpha_lo), _rational(args.alpha_hi),
                                args.steps, args.iters, args.seed, args.method)
    csv_text = entropy.estimates_to_csv(ests)
    payload = [e.row() for e in ests]
    text = "\n".join(f"{r['alpha']}\t{float(r['h']):.6f}\t{float(r['stderr']):.2g}" for r in payload)
    if args.out and args.format == "text":
        args.format = "csv"
    _emit(args, payload, text, csv_text)
    return EXIT_OK


def cmd_matching(args) -> int:
    if args.action == "verify":
        fams = [args.family] if args.family else list(matching.FAMILIES)
        rows = []
        for fam in fams:
            for n in range(args.n_min, args.n_max + 1):
                rep = matching.family_report(fam, n)
                exp = matching.expected_exponents(fam, n)
                row = rep.to_json()
                row.update(family=fam, n=n, expected=list(exp),
                           exponents_ok=(rep.N, rep.M) == exp,
                           role_ok=rep.classification == matching.ROLE[fam])
                row["pass"] = row["exponents_ok"] and row["role_ok"] and all(rep.certificates.values())
                rows.append(row)
        passed = sum(r["pass"] for r in rows)
        text = "\n".join(
            f"{r['family']}{r['n']}\t{r['alpha']}\t(N,M)=({r['N']},{r['M']})\t{r['classification']}\t"
            f"{'pass' if r['pass'] else 'FAIL'}" for r in rows
        ) + f"\n{passed}/{len(rows)} pass"
        flat = [{**{k: r[k] for k in ("family", "n", "alpha", "N", "M", "delta", "classification")},
                 "pass": r["pass"]} for r in rows]
        _emit(args, rows, text, _csv(flat, list(flat[0])))
        return EXIT_OK if passed == len(rows) else EXIT_FAIL
    if args.action == "scan":
        reps = matching.scan_matching(_rational(args.lo), _rational(args.hi), args.steps,
                                      args.max_iter, args.tol, args.precision or 512, args.generic)
        rows = [r.to_json() for r in reps]
        matched = sum(r.matched for r in reps)
        text = "\n".join(f"{r['alpha']}\t{r['N']}\t{r['M']}\t{r['kind']}" for r in rows)
        text += f"\nmatched {matched}/{len(rows)}"
        flat = [{k: r[k] for k in ("alpha", "N", "M", "delta", "kind", "classification")} for r in rows]
        _emit(args, rows, text, _csv(flat, list(flat[0])))
        return EXIT_OK
    alpha = parse_scalar(args.alpha)
    if args.action == "alg2":
        rep = matching.find_matching_exact(alpha)
        ok = matching.verify_alg2(alpha, rep.N, rep.M)
        payload = {**rep.to_json(), "alg2": ok}
        _emit(args, payload, f"alg2 {'pass' if ok else 'FAIL'} (N,M)=({rep.N},{rep.M})",
              _csv([payload], ["alpha", "N", "M", "alg2"]))
        return EXIT_OK if ok else EXIT_FAIL
    rep = matching.verify_alg1_neighborhood(alpha, parse_scalar(args.delta), args.samples,
                                            args.precision or 256)
    payload = {
        "alpha": format_scalar(rep.alpha), "N": rep.N, "M": rep.M,
        "delta": format_scalar(rep.delta_used), "shrinks": rep.shrinks,
        "samples": rep.samples, "pass": rep.passed, "failures": rep.failures,
    }
    _emit(args, payload, f"alg1 {'pass' if rep.passed else 'FAIL'} (N,M)=({rep.N},{rep.M})",
          _csv([payload], ["alpha", "N", "M", "delta", "shrinks", "samples", "pass"]))
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_tables(args) -> int:
    rows = []
    for fam in matching.FAMILIES:
        for n in range(args.n_min, args.n_max + 1):
            if args.table == "table1":
                a = matching.seq_abcd(fam, n)
                check = matching.verify_table1(fam, n)
                rows.append({"family": fam, "n": n, "alpha": format_scalar(a),
                             "alpha_digits": str(expand(a, a)), "lower_digits": str(expand(a, a - 2)),
                             "pass": check.passed})
            else:
                t2 = matching.verify_table2(fam, n)
                rows.append({"family": fam, "n": n, "alpha": format_scalar(matching.seq_abcd(fam, n)),
                             "upper": t2["computed"][0], "lower": t2["computed"][1],
                             "pass": t2["upper"] and t2["lower"]})
    ok = all(r["pass"] for r in rows)
    text = "\n".join("\t".join(str(v) for v in r.values()) for r in rows)
    _emit(args, rows, text, _csv(rows, list(rows[0])))
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json", "csv"), default="text")
    common.add_argument("--out", help="write output to this file")
    common.add_argument("--precision", type=_positive_int, help="float precision in bits")

    p = argparse.ArgumentParser(prog="oddcf", description="Odd alpha-continued fraction laboratory.")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("expand", parents=[common], help="alpha-expansion and convergents")
    q.add_argument("--alpha", required=True)
    q.add_argument("--x", default="0")
    q.add_argument("--max-digits", type=_positive_int, default=10_000)
    q.set_defaults(func=cmd_expand)

    q = sub.add_parser("orbit", parents=[common], help="orbit of a point")
    q.add_argument("--alpha", required=True)
    q.add_argument("--x", required=True)
    q.add_argument("--steps", type=_positive_int, default=10_000)
    q.set_defaults(func=cmd_orbit)

    q = sub.add_parser("natext", parents=[common], help="natural-extension domains")
    q.add_argument("action", choices=("build", "mass", "check"))
    q.add_argument("--alpha", required=True)
    q.add_argument("--truncation", type=_positive_int, default=natext.DEFAULT_TRUNCATION)
    q.add_argument("--iters", type=_positive_int, default=100_000)
    q.add_argument("--burn-in", type=int, default=1000)
    q.add_argument("--seeds", type=_positive_int, default=3)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--tol", type=_positive_float, default=1e-10)
    q.add_argument("--emit-rects", help="also write the rectangles as CSV to this file")
    q.set_defaults(func=cmd_natext)

    q = sub.add_parser("entropy", parents=[common], help="entropy scan")
    q.add_argument("--alpha-lo", required=True)
    q.add_argument("--alpha-hi", required=True)
    q.add_argument("--steps", type=_positive_int, default=50)
    q.add_argument("--iters", type=_positive_int, default=1_000_000)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--method", choices=entropy.METHODS, default="rokhlin")
    q.set_defaults(func=cmd_entropy)

    q = sub.add_parser("matching", parents=[common], help="matching analysis")
    q.add_argument("action", choices=("verify", "scan", "alg2", "alg1"))
    q.add_argument("--family", choices=matching.FAMILIES)
    q.add_argument("--n-min", type=int, default=3)
    q.add_argument("--n-max", type=int, default=20)
    q.add_argument("--lo", default="0.2")
    q.add_argument("--hi", default="0.4")
    q.add_argument("--steps", type=_positive_int, default=100)
    q.add_argument("--max-iter", type=_positive_int, default=200)
    q.add_argument("--tol", type=_positive_float, default=1e-20)
    q.add_argument("--generic", action="store_true", help="shift grid points off the rationals")
    q.add_argument("--alpha", default="1/3")
    q.add_argument("--delta", default="1/1000000000")
    q.add_argument("--samples", type=_positive_int, default=8)
    q.set_defaults(func=cmd_matching)

    q = sub.add_parser("tables", parents=[common], help="digit and matrix tables of the families")
    q.add_argument("table", choices=("table1", "table2"))
    q.add_argument("--n-min", type=int, default=3)
    q.add_argument("--n-max", type=int, default=12)
    q.set_defaults(func=cmd_tables)
    return p


_NEGATIVE = re.compile(r"^-(\d|\.\d|\()")


def _join_negative_values(argv: list[str]) -> list[str]:
    # argparse reads "-5/3" as an option; glue such values onto their flag
    out = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and _NEGATIVE.match(tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_join_negative_values(sys.argv[1:] if argv is None else list(argv)))
    try:
        if args.precision:
            with precision(args.precision):
                return args.func(args)
        return args.func(args)
    except OddCFError as exc:
        print(json.dumps({"error": exc.code, "type": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_ERROR
    except ValueError as exc:
        print(json.dumps({"error": "invalid_argument", "type": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
