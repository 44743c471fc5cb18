"""Command line interface: select identities, dimensions, exponents and
tolerances; run the symbolic and numeric oracles; emit the report.

Exit status: 0 when every selected identity passes or is an expected
mismatch of a previously reported constant, 1 on any unexpected failure,
2 on a usage error.
"""

from __future__ import annotations

import argparse
import sys

import sympy as sp

from . import certificate as ce
from . import report as rp
from . import suite


class UsageError(ValueError):
    pass


def parse_m_range(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out or any(v < 1 for v in out):
        raise UsageError(f"m values must be >= 1, got {text!r}")
    return sorted(set(out))


def parse_scalars(text, minimum=None, what="value"):
    out = []
    for part in text.split(","):
        v = sp.nsimplify(part.strip())
        if minimum is not None and v < minimum:
            raise UsageError(f"{what} must be >= {minimum}, got {part!r}")
        out.append(v)
    return out


def build_parser():
    ap = argparse.ArgumentParser(
        prog="curvhess",
        description="verification engine for the Hessian of the L^p curvature "
                    "functional at Kahler space forms")
    ap.add_argument("--identities", default="all",
                    help="comma-separated identity names, or 'all'")
    ap.add_argument("--list-identities", action="store_true",
                    help="print the identity catalog and exit")
    ap.add_argument("--m", default="1..3", help="complex dimensions, e.g. 1..3 or 2,4")
    ap.add_argument("--c", default="1,-1", help="curvature scales (exact rationals)")
    ap.add_argument("--p", default="2,3", help="functional exponents, >= 2")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--seeds", type=int, default=200,
                    help="random-jet samples per oracle check")
    ap.add_argument("--modes", type=int, default=4, help="torus frequency cutoff N")
    ap.add_argument("--tol-sym", type=float, default=1e-8,
                    help="dual-oracle relative tolerance")
    ap.add_argument("--tol-num", type=float, default=1e-10,
                    help="torus residual tolerance")
    ap.add_argument("--basis-cap", type=int, default=10_000,
                    help="divergence-basis monomial cap")
    ap.add_argument("--stability-samples", type=int, default=10_000)
    ap.add_argument("--format", choices=("json", "table"), default="table")
    ap.add_argument("--out", default=None, help="write the report to a file")
    return ap


def config_from_args(args):
    names = [n for n, _, _ in suite.CATALOG] if args.identities == "all" \
        else [s.strip() for s in args.identities.split(",") if s.strip()]
    known = {n for n, _, _ in suite.CATALOG}
    unknown = [n for n in names if n not in known]
    if unknown:
        raise UsageError(f"unknown identities {unknown}; known: {sorted(known)}")
    if args.modes < 1:
        raise UsageError("--modes must be >= 1")
    if args.tol_sym <= 0 or args.tol_num <= 0:
        raise UsageError("tolerances must be positive")
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    return {
        "identities": names,
        "m_values": parse_m_range(args.m),
        "c_values": parse_scalars(args.c, what="c"),
        "p_values": parse_scalars(args.p, minimum=2, what="p"),
        "seed": args.seed,
        "seeds": args.seeds,
        "modes": args.modes,
        "tol_sym": args.tol_sym,
        "tol_num": args.tol_num,
        "stability_samples": args.stability_samples,
        "basis_cap": args.basis_cap,
    }


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    if args.list_identities:
        for row in suite.list_identities():
            print(f"{row['name']:14s} {row['description']}")
            print(f"{'':14s}   [{row['anchor']}]")
        print(f"{len(suite.CATALOG)} identities")
        return 0
    try:
        cfg = config_from_args(args)
    except (UsageError, ValueError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    results, worst = suite.run_suite(cfg)
    needs_chain = {"s_pairing", "rcheck_prime", "hessian", "r_q"}
    comparison = []
    if needs_chain & set(cfg["identities"]):
        comparison = ce.paper_comparison()
    exit_code = 0 if worst != "fail" else 1
    rep = rp.build_report(cfg, results, comparison, exit_code)
    text = rp.to_json(rep) if args.format == "json" else rp.to_table(rep)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
