"""Verification report assembly: versioned JSON schema and a plain table.

Schema (version 1):

    {
      "schema_version": "1",
      "config": {...},                # the resolved run configuration
      "environment": {...},           # interpreter and library versions
      "convention_audit": {...},      # pinned sign conventions
      "identities": [ {name, verdict, seconds, ...detail} ],
      "comparison": [ {name, reported, derived, match, expected_mismatch,
                       note} ],
      "exit_code": 0 | 1
    }

Identical configuration and seed produce byte-identical reports once the
timing fields (every key named "seconds") are removed.
"""

from __future__ import annotations

import json
import platform
import sys

import numpy
import sympy

SCHEMA_VERSION = "1"

CONVENTION_AUDIT = {
    "curvature_operator": "R(x,y) = D_[x,y] - [D_x,D_y], the orientation on "
                          "which the component table is positive for c > 0",
    "ricci_commutation": "D2_{a,b}T - D2_{b,a}T = sum_s R(a,b,x_s,u) T(..u..)",
    "einstein_constant": "lam = 2(m+1)c (machine-derived, positive for c > 0)",
    "deltaD_adjoint_sign": 1,
    "hessian_w_term_sign": -1,
}


def environment_stamp():
    return {
        "python": sys.version.split()[0],
        "platform": platform.system(),
        "numpy": numpy.__version__,
        "sympy": sympy.__version__,
        "package": "curvhess 0.1.0",
    }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (numpy.floating, float)):
        return float(x)
    if isinstance(x, (numpy.integer, int)):
        return int(x)
    if isinstance(x, (numpy.bool_, bool)):
        return bool(x)
    if x is None:
        return None
    return str(x)


def build_report(config, identities, comparison, exit_code):
    comp = [{"name": r.name, "reported": r.reported, "derived": r.derived,
             "match": r.match, "expected_mismatch": r.expected_mismatch,
             "note": r.note} for r in comparison]
    return {
        "schema_version": SCHEMA_VERSION,
        "config": _jsonable(config),
        "environment": environment_stamp(),
        "convention_audit": CONVENTION_AUDIT,
        "identities": _jsonable(identities),
        "comparison": comp,
        "exit_code": exit_code,
    }


def to_json(report):
    return json.dumps(report, indent=2, sort_keys=True)


def strip_timings(report):
    """Copy with every 'seconds' key removed, for reproducibility checks."""
    def walk(x):
        if isinstance(x, dict):
            return {k: walk(v) for k, v in x.items() if k != "seconds"}
        if isinstance(x, list):
            return [walk(v) for v in x]
        return x
    return walk(json.loads(json.dumps(report)))


def to_table(report):
    lines = []
    lines.append(f"verification report (schema {report['schema_version']})")
    lines.append("")
    lines.append(f"{'identity':14s} {'verdict':18s} {'time':>7s}  notes")
    lines.append("-" * 72)
    for r in report["identities"]:
        note = ""
        if "coefficients" in r:
            cc = r["coefficients"]
            note = f"a={cc['a']} b={cc['b']} d={cc['d']}"
        elif "value" in r:
            note = r["value"]
        elif "witness" in r and r["witness"]:
            note = f"witness: {r['witness'][:40]}"
        lines.append(f"{r['name']:14s} {r['verdict']:18s} "
                     f"{r.get('seconds', 0):6.2f}s  {note}")
    lines.append("")
    lines.append("reported-constant comparison")
    lines.append(f"{'quantity':22s} {'reported':26s} {'derived':30s} verdict")
    lines.append("-" * 92)
    for r in report["comparison"]:
        tag = "match" if r["match"] else (
            "mismatch (expected)" if r["expected_mismatch"] else "MISMATCH")
        lines.append(f"{r['name']:22s} {r['reported']:26s} "
                     f"{r['derived']:30s} {tag}")
    lines.append("")
    lines.append(f"exit code: {report['exit_code']}")
    return "\n".join(lines)
