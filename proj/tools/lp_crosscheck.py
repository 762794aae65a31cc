#!/usr/bin/env python3
"""Solve an exported 0-1 LP file with scipy's MILP solver and print the objective.

Understands the subset written by `bddmatch export-lp`: a Minimize objective,
equality rows under Subject To, and a Binary section. Prints a JSON object
with "status" and "objective". Exits 3 when scipy is unavailable.
"""

import argparse
import json
import re
import sys

TERM = re.compile(r"([+-]?)\s*([0-9.eE+-]*)\s*x(\d+)")


def parse_terms(text):
    terms = []
    for sign, coef, idx in TERM.findall(text):
        value = float(coef) if coef not in ("", "+", "-") else 1.0
        if sign == "-":
            value = -value
        terms.append((int(idx), value))
    return terms


def parse_lp(path):
    section = None
    objective, rows, binaries = [], [], []
    current = ""

    def flush():
        nonlocal current
        if not current.strip():
            current = ""
            return
        body = current.split(":", 1)[-1]
        if section == "obj":
            objective.extend(parse_terms(body))
        elif section == "st":
            lhs, rhs = body.split("=")
            rows.append((parse_terms(lhs), float(rhs)))
        current = ""

    with open(path) as fh:
        for raw in fh:
            line = raw.split("\\", 1)[0].strip()
            if not line:
                continue
            low = line.lower()
            if low in ("minimize", "subject to", "binary", "end"):
                flush()
                section = {"minimize": "obj", "subject to": "st", "binary": "bin", "end": None}[low]
                continue
            if section == "bin":
                binaries.extend(int(t[1:]) for t in line.split())
            elif section in ("obj", "st"):
                if ":" in line and current:
                    flush()
                current += " " + line
    flush()
    n = max([i for i, _ in objective] + binaries + [i for terms, _ in rows for i, _ in terms]) + 1
    return n, objective, rows


def solve(path, time_limit):
    try:
        import numpy as np
        from scipy.optimize import Bounds, LinearConstraint, milp
        from scipy.sparse import csr_matrix
    except ImportError:
        return None
    n, objective, rows = parse_lp(path)
    c = np.zeros(n)
    for i, v in objective:
        c[i] += v
    data, ri, ci, rhs = [], [], [], []
    for r, (terms, b) in enumerate(rows):
        for i, v in terms:
            data.append(v)
            ri.append(r)
            ci.append(i)
        rhs.append(b)
    A = csr_matrix((data, (ri, ci)), shape=(len(rows), n))
    res = milp(c, constraints=LinearConstraint(A, rhs, rhs), integrality=np.ones(n),
               bounds=Bounds(0, 1), options={"time_limit": time_limit})
    if res.status == 0:
        return {"status": "optimal", "objective": float(res.fun)}
    return {"status": "infeasible" if res.status == 2 else "unsolved", "objective": None}


def main(argv):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("lp")
    ap.add_argument("--time-limit", type=float, default=120.0)
    args = ap.parse_args(argv)
    out = solve(args.lp, args.time_limit)
    if out is None:
        print(json.dumps({"status": "unavailable", "objective": None}))
        sys.exit(3)
    print(json.dumps(out))


if __name__ == "__main__":
    main(sys.argv[1:])
