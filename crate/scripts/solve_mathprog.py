#!/usr/bin/env python3
"""Solve a model written by `resvplan export-model`.

Uses `glpsol` when it is on PATH. Otherwise parses the flat subset of
MathProg that the exporter emits (scalar integer variables, one linear
objective, `<=`/`>=` rows with a constant right-hand side) and solves it
with GLPK through cvxopt. Prints the optimal objective with three decimals.
"""

import re
import shutil
import subprocess
import sys
import tempfile


def solve_with_glpsol(path):
    with tempfile.NamedTemporaryFile(suffix=".txt") as out:
        subprocess.run(["glpsol", "--math", path, "-o", out.name], check=True, capture_output=True)
        text = open(out.name).read()
    m = re.search(r"Objective:\s+\S+\s*=\s*([-0-9.eE+]+)", text)
    if not m:
        raise SystemExit("could not read objective from glpsol output")
    return float(m.group(1))


TERM = re.compile(r"([+-]?)\s*(?:([0-9.]+)\s*\*\s*)?([A-Za-z_][A-Za-z0-9_]*)")


def parse_linear(expr):
    terms = []
    for sign, coef, name in TERM.findall(expr):
        value = float(coef) if coef else 1.0
        terms.append((-value if sign == "-" else value, name))
    return terms


def solve_with_cvxopt(path):
    from cvxopt import matrix, spmatrix, glpk

    text = re.sub(r"/\*.*?\*/", "", open(path).read(), flags=re.S)
    statements = [s.strip() for s in text.split(";") if s.strip()]
    names, objective, rows = [], [], []
    for st in statements:
        if st.startswith("var "):
            names.append(st.split()[1])
        elif st.startswith("minimize"):
            objective = parse_linear(st.split(":", 1)[1])
        elif st.startswith("s.t."):
            body = st.split(":", 1)[1]
            op = "<=" if "<=" in body else ">="
            lhs, rhs = body.split(op)
            rows.append((parse_linear(lhs), op, float(rhs)))
    index = {n: i for i, n in enumerate(names)}
    c = [0.0] * len(names)
    for coef, name in objective:
        c[index[name]] += coef
    # G x <= h, with x >= 0 rows appended
    vals, ri, ci, h = [], [], [], []
    for r, (terms, op, rhs) in enumerate(rows):
        sign = 1.0 if op == "<=" else -1.0
        for coef, name in terms:
            vals.append(sign * coef)
            ri.append(r)
            ci.append(index[name])
        h.append(sign * rhs)
    base = len(rows)
    for i in range(len(names)):
        vals.append(-1.0)
        ri.append(base + i)
        ci.append(i)
        h.append(0.0)
    G = spmatrix(vals, ri, ci, (base + len(names), len(names)))
    glpk.options["msg_lev"] = "GLP_MSG_OFF"
    status, x = glpk.ilp(matrix(c), G, matrix(h), I=set(range(len(names))))
    if status != "optimal":
        raise SystemExit(f"solver status {status}")
    return sum(ci * xi for ci, xi in zip(c, x))


def main():
    if len(sys.argv) != 2:
        raise SystemExit("usage: solve_mathprog.py MODEL")
    path = sys.argv[1]
    value = solve_with_glpsol(path) if shutil.which("glpsol") else solve_with_cvxopt(path)
    print(f"{value:.3f}")


if __name__ == "__main__":
    main()
