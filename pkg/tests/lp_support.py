"""Support for cross-checking exported LP files with an external MIP solver.

parse_lp reads the CPLEX-LP dialect emitted by sspolicy.export; solve_lp
feeds the parsed matrices to scipy.optimize.milp (HiGHS). The pair gives an
independent optimizer for exported models: only the file format is shared
with the package code.
"""
from __future__ import annotations

import math
import re

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

_TERM = re.compile(r"([+-]?)\s*([0-9.eE+-]*)\s*([A-Za-z_][A-Za-z0-9_]*)")


def _parse_terms(expr: str):
    out = []
    for sign, num, var in _TERM.findall(expr):
        coef = float(num) if num not in ("", "+", "-") else 1.0
        if sign == "-":
            coef = -coef
        out.append((var, coef))
    return out


def parse_lp(text: str):
    """Returns (objective: dict, rows: list[(coeffs, sense, rhs)],
    bounds: dict, binaries: set)."""
    section = None
    objective: dict = {}
    rows = []
    bounds: dict = {}
    binaries: set = set()
    for raw in text.splitlines():
        line = raw.split("\\")[0].strip()
        if not line:
            continue
        low = line.lower()
        if low in ("minimize", "maximize"):
            section = "obj"
            continue
        if low == "subject to":
            section = "rows"
            continue
        if low == "bounds":
            section = "bounds"
            continue
        if low in ("binary", "binaries", "general"):
            section = "binary"
            continue
        if low == "end":
            break
        if section == "obj":
            expr = line.split(":", 1)[1] if ":" in line else line
            for var, coef in _parse_terms(expr):
                objective[var] = objective.get(var, 0.0) + coef
        elif section == "rows":
            body = line.split(":", 1)[1] if ":" in line else line
            m = re.search(r"(<=|>=|=)", body)
            sense = m.group(1)
            lhs, rhs = body[:m.start()], float(body[m.end():])
            rows.append((_parse_terms(lhs), sense, rhs))
        elif section == "bounds":
            if line.endswith(" free"):
                bounds[line.split()[0]] = (-math.inf, math.inf)
                continue
            parts = line.split()
            if "<=" in parts:
                if parts.count("<=") == 2:
                    lo, var, hi = parts[0], parts[2], parts[4]
                    bounds[var] = (float(lo), float(hi))
                else:
                    var, hi = parts[0], parts[2]
                    lo = bounds.get(var, (-math.inf, math.inf))[0]
                    bounds[var] = (lo, float(hi))
            elif ">=" in parts:
                var, lo = parts[0], parts[2]
                hi = bounds.get(var, (-math.inf, math.inf))[1]
                bounds[var] = (float(lo), hi)
            elif "=" in parts:
                var, val = parts[0], parts[2]
                bounds[var] = (float(val), float(val))
        elif section == "binary":
            binaries.add(line.split()[0])
    return objective, rows, bounds, binaries


def solve_lp(text: str):
    """Solve a parsed LP/MILP with HiGHS; returns (objective, {var: value})."""
    objective, rows, bounds, binaries = parse_lp(text)
    names: list[str] = []
    seen = set()
    for var in objective:
        if var not in seen:
            names.append(var)
            seen.add(var)
    for coeffs, _, _ in rows:
        for var, _ in coeffs:
            if var not in seen:
                names.append(var)
                seen.add(var)
    for var in bounds:
        if var not in seen:
            names.append(var)
            seen.add(var)
    index = {v: i for i, v in enumerate(names)}
    n = len(names)
    c = np.zeros(n)
    for var, coef in objective.items():
        c[index[var]] = coef
    lb = np.full(n, -np.inf)
    ub = np.full(n, np.inf)
    for var in binaries:
        lb[index[var]], ub[index[var]] = 0.0, 1.0
    for var, (lo, hi) in bounds.items():
        lb[index[var]], ub[index[var]] = lo, hi
    a = np.zeros((len(rows), n))
    row_lo = np.full(len(rows), -np.inf)
    row_hi = np.full(len(rows), np.inf)
    for i, (coeffs, sense, rhs) in enumerate(rows):
        for var, coef in coeffs:
            a[i, index[var]] += coef
        if sense in ("<=", "="):
            row_hi[i] = rhs
        if sense in (">=", "="):
            row_lo[i] = rhs
    integrality = np.zeros(n)
    for var in binaries:
        integrality[index[var]] = 1
    res = milp(c=c, constraints=LinearConstraint(a, row_lo, row_hi),
               bounds=Bounds(lb, ub), integrality=integrality,
               options={"mip_rel_gap": 1e-9})
    if not res.success:
        raise RuntimeError(f"external MILP solve failed: {res.message}")
    values = {v: float(res.x[index[v]]) for v in names}
    return float(res.fun), values
