"""Exact in-repo optimizer for the canonical lot-sizing models.

The binaries of these models encode nothing but the order-timing pattern:
once every delta_t is fixed, the P selectors are implied and the residual
problem separates into replenishment cycles, each contributing a convex
piecewise-linear cost in its start-of-cycle level. Cycles are coupled only
by nonnegative order quantities, an isotonic chain that a pool-adjacent
pass solves exactly. Enumerating the 2^(T-1) patterns with a fixed-cost
prune therefore certifies a global optimum of the linearized model.

Joint models are solved as: optimize the forced-order side, then find the
largest root of the no-order side's cost curve equal to that optimum at or
below the order-up-to level (deterministic replacement for the solver's
free root choice).
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .model import MilpModel, verify_assignment

MAX_ENUMERATION_HORIZON = 16


class SolverError(RuntimeError):
    pass


class HorizonTooLargeError(SolverError):
    """Enumeration bound exceeded; export the model and use an external solver."""


@dataclass(frozen=True)
class SolveResult:
    objective: float
    assignment: dict
    status: str              # "optimal" | "infeasible" | "node-limit"
    node_count: int
    wall_time: float

    def value(self, name: str) -> float:
        return self.assignment[name]


class ConvexPWL:
    """f(x) = slope * x + const + sum_k delta_k * max(x - kink_k, 0),
    with all delta_k >= 0 (convex)."""

    __slots__ = ("slope", "const", "kinks", "deltas")

    def __init__(self, slope=0.0, const=0.0, kinks=None, deltas=None):
        self.slope = float(slope)
        self.const = float(const)
        self.kinks = np.asarray([] if kinks is None else kinks, dtype=float)
        self.deltas = np.asarray([] if deltas is None else deltas, dtype=float)

    def __call__(self, x):
        if self.kinks.size == 0:
            return self.slope * x + self.const
        return (self.slope * x + self.const
                + float(np.maximum(x - self.kinks, 0.0) @ self.deltas))

    def plus(self, other: "ConvexPWL") -> "ConvexPWL":
        return ConvexPWL(self.slope + other.slope, self.const + other.const,
                         np.concatenate((self.kinks, other.kinks)),
                         np.concatenate((self.deltas, other.deltas)))

    def plus_affine(self, a: float, b: float) -> "ConvexPWL":
        return ConvexPWL(self.slope + a, self.const + b, self.kinks, self.deltas)

    def shifted(self, delta: float) -> "ConvexPWL":
        """g(x) = f(x - delta)."""
        return ConvexPWL(self.slope, self.const - self.slope * delta,
                         self.kinks + delta, self.deltas)

    def minimize(self, lo: float, hi: float, tol: float = 1e-11):
        """(argmin, min) over [lo, hi]; flat minima return their midpoint.

        Convexity makes the slope sequence nondecreasing, so the minimum
        region is bracketed by the last descending and first ascending
        segment.
        """
        order = np.argsort(self.kinks, kind="stable")
        kinks = self.kinks[order]
        # slopes[i] applies on (kinks[i-1], kinks[i]); slopes[n] after the end
        slopes = self.slope + np.concatenate(([0.0], np.cumsum(self.deltas[order])))
        neg = np.nonzero(slopes < -tol)[0]
        pos = np.nonzero(slopes > tol)[0]
        if pos.size == 0:
            x = hi
        elif neg.size == 0:
            x = lo
        else:
            last_neg = neg[-1]
            first_pos = pos[0]
            left = kinks[last_neg]
            right = kinks[first_pos - 1]
            x = left if first_pos == last_neg + 1 else 0.5 * (left + right)
        x = min(max(x, lo), hi)
        return x, self(x)


@dataclass
class _Cycle:
    start: int           # local period j (1-based)
    end: int             # local period e
    orders: bool         # an order is placed at the start
    cost: ConvexPWL      # cost as a function of the start-of-cycle level y
    mean_demand: float   # cumulative mean over the cycle
    y_lo: float
    y_hi: float


class _SubmodelEngine:
    """Pattern enumeration for one submodel's rows of a MilpModel."""

    def __init__(self, model: MilpModel, label: str):
        self.model = model
        self.label = label
        inst = model.instance
        self.T = inst.horizon
        costs = inst.costs
        self.K, self.c = costs.fixed, costs.unit
        self.h, self.b = costs.holding, costs.penalty
        self.means = inst.means
        lb, ub = model.variables[f"I_{label}_1"]
        self.inv_lo, self.inv_hi = lb, ub
        i0lb, i0ub = model.variables[f"I0_{label}"]
        self.i0_lo, self.i0_hi = i0lb, i0ub
        # lowest pinnable no-order starting level: period 1's closing
        # inventory must stay within bounds for at least one pattern
        self.pin_lower = max(self.inv_lo + inst.means[0], self.i0_lo)
        d1lb, _ = model.variables[f"delta_{label}_1"]
        self.first_order = bool(round(d1lb))
        self.rules = {}
        for rule in model.piecewise:
            if rule.selector.startswith(f"P_{label}_"):
                self.rules[(rule.cycle_start, rule.period)] = rule
        self._cycle_cache: dict = {}

    def cycle(self, j: int, e: int, orders: bool) -> _Cycle:
        key = (j, e, orders)
        hit = self._cycle_cache.get(key)
        if hit is not None:
            return hit
        total = ConvexPWL()
        y_lo, y_hi = -math.inf, math.inf
        hb = self.h + self.b
        for t in range(j, e + 1):
            rule = self.rules[(j, t)]
            pw = rule.pieces
            deltas = np.diff(np.asarray(pw.slopes)) * hb
            f = ConvexPWL(0.0, hb * pw.error_bound, np.asarray(pw.breakpoints), deltas)
            # b * B_t = b * (H_t - I_t) = b * (H_t - y + shift)
            f = f.plus_affine(-self.b, self.b * rule.demand_shift)
            total = total.plus(f)
            # inventory bounds: I_t = y - shift within [inv_lo, inv_hi]
            y_lo = max(y_lo, self.inv_lo + rule.demand_shift)
            y_hi = min(y_hi, self.inv_hi + rule.demand_shift)
        mean_d = self.rules[(j, e)].demand_shift
        cyc = _Cycle(start=j, end=e, orders=orders, cost=total,
                     mean_demand=mean_d, y_lo=y_lo, y_hi=y_hi)
        self._cycle_cache[key] = cyc
        return cyc

    def pattern_cycles(self, deltas: tuple) -> list:
        """deltas[t-1] for t = 1..T; cycles split at ordering periods."""
        starts = [1] + [t for t in range(2, self.T + 1) if deltas[t - 1]]
        cycles = []
        for idx, j in enumerate(starts):
            e = (starts[idx + 1] - 1) if idx + 1 < len(starts) else self.T
            cycles.append(self.cycle(j, e, orders=bool(deltas[j - 1])))
        return cycles

    def solve_pattern(self, deltas: tuple, pinned_i0: float | None):
        """(cost, y-levels) for one order pattern, or None if infeasible.

        Pool-adjacent pass over the chain y_c >= y_{c-1} - D_{c-1}; a pinned
        first level (no-order first cycle with fixed initial inventory)
        propagates as a hard lower bound through any merge containing it.
        """
        cycles = self.pattern_cycles(deltas)
        m = len(cycles)
        offsets = np.zeros(m)
        for i in range(1, m):
            offsets[i] = offsets[i - 1] + cycles[i - 1].mean_demand
        funcs = []
        for i, cyc in enumerate(cycles):
            f = cyc.cost
            # unit ordering cost telescopes into the first/last cycle levels
            if self.c:
                if i == 0:
                    f = f.plus_affine(-self.c, 0.0)
                if i == m - 1:
                    f = f.plus_affine(self.c, 0.0)
            funcs.append(f.shifted(offsets[i]))  # in z = y + cumulative demand
        z_los = np.array([c.y_lo + offsets[i] for i, c in enumerate(cycles)])
        z_his = np.array([c.y_hi + offsets[i] for i, c in enumerate(cycles)])
        # the first level doubles as the initial-inventory variable
        z_los[0] = max(z_los[0], self.i0_lo)
        z_his[0] = min(z_his[0], self.i0_hi)
        pin = None
        if pinned_i0 is not None and not cycles[0].orders:
            pin = pinned_i0
            if not (cycles[0].y_lo - 1e-9 <= pin <= cycles[0].y_hi + 1e-9):
                return None

        blocks = []  # [first, last, func, z, pinned]
        for i, f in enumerate(funcs):
            if i == 0 and pin is not None:
                blocks.append([0, 0, f, pin, True])
            else:
                if z_los[i] > z_his[i] + 1e-9:
                    return None
                z, _ = f.minimize(z_los[i], z_his[i])
                blocks.append([i, i, f, z, False])
        while True:
            merged = False
            for i in range(len(blocks) - 1):
                if blocks[i][3] > blocks[i + 1][3] + 1e-9:
                    a, b = blocks[i], blocks[i + 1]
                    f = a[2].plus(b[2])
                    lo = max(z_los[a[0]:b[1] + 1].max(), -np.inf)
                    hi = z_his[a[0]:b[1] + 1].min()
                    if a[4]:
                        z = a[3]
                        if not (lo - 1e-9 <= z <= hi + 1e-9):
                            return None
                    else:
                        if lo > hi + 1e-9:
                            return None
                        z, _ = f.minimize(lo, hi)
                    blocks[i:i + 2] = [[a[0], b[1], f, z, a[4]]]
                    merged = True
                    break
            if not merged:
                break
        z_opt = np.empty(m)
        cost = 0.0
        for first, last, f, z, _ in blocks:
            z_opt[first:last + 1] = z
            cost += f(z)
        y_opt = z_opt - offsets
        n_orders = sum(1 for c in cycles if c.orders)
        cost += self.K * n_orders
        if self.c:
            cost += self.c * (sum(self.means) - cycles[-1].mean_demand)
        return float(cost), y_opt, cycles

    def enumerate(self, pinned_i0: float | None):
        """Global optimum over all order patterns.

        Patterns whose fixed cost alone reaches the incumbent are pruned
        (the remaining cost terms are all nonnegative). Ties keep the
        lexicographically smallest pattern. Returns ((cost, deltas,
        y_levels, cycles) | None, nodes).
        """
        free = self.T - 1
        if self.T > MAX_ENUMERATION_HORIZON:
            raise HorizonTooLargeError(
                f"horizon {self.T} exceeds the enumeration bound "
                f"{MAX_ENUMERATION_HORIZON}; use export_lp and an external solver")
        best = None
        nodes = 0
        first = 1 if self.first_order else 0
        for combo in itertools.product((0, 1), repeat=free):
            deltas = (first,) + combo
            n_orders = sum(deltas)
            if best is not None and self.K * n_orders >= best[0] + 1e-12:
                continue
            nodes += 1
            solved = self.solve_pattern(deltas, pinned_i0)
            if solved is None:
                continue
            cost, y_opt, cycles = solved
            if best is None or cost < best[0] - 1e-12:
                best = (cost, deltas, y_opt, cycles)
        return best, nodes

    def assignment_for(self, deltas, y_opt, cycles) -> dict:
        lab = self.label
        out = {}
        for t in range(1, self.T + 1):
            out[f"delta_{lab}_{t}"] = float(deltas[t - 1])
            for j in range(1, t + 1):
                out[f"P_{lab}_{j}_{t}"] = 0.0
        i0 = None
        for i, cyc in enumerate(cycles):
            y = float(y_opt[i])
            if i == 0:
                i0 = y  # forced-order models pin I0 to the first level
            for t in range(cyc.start, cyc.end + 1):
                rule = self.rules[(cyc.start, t)]
                out[f"P_{lab}_{cyc.start}_{t}"] = 1.0
                inv = y - rule.demand_shift
                h_val = float(rule.pieces.upper(y))
                out[f"I_{lab}_{t}"] = inv
                out[f"H_{lab}_{t}"] = h_val
                out[f"B_{lab}_{t}"] = h_val - inv
        out[f"I0_{lab}"] = float(i0)
        return out


class _SModelEvaluator:
    """Fast repeated evaluation of a no-first-order model's optimal cost as
    a function of the (fixed) initial inventory level."""

    def __init__(self, model: MilpModel):
        if "s" not in model.submodels:
            raise SolverError("model has no no-first-order submodel")
        self.engine = _SubmodelEngine(model, "s")
        self.nodes = 0

    def free_minimum(self):
        best, nodes = self.engine.enumerate(pinned_i0=None)
        self.nodes += nodes
        if best is None:
            raise SolverError("no feasible order pattern")
        return best

    def cost_at(self, x: float):
        best, nodes = self.engine.enumerate(pinned_i0=x)
        self.nodes += nodes
        if best is None:
            raise SolverError(f"no feasible pattern at initial level {x}")
        return best


def _largest_root(g, target: float, hi: float, g_hi: float,
                  lo_limit: float, tolerance: float):
    """Largest x <= hi with g(x) = target for a continuous piecewise-linear
    g that exceeds target far to the left. Expands a bracket leftward from
    hi, bisects to `tolerance`, then polishes on the final linear piece."""
    if abs(g_hi - target) <= 1e-9:
        return hi, g_hi
    if g_hi > target:
        raise SolverError("root search requires g(hi) <= target")
    step = 1.0
    left = hi
    g_left = g_hi
    while g_left < target:
        right, g_right = left, g_left
        left = hi - step
        step *= 2.0
        if left < lo_limit:
            left = lo_limit
        g_left = g(left)
        if left <= lo_limit and g_left < target:
            raise SolverError(
                f"no root above the lower limit {lo_limit}; bracket "
                f"[{left}, {right}] has costs [{g_left}, {g_right}]")
    lo, g_lo = left, g_left
    hi_b, g_hi_b = right, g_right
    width = max(tolerance, 1e-9)
    while True:
        while hi_b - lo > width:
            mid = 0.5 * (lo + hi_b)
            g_mid = g(mid)
            if g_mid >= target:
                lo, g_lo = mid, g_mid
            else:
                hi_b, g_hi_b = mid, g_mid
        if g_hi_b < g_lo:  # secant polish on the final piece, exact if linear
            x = lo + (g_lo - target) * (hi_b - lo) / (g_lo - g_hi_b)
            gx = g(x)
            if abs(gx - target) <= 1e-7:
                return x, gx
        if width <= 1e-9:
            # a kink sits inside the bracket: the bracket end is the root
            # up to one slope-scaled width
            return lo, g_lo
        width = max(width * 1e-4, 1e-9)


def solve_exact(model: MilpModel, tolerance: float = 1e-4) -> SolveResult:
    """Global optimum of the linearized model; see the module docstring."""
    start = time.perf_counter()
    if model.kind in ("s", "S"):
        engine = _SubmodelEngine(model, model.kind)
        pinned = None
        if model.kind == "s" and model.is_fixed("I0_s"):
            pinned = model.variables["I0_s"][0]
        best, nodes = engine.enumerate(pinned_i0=pinned)
        if best is None:
            return SolveResult(math.nan, {}, "infeasible", nodes,
                               time.perf_counter() - start)
        cost, deltas, y_opt, cycles = best
        assignment = engine.assignment_for(deltas, y_opt, cycles)
        if model.kind == "s" and pinned is not None:
            assignment["I0_s"] = pinned
        obj = model.objective_value(assignment)
        _self_check(model, assignment, obj, cost)
        return SolveResult(obj, assignment, "optimal", nodes,
                           time.perf_counter() - start)
    if model.kind == "joint":
        return _solve_joint(model, tolerance, start)
    raise SolverError(f"unknown model kind {model.kind!r}")


def _solve_joint(model: MilpModel, tolerance: float, start: float) -> SolveResult:
    engine_S = _SubmodelEngine(model, "S")
    best_S, nodes = engine_S.enumerate(pinned_i0=None)
    if best_S is None:
        return SolveResult(math.nan, {}, "infeasible", nodes,
                           time.perf_counter() - start)
    cost_S, deltas_S, y_S, cycles_S = best_S
    s_up = float(y_S[0])  # order-up-to level: the pinned I0_S

    evaluator = _SModelEvaluator(model)
    cache: dict = {}

    def g(x: float) -> float:
        hit = cache.get(x)
        if hit is None:
            hit = evaluator.cost_at(x)
            cache[x] = hit
        return hit[0]

    target = cost_S
    lo_limit = evaluator.engine.pin_lower
    root, g_root = _largest_root(g, target, s_up, g(s_up), lo_limit, tolerance)
    nodes += evaluator.nodes

    cost_s, deltas_s, y_s, cycles_s = cache[root] if root in cache \
        else evaluator.cost_at(root)
    assignment = engine_S.assignment_for(deltas_S, y_S, cycles_S)
    assignment.update(evaluator.engine.assignment_for(deltas_s, y_s, cycles_s))
    assignment["I0_s"] = float(root)
    assignment["C_S"] = float(cost_S)
    assignment["G_s"] = float(g_root)
    obj = model.objective_value(assignment)
    _self_check(model, assignment, obj, None)
    return SolveResult(obj, assignment, "optimal", nodes,
                       time.perf_counter() - start)


def _self_check(model: MilpModel, assignment: dict, obj: float,
                engine_cost: float | None) -> None:
    bad = verify_assignment(model, assignment, tol=1e-6)
    if bad:
        raise SolverError(f"internal solution fails verification: {bad[:3]}")
    if engine_cost is not None and abs(obj - engine_cost) > 1e-6 * max(1, abs(obj)):
        raise SolverError(
            f"objective mismatch: rows give {obj}, engine gave {engine_cost}")


def import_solution(model: MilpModel, path) -> SolveResult:
    """Validate an external solver's `name value` file against the model.

    The objective is recomputed from the assignment, never trusted from the
    file. Unknown names referencing no model variable are rejected; export
    auxiliaries (segment selectors, the constant-one column) are ignored.
    """
    start = time.perf_counter()
    assignment = {}
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise SolverError(f"{path}: parse error: empty solution file")
    for ln in lines:
        parts = ln.split()
        if len(parts) != 2:
            raise SolverError(f"{path}: parse error on line {ln!r}")
        name, value = parts
        if name not in model.variables:
            if name == "ONE" or name.startswith("z_"):
                continue
            raise SolverError(f"{path}: name mismatch: unknown variable {name!r}")
        try:
            assignment[name] = float(value)
        except ValueError as exc:
            raise SolverError(f"{path}: bad value for {name}: {value!r}") from exc
    for name, (lb, ub) in model.variables.items():
        if name not in assignment:
            if lb == ub:
                assignment[name] = lb
            else:
                raise SolverError(f"{path}: name mismatch: missing variable {name!r}")
    bad = verify_assignment(model, assignment, tol=1e-6)
    if bad:
        name, amount = bad[0]
        raise SolverError(
            f"imported solution violates {name} by {amount:.3e} "
            f"({len(bad)} rows beyond tolerance)")
    obj = model.objective_value(assignment)
    return SolveResult(obj, assignment, "optimal", 0,
                       time.perf_counter() - start)


class ExactBackend:
    """Default backend: the in-repo enumeration solver."""

    def __init__(self, tolerance: float = 1e-4):
        self.tolerance = tolerance

    def solve(self, model: MilpModel) -> SolveResult:
        return solve_exact(model, tolerance=self.tolerance)

    def evaluator(self, model: MilpModel) -> _SModelEvaluator:
        return _SModelEvaluator(model)
