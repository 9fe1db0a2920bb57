"""Brute-force optimum of the linearized lot-sizing models.

Independent of the package's pattern/pooling solver: enumerates every order
pattern and runs a dense-grid dynamic program over the chained cycle
levels. The grid is a 0.25 lattice augmented with every piecewise
breakpoint shifted by every partial demand sum, so piecewise-linear optima
are captured exactly.
"""
from __future__ import annotations

import itertools

import numpy as np


def _cycle_cost_fn(instance, segments, j, e):
    """Cost of cycle j..e (1-based local periods) as a function of the
    level right after the cycle starts, via direct piecewise evaluation."""
    costs = instance.costs
    h, b = costs.holding, costs.penalty
    pieces = [segments[(j, t)] for t in range(j, e + 1)]

    def fn(y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        total = np.zeros_like(y)
        for pw in pieces:
            h_val = pw.upper(y)
            b_val = h_val - (y - pw.mean)
            total += h * h_val + b * b_val
        return total

    return fn


def brute_force_submodel(instance, segments, first_order: bool,
                         fixed_i0: float | None = None,
                         grid_step: float = 0.25):
    """(best_cost, best_deltas) over all order patterns.

    first_order fixes delta_1; fixed_i0 pins the first cycle's level when
    period 1 has no order.
    """
    T = instance.horizon
    costs = instance.costs
    K, c = costs.fixed, costs.unit
    means = instance.means

    total_mean = sum(means)
    total_sd = float(np.sqrt(sum(s * s for s in instance.std_devs)))
    anchor = fixed_i0 if fixed_i0 is not None else 0.0
    lo = min(0.0, anchor) - total_mean - 6 * total_sd - K / costs.penalty - 10
    hi = max(anchor, total_mean + 6 * total_sd) + K / costs.holding + 10
    pieces = [np.arange(lo, hi + grid_step, grid_step)]
    kinks = []
    for pw in segments.values():
        kinks.extend(pw.breakpoints)
    partial_sums = {0.0}
    for a in range(T):
        acc = 0.0
        for t in range(a, T):
            acc += means[t]
            partial_sums.add(acc)
            partial_sums.add(-acc)
    shifts = np.array(sorted(partial_sums))
    pieces.append((np.asarray(kinks)[:, None] + shifts[None, :]).ravel())
    if fixed_i0 is not None:
        pieces.append(np.array([fixed_i0]))
    grid = np.unique(np.concatenate(pieces))
    grid = grid[(grid >= lo) & (grid <= hi)]

    best = None
    first = 1 if first_order else 0
    for combo in itertools.product((0, 1), repeat=T - 1):
        deltas = (first,) + combo
        starts = [1] + [t for t in range(2, T + 1) if deltas[t - 1]]
        cycles = []
        for idx, j in enumerate(starts):
            e = (starts[idx + 1] - 1) if idx + 1 < len(starts) else T
            cycles.append((j, e, bool(deltas[j - 1])))
        m = len(cycles)
        cum = np.zeros(len(grid))
        prev_demand = 0.0
        for i, (j, e, orders) in enumerate(cycles):
            stage = _cycle_cost_fn(instance, segments, j, e)(grid)
            if c and i == 0:
                stage = stage - c * grid
            if c and i == m - 1:
                stage = stage + c * grid
            if i == 0:
                cum = stage.copy()
                if not orders and fixed_i0 is not None:
                    cum[np.abs(grid - fixed_i0) > 1e-9] = np.inf
            else:
                # y_i >= y_{i-1} - prev_demand: prefix minimum after shifting
                allowed_prev = grid + prev_demand
                idx_hi = np.searchsorted(grid, allowed_prev + 1e-9, side="right") - 1
                prefix = np.minimum.accumulate(cum)
                reach = np.where(idx_hi >= 0, prefix[np.maximum(idx_hi, 0)], np.inf)
                cum = reach + stage
            prev_demand = sum(means[j - 1:e])
        pattern_best = float(np.min(cum))
        if not np.isfinite(pattern_best):
            continue
        total = pattern_best + K * sum(1 for _, _, o in cycles if o)
        if c:
            total += c * (total_mean - sum(means[cycles[-1][0] - 1:cycles[-1][1]]))
        if best is None or total < best[0]:
            best = (total, deltas)
    return best
