"""Exact benchmark solver: backward induction on an inventory grid.

Computes, for every period t and grid level y, the cost-to-go after ordering

    G_t(y) = c*y + E[h*(y - d)^+ + b*(d - y)^+] + E[C_{t+1}(y - d)]

and the optimal value C_t(x) = min(G_t(x), K + min_{y >= x} G_t(y)) - c*x,
then extracts the per-period (s_t, S_t) policy. Demand is discretized to
grid-step cells with normal CDF mass, truncated at a far quantile and at
zero, then renormalized.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .domain import Instance, PolicyParameters, validate


class GridTooSmallError(RuntimeError):
    """The optimal action hit the grid boundary; widen the grid."""


@dataclass(frozen=True)
class InventoryGrid:
    lower: float
    upper: float
    step: float = 1.0

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError(f"grid step must be positive, got {self.step}")
        if self.lower >= self.upper:
            raise ValueError("grid lower bound must be below upper bound")
        n = (self.upper - self.lower) / self.step
        if abs(n - round(n)) > 1e-9:
            raise ValueError("grid span must be an integer number of steps")

    @property
    def size(self) -> int:
        return int(round((self.upper - self.lower) / self.step)) + 1

    def levels(self) -> np.ndarray:
        return self.lower + self.step * np.arange(self.size)

    def index_of(self, y: float) -> int:
        i = (y - self.lower) / self.step
        j = int(round(i))
        if abs(i - j) > 1e-6 or not 0 <= j < self.size:
            raise ValueError(f"level {y} is not on the grid")
        return j


def default_grid(instance: Instance, step: float = 1.0) -> InventoryGrid:
    """Grid covering every state reachable under a sensible policy.

    The lower bound allows full demand depletion plus the never-order band
    (roughly K/b deep); the upper bound covers any plausible order-up-to
    level. Boundary hits are still checked after the solve.
    """
    total_mean = sum(instance.means)
    total_sd = math.sqrt(sum(s * s for s in instance.std_devs))
    i0 = instance.initial_inventory
    c = instance.costs
    slack = c.fixed / c.penalty + 10.0 * step
    lower = min(0.0, i0) - total_mean - 4.0 * total_sd - slack
    upper = max(i0, total_mean + 4.0 * total_sd) + 10.0 * step
    lower = math.floor(lower / step) * step
    upper = math.ceil(upper / step) * step
    return InventoryGrid(lower, upper, step)


def discretize_demand(mean: float, std_dev: float, step: float,
                      truncation: float) -> tuple[np.ndarray, np.ndarray]:
    """Demand atoms on multiples of `step` with CDF cell mass.

    Cells beyond the truncation quantile on either side are dropped, as is
    everything below zero; the remaining mass is renormalized.
    """
    if std_dev == 0.0:
        return np.array([round(mean / step) * step]), np.array([1.0])
    z = ndtri(truncation)
    lo = max(0.0, math.floor((mean - z * std_dev) / step) * step)
    hi = math.ceil((mean + z * std_dev) / step) * step
    values = np.arange(lo, hi + step / 2, step)
    edges_lo = (values - step / 2 - mean) / std_dev
    edges_hi = (values + step / 2 - mean) / std_dev
    mass = ndtr(edges_hi) - ndtr(edges_lo)
    keep = mass > 0
    values, mass = values[keep], mass[keep]
    return values, mass / mass.sum()


@dataclass(frozen=True)
class SdpSolution:
    instance: Instance
    grid: InventoryGrid
    g_tables: np.ndarray      # shape (T, n): G_t over the grid
    c_tables: np.ndarray      # shape (T, n): C_t over the grid
    policy: PolicyParameters
    expected_cost: float      # C_1 at the instance's initial inventory
    demand_truncation: float

    def g_minimum(self, t: int) -> float:
        return float(self.g_tables[t - 1].min())

    def reorder_cost(self, t: int) -> float:
        """The indifference cost K + G_t(S_t) defining the reorder point."""
        return self.instance.costs.fixed + self.g_minimum(t)


def cost_to_go(solution: SdpSolution, t: int, y: float) -> float:
    """G_t(y) looked up from the solved tables; y must lie on the grid."""
    if not 1 <= t <= solution.instance.horizon:
        raise ValueError(f"period {t} outside horizon")
    return float(solution.g_tables[t - 1][solution.grid.index_of(y)])


def solve_sdp(instance: Instance, grid: InventoryGrid | None = None,
              demand_truncation: float = 0.9999) -> SdpSolution:
    """Backward-induction solve; returns tables, policy and C_1(I_0)."""
    validate(instance)
    if not 0.99 < demand_truncation < 1.0:
        raise ValueError("demand_truncation must lie in (0.99, 1)")
    if grid is None:
        grid = default_grid(instance)
    costs = instance.costs
    K, c, h, b = costs.fixed, costs.unit, costs.holding, costs.penalty
    levels = grid.levels()
    n = levels.size
    T = instance.horizon
    step = grid.step

    g_tables = np.empty((T, n))
    c_tables = np.empty((T, n))
    c_next = np.zeros(n)

    for t in range(T, 0, -1):
        d = instance.demands[t - 1]
        dv, dp = discretize_demand(d.mean, d.std_dev, step, demand_truncation)
        shifts = np.rint(dv / step).astype(int)
        # expected one-period holding/penalty at post-order level y
        diff = levels[:, None] - dv[None, :]
        stage = (h * np.maximum(diff, 0.0) + b * np.maximum(-diff, 0.0)) @ dp
        # expected continuation E[C_{t+1}(y - d)]; below-grid states are in
        # the ordering region where C extends linearly with slope -c
        cont = np.zeros(n)
        if t < T:
            idx = np.arange(n)
            for k, p in zip(shifts, dp):
                j = idx - k
                clipped = np.maximum(j, 0)
                vals = c_next[clipped]
                under = j < 0
                if np.any(under):
                    vals = vals + np.where(under, c * step * (-j), 0.0)
                cont += p * vals
        g = c * levels + stage + cont
        # suffix minimum from the right: best order-up-to cost from each x
        best_up = np.minimum.accumulate(g[::-1])[::-1]
        c_now = np.minimum(g, K + best_up) - c * levels
        g_tables[t - 1] = g
        c_tables[t - 1] = c_now
        c_next = c_now

    policy = _extract_policy_arrays(instance, grid, g_tables)
    i0_idx = grid.index_of(_snap(instance.initial_inventory, grid))
    expected = float(c_tables[0][i0_idx])
    return SdpSolution(instance=instance, grid=grid, g_tables=g_tables,
                       c_tables=c_tables, policy=policy,
                       expected_cost=expected,
                       demand_truncation=demand_truncation)


def _snap(y: float, grid: InventoryGrid) -> float:
    j = round((y - grid.lower) / grid.step)
    return grid.lower + j * grid.step


def _extract_policy_arrays(instance: Instance, grid: InventoryGrid,
                           g_tables: np.ndarray) -> PolicyParameters:
    K = instance.costs.fixed
    levels = grid.levels()
    n = levels.size
    ss, SS, costs = [], [], []
    for t in range(1, instance.horizon + 1):
        g = g_tables[t - 1]
        s_idx = int(np.argmin(g))  # ties resolve to the smaller level
        if s_idx in (0, n - 1):
            raise GridTooSmallError(
                f"order-up-to level for period {t} sits on the grid boundary "
                f"({levels[s_idx]}); widen the grid")
        big_s = levels[s_idx]
        threshold = K + g[s_idx]
        if K == 0.0:
            # ordering is free: order whenever below the base stock
            small_s = big_s
        else:
            above = np.nonzero(g[:s_idx] > threshold)[0]
            if above.size == 0:
                raise GridTooSmallError(
                    f"reorder point for period {t} lies below the grid lower "
                    f"bound {levels[0]}; widen the grid")
            small_s = levels[above[-1]]
        ss.append(small_s)
        SS.append(big_s)
        costs.append(threshold)
    return PolicyParameters(reorder_points=tuple(ss),
                            order_up_to_levels=tuple(SS),
                            costs=tuple(costs))


def extract_policy(solution: SdpSolution) -> PolicyParameters:
    """Re-derive (s_t, S_t) from the stored G tables.

    S_t minimizes G_t on the grid; s_t is the largest grid level below S_t
    at which ordering is still strictly better, i.e. G_t(y) > K + G_t(S_t).
    """
    return _extract_policy_arrays(solution.instance, solution.grid,
                                  solution.g_tables)


def check_k_convexity(g_values: np.ndarray, step: float, K: float,
                      tol: float = 1e-7):
    """Discrete K-convexity: K + G(y + D) >= G(y) + D * (G(y) - G(y-d))/d.

    Checked with d = one step exhaustively over all (y, D) pairs. Returns
    (True, None) or (False, (y-d_level_index, y_index, y+D_index, slack)).
    """
    g = np.asarray(g_values, dtype=float)
    n = g.size
    slopes = (g[1:] - g[:-1]) / step  # slope into y, for y = index 1..n-1
    for i in range(1, n - 1):
        j = np.arange(i + 1, n)
        lhs = K + g[j]
        rhs = g[i] + (j - i) * step * slopes[i - 1]
        bad = lhs < rhs - tol
        if np.any(bad):
            k = int(j[np.argmax(bad)])
            return False, (i - 1, i, k, float((rhs - lhs)[np.argmax(bad)]))
    return True, None


def write_g_curve(solution: SdpSolution, path) -> None:
    """CSV dump of (t, y, G_t(y)) for plotting the cost-to-go curves."""
    levels = solution.grid.levels()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,y,G\n")
        for t in range(1, solution.instance.horizon + 1):
            for y, gval in zip(levels, solution.g_tables[t - 1]):
                fh.write(f"{t},{y:.10g},{gval:.10g}\n")
