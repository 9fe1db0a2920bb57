"""Monte Carlo evaluation of (s, S) policies.

Per replication and period: order up to S_t when the opening level is at or
below s_t (paying K plus the unit cost of the order), draw the demand,
charge holding on leftover stock and penalty on the shortfall, and carry
the (possibly negative) net inventory forward.

Randomness is counter-based: replication r reads a dedicated counter range
of a Philox stream keyed by the seed, and demands come from inverse-CDF
normals, so one uniform per (replication, period). Results are therefore
bit-identical however the replications are chunked or distributed.
Negative demand draws are truncated to zero and the truncation frequency
is reported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .domain import Instance, PolicyParameters, validate

_U64_11 = np.uint64(11)
_INV_2_53 = 2.0 ** -53
_MIN_UNIFORM = 2.0 ** -53  # guards ndtri(0) = -inf


@dataclass(frozen=True)
class SimulationResult:
    mean: float
    standard_error: float
    replications: int
    seed: int
    truncation_frequency: float

    @property
    def se_degenerate(self) -> bool:
        """True when a standard error cannot be estimated (one replication)."""
        return self.replications < 2


@dataclass(frozen=True)
class GapEstimate:
    gap_pct: float
    se_pct: float
    simulation: SimulationResult
    oracle_cost: float


def _demand_uniforms(seed: int, start: int, count: int, horizon: int) -> np.ndarray:
    """Uniforms for replications [start, start + count), shape (count, T).

    Each replication owns ceil(T / 4) Philox counter blocks; chunk
    boundaries therefore never change the draws.
    """
    blocks_per_rep = (horizon + 3) // 4
    key = np.random.SeedSequence(seed).generate_state(2, np.uint64)
    counter = np.zeros(4, dtype=np.uint64)
    counter[0] = np.uint64(start * blocks_per_rep)
    bg = np.random.Philox(key=key, counter=counter)
    raw = bg.random_raw(4 * blocks_per_rep * count)
    words = raw.reshape(count, 4 * blocks_per_rep)[:, :horizon]
    return (words >> _U64_11) * _INV_2_53


def simulate_policy(instance: Instance, policy: PolicyParameters,
                    replications: int, seed: int,
                    chunk_size: int = 65536) -> SimulationResult:
    """Mean total cost and its standard error under the given policy."""
    validate(instance)
    if replications < 1:
        raise ValueError("need at least one replication")
    if policy.horizon != instance.horizon:
        raise ValueError(
            f"policy horizon {policy.horizon} does not match instance "
            f"horizon {instance.horizon}")
    T = instance.horizon
    costs = instance.costs
    K, c, h, b = costs.fixed, costs.unit, costs.holding, costs.penalty
    means = np.asarray(instance.means)
    sds = np.asarray(instance.std_devs)
    ss = np.asarray(policy.reorder_points)
    big_ss = np.asarray(policy.order_up_to_levels)

    # one cost per replication, reduced once at the end so the statistics
    # do not depend on how the work was chunked
    all_costs = np.empty(replications)
    truncated = 0
    done = 0
    while done < replications:
        n = min(chunk_size, replications - done)
        uniforms = _demand_uniforms(seed, done, n, T)
        z = ndtri(np.maximum(uniforms, _MIN_UNIFORM))
        demands = means + sds * z
        truncated += int(np.count_nonzero(demands < 0.0))
        np.maximum(demands, 0.0, out=demands)

        level = np.full(n, float(instance.initial_inventory))
        cost = np.zeros(n)
        for t in range(T):
            ordering = level <= ss[t]
            if np.any(ordering):
                cost += ordering * (K + c * (big_ss[t] - level))
                level = np.where(ordering, big_ss[t], level)
            level = level - demands[:, t]
            cost += h * np.maximum(level, 0.0) + b * np.maximum(-level, 0.0)
        all_costs[done:done + n] = cost
        done += n

    mean = float(all_costs.mean())
    if replications > 1:
        se = float(all_costs.std(ddof=1)) / math.sqrt(replications)
    else:
        se = 0.0
    return SimulationResult(mean=mean, standard_error=se,
                            replications=replications, seed=seed,
                            truncation_frequency=truncated / (replications * T))


def estimate_gap(instance: Instance, policy: PolicyParameters,
                 oracle_cost: float, replications: int, seed: int) -> GapEstimate:
    """Percentage excess of the simulated policy cost over the oracle cost."""
    if oracle_cost <= 0:
        raise ValueError(f"oracle cost must be positive, got {oracle_cost}")
    sim = simulate_policy(instance, policy, replications, seed)
    gap = 100.0 * (sim.mean - oracle_cost) / oracle_cost
    se = 100.0 * sim.standard_error / oracle_cost
    return GapEstimate(gap_pct=gap, se_pct=se, simulation=sim,
                       oracle_cost=oracle_cost)
