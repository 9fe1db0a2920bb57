"""Policy-computation heuristics.

Both heuristics walk the suffix horizons k..T and extract the period-k
(s_k, S_k) pair from a linearized model:

  * mp_policy solves the joint model per suffix: the forced-order side's
    free initial level is the order-up-to level, the linked no-order side's
    level is the reorder point.
  * bs_policy solves only no-first-order models: the free minimum gives the
    order-up-to level and its cost; a binary search on the fixed initial
    level then finds where the no-order cost exceeds that minimum by
    exactly K.

`segments` counts the linear pieces of each piecewise loss, so the
underlying support partition has segments - 1 cells.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .domain import Instance, PolicyParameters, validate
from .loss import cached_partition
from .model import build_joint, build_minlp_s, build_segments
from .solver import ExactBackend


@dataclass(frozen=True)
class HeuristicConfig:
    segments: int = 11                 # linear segments = support cells + 1
    strategy: str = "equal-probability"
    bs_step_size: float | None = None  # None: resolved per suffix horizon
    bs_lower_bound: float | None = None
    tolerance: float = 1e-4            # equality band of the binary search
    long_horizon_cutoff: int = 15      # suffixes longer than this use step 1

    def __post_init__(self):
        if self.segments < 3:
            raise ValueError("need at least 3 linear segments (2 cells)")
        if self.bs_step_size is not None and self.bs_step_size <= 0:
            raise ValueError("bs_step_size must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")

    @property
    def cells(self) -> int:
        return self.segments - 1

    def step_for(self, suffix_horizon: int) -> float:
        """Coarse steps keep long-horizon searches fast, fine steps keep
        short ones accurate."""
        if self.bs_step_size is not None:
            return self.bs_step_size
        return 1.0 if suffix_horizon > self.long_horizon_cutoff else 0.1

    def lower_bound_for(self, instance: Instance) -> float:
        """A large negative integer below any reachable pre-order level."""
        if self.bs_lower_bound is not None:
            return self.bs_lower_bound
        total_mean = sum(instance.means)
        total_sd = math.sqrt(sum(s * s for s in instance.std_devs))
        return -float(math.ceil(total_mean + 6.0 * total_sd))


def _suffix_segments(instance: Instance, config: HeuristicConfig) -> dict:
    partition, err = cached_partition(config.cells, config.strategy)
    return build_segments(instance, partition=partition)


def mp_policy(instance: Instance, config: HeuristicConfig | None = None,
              backend=None) -> PolicyParameters:
    """Joint-model heuristic: solve the joint model on every suffix k..T."""
    validate(instance)
    config = config or HeuristicConfig()
    backend = backend or ExactBackend()
    ss, SS, costs = [], [], []
    for k in range(1, instance.horizon + 1):
        suffix = instance.suffix(k)
        segments = _suffix_segments(suffix, config)
        model = build_joint(suffix, segments)
        try:
            result = backend.solve(model)
        except Exception as exc:
            raise RuntimeError(f"joint solve failed at suffix k={k}: {exc}") from exc
        ss.append(result.value("I0_s"))
        SS.append(result.value("I0_S"))
        costs.append(result.value("C_S"))
    return PolicyParameters(reorder_points=tuple(ss),
                            order_up_to_levels=tuple(SS),
                            costs=tuple(costs))


def _round_half_up(x: float) -> float:
    return math.floor(x + 0.5)


def bs_policy(instance: Instance, config: HeuristicConfig | None = None,
              backend=None) -> PolicyParameters:
    """Binary-search heuristic over no-first-order models.

    Per suffix: minimize with a free initial level to get the order-up-to
    level S_k and its cost; then bisect the fixed initial level until the
    cost exceeds the minimum by K within the configured tolerance band.
    Brackets that empty without hitting the band return their midpoint and
    flag the period.
    """
    validate(instance)
    config = config or HeuristicConfig()
    backend = backend or ExactBackend()
    ss, SS, costs, flagged = [], [], [], []
    K = instance.costs.fixed
    for k in range(1, instance.horizon + 1):
        suffix = instance.suffix(k)
        segments = _suffix_segments(suffix, config)
        model = build_minlp_s(suffix, segments)
        try:
            evaluator = backend.evaluator(model)
            cost_up, _, y_levels, _ = evaluator.free_minimum()
        except Exception as exc:
            raise RuntimeError(f"suffix solve failed at k={k}: {exc}") from exc
        s_up = float(y_levels[0])
        target = cost_up + K
        step = config.step_for(suffix.horizon)
        tol = config.tolerance

        if K <= tol:
            ss.append(s_up)
            SS.append(s_up)
            costs.append(target)
            continue

        low = config.lower_bound_for(suffix)
        high = s_up
        found = None
        while low < high:
            span = high - low
            if span >= 2.0:
                mid = low + _round_half_up(span / 2.0)
            else:
                # below the integer lattice, halve on the step lattice so
                # the bracket keeps shrinking geometrically
                mid = low + max(1, round(span / (2.0 * step))) * step
            mid = min(max(mid, low), high)
            gap = evaluator.cost_at(mid)[0] - target
            if abs(gap) <= tol:
                found = mid
                break
            if gap > tol:
                low = mid + step
            else:
                high = mid - step
        if found is None:
            # bracket emptied without entering the tolerance band: take its
            # midpoint and surface the approximate convergence
            found = 0.5 * (low + high)
            flagged.append(k)
        ss.append(min(found, s_up))
        SS.append(s_up)
        costs.append(target)
    return PolicyParameters(reorder_points=tuple(ss),
                            order_up_to_levels=tuple(SS),
                            costs=tuple(costs),
                            flagged_periods=tuple(flagged))


def write_policy_csv(policy: PolicyParameters, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,s_t,S_t,linked_cost\n")
        for t in range(1, policy.horizon + 1):
            s, big_s = policy.pair(t)
            cost = policy.costs[t - 1] if policy.costs else math.nan
            fh.write(f"{t},{s!r},{big_s!r},{cost!r}\n")


def read_policy_csv(path) -> PolicyParameters:
    ss, SS, costs = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("t,s_t,S_t"):
            raise ValueError(f"{path}: unexpected policy CSV header {header!r}")
        for line in fh:
            if not line.strip():
                continue
            parts = line.strip().split(",")
            if len(parts) < 3:
                raise ValueError(f"{path}: malformed policy row {line!r}")
            ss.append(float(parts[1]))
            SS.append(float(parts[2]))
            if len(parts) > 3 and parts[3] not in ("", "nan"):
                costs.append(float(parts[3]))
    return PolicyParameters(reorder_points=tuple(ss),
                            order_up_to_levels=tuple(SS),
                            costs=tuple(costs) if len(costs) == len(ss) else ())
