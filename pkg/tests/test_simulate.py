import pytest

from sspolicy.domain import PolicyParameters, make_instance
from sspolicy.sdp import solve_sdp
from sspolicy.simulate import estimate_gap, simulate_policy


@pytest.fixture(scope="module")
def example4():
    return make_instance(horizon=4, K=100, h=1, b=10, c=0,
                         means=[20, 40, 60, 40], cv=0.25)


@pytest.fixture(scope="module")
def sdp4(example4):
    return solve_sdp(example4)


def test_zero_variance_exact_cost():
    """Deterministic demand, policy covering it: pure arithmetic, SE = 0."""
    inst = make_instance(horizon=2, K=50, h=1, b=10, c=2,
                         means=[5, 7], std_devs=[0, 0])
    policy = PolicyParameters(reorder_points=(0.0, 6.0),
                              order_up_to_levels=(12.0, 7.0))
    # order 12 (K + 2*12), hold 7 after demand 5; at 7 <= s_2=6? no: 7 > 6,
    # so no second order; demand 7 leaves 0: no holding, no penalty
    sim = simulate_policy(inst, policy, replications=500, seed=1)
    assert sim.mean == pytest.approx(50 + 24 + 7 * 1, abs=1e-12)
    assert sim.standard_error == 0.0
    assert sim.truncation_frequency == 0.0


def test_reproducible_bit_for_bit(example4, sdp4):
    a = simulate_policy(example4, sdp4.policy, 20000, seed=42)
    b = simulate_policy(example4, sdp4.policy, 20000, seed=42)
    assert a == b


def test_chunking_does_not_change_result(example4, sdp4):
    a = simulate_policy(example4, sdp4.policy, 30000, seed=5, chunk_size=30000)
    b = simulate_policy(example4, sdp4.policy, 30000, seed=5, chunk_size=997)
    assert a == b


def test_different_seeds_differ(example4, sdp4):
    a = simulate_policy(example4, sdp4.policy, 10000, seed=1)
    b = simulate_policy(example4, sdp4.policy, 10000, seed=2)
    assert a.mean != b.mean


def test_sdp_policy_matches_value_function(example4, sdp4):
    """The simulated optimal policy reproduces C_1(I_0) within 3 SE at a
    million replications."""
    sim = simulate_policy(example4, sdp4.policy, replications=10**6, seed=7)
    assert abs(sim.mean - sdp4.expected_cost) <= 3 * sim.standard_error
    assert sim.standard_error < 0.2


def test_published_policy_within_two_percent(example4, sdp4):
    policy = PolicyParameters((15, 29.01, 58.1, 29.01),
                              (70.2658, 53.9768, 116.553, 53.9768))
    sim = simulate_policy(example4, policy, replications=10**6, seed=7)
    assert abs(sim.mean - 362.5839) / 362.5839 < 0.02


def test_single_replication_flagged(example4, sdp4):
    sim = simulate_policy(example4, sdp4.policy, replications=1, seed=3)
    assert sim.standard_error == 0.0
    assert sim.se_degenerate


def test_policy_length_mismatch(example4):
    short = PolicyParameters((1.0,), (2.0,))
    with pytest.raises(ValueError, match="horizon"):
        simulate_policy(example4, short, 10, seed=0)


def test_truncation_frequency_small_for_moderate_cv():
    inst = make_instance(horizon=8, K=200, h=1, b=10, c=0,
                         means=[10] * 8, cv=0.3)
    policy = PolicyParameters((5.0,) * 8, (30.0,) * 8)
    sim = simulate_policy(inst, policy, 50000, seed=9)
    assert sim.truncation_frequency < 0.01


class TestGap:
    def test_self_gap_near_zero(self, example4, sdp4):
        gap = estimate_gap(example4, sdp4.policy, sdp4.expected_cost,
                           100000, seed=13)
        assert abs(gap.gap_pct) <= 3 * gap.se_pct

    def test_published_policy_small_gap(self, example4, sdp4):
        policy = PolicyParameters((15, 29.01, 58.1, 29.01),
                                  (70.2658, 53.9768, 116.553, 53.9768))
        gap = estimate_gap(example4, policy, sdp4.expected_cost, 200000, seed=13)
        assert gap.gap_pct <= 2.0

    def test_degraded_policy_dominated(self, example4, sdp4):
        good = PolicyParameters((15, 29.01, 58.1, 29.01),
                                (70.2658, 53.9768, 116.553, 53.9768))
        bad = PolicyParameters(
            tuple(s - 1 for s in sdp4.policy.order_up_to_levels),
            sdp4.policy.order_up_to_levels)
        g_good = estimate_gap(example4, good, sdp4.expected_cost, 100000, seed=13)
        g_bad = estimate_gap(example4, bad, sdp4.expected_cost, 100000, seed=13)
        assert g_bad.gap_pct > g_good.gap_pct

    def test_invalid_oracle_cost(self, example4, sdp4):
        with pytest.raises(ValueError, match="oracle cost"):
            estimate_gap(example4, sdp4.policy, 0.0, 10, seed=0)
