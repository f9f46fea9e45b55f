import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from signed_consensus.analysis import (
    ClassificationCriteria,
    InvalidAlpha,
    classify_trajectory,
    spread_metrics,
    theorem_constants,
)
from signed_consensus.env import AttentionSchedule
from signed_consensus.graph import PositiveClusterPartition
from signed_consensus.harness import Trajectory

ONE = AttentionSchedule.constant(1.0)
ZERO = AttentionSchedule.constant(0.0)


def part(*blocks):
    return PositiveClusterPartition(tuple(frozenset(b) for b in blocks))


def traj(states, termination="horizon"):
    states = np.asarray(states, dtype=float)
    T = len(states)
    z = np.zeros(T)
    return Trajectory(0, np.arange(T), states, z, z, z.astype(int), termination)


class TestSpreadMetrics:
    def test_example(self):
        m = spread_metrics([0.0, 1.0, 5.0, 6.0], part({1, 2}, {3, 4}))
        assert (m.h, m.H, m.spread) == (0.0, 6.0, 6.0)
        assert m.cluster_spreads == (1.0, 1.0)

    def test_single_block(self):
        m = spread_metrics([3.0, -1.0, 2.0], part({1, 2, 3}))
        assert m.spread == m.cluster_spreads[0] == 4.0

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            spread_metrics([1.0, 2.0], part({1, 2, 3}))

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=8), st.floats(-1e3, 1e3))
    def test_properties(self, s, c):
        n = len(s)
        p = part(set(range(1, n // 2 + 1)), set(range(n // 2 + 1, n + 1)))
        m = spread_metrics(s, p)
        assert m.spread >= 0
        assert all(0 <= th <= m.spread for th in m.cluster_spreads)
        shifted = spread_metrics([x + c for x in s], p)
        assert shifted.spread == pytest.approx(m.spread, abs=1e-6)


class TestTheoremConstants:
    def test_x_example(self):
        c = theorem_constants(3, 1, 0.25, 0.1, 0.5, ONE, ZERO, 3)
        assert c.K0 == 3 and c.rho_star == 0.25 and c.lambda_star == 0.5
        assert c.X == [0.001953125] * 3

    def test_four_nodes(self):
        c = theorem_constants(4, 2, 0.2, 0.1, 0.5, ONE, ZERO, 1)
        assert c.K0 == 10
        assert c.rho_star == pytest.approx(0.2)
        assert c.lambda_star == pytest.approx(0.4)

    def test_y_vanishes_without_negative_attention(self):
        c = theorem_constants(4, 1, 0.2, 0.5, 0.5, ONE, ZERO, 5)
        assert c.Y == [0.0] * 5
        assert c.W == [0.0] * 5

    def test_y_closed_form(self):
        d = AttentionSchedule.constant(0.1)
        c = theorem_constants(3, 1, 0.2, 0.3, 0.5, ONE, d, 2)
        want = (1 + 2 * 0.3 * 2) ** 3 * (1 - 0.9 ** 3)
        assert c.Y[0] == pytest.approx(want, rel=1e-12)

    def test_y_tiny_d_keeps_precision(self):
        d = AttentionSchedule.constant(1e-15)
        c = theorem_constants(3, 1, 0.2, 0.3, 0.5, ONE, d, 1)
        assert c.Y[0] == pytest.approx(2.2 ** 3 * 3e-15, rel=1e-9)

    @pytest.mark.parametrize("alpha", [0.0, 0.5, 0.7, -0.1])
    def test_invalid_alpha(self, alpha):
        with pytest.raises(InvalidAlpha):
            theorem_constants(3, 1, alpha, 0.1, 0.5, ONE, ZERO, 1)

    def test_block_sums_match_direct(self):
        b = AttentionSchedule.power(0.9, 0.5)
        d = AttentionSchedule.power(0.5, 2.0)
        c = theorem_constants(4, 1, 0.2, 0.1, 0.5, b, d, 50)
        K0 = 5
        for m in (0, 7, 49):
            ts = range(m * K0, (m + 1) * K0)
            assert c.W[m] == pytest.approx(math.fsum(0.5 / (t + 1) ** 2 for t in ts), abs=1e-12)
            assert c.J[m] == pytest.approx(math.prod(0.9 / (t + 1) ** 0.5 for t in ts), rel=1e-12)

    def test_hypotheses_summable_d(self):
        b = AttentionSchedule.constant(0.6)
        d = AttentionSchedule.power(0.5, 2.0)
        h = theorem_constants(3, 1, 0.2, 0.1, 0.5, b, d, 200).hypotheses()
        assert h["J_sum_diverges"]
        assert h["W_over_J_to_zero"]

    def test_hypotheses_constant_d(self):
        d = AttentionSchedule.constant(0.3)
        h = theorem_constants(3, 1, 0.2, 0.1, 0.5, ONE, d, 50).hypotheses()
        assert not h["W_over_J_to_zero"]
        assert not h["x_minus_y_in_unit_interval"]


class TestClassifier:
    P2 = part({1, 2}, {3, 4})

    def test_constant_converges(self):
        v = classify_trajectory(traj(np.tile([1.0, 2.0, 3.0, 4.0], (50, 1))), part({1, 2, 3, 4}))
        # every node frozen, so converged even though the spread is 3
        assert v.kind == "converged"
        assert v.deviation_consensus

    def test_drift_is_deviation_consensus(self):
        t = np.arange(2000)[:, None] * 0.001
        v = classify_trajectory(traj(np.tile(t, (1, 4))), part({1, 2, 3, 4}))
        assert v.kind == "deviation-consensus"

    def test_clustered(self):
        t = np.arange(2000)[:, None] * 0.001
        s = np.hstack([t, t, t + 5.0, t + 5.0])
        v = classify_trajectory(traj(s), self.P2)
        assert v.kind == "clustered"
        assert v.evidence["max_block_mean_gap"] == pytest.approx(5.0)

    def test_clustered_needs_two_blocks(self):
        t = np.arange(2000)[:, None] * 0.001
        s = np.hstack([t, t, t + 5.0, t + 5.0])
        assert classify_trajectory(traj(s), part({1, 2, 3, 4})).kind == "undecided"

    def test_threshold_termination(self):
        assert classify_trajectory(traj(np.zeros((3, 4)), "threshold"), self.P2).kind == "diverged"

    def test_large_spread_diverged(self):
        s = np.zeros((10, 4))
        s[-1, 0] = 2e6
        assert classify_trajectory(traj(s), self.P2).kind == "diverged"

    def test_undecided(self):
        rng = np.random.default_rng(0)
        assert classify_trajectory(traj(rng.normal(size=(100, 4))), self.P2).kind == "undecided"

    def test_tail_window_in_slots(self):
        crit = ClassificationCriteria()
        assert crit.window(50) == 50
        assert crit.window(10_000) == 1000
        assert crit.window(100_000) == 10_000
        assert ClassificationCriteria(tail_window=20).window(10) == 10

    def test_early_noise_outside_tail_ignored(self):
        s = np.zeros((5000, 4))
        s[:100] = np.random.default_rng(1).normal(size=(100, 4))
        assert classify_trajectory(traj(s), self.P2).kind == "converged"

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-1e4, 1e4))
    def test_translation_invariant(self, c):
        t = np.arange(1500)[:, None] * 0.001
        s = np.hstack([t, t, t + 5.0, t + 5.0])
        assert classify_trajectory(traj(s + c), self.P2).kind == "clustered"
