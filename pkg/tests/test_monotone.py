import numpy as np
import pytest

from zerocoupling.measures import DiscreteMeasure
from zerocoupling.monotone import (
    DiscretePotential,
    SupportSet,
    cycle_defect,
    is_cyclically_monotone,
    is_monotone,
    push_forward,
    rockafellar_potential,
    subdifferential_contains,
    support_scale,
)


def identity_support(n=5, d=2, seed=0):
    xs = np.random.default_rng(seed).normal(size=(n, d))
    return SupportSet(xs, xs)


class TestIsMonotone:
    def test_identity_map(self):
        assert is_monotone(identity_support()).ok

    def test_forced_violation_1d(self):
        S = SupportSet(np.array([[0.0], [1.0]]), np.array([[1.0], [0.0]]))
        res = is_monotone(S)
        assert not res.ok
        assert res.witness == (0, 1)

    def test_axis_union_set(self):
        # pairs from (R_<=0 x {0}) union ({0} x R_>=0) are monotone
        xs = np.array([[-2.0], [-1.0], [-0.5], [0.0], [0.0], [0.0]])
        ys = np.array([[0.0], [0.0], [0.0], [0.3], [1.0], [2.5]])
        assert is_monotone(SupportSet(xs, ys)).ok

    def test_tolerance_scales_with_support(self):
        # the same absolute defect is absorbed at large scale (inner products
        # grow like ||x||*||y||) but flagged at small scale
        big = SupportSet(np.array([[0.0], [1e6]]),
                         np.array([[1e6 + 1e-5], [1e6]]))
        assert is_monotone(big, tol=1e-9).ok
        small = SupportSet(np.array([[0.0], [1.0]]),
                           np.array([[1.0 + 1e-5], [1.0]]))
        assert not is_monotone(small, tol=1e-9).ok


class TestIsCyclicallyMonotone:
    def test_identity_support(self):
        assert is_cyclically_monotone(identity_support(8, 3, 1)).ok

    def test_1d_equivalence_random(self):
        rng = np.random.default_rng(123)
        for _ in range(200):
            n = rng.integers(2, 7)
            S = SupportSet(rng.normal(size=(n, 1)), rng.normal(size=(n, 1)))
            assert is_monotone(S).ok == is_cyclically_monotone(S).ok

    def test_rotation_pairs_violate(self):
        R = np.array([[0.0, -1.0], [1.0, 0.0]])  # 90 degrees
        xs = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
        S = SupportSet(xs, xs @ R.T)
        res = is_cyclically_monotone(S)
        assert not res.ok
        cycle = res.witness_cycle
        assert len(cycle) >= 2
        tol_abs = 1e-9 * support_scale(S)
        assert cycle_defect(S, cycle) < -tol_abs

    def test_small_supports_trivially_ok(self):
        assert is_cyclically_monotone(SupportSet(np.zeros((1, 2)) + 1.0,
                                                 np.ones((1, 2)))).ok


class TestRockafellarPotential:
    def test_base_value_zero(self):
        P = rockafellar_potential(identity_support(6, 2, 3), base_index=2)
        assert P.psi[2] == 0.0

    def test_identity_1d_equispaced_exact(self):
        xs = np.array([[0.0], [1.0], [2.0], [3.0]])
        S = SupportSet(xs, xs)
        P = rockafellar_potential(S, base_index=0)
        # subgradient inequality holds with zero slack on this grid
        for i in range(4):
            for j in range(4):
                lhs = P.psi[j]
                rhs = P.psi[i] + float((xs[j] - xs[i]) @ P.grads[i])
                assert lhs >= rhs

    def test_round_trip_contains_all_pairs(self):
        rng = np.random.default_rng(5)
        xs = rng.normal(size=(7, 2))
        S = SupportSet(xs, xs)  # identity graph is cyclically monotone
        P = rockafellar_potential(S)
        for x, y in zip(S.xs, S.ys):
            assert subdifferential_contains(P, (x, y))

    def test_rejects_non_monotone(self):
        S = SupportSet(np.array([[0.0], [1.0]]), np.array([[1.0], [0.0]]))
        with pytest.raises(ValueError, match="not cyclically monotone"):
            rockafellar_potential(S)

    def test_csv_round_trip(self, tmp_path):
        P = rockafellar_potential(identity_support(5, 2, 9))
        p = tmp_path / "pot.csv"
        P.save_csv(p)
        P2 = DiscretePotential.load_csv(p)
        assert np.array_equal(P.xs, P2.xs)
        assert np.array_equal(P.psi, P2.psi)
        assert np.array_equal(P.grads, P2.grads)


class TestSubdifferentialContains:
    def identity_potential_01(self):
        xs = np.array([[0.0], [1.0]])
        return rockafellar_potential(SupportSet(xs, xs))

    def test_existing_nodes_contained(self):
        P = self.identity_potential_01()
        assert subdifferential_contains(P, (np.array([0.0]), np.array([0.0])))
        assert subdifferential_contains(P, (np.array([1.0]), np.array([1.0])))

    def test_steep_slope_rejected(self):
        P = self.identity_potential_01()
        assert not subdifferential_contains(P, (np.array([0.5]),
                                                np.array([-10.0])))

    def test_midpoint_flat_slope_accepted(self):
        # the chain potential is flat between the two nodes, so the only
        # admissible midpoint subgradient is 0
        P = self.identity_potential_01()
        assert subdifferential_contains(P, (np.array([0.5]), np.array([0.0])))
        assert not subdifferential_contains(P, (np.array([0.5]),
                                                np.array([0.5])))

    def test_dimension_mismatch(self):
        P = self.identity_potential_01()
        with pytest.raises(ValueError):
            subdifferential_contains(P, (np.array([0.5, 0.5]),
                                         np.array([0.5, 0.5])))


class TestPushForward:
    def test_identity_map(self):
        m = DiscreteMeasure(np.array([[1.0, 2.0], [3.0, -1.0]]),
                            np.array([0.5, 1.5]))
        out = push_forward(lambda x: x, m)
        assert np.array_equal(out.points, m.points)
        assert np.array_equal(out.weights, m.weights)
        assert out.meta["origin_residual"] == 0.0

    def test_shift_map_preserves_mass(self):
        # grid on [-1, 0) shifted by +1; the atom at -1 maps to the origin
        xs = (np.arange(10) / 10.0 - 1.0)[:, None]
        m = DiscreteMeasure(xs, np.full(10, 0.1))
        out = push_forward(lambda x: x + 1.0, m)
        assert out.meta["origin_residual"] == pytest.approx(0.1)
        assert out.meta["pushed_total"] == pytest.approx(m.total_mass())
        assert np.all(out.points > 0.0)
        assert np.all(out.points <= 1.0)

    def test_conservation_exact(self):
        rng = np.random.default_rng(17)
        m = DiscreteMeasure(rng.normal(size=(31, 2)) + 4.0, rng.random(31) + 0.1)
        out = push_forward(lambda x: 2.0 * x, m)
        assert out.meta["pushed_total"] == m.total_mass()

    def test_potential_gradient_assignment(self):
        xs = np.array([[0.5], [1.0], [2.0]])
        P = rockafellar_potential(SupportSet(xs, xs))
        m = DiscreteMeasure(xs, np.array([1.0, 2.0, 3.0]))
        out = push_forward(P, m)
        assert np.array_equal(out.points, xs)

    def test_potential_requires_exact_nodes(self):
        xs = np.array([[0.5], [1.0]])
        P = rockafellar_potential(SupportSet(xs, xs))
        m = DiscreteMeasure(np.array([[0.75]]), np.array([1.0]))
        with pytest.raises(ValueError, match="domain violation"):
            push_forward(P, m)

    def test_domain_predicate(self):
        m = DiscreteMeasure(np.array([[-1.0, 0.0]]), np.array([1.0]))
        with pytest.raises(ValueError, match="domain violation"):
            push_forward(lambda x: x, m, domain=lambda x: x[0] > 0)

    def test_nonfinite_image_rejected(self):
        m = DiscreteMeasure(np.array([[1.0]]), np.array([1.0]))
        with pytest.raises(ValueError, match="domain violation"):
            push_forward(lambda x: x * np.inf, m)


class TestSupportSetCSV:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        S = SupportSet(rng.normal(size=(9, 2)), rng.normal(size=(9, 2)))
        p = tmp_path / "s.csv"
        S.save_csv(p)
        S2 = SupportSet.load_csv(p)
        assert np.array_equal(S.xs, S2.xs)
        assert np.array_equal(S.ys, S2.ys)

    def test_bad_header(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("x0,z0\n1,2\n")
        with pytest.raises(ValueError, match="header"):
            SupportSet.load_csv(p)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            SupportSet(np.zeros((2, 2)), np.zeros((3, 2)))
