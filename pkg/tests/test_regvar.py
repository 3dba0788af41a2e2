import math

import numpy as np
import pytest

from zerocoupling.measures import (ANGULAR_DENSITIES, DiscreteMeasure,
                                   HomogeneousMeasure, discretize)
from zerocoupling.monotone import SupportSet
from zerocoupling.oracle import grad55
from zerocoupling.regvar import (
    ExperimentRow,
    RVModel,
    Window,
    check_coupling_homogeneity,
    check_gradient_homogeneity,
    fell_window_distance,
    m0_distance,
    portmanteau_check,
    rescaled_empirical,
    rv_model_from_config,
    sample,
    scaled_subdifferential,
    split_seed,
    tail_coupling_experiment,
)
from zerocoupling.transport import ZeroCoupling


def uniform_shape(alpha=1.0):
    dens, support = ANGULAR_DENSITIES["uniform"]
    return HomogeneousMeasure(dim=2, alpha=alpha, angular_kind="density",
                              density=dens, density_support=support,
                              smooth=True, density_name="uniform")


def uniform_model(alpha=1.0, slowly="none"):
    return RVModel(uniform_shape(alpha), slowly)


class TestSeeds:
    def test_split_seed_formula(self):
        assert split_seed(0, 0) == 0
        assert split_seed(0, 1) == 0x9E3779B97F4A7C15
        assert split_seed(5, 0) == 5

    def test_split_seed_distinct(self):
        seeds = {split_seed(0xC0FFEE, k) for k in range(1000)}
        assert len(seeds) == 1000

    def test_64_bit_range(self):
        for k in (10 ** 6, 2 ** 40):
            assert 0 <= split_seed(123, k) < 2 ** 64


class TestSample:
    def test_deterministic(self):
        m = uniform_model()
        s1 = sample(m, 500, seed=7)
        s2 = sample(m, 500, seed=7)
        assert np.array_equal(s1.points, s2.points)
        assert not np.array_equal(s1.points, sample(m, 500, seed=8).points)

    def test_weights_and_meta(self):
        s = sample(uniform_model(), 250, seed=1)
        assert np.all(s.weights == 1.0 / 250)
        assert s.meta == {"seed": 1, "n": 250}

    def test_pareto_median(self):
        s = sample(uniform_model(alpha=1.0), 100_000, seed=3)
        med = float(np.median(s.norms()))
        assert 1.9 <= med <= 2.1  # Pareto(1) median is 2

    def test_tail_fraction(self):
        n = 100_000
        s = sample(uniform_model(alpha=1.0), n, seed=4)
        frac = float(np.mean(s.norms() > 10.0))
        assert abs(frac - 0.1) <= 3.0 / math.sqrt(n)

    def test_log_damped_radii_solve_survival(self):
        m = uniform_model(slowly="log")
        u = np.array([0.5, 0.1, 0.01, 1e-4])
        r = m.radial_from_uniform(u)
        back = r ** (-1.0) / (1.0 + np.log(r))
        assert np.allclose(back, u, rtol=1e-10)
        assert np.all(r >= 1.0)


class TestAuxiliaryFunction:
    def test_pure_pareto_closed_form(self):
        m = uniform_model(alpha=2.0)
        assert m.b(100.0) == pytest.approx(10.0, rel=1e-14)
        assert m.b(0.5) == 1.0

    def test_log_damped_requires_calibration(self):
        m = uniform_model(slowly="log")
        with pytest.raises(ValueError, match="calibration"):
            m.b(100.0)
        calib = m.radial_from_uniform(np.random.default_rng(0).random(50_000))
        b = m.b(100.0, calib)
        # the empirical (1 - 1/t)-quantile tracks the model's own quantile
        want = m.radial_from_uniform(np.array([0.01]))[0]
        assert b == pytest.approx(want, rel=0.05)


class TestRescaledEmpirical:
    def test_identity_rescale(self):
        s = sample(uniform_model(), 100, seed=5)
        r = rescaled_empirical(s, t=1.0, b=1.0)
        assert np.array_equal(r.points, s.points)
        assert np.allclose(r.weights, 1.0 / 100)

    def test_exponent_measure_normalization(self):
        n, t = 100_000, 100.0
        s = sample(uniform_model(alpha=1.0), n, seed=6)
        r = rescaled_empirical(s, t=t, b=t)  # b(t) = t for alpha = 1
        mass = float(np.sum(r.weights[r.norms() >= 1.0]))
        assert abs(mass - 1.0) <= 5.0 * math.sqrt(t / n)

    def test_invalid_scales(self):
        s = sample(uniform_model(), 10, seed=0)
        with pytest.raises(ValueError):
            rescaled_empirical(s, t=0.0, b=1.0)
        with pytest.raises(ValueError):
            rescaled_empirical(s, t=1.0, b=-1.0)


class TestScaledSubdifferential:
    def test_unit_scales_identity(self):
        S = SupportSet(np.array([[1.0, 2.0]]), np.array([[3.0, 4.0]]))
        T = scaled_subdifferential(S, 1.0, 1.0)
        assert np.array_equal(S.xs, T.xs) and np.array_equal(S.ys, T.ys)

    def test_identity_graph_stays_identity(self):
        xs = np.random.default_rng(9).normal(size=(20, 2))
        T = scaled_subdifferential(SupportSet(xs, xs), 2.0, 2.0)
        assert np.array_equal(T.xs, T.ys)

    @pytest.mark.parametrize("lam", [0.5, 2.0])
    def test_order_one_gradient_graph_invariant(self, lam):
        rng = np.random.default_rng(10)
        xs = np.column_stack([rng.uniform(0.5, 2.0, 50),
                              rng.uniform(-1.5, 1.5, 50)])
        S = SupportSet(xs, grad55(xs))
        T = scaled_subdifferential(S, lam, lam)
        # the scaled graph is again the graph of the same gradient
        assert np.max(np.abs(T.ys - grad55(T.xs))) <= 1e-12

    def test_positive_scales_required(self):
        S = SupportSet(np.ones((1, 2)), np.ones((1, 2)))
        with pytest.raises(ValueError):
            scaled_subdifferential(S, 0.0, 1.0)


class TestFellWindowDistance:
    WIN = Window(1.0, 3.0, 6.0)

    def diag(self, shift=0.0):
        r = np.linspace(1.2, 2.8, 30)
        xs = np.column_stack([r, np.zeros_like(r)])
        return SupportSet(xs, xs + np.array([0.0, shift]))

    def test_equal_sets(self):
        S = self.diag()
        assert fell_window_distance(S, S, self.WIN) == 0.0

    def test_uniform_offset(self):
        d = fell_window_distance(self.diag(), self.diag(0.25), self.WIN)
        assert d == pytest.approx(0.25, rel=1e-12)

    def test_one_empty_restriction(self):
        far = SupportSet(np.array([[50.0, 0.0]]), np.array([[50.0, 0.0]]))
        assert fell_window_distance(self.diag(), far, self.WIN) == math.inf

    def test_both_empty(self):
        far = SupportSet(np.array([[50.0, 0.0]]), np.array([[50.0, 0.0]]))
        assert fell_window_distance(far, far, self.WIN) == 0.0

    def test_mesh_refinement_bound(self):
        def graph(n):
            r = np.linspace(1.0, 3.0, n)
            xs = np.column_stack([r, np.zeros_like(r)])
            return SupportSet(xs, grad55(xs))

        coarse, fine = graph(40), graph(400)
        mesh = 2.0 / 39  # x-spacing of the coarse sampling
        # the gradient has bounded stretch on the window, so the Hausdorff
        # distance is bounded by a small multiple of the coarse mesh
        assert fell_window_distance(coarse, fine, self.WIN) <= 10 * mesh


class TestM0Distance:
    def test_identical_measures(self):
        m = DiscreteMeasure(np.array([[2.5, 0.0]]), np.array([1.0]))
        assert m0_distance(m, m, r_grid=(1.0,)) == 0.0

    def test_disjoint_atoms_bounded(self):
        a = DiscreteMeasure(np.array([[2.0, 0.0]]), np.array([1.0]))
        b = DiscreteMeasure(np.array([[3.0, 0.0]]), np.array([1.0]))
        d = m0_distance(a, b, r_grid=(1.0,))
        assert 0.0 < d <= math.exp(-1.0)

    def test_symmetry_and_triangle(self):
        rng = np.random.default_rng(13)
        ms = [DiscreteMeasure(rng.normal(size=(8, 2)) * 3.0 + 0.5,
                              rng.random(8) + 0.1) for _ in range(3)]
        a, b, c = ms
        dab = m0_distance(a, b)
        assert dab == m0_distance(b, a)
        assert m0_distance(a, c) <= dab + m0_distance(b, c) + 1e-12

    def test_bad_grid(self):
        m = DiscreteMeasure(np.array([[2.0, 0.0]]), np.array([1.0]))
        with pytest.raises(ValueError):
            m0_distance(m, m, r_grid=(2.0, 1.0))
        with pytest.raises(ValueError):
            m0_distance(m, m, r_grid=(-1.0,))


class TestPortmanteau:
    def test_constant_sequence(self):
        m = discretize(uniform_shape(), 1.0, 8.0, resolution=8)
        rep = portmanteau_check([m, m, m], m,
                                [(1.0, 4.0, None, 0.0), (2.0, 8.0, None, 0.0)])
        assert rep["final_max"] == 0.0
        for _, errs in rep["per_set"]:
            assert errs == [0.0, 0.0, 0.0]

    def test_truncations_eventually_exact(self):
        m = discretize(uniform_shape(), 0.125, 8.0, resolution=8)
        seq = [m.restrict(1.0 / n, math.inf) for n in (1, 2, 8)]
        rep = portmanteau_check(seq, m, [(2.0, 8.0, None, 0.0)])
        (_, errs), = rep["per_set"]
        assert errs[-1] == 0.0

    def test_origin_touching_set_rejected(self):
        m = discretize(uniform_shape(), 1.0, 2.0, resolution=4)
        with pytest.raises(ValueError):
            portmanteau_check([m], m, [(0.0, 1.0, None, 0.0)])


class TestCouplingHomogeneity:
    def identity_coupling(self):
        disc = discretize(uniform_shape(alpha=1.0), 0.25, 16.0,
                          resolution=16, radial_resolution=512)
        ent = tuple((i, i, float(w)) for i, w in enumerate(disc.weights))
        return ZeroCoupling(disc, disc, ent)

    def test_lambda_one_exact(self):
        c = self.identity_coupling()
        rep = check_coupling_homogeneity(c, (1.0, 1.0), [1.0],
                                         [((1.0, 2.0), (1.0, 2.0))], tol=0.0)
        assert rep["holds"] and rep["max_rel_error"] == 0.0

    def test_pareto_identity_doubling(self):
        c = self.identity_coupling()
        rep = check_coupling_homogeneity(
            c, (1.0, 1.0), [0.5, 2.0],
            [((1.0, 2.0), (1.0, 2.0)), ((2.0, 4.0), (2.0, 4.0))], tol=0.05)
        assert rep["holds"], rep["max_rel_error"]

    def test_empty_rejected(self):
        e = DiscreteMeasure.empty(2)
        with pytest.raises(ValueError, match="empty"):
            check_coupling_homogeneity(ZeroCoupling(e, e, ()), (1.0, 1.0),
                                       [2.0], [((1.0, 2.0), (1.0, 2.0))], 0.1)


class TestGradientHomogeneity:
    def test_linear_map_exact(self):
        rep = check_gradient_homogeneity(lambda p: 2.0 * np.atleast_2d(p),
                                         1.0, 1.0,
                                         np.random.default_rng(1).normal(size=(30, 2)),
                                         [0.5, 2.0, 10.0], tol=1e-14)
        assert rep["holds"]

    def test_monomial_1d(self):
        # gradient x^2 is 2-homogeneous: alpha1/alpha2 = 2
        pts = np.linspace(0.1, 2.0, 20)[:, None]
        rep = check_gradient_homogeneity(lambda p: np.atleast_2d(p) ** 2,
                                         2.0, 1.0, pts, [0.5, 2.0], tol=1e-12)
        assert rep["holds"]

    def test_oracle_gradient_with_potential(self):
        rng = np.random.default_rng(2)
        pts = np.column_stack([rng.uniform(0.3, 2.0, 40),
                               rng.uniform(-1.5, 1.5, 40)])
        rep = check_gradient_homogeneity(
            grad55, 1.0, 1.0, pts, [0.5, 2.0], tol=1e-12,
            psi=lambda p: p[1] ** 4 / p[0] ** 2)
        assert rep["holds"]
        assert rep["max_psi_deviation"] <= 1e-12

    def test_broken_scaling_detected(self):
        rep = check_gradient_homogeneity(lambda p: np.atleast_2d(p) ** 2,
                                         1.0, 1.0,  # wrong exponent
                                         np.ones((1, 1)) * 2.0,
                                         [2.0], tol=1e-6)
        assert not rep["holds"]


class TestTailExperiment:
    def small_run(self):
        P = uniform_model()
        return tail_coupling_experiment(P, P, t_grid=[2.0, 4.0], n=200,
                                        master_seed=42,
                                        window=Window(1.0, 3.0, 6.0),
                                        n_seeds=2, ref_resolution=16)

    def test_shape_and_determinism(self):
        rows1, ref1 = self.small_run()
        rows2, _ = self.small_run()
        assert len(rows1) == 4  # 2 seeds x 2 t values
        assert rows1 == rows2
        assert all(isinstance(r, ExperimentRow) for r in rows1)
        for r in rows1:
            assert r.n == 200
            assert r.left_residual == 0.0  # no reservoir on empirical solves
            assert r.cost >= 0.0
            assert r.m0_dist >= 0.0

    def test_t_range_validated(self):
        P = uniform_model()
        with pytest.raises(ValueError, match="t values"):
            tail_coupling_experiment(P, P, [500.0], n=100, master_seed=0,
                                     window=Window(1.0, 3.0, 6.0), n_seeds=1)


class TestModelConfig:
    def test_from_config(self):
        m = rv_model_from_config({"dim": "2", "alpha": "1",
                                  "angular_kind": "density",
                                  "angular_spec": "uniform",
                                  "radial_slowly_varying": "log"})
        assert m.alpha == 1.0
        assert m.radial_slowly_varying == "log"

    def test_bad_slowly_varying(self):
        with pytest.raises(ValueError):
            RVModel(uniform_shape(), "polynomial")
