import math

import numpy as np
import pytest

from omltune.kriging import (
    FIXED_NUGGET,
    FitError,
    correlation_matrix,
    expected_improvement,
    expected_improvement_batch,
    fit_kriging,
    latin_hypercube,
    norm_pdf,
    rebuild_kriging,
)

from oracles import dense_gp_predict


class TestLatinHypercube:
    def test_stratification_small(self):
        pts = latin_hypercube(4, 2, np.random.default_rng(0))
        for j in range(2):
            strata = np.floor(pts[:, j] * 4).astype(int)
            assert sorted(strata) == [0, 1, 2, 3]

    def test_stratification_sweep(self):
        rng = np.random.default_rng(1)
        for k in (2, 3, 7, 20, 50):
            for d in (1, 3, 10):
                pts = latin_hypercube(k, d, rng)
                assert pts.shape == (k, d)
                for j in range(d):
                    strata = np.floor(pts[:, j] * k).astype(int)
                    assert sorted(strata) == list(range(k))

    def test_single_point(self):
        pts = latin_hypercube(1, 5, np.random.default_rng(2))
        assert pts.shape == (1, 5)
        assert np.all((pts >= 0) & (pts < 1))

    def test_seed_determinism(self):
        a = latin_hypercube(10, 3, np.random.default_rng(42))
        b = latin_hypercube(10, 3, np.random.default_rng(42))
        c = latin_hypercube(10, 3, np.random.default_rng(43))
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestFit:
    def test_constant_response(self):
        x = np.array([[0.1, 0.2], [0.8, 0.9]])
        y = np.array([3.0, 3.0])
        model = fit_kriging(x, y, seed=0)
        assert model.mu == pytest.approx(3.0, abs=1e-8)
        assert model.sigma2 == pytest.approx(0.0, abs=1e-10)

    def test_interpolation_property(self):
        rng = np.random.default_rng(3)
        for trial in range(5):
            x = rng.uniform(size=(8, 2))
            y = np.sin(4 * x[:, 0]) + np.cos(3 * x[:, 1])
            model = fit_kriging(x, y, seed=trial)
            assert model.lam == FIXED_NUGGET
            for xi, yi in zip(x, y):
                mean, _ = model.predict(xi)
                assert abs(mean - yi) <= 1e-6 * (1.0 + abs(yi))

    def test_active_dimension_identified(self):
        rng = np.random.default_rng(4)
        x = rng.uniform(size=(20, 2))
        y = np.sin(6 * x[:, 0])  # varies only along dim 0
        model = fit_kriging(x, y, seed=1)
        assert 10.0 ** model.theta[0] > 10.0 ** model.theta[1]

    def test_needs_two_points(self):
        with pytest.raises(FitError):
            fit_kriging(np.array([[0.5]]), np.array([1.0]))

    def test_nonfinite_rejected(self):
        with pytest.raises(FitError):
            fit_kriging(np.array([[0.0], [1.0]]), np.array([1.0, np.nan]))

    def test_noise_mode_estimates_nugget(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(size=(25, 1))
        y = np.sin(3 * x[:, 0]) + rng.normal(scale=0.1, size=25)
        model = fit_kriging(x, y, noise=True, seed=2)
        assert 1e-8 <= model.lam <= 1.0
        assert model.lam > FIXED_NUGGET

    def test_rebuild_reproduces_predictions(self):
        rng = np.random.default_rng(6)
        x = rng.uniform(size=(10, 2))
        y = x[:, 0] ** 2 + x[:, 1]
        model = fit_kriging(x, y, seed=3)
        clone = rebuild_kriging(model.params_dict())
        query = rng.uniform(size=(5, 2))
        m1, v1 = model.predict_batch(query)
        m2, v2 = clone.predict_batch(query)
        np.testing.assert_allclose(m1, m2, atol=1e-12)
        np.testing.assert_allclose(v1, v2, atol=1e-12)


class TestPredict:
    def test_matches_dense_reference(self):
        rng = np.random.default_rng(7)
        for trial in range(5):
            x = rng.uniform(size=(10, 3))
            y = np.sin(3 * x[:, 0]) + x[:, 1] * x[:, 2]
            model = fit_kriging(x, y, seed=trial)
            for _ in range(10):
                q = rng.uniform(size=3)
                mean, var = model.predict(q)
                ref_mean, ref_var = dense_gp_predict(x, y, model.theta, model.lam, q)
                assert mean == pytest.approx(ref_mean, abs=1e-8)
                assert var == pytest.approx(ref_var, abs=1e-8)

    def test_training_point_zero_variance(self):
        rng = np.random.default_rng(8)
        x = rng.uniform(size=(6, 2))
        y = x[:, 0] + x[:, 1]
        model = fit_kriging(x, y, seed=0)
        mean, var = model.predict(x[2])
        assert mean == pytest.approx(y[2], abs=1e-6)
        assert var <= 1e-6

    def test_far_field_reverts_to_mean(self):
        # with strong activity, correlations vanish away from the design
        x = np.array([[0.0, 0.0], [0.05, 0.05], [0.1, 0.0]])
        y = np.array([1.0, 2.0, 3.0])
        model = fit_kriging(x, y, seed=0)
        far = np.array([1e6, -1e6])
        mean, var = model.predict(far)
        assert mean == pytest.approx(model.mu, abs=1e-9)
        assert var >= 0.0

    def test_sinusoid_midpoint(self):
        xs = np.linspace(0.0, 1.0, 5).reshape(-1, 1)
        ys = np.sin(np.pi * xs[:, 0])
        model = fit_kriging(xs, ys, seed=9)
        mid = np.array([0.125])
        mean, _ = model.predict(mid)
        assert abs(mean - math.sin(math.pi * 0.125)) < 0.2

    def test_variance_nonnegative_everywhere(self):
        rng = np.random.default_rng(10)
        x = rng.uniform(size=(12, 2))
        y = rng.normal(size=12)
        model = fit_kriging(x, y, seed=4)
        _, var = model.predict_batch(rng.uniform(size=(200, 2)))
        assert np.all(var >= 0.0)


class TestExpectedImprovement:
    def test_zero_variance_gives_zero(self):
        rng = np.random.default_rng(11)
        x = rng.uniform(size=(6, 2))
        y = x[:, 0]
        model = fit_kriging(x, y, seed=0)
        f_best = float(np.min(y))
        for xi in x:
            # residual EI at design points is bounded by the conditioning
            # nugget: at most sqrt(var)*pdf(0) with var ~ lam * sigma2
            _, var = model.predict(xi)
            ceiling = math.sqrt(var) * norm_pdf(0.0) + 1e-12
            assert expected_improvement(model, xi, f_best) <= ceiling
            assert ceiling < 1e-4

    def test_closed_form_at_standard_normal(self):
        from omltune.kriging import _ei_from_moments

        assert _ei_from_moments(0.0, 1.0, 0.0) == pytest.approx(0.398942, abs=1e-6)
        assert _ei_from_moments(0.0, 1.0, 0.0) == pytest.approx(norm_pdf(0.0))

    def test_nonnegative_fuzz(self):
        from omltune.kriging import _ei_from_moments

        rng = np.random.default_rng(12)
        for _ in range(10_000):
            mean = float(rng.normal(scale=10))
            s = float(abs(rng.normal(scale=5)))
            f_best = float(rng.normal(scale=10))
            assert _ei_from_moments(mean, s, f_best) >= 0.0

    def test_batch_agrees_with_scalar(self):
        rng = np.random.default_rng(13)
        x = rng.uniform(size=(8, 2))
        y = np.cos(5 * x[:, 0]) + x[:, 1]
        model = fit_kriging(x, y, seed=1)
        f_best = float(np.min(y))
        queries = rng.uniform(size=(50, 2))
        batch = expected_improvement_batch(model, queries, f_best)
        for q, expected in zip(queries, batch):
            assert expected_improvement(model, q, f_best) == pytest.approx(
                float(expected), abs=1e-12
            )


class TestCorrelation:
    def test_kernel_definition(self):
        x = np.array([[0.0, 0.0], [0.5, 1.0]])
        theta = np.array([0.0, 1.0])  # activities 1 and 10
        k = correlation_matrix(x, theta)
        expected = math.exp(-(1.0 * 0.25 + 10.0 * 1.0))
        assert k[0, 1] == pytest.approx(expected)
        assert k[0, 0] == 1.0
