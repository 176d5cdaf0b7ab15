import math

import numpy as np
import pytest
from scipy import integrate, stats
from scipy.special import ndtr

from knnlab.entity.estimator import schedule_M
from knnlab.entity.synthetic_model import (POLYNOMIAL, DensitySpec, RegressionSpec, SyntheticModel,
                                           make_eval_grid, make_model, sample, true_density, true_g,
                                           true_g1, true_g2, true_regression)
from knnlab.exception import DimensionMismatch, ModelMisconfigured, OutsideEvaluationBox, PreconditionFailed


@pytest.fixture
def linear_model():
    """f = 1 on [0, 1], r(x) = x, unit noise."""
    return SyntheticModel(name="linear", p=1, support=([0.0], [1.0]), box=([0.1], [0.9]),
                          density_spec=DensitySpec(0.0, [1.0], [[0.0]], [[1.0]]), c0=1.0,
                          regression_spec=RegressionSpec(POLYNOMIAL, (0.0, 1.0), None), noise_sigma=1.0)


class TestModels:

    @pytest.mark.parametrize("name, p", [("M1", 1), ("M1", 3), ("M2", 1), ("M2", 2), ("M3", 2)])
    def test_density_floor_on_box(self, name, p):
        model = make_model(name, p)
        grid = make_eval_grid(model, 25)
        assert np.all(model.density(grid) >= model.c0)

    @pytest.mark.slow
    @pytest.mark.parametrize("name, p", [("M1", 1), ("M1", 2), ("M1", 3), ("M2", 1), ("M2", 2), ("M2", 3), ("M3", 2)])
    def test_density_floor_on_fine_grid(self, name, p):
        model = make_model(name, p)
        grid = make_eval_grid(model, 100 if p == 2 else 10 ** 4)
        assert len(grid) == 10 ** 4
        assert np.all(model.density(grid) >= model.c0)

    def test_m2_normalised(self):
        model = make_model("M2", 1)
        mass, _ = integrate.quad(lambda t: float(model.density([t])), -3.0, 3.0, points=[-1.0, 1.0], limit=200)
        assert mass == pytest.approx(1.0, abs=1e-7)

    def test_m2_normalised_in_two_dimensions(self):
        model = make_model("M2", 2)
        mass, _ = integrate.dblquad(lambda b, a: float(model.density([a, b])), -3.0, 3.0, -3.0, 3.0,
                                    epsabs=1e-9)
        assert mass == pytest.approx(1.0, abs=1e-6)

    def test_m1_values(self):
        model = make_model("M1", 1)
        assert true_density(model, [0.25]) == 1.0
        assert true_regression(model, [0.25]) == pytest.approx(1.0, abs=1e-15)
        assert true_g(model, [0.75]) == pytest.approx(-1.0, abs=1e-15)

    def test_m2_box(self):
        model = make_model("M2", 2)
        np.testing.assert_allclose(model.box_low, [-2.4, -2.4])
        np.testing.assert_allclose(model.box_high, [2.4, 2.4])

    @pytest.mark.parametrize("name", ["M1", "M2"])
    def test_g_identities(self, name):
        model = make_model(name, 2)
        grid = make_eval_grid(model, 15)
        np.testing.assert_allclose(model.g(grid), model.regression(grid) * model.density(grid), rtol=1e-15)
        np.testing.assert_allclose(model.g1(grid) - model.g2(grid), model.g(grid), rtol=1e-12, atol=1e-14)
        assert np.all(model.g1(grid) >= 0.0)
        assert np.all(model.g2(grid) >= 0.0)

    def test_g1_closed_form(self, linear_model):
        for x in np.linspace(0.1, 0.9, 9):
            expected = x * ndtr(x) + math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
            assert true_g1(linear_model, [x]) == pytest.approx(expected, rel=1e-14)
            assert true_g1(linear_model, [x]) - true_g2(linear_model, [x]) == pytest.approx(x, rel=1e-12)

    def test_noise_free_split(self):
        model = make_model("M3", 1)
        assert true_g1(model, [0.25]) == pytest.approx(1.0, abs=1e-15)
        assert true_g2(model, [0.25]) == 0.0
        assert true_g1(model, [0.75]) == 0.0

    def test_outside_box(self):
        model = make_model("M1", 1)
        with pytest.raises(OutsideEvaluationBox):
            true_density(model, [0.95])
        with pytest.raises(DimensionMismatch):
            true_density(model, [0.5, 0.5])

    def test_unknown_model(self):
        with pytest.raises(ModelMisconfigured):
            make_model("M4")
        with pytest.raises(ModelMisconfigured):
            make_model("M1", 0)

    def test_box_must_lie_in_support(self):
        with pytest.raises(ModelMisconfigured):
            SyntheticModel(name="bad", p=1, support=([0.0], [1.0]), box=([0.5], [1.5]),
                           density_spec=DensitySpec(0.0, [1.0], [[0.0]], [[1.0]]), c0=1.0,
                           regression_spec=RegressionSpec(POLYNOMIAL, (0.0,), None), noise_sigma=0.0)


class TestSampler:

    def test_deterministic(self):
        model = make_model("M2", 2)
        first = sample(model, 500, seed=7, C_M=4.0, stream=(3, 1))
        second = sample(model, 500, seed=7, C_M=4.0, stream=(3, 1))
        assert np.array_equal(first.sample.X, second.sample.X)
        assert np.array_equal(first.sample.Y, second.sample.Y)

    def test_streams_differ(self):
        model = make_model("M1", 1)
        first = sample(model, 100, seed=7, C_M=4.0, stream=(0,))
        second = sample(model, 100, seed=7, C_M=4.0, stream=(1,))
        assert not np.array_equal(first.sample.X, second.sample.X)

    def test_points_in_support(self):
        model = make_model("M2", 3)
        trial = sample(model, 2000, seed=11, C_M=4.0)
        assert trial.sample.n == 2000
        assert np.all(model.in_support(trial.sample.X))

    def test_clipping(self):
        model = make_model("M1", 1)
        trial = sample(model, 1000, seed=5, C_M=0.5)
        M_n = schedule_M(1000, 0.5)
        assert np.max(np.abs(trial.sample.Y)) <= M_n
        assert trial.clip_count > 0
        assert trial.clip_count == int(np.count_nonzero(np.abs(trial.sample.Y) == M_n))

    def test_noise_free_responses(self):
        model = make_model("M3", 2)
        trial = sample(model, 300, seed=2, C_M=4.0)
        np.testing.assert_array_equal(trial.sample.Y, model.regression(trial.sample.X))
        assert trial.clip_count == 0

    def test_marginal_fidelity(self):
        model = make_model("M2", 1)
        n = 20000
        X = sample(model, n, seed=99, C_M=4.0).sample.X[:, 0]
        edges = np.linspace(-3.0, 3.0, 21)
        observed, _ = np.histogram(X, bins=edges)
        expected = n * np.diff(model.marginal_cdf(0, edges))
        assert expected.sum() == pytest.approx(n)
        _, p_value = stats.chisquare(observed, expected * observed.sum() / expected.sum())
        assert p_value > 1e-3

    @pytest.mark.slow
    def test_marginal_fidelity_at_scale(self):
        model = make_model("M2", 1)
        n = 10 ** 6
        X = sample(model, n, seed=7, C_M=4.0).sample.X[:, 0]
        edges = np.linspace(-3.0, 3.0, 51)
        observed, _ = np.histogram(X, bins=edges)
        expected = n * np.diff(model.marginal_cdf(0, edges))
        _, p_value = stats.chisquare(observed, expected * observed.sum() / expected.sum())
        assert p_value > 1e-4


class TestEvalGrid:

    def test_lattice(self):
        model = make_model("M1", 2)
        grid = make_eval_grid(model, 5)
        assert grid.shape == (25, 2)
        assert grid.min() == pytest.approx(0.1)
        assert grid.max() == pytest.approx(0.9)

    def test_sobol_with_inset(self):
        model = make_model("M2", 3)
        grid = make_eval_grid(model, 64, inset=0.4)
        assert grid.shape == (64, 3)
        assert np.all(np.abs(grid) <= 2.0 + 1e-12)

    def test_inset_too_large(self):
        with pytest.raises(PreconditionFailed):
            make_eval_grid(make_model("M1", 1), 10, inset=0.5)
