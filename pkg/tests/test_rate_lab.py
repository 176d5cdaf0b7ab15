import math
from pathlib import Path

import numpy as np
import pytest

from knnlab.component.bias_check import BiasCheck, bias_oracle, bias_ratios, default_bias_point
from knnlab.component.rate_study import RateStudy, fit_rate, run_rate_study, sup_error, theory_rate
from knnlab.component.sandwich import SandwichCheck, beta_for, sandwich_diagnostic, sandwich_radii
from knnlab.config.configuration import Configuration
from knnlab.entity.config_entity import BiasCheckConfig, RateStudyConfig, SandwichConfig
from knnlab.entity.estimator import make_estimator_config
from knnlab.entity.kernel import make_kernel
from knnlab.entity.synthetic_model import make_eval_grid, make_model, sample
from knnlab.exception import (BoundaryBiasWarning, DimensionMismatch, IntegrationBudgetExceeded, InvalidTarget,
                              OutsideEvaluationBox, PreconditionFailed)
from knnlab.util.util import read_csv

ACCEPTANCE_N_GRID = [2 ** e for e in range(10, 17)]
DENSITY_STUDY_FILE = Path(__file__).resolve().parents[1] / "config" / "rate_study_m3_density.conf"


def rate_config(tmp_path, model="M3", target="density", n_grid=(256, 512, 1024, 2048), trials=3,
                c1=0.6, seed=11, threads=1, kernel=None, eval_grid=None, grid_points=20):
    model = make_model(model, 1)
    kernel = kernel or make_kernel("gaussian_product", 1, 1)
    return RateStudyConfig(model=model, estimator_config=make_estimator_config(kernel, c1=c1),
                           target=target, n_grid=list(n_grid), trials=trials, eval_grid=eval_grid,
                           grid_points=grid_points, seed=seed, leaf_size=16, threads=threads,
                           out_dir=str(tmp_path))


def shipped_density_study(tmp_path, seed=None):
    overrides = {"seed": seed} if seed is not None else None
    configuration = Configuration("rate-study", config_file_path=str(DENSITY_STUDY_FILE), overrides=overrides,
                                  out_dir=str(tmp_path), threads=4)
    return configuration.subcommand_config


class TestRateHelpers:

    def test_sup_error(self):
        assert sup_error([1.0, 2.0, 3.0], [1.5, 2.0, 2.0]) == 1.0
        with pytest.raises(DimensionMismatch):
            sup_error([1.0, 2.0], [1.0])
        with pytest.raises(DimensionMismatch):
            sup_error([], [])

    def test_theory_rate_density(self):
        expected = (2352 / 65536) ** 2 + math.sqrt(65536 * math.log(65536) / 2352 ** 2)
        assert theory_rate(65536, 2352, 1, 1, 1.0, 0.5, "density") == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(0.36376, abs=1e-4)

    def test_theory_rate_k_equal_n(self):
        assert theory_rate(100, 100, 1, 1, 1.0, 0.5, "density") == pytest.approx(1.0 + math.sqrt(math.log(100) / 100))

    def test_theory_rate_targets(self):
        density = theory_rate(4096, 300, 2, 1, 1.0, 0.3, "density")
        assert theory_rate(4096, 300, 2, 1, 1.0, 0.3, "g") == pytest.approx(density, rel=1e-15)
        assert theory_rate(4096, 300, 2, 1, 1.0, 0.3, "regression") == pytest.approx(density + 0.3, rel=1e-15)
        assert theory_rate(4096, 300, 2, 1, 3.0, 0.3, "g") > density

    def test_theory_rate_errors(self):
        with pytest.raises(PreconditionFailed):
            theory_rate(100, 101, 1, 1, 1.0, 0.5, "density")
        with pytest.raises(PreconditionFailed):
            theory_rate(1, 1, 1, 1, 1.0, 0.5, "density")
        with pytest.raises(InvalidTarget):
            theory_rate(100, 10, 1, 1, 1.0, 0.5, "g1")

    def test_fit_exact(self):
        rates = np.array([0.5, 0.3, 0.2, 0.1])
        slope, intercept = fit_rate(2.5 * rates, rates)
        assert slope == pytest.approx(1.0, abs=1e-12)
        assert intercept == pytest.approx(math.log(2.5), abs=1e-12)

    def test_fit_flat(self):
        slope, _ = fit_rate([0.2, 0.2, 0.2, 0.2], [0.5, 0.3, 0.2, 0.1])
        assert slope == pytest.approx(0.0, abs=1e-12)

    def test_fit_noisy(self, rng):
        rates = np.geomspace(0.5, 0.01, 7)
        for _ in range(100):
            errors = 3.0 * rates * (1.0 + rng.uniform(-0.01, 0.01, rates.shape))
            slope, _ = fit_rate(errors, rates)
            assert 0.98 <= slope <= 1.02

    def test_fit_errors(self):
        with pytest.raises(DimensionMismatch):
            fit_rate([1.0], [1.0])
        with pytest.raises(PreconditionFailed):
            fit_rate([1.0, 0.0], [1.0, 2.0])


class TestRateStudy:

    def test_small_study(self, tmp_path):
        result = run_rate_study(rate_config(tmp_path))
        assert [row.n for row in result.per_n] == [256, 512, 1024, 2048]
        assert [row.k_n for row in result.per_n] == [27, 42, 64, 97]
        for row in result.per_n:
            assert row.q10 <= row.median <= row.q90
            assert row.mean_sup_error > 0.0
            assert row.clip_rate == 0.0
        assert result.theory_exponent_bias == pytest.approx(-0.8)
        assert result.theory_exponent_variance == pytest.approx(-0.1)
        assert result.degenerate_trials == 0

    def test_deterministic_across_threads(self, tmp_path):
        single = run_rate_study(rate_config(tmp_path, threads=1))
        again = run_rate_study(rate_config(tmp_path, threads=1))
        pooled = run_rate_study(rate_config(tmp_path, threads=4))
        assert single == again
        assert single == pooled

    def test_seed_changes_errors(self, tmp_path):
        first = run_rate_study(rate_config(tmp_path, seed=1))
        second = run_rate_study(rate_config(tmp_path, seed=2))
        assert first.per_n[0].mean_sup_error != second.per_n[0].mean_sup_error

    def test_single_trial(self, tmp_path):
        result = run_rate_study(rate_config(tmp_path, trials=1))
        assert all(row.q10 == row.q90 == row.mean_sup_error for row in result.per_n)

    def test_explicit_grid(self, tmp_path):
        result = run_rate_study(rate_config(tmp_path, target="regression", eval_grid=[[0.4], [0.5], [0.6]]))
        assert len(result.per_n) == 4

    def test_clip_rate_reported(self, tmp_path):
        config = rate_config(tmp_path, model="M1", target="g")
        config = config._replace(estimator_config=make_estimator_config(config.estimator_config.kernel,
                                                                        c1=0.6, C_M=0.5))
        assert all(row.clip_rate > 0.0 for row in run_rate_study(config).per_n)

    @pytest.mark.parametrize("changes", [
        {"n_grid": [256, 512, 1024]},
        {"n_grid": [256, 512, 512, 1024]},
        {"n_grid": [1, 512, 1024, 2048]},
        {"trials": 0},
        {"eval_grid": [[0.05]]},
    ])
    def test_invalid_study(self, tmp_path, changes):
        with pytest.raises(PreconditionFailed):
            run_rate_study(rate_config(tmp_path)._replace(**changes))

    def test_kernel_order_above_smoothness(self, tmp_path):
        config = rate_config(tmp_path, kernel=make_kernel("poly_gaussian_order_r", 1, 3))
        model = config.model
        model.r_model = 2
        with pytest.raises(PreconditionFailed):
            run_rate_study(config._replace(model=model))

    def test_unknown_target(self, tmp_path):
        with pytest.raises(InvalidTarget):
            run_rate_study(rate_config(tmp_path, target="g1"))

    def test_component_writes_csv(self, tmp_path):
        artifact = RateStudy(rate_config(tmp_path)).initiate_rate_study()
        per_n = read_csv(artifact.per_n_file_path)
        summary = read_csv(artifact.summary_file_path)
        assert list(per_n.columns) == ["n", "k_n", "b_n", "M_n", "mean_sup_error", "median", "q10", "q90",
                                       "clip_rate", "theory_rate"]
        assert per_n["n"].tolist() == [256, 512, 1024, 2048]
        assert list(summary.columns) == ["fitted_slope", "fitted_intercept", "theory_exponent_bias",
                                         "theory_exponent_variance"]
        assert summary["fitted_slope"].iloc[0] == pytest.approx(artifact.result.fitted_slope)

    def test_written_files_identical_across_threads(self, tmp_path):
        single = RateStudy(rate_config(tmp_path / "single", threads=1)).initiate_rate_study()
        pooled = RateStudy(rate_config(tmp_path / "pooled", threads=4)).initiate_rate_study()
        assert Path(single.per_n_file_path).read_bytes() == Path(pooled.per_n_file_path).read_bytes()
        assert Path(single.summary_file_path).read_bytes() == Path(pooled.summary_file_path).read_bytes()

    @pytest.mark.slow
    def test_density_scaling(self, tmp_path):
        result = run_rate_study(shipped_density_study(tmp_path))
        assert [row.n for row in result.per_n] == ACCEPTANCE_N_GRID
        assert 0.7 <= result.fitted_slope <= 1.3

    @pytest.mark.slow
    def test_density_error_decays_monotonically(self, tmp_path):
        seeds = range(1, 11)
        monotone = 0
        for seed in seeds:
            errors = [row.mean_sup_error for row in run_rate_study(shipped_density_study(tmp_path, seed)).per_n]
            monotone += all(later <= earlier for earlier, later in zip(errors, errors[1:]))
        assert monotone >= 0.9 * len(seeds)

    # M_n grows with n inside theory_rate, so regression errors fall faster than it
    @pytest.mark.slow
    @pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
    def test_regression_scaling(self, tmp_path, seed):
        result = run_rate_study(rate_config(tmp_path, model="M1", target="regression", n_grid=ACCEPTANCE_N_GRID,
                                            trials=30, c1=0.7, seed=seed, grid_points=200, threads=4))
        assert result.fitted_slope >= 0.6
        assert result.per_n[-1].mean_sup_error < result.per_n[0].mean_sup_error


class TestSandwich:

    def test_radii(self):
        D_minus, D_plus = sandwich_radii(1.0, 10 ** 4, 100, 1, 0.99)
        assert D_minus == pytest.approx(0.0099499, rel=1e-5)
        assert D_plus == pytest.approx(0.0100504, rel=1e-5)

    def test_radii_volume_corrected(self):
        D_minus, D_plus = sandwich_radii(1.0, 10 ** 4, 100, 1, 1.0, volume_corrected=True)
        assert D_minus == D_plus == pytest.approx(0.005)

    def test_radii_need_positive_density(self):
        with pytest.raises(PreconditionFailed):
            sandwich_radii(0.0, 100, 10, 1, 0.5)

    def test_beta(self):
        assert beta_for(100, 1, 1) == pytest.approx(0.9999)
        assert beta_for(100, 1, 1, "fixed", 0.5) == 0.5
        with pytest.raises(PreconditionFailed):
            beta_for(100, 1, 1, "fixed", 1.5)
        with pytest.raises(PreconditionFailed):
            beta_for(100, 1, 1, "fixed")

    def test_non_monotone_kernel(self):
        model = make_model("M2", 1)
        config = make_estimator_config(make_kernel("poly_gaussian_order_r", 1, 3))
        data = sample(model, 200, seed=1, C_M=4.0).sample
        with pytest.raises(PreconditionFailed):
            sandwich_diagnostic(model, data, config, [[0.0]])

    def test_invalid_target(self, gaussian_config):
        model = make_model("M2", 1)
        data = sample(model, 200, seed=1, C_M=4.0).sample
        with pytest.raises(InvalidTarget):
            sandwich_diagnostic(model, data, gaussian_config, [[0.0]], target="regression")

    def test_containment_and_order(self, gaussian_config):
        model = make_model("M2", 1)
        data = sample(model, 10 ** 4, seed=20240521, C_M=4.0).sample
        grid = make_eval_grid(model, 200)
        report = sandwich_diagnostic(model, data, gaussian_config, grid, beta_rule="fixed", beta=0.5,
                                     volume_corrected=True)
        assert len(report.per_point) == 200
        assert report.containment_rate >= 0.95
        assert report.conditional_order_rate == 1.0
        for point in report.per_point:
            assert point.ordered_given_containment
            if point.contained:
                assert point.f1 <= point.f_hat * (1 + 1e-12) and point.f_hat <= point.f2 * (1 + 1e-12)

    @pytest.mark.parametrize("target", ["g1", "g2"])
    def test_response_parts_ordered(self, gaussian_config, target):
        model = make_model("M2", 1)
        data = sample(model, 5000, seed=3, C_M=4.0).sample
        report = sandwich_diagnostic(model, data, gaussian_config, make_eval_grid(model, 50), beta_rule="fixed",
                                     beta=0.5, volume_corrected=True, target=target)
        assert all(point.ordered_given_containment for point in report.per_point)

    def test_nothing_contained(self, gaussian_config):
        model = make_model("M2", 1)
        data = sample(model, 1000, seed=3, C_M=4.0).sample
        # beta = 1 collapses the bracket to a single radius
        report = sandwich_diagnostic(model, data, gaussian_config, make_eval_grid(model, 20), beta_rule="fixed",
                                     beta=1.0, volume_corrected=True)
        assert report.containment_rate == 0.0
        assert math.isnan(report.conditional_order_rate)

    def test_component(self, tmp_path, gaussian_config):
        config = SandwichConfig(model=make_model("M2", 1), estimator_config=gaussian_config, target="density",
                                n=2000, seed=5, grid_points=30, beta_rule="fixed", beta=0.5,
                                volume_corrected=True, leaf_size=16, out_dir=str(tmp_path))
        artifact = SandwichCheck(config).initiate_sandwich_check()
        per_point = read_csv(artifact.sandwich_file_path)
        summary = read_csv(artifact.summary_file_path)
        assert per_point.shape[0] == 30
        assert {"x1", "D_minus", "D_plus", "R_n", "contained", "f1", "f_hat", "f2"} <= set(per_point.columns)
        assert summary["violations"].iloc[0] == 0
        assert summary["beta_n"].iloc[0] == 0.5


class TestBiasOracle:

    def test_gaussian_ratio(self, gaussian_1d):
        model = make_model("M1", 1)
        coarse = bias_oracle(model, gaussian_1d, 0.05, 0.05, [0.45], target="g")
        fine = bias_oracle(model, gaussian_1d, 0.025, 0.025, [0.45], target="g")
        assert 4 / 1.5 <= bias_ratios([coarse, fine])[0] <= 6.0
        # Gaussian smoothing of a sinusoid damps it by exp(-2 pi^2 D^2)
        expected = math.sin(0.9 * math.pi) * math.exp(-2.0 * math.pi ** 2 * 0.05 ** 2)
        assert coarse.expected_value == pytest.approx(expected, rel=1e-10)
        assert coarse.gamma == 1.0
        assert not coarse.boundary_flagged

    def test_higher_order_ratio(self):
        model = make_model("M1", 1)
        kernel = make_kernel("poly_gaussian_order_r", 1, 3)
        results = [bias_oracle(model, kernel, D, D, [0.45], target="g") for D in (0.05, 0.025)]
        assert 8.0 <= bias_ratios(results)[0] <= 32.0

    def test_vanishing_bandwidth(self, gaussian_1d):
        result = bias_oracle(make_model("M1", 1), gaussian_1d, 1e-4, 1e-4, [0.45], target="g")
        assert result.bias_abs < 1e-6

    def test_constant_target(self, gaussian_1d):
        result = bias_oracle(make_model("M1", 1), gaussian_1d, 0.05, 0.05, [0.5])
        assert result.truth == 1.0
        assert result.expected_value == pytest.approx(1.0, abs=1e-12)

    def test_gamma(self, gaussian_1d):
        result = bias_oracle(make_model("M1", 1), gaussian_1d, 0.1, 0.05, [0.5])
        assert result.gamma == 0.5
        assert result.expected_value == pytest.approx(0.5, abs=1e-12)

    def test_boundary_warning(self, gaussian_1d):
        with pytest.warns(BoundaryBiasWarning):
            result = bias_oracle(make_model("M1", 1), gaussian_1d, 0.05, 0.05, [0.12])
        assert result.boundary_flagged

    def test_errors(self, gaussian_1d):
        model = make_model("M1", 1)
        with pytest.raises(OutsideEvaluationBox):
            bias_oracle(model, gaussian_1d, 0.05, 0.05, [0.95])
        with pytest.raises(PreconditionFailed):
            bias_oracle(model, gaussian_1d, 0.0, 0.05, [0.5])
        with pytest.raises(InvalidTarget):
            bias_oracle(model, gaussian_1d, 0.05, 0.05, [0.5], target="regression")
        with pytest.raises(IntegrationBudgetExceeded):
            bias_oracle(model, gaussian_1d, 0.05, 0.05, [0.5], budget=999)
        with pytest.raises(DimensionMismatch):
            bias_oracle(make_model("M1", 2), gaussian_1d, 0.05, 0.05, [0.5, 0.5])

    def test_two_dimensional(self):
        model = make_model("M2", 2)
        kernel = make_kernel("gaussian_product", 2, 1)
        result = bias_oracle(model, kernel, 0.05, 0.05, [0.0, 0.5], target="g1")
        assert result.bias_abs < 2e-2 * result.truth

    def test_default_point(self):
        assert default_bias_point(make_model("M1", 1)).tolist() == pytest.approx([0.45])

    def test_component(self, tmp_path, gaussian_1d):
        config = BiasCheckConfig(model=make_model("M1", 1), kernel=gaussian_1d, target="g", x=None, d2=0.05,
                                 halvings=2, d1_ratio=1.0, budget=None, out_dir=str(tmp_path))
        artifact = BiasCheck(config).initiate_bias_check()
        bias = read_csv(artifact.bias_file_path)
        assert bias["D2"].tolist() == pytest.approx([0.05, 0.025, 0.0125])
        assert math.isnan(bias["ratio"].iloc[0])
        assert bias["ratio"].iloc[1:].tolist() == pytest.approx(artifact.ratios)
        assert len(artifact.results) == 3
