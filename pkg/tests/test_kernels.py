import math

import numpy as np
import pytest

from knnlab.component.kernel_check import KernelCheck, check_moments, check_radial_monotone
from knnlab.constant import MONTE_CARLO
from knnlab.entity.config_entity import KernelCheckConfig
from knnlab.entity.kernel import (eval_kernel, format_kernel_spec, kernel_quadrature, make_kernel,
                                  parse_kernel_spec)
from knnlab.exception import DimensionMismatch, IntegrationBudgetExceeded, UnsupportedKernelSpec
from knnlab.util.util import read_csv

PHI_0 = 1.0 / math.sqrt(2.0 * math.pi)
PHI_1 = math.exp(-0.5) / math.sqrt(2.0 * math.pi)
PHI_2 = math.exp(-2.0) / math.sqrt(2.0 * math.pi)

SHIPPED = [
    ("gaussian_product", 1, 1), ("gaussian_product", 2, 1), ("gaussian_product", 3, 1),
    ("gaussian_radial", 2, 1), ("epanechnikov_radial", 1, 1), ("epanechnikov_radial", 2, 1),
    ("poly_gaussian_order_r", 1, 3), ("poly_gaussian_order_r", 2, 3),
]


class TestMakeKernel:

    def test_gaussian_values_at_origin(self):
        assert eval_kernel(make_kernel("gaussian_product", 1, 1), [0.0]) == pytest.approx(PHI_0, rel=1e-15)
        assert eval_kernel(make_kernel("gaussian_product", 2, 1), [0.0, 0.0]) == pytest.approx(1 / (2 * math.pi), rel=1e-15)

    def test_order_three_profile(self):
        kernel = make_kernel("poly_gaussian_order_r", 1, 3)
        assert kernel(np.array([0.0])) == pytest.approx(1.5 * PHI_0, rel=1e-14)
        assert kernel(np.array([2.0])) == pytest.approx(-0.5 * PHI_2, rel=1e-12)
        assert kernel(np.array([2.0])) < 0

    def test_gaussian_at_one(self, gaussian_1d):
        assert eval_kernel(gaussian_1d, [1.0]) == pytest.approx(PHI_1, rel=1e-14)

    def test_epanechnikov_normalisation(self):
        kernel = make_kernel("epanechnikov", 1, 1)
        assert kernel([0.0]) == pytest.approx(0.75)
        assert kernel([1.5]) == 0.0

    @pytest.mark.parametrize("family, p, r", [("cauchy", 1, 1), ("poly_gaussian_order_r", 1, 2),
                                              ("gaussian_product", 0, 1), ("gaussian_product", 1, 0)])
    def test_unsupported(self, family, p, r):
        with pytest.raises(UnsupportedKernelSpec):
            make_kernel(family, p, r)

    def test_dimension_mismatch(self, gaussian_1d):
        with pytest.raises(DimensionMismatch):
            eval_kernel(gaussian_1d, [0.0, 1.0])

    @pytest.mark.parametrize("family, p, r", SHIPPED)
    def test_exact_symmetry(self, family, p, r, rng):
        kernel = make_kernel(family, p, r)
        u = rng.normal(scale=1.5, size=(10_000, p))
        assert np.array_equal(kernel.evaluate(u), kernel.evaluate(-u))

    @pytest.mark.parametrize("family, p, r", SHIPPED)
    def test_bounded_by_G(self, family, p, r, rng):
        kernel = make_kernel(family, p, r)
        u = rng.normal(scale=2.0, size=(100_000, p))
        assert np.all(np.abs(kernel.evaluate(u)) <= kernel.bound * (1 + 1e-12))


class TestKernelSpec:

    def test_alias_and_format(self):
        kernel = parse_kernel_spec("gaussian:p=2:r=1")
        assert kernel == make_kernel("gaussian_product", 2, 1)
        assert format_kernel_spec(kernel) == "gaussian_product:p=2:r=1"

    def test_spec_string_is_stable(self):
        for family, p, r in SHIPPED:
            kernel = make_kernel(family, p, r)
            assert parse_kernel_spec(kernel.spec()) == kernel

    @pytest.mark.parametrize("text", ["", "gaussian:p=two:r=1", "gaussian:q=1", "Gaussian:p=1"])
    def test_malformed(self, text):
        with pytest.raises(UnsupportedKernelSpec):
            parse_kernel_spec(text)


class TestCheckMoments:

    def test_gaussian_order_one(self, gaussian_1d):
        report = check_moments(gaussian_1d)
        assert report.integral_of_K == pytest.approx(1.0, abs=1e-8)
        assert report.max_abs_moment_per_degree[1] <= 1e-8
        assert report.verified_order == 1
        assert math.isfinite(report.abs_moment_r_plus_1)

    def test_declared_order_above_true_order(self):
        report = check_moments(make_kernel("gaussian_product", 1, 3))
        assert report.max_abs_moment_per_degree[2] == pytest.approx(1.0, rel=1e-10)
        assert report.verified_order == 1

    def test_poly_gaussian_order_three(self):
        report = check_moments(make_kernel("poly_gaussian_order_r", 1, 3))
        assert report.integral_of_K == pytest.approx(1.0, abs=1e-8)
        assert report.max_abs_moment_per_degree[2] <= 1e-6
        assert report.verified_order == 3
        assert math.isfinite(report.abs_moment_r_plus_1)

    @pytest.mark.parametrize("p", [2, 3])
    def test_gaussian_higher_dimensions(self, p):
        report = check_moments(make_kernel("gaussian_product", p, 1))
        assert report.integral_of_K == pytest.approx(1.0, abs=1e-6)
        assert report.max_abs_moment_per_degree[1] <= 1e-8
        assert report.verified_order == 1

    def test_epanechnikov_polar_rule(self):
        report = check_moments(make_kernel("epanechnikov_radial", 2, 1))
        assert report.integral_of_K == pytest.approx(1.0, abs=1e-10)
        assert report.verified_order == 1

    @pytest.mark.parametrize("family, p, r", SHIPPED)
    def test_declared_order_is_certified(self, family, p, r):
        kernel = make_kernel(family, p, r)
        assert check_moments(kernel).verified_order == kernel.order

    def test_monte_carlo_in_five_dimensions(self):
        report = check_moments(make_kernel("gaussian_product", 5, 1), method=MONTE_CARLO, budget=50_000)
        assert report.integral_of_K == pytest.approx(1.0, abs=1e-10)
        assert report.tolerance_used > 1e-6
        assert report.verified_order == 1

    def test_budget_too_small(self, gaussian_1d):
        with pytest.raises(IntegrationBudgetExceeded):
            check_moments(gaussian_1d, budget=999)

    def test_tensor_rule_limited_to_three_dimensions(self):
        with pytest.raises(UnsupportedKernelSpec):
            check_moments(make_kernel("gaussian_product", 4, 1))

    def test_quadrature_integrates_second_moment(self):
        nodes, weights = kernel_quadrature(make_kernel("gaussian_product", 1, 1), 32)
        assert np.sum(weights * nodes[:, 0] ** 2) == pytest.approx(1.0, rel=1e-12)


class TestRadialMonotone:

    def test_gaussian(self, gaussian_1d):
        report = check_radial_monotone(gaussian_1d)
        assert report.holds and report.witness is None

    def test_epanechnikov_2d(self):
        assert check_radial_monotone(make_kernel("epanechnikov_radial", 2, 1)).holds

    def test_order_three_fails_with_witness(self):
        kernel = make_kernel("poly_gaussian_order_r", 1, 3)
        report = check_radial_monotone(kernel)
        assert not report.holds
        (x,), a = report.witness
        # the scaled point lands on the profile minimum at |u| = sqrt(5)
        assert abs(a * x) == pytest.approx(math.sqrt(5.0), abs=0.1)
        assert kernel([a * x]) < kernel([x])
        assert abs(x) == pytest.approx(6.0 * kernel.profile_width)
        inner_a = math.sqrt(5.0) / 3.0
        assert kernel([inner_a * 3.0]) < kernel([3.0])
        assert kernel([3.0]) - kernel([inner_a * 3.0]) < kernel([x]) - kernel([a * x])

    @pytest.mark.parametrize("family, p, r", SHIPPED)
    def test_order_and_monotonicity_exclude_each_other(self, family, p, r):
        kernel = make_kernel(family, p, r)
        if check_moments(kernel).verified_order >= 2:
            assert not check_radial_monotone(kernel).holds
        if check_radial_monotone(kernel).holds:
            assert check_moments(kernel).verified_order <= 1


class TestKernelCheckComponent:

    def test_writes_moment_csv(self, tmp_path):
        config = KernelCheckConfig(kernel=parse_kernel_spec("gaussian:p=1:r=1"), tolerance=1e-6,
                                   method="tensor_quadrature", budget=None, grid_points=None,
                                   scale_points=64, out_dir=str(tmp_path))
        artifact = KernelCheck(config).initiate_kernel_check()
        moments = read_csv(artifact.moment_file_path)
        assert list(moments.columns) == ["degree", "max_abs_moment"]
        assert moments["degree"].tolist() == [1]
        summary = read_csv(artifact.summary_file_path)
        assert bool(summary["radial_monotone"][0])
        assert summary["verified_order"][0] == 1
