import itertools
import os
import sys
from typing import Optional

import numpy as np
import pandas as pd

from knnlab.constant import (KERNEL_CHECK_FILE_NAME, MAX_TENSOR_QUADRATURE_DIMENSION,
                             MC_MAX_STANDARD_ERROR, MIN_INTEGRATION_BUDGET, MIN_MONOTONE_POINTS,
                             MOMENT_FILE_NAME, MONOTONE_BOX_HALF_WIDTH, MONOTONE_GRID_POINTS,
                             MONOTONE_SCALE_POINTS, MONTE_CARLO, QUADRATURE_NODES_PER_AXIS,
                             TENSOR_QUADRATURE, DEFAULT_MOMENT_TOLERANCE)
from knnlab.entity.artifact_entity import KernelCheckArtifact, MomentReport, MonotoneReport
from knnlab.entity.config_entity import KernelCheckConfig
from knnlab.entity.kernel import Kernel, kernel_monte_carlo, kernel_quadrature
from knnlab.exception import (IntegrationBudgetExceeded, KnnLabException, PreconditionFailed,
                              UnsupportedKernelSpec)
from knnlab.logger import logging
from knnlab.util.util import write_csv

MONOTONE_CHUNK_SIZE = 1 << 16


def default_budget(kernel: Kernel, method: str) -> int:
    if method == TENSOR_QUADRATURE:
        return QUADRATURE_NODES_PER_AXIS ** kernel.p
    return 200_000


def quadrature_nodes_per_axis(budget: int, p: int) -> int:
    m = 1
    while (m + 1) ** p <= budget and m < QUADRATURE_NODES_PER_AXIS:
        m += 1
    return m


def _moment_terms(nodes: np.ndarray, weights: np.ndarray, degree: int):
    """Weighted monomial terms for every multi-index of the given degree."""
    for index in itertools.combinations_with_replacement(range(nodes.shape[1]), degree):
        yield index, weights * np.prod(nodes[:, index], axis=1)


def check_moments(kernel: Kernel, tolerance: float = DEFAULT_MOMENT_TOLERANCE,
                  method: str = TENSOR_QUADRATURE, budget: Optional[int] = None) -> MomentReport:
    """
    Integral, mixed moments of degrees 1..r and the absolute (r+1)-moment of K.

    verified_order is the largest l <= r such that every mixed moment of degree
    1..l is below the tolerance in absolute value.
    """
    budget = default_budget(kernel, method) if budget is None else int(budget)
    if budget < MIN_INTEGRATION_BUDGET:
        raise IntegrationBudgetExceeded(f"budget {budget} is below the minimum of {MIN_INTEGRATION_BUDGET}")

    if method == TENSOR_QUADRATURE:
        if kernel.p > MAX_TENSOR_QUADRATURE_DIMENSION:
            raise UnsupportedKernelSpec(f"tensor quadrature supports p <= {MAX_TENSOR_QUADRATURE_DIMENSION}, "
                                        f"got p={kernel.p}; use {MONTE_CARLO}")
        m = quadrature_nodes_per_axis(budget, kernel.p)
        nodes, weights = kernel_quadrature(kernel, m)
        coarse_nodes, coarse_weights = kernel_quadrature(kernel, max(m // 2, 1))
        integral = float(np.sum(weights))
        change = abs(integral - float(np.sum(coarse_weights)))
        if change > tolerance:
            raise IntegrationBudgetExceeded(f"quadrature of K did not settle with {m} nodes per axis "
                                            f"(change {change:.3e} > {tolerance:.1e})")
        standard_errors = []
    elif method == MONTE_CARLO:
        nodes, weights = kernel_monte_carlo(kernel, budget)
        integral = float(np.sum(weights))
        standard_errors = [float(np.std(weights * budget, ddof=1) / np.sqrt(budget))]
        if standard_errors[0] > MC_MAX_STANDARD_ERROR:
            raise IntegrationBudgetExceeded(f"standard error of the integral of K is {standard_errors[0]:.3e} "
                                            f"with {budget} samples")
    else:
        raise KnnLabException(f"unknown moment method [{method}]")

    moments = {}
    for degree in range(1, kernel.order + 1):
        largest = 0.0
        for _, terms in _moment_terms(nodes, weights, degree):
            largest = max(largest, abs(float(np.sum(terms))))
            if method == MONTE_CARLO:
                standard_errors.append(float(np.std(terms * budget, ddof=1) / np.sqrt(budget)))
        moments[degree] = largest

    tolerance_used = float(tolerance)
    if standard_errors:
        tolerance_used = max(tolerance_used, 4.0 * max(standard_errors))

    verified_order = 0
    for degree in range(1, kernel.order + 1):
        if moments[degree] > tolerance_used:
            break
        verified_order = degree

    norms = np.sqrt(np.sum(nodes * nodes, axis=1))
    abs_moment = float(np.sum(np.abs(weights) * norms ** (kernel.order + 1)))

    report = MomentReport(integral_of_K=integral,
                          max_abs_moment_per_degree=moments,
                          abs_moment_r_plus_1=abs_moment,
                          verified_order=verified_order,
                          tolerance_used=tolerance_used)
    logging.info(f"Moment report for {kernel.spec()} ({method}, budget {budget}): {report}")
    return report


def _grid_chunk(axis: np.ndarray, p: int, start: int, stop: int) -> np.ndarray:
    flat = np.arange(start, stop)
    indices = np.unravel_index(flat, (axis.shape[0],) * p)
    return np.stack([axis[i] for i in indices], axis=-1)


def check_radial_monotone(kernel: Kernel, grid_points: Optional[int] = None,
                          scale_points: int = MONOTONE_SCALE_POINTS) -> MonotoneReport:
    """
    Grid search for K(a x) < K(x) over x in [-6w, 6w]^p and a in [0, 1].

    The witness is the (x, a) pair with the largest violation K(x) - K(a x),
    not the violating pair closest to the origin. For the order-3
    poly-Gaussian kernel it sits on the edge of the box with a |x| = sqrt(5),
    the minimum of the profile; (3, sqrt(5)/3) is another violation it outranks.
    """
    if grid_points is None:
        grid_points = MONOTONE_GRID_POINTS if kernel.p <= 2 else 32
    if grid_points < MIN_MONOTONE_POINTS or scale_points < MIN_MONOTONE_POINTS:
        raise PreconditionFailed(f"grid_points and scale_points must be >= {MIN_MONOTONE_POINTS}")

    half_width = MONOTONE_BOX_HALF_WIDTH * kernel.profile_width
    axis = np.linspace(-half_width, half_width, grid_points)
    scales = np.linspace(0.0, 1.0, scale_points)
    threshold = np.finfo(float).eps * kernel.bound

    worst, witness = threshold, None
    total = grid_points ** kernel.p
    for start in range(0, total, MONOTONE_CHUNK_SIZE):
        x = _grid_chunk(axis, kernel.p, start, min(start + MONOTONE_CHUNK_SIZE, total))
        k_x = kernel.evaluate(x)
        for a in scales:
            violation = k_x - kernel.evaluate(a * x)
            position = int(np.argmax(violation))
            if violation[position] > worst:
                worst = float(violation[position])
                witness = (tuple(float(c) for c in x[position]), float(a))

    report = MonotoneReport(holds=witness is None, witness=witness)
    logging.info(f"Radial monotonicity for {kernel.spec()}: {report}")
    return report


class KernelCheck:

    def __init__(self, kernel_check_config: KernelCheckConfig):
        try:
            logging.info(f"{'='*20}Kernel check log started.{'='*20}")
            self.kernel_check_config = kernel_check_config
        except Exception as e:
            raise KnnLabException(e, sys) from e

    def initiate_kernel_check(self) -> KernelCheckArtifact:
        try:
            config = self.kernel_check_config
            kernel = config.kernel
            moment_report = check_moments(kernel, tolerance=config.tolerance,
                                          method=config.method, budget=config.budget)
            monotone_report = check_radial_monotone(kernel, grid_points=config.grid_points,
                                                    scale_points=config.scale_points)

            moment_file_path = os.path.join(config.out_dir, MOMENT_FILE_NAME)
            moments = moment_report.max_abs_moment_per_degree
            write_csv(moment_file_path, pd.DataFrame({"degree": list(moments.keys()),
                                                      "max_abs_moment": list(moments.values())}))

            witness_x, witness_a = monotone_report.witness or ((), None)
            summary_file_path = os.path.join(config.out_dir, KERNEL_CHECK_FILE_NAME)
            write_csv(summary_file_path, pd.DataFrame([{
                "kernel": kernel.spec(),
                "declared_order": kernel.order,
                "verified_order": moment_report.verified_order,
                "integral_of_K": moment_report.integral_of_K,
                "abs_moment_r_plus_1": moment_report.abs_moment_r_plus_1,
                "tolerance_used": moment_report.tolerance_used,
                "sup_bound": kernel.bound,
                "radial_monotone": monotone_report.holds,
                "witness_x": " ".join(repr(c) for c in witness_x),
                "witness_a": witness_a,
            }]))

            kernel_check_artifact = KernelCheckArtifact(kernel_spec=kernel.spec(),
                                                        moment_report=moment_report,
                                                        monotone_report=monotone_report,
                                                        moment_file_path=moment_file_path,
                                                        summary_file_path=summary_file_path)
            logging.info(f"Kernel check artifact: {kernel_check_artifact}")
            return kernel_check_artifact
        except KnnLabException:
            raise
        except Exception as e:
            raise KnnLabException(e, sys) from e

    def __del__(self):
        logging.info(f"{'='*20}Kernel check log completed.{'='*20}")
