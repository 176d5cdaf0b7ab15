"""
k-NN kernel estimators of the density f, of g = r f and of the regression r.

With R = R_n(x), the k-th neighbour distance,

    f_n(x) = 1 / (n R^p) * sum_i K((X_i - x) / R)
    g_n(x) = 1 / (n R^p) * sum_i Y_i K((X_i - x) / R)
    r_n(x) = g_n(x) / max(f_n(x), b_n)

The sums run over all n points, not only the k neighbours, and are correctly
rounded (math.fsum) so results do not depend on term order.
"""
import math
from typing import Optional, Tuple

import numpy as np

from knnlab.constant import (C1_BOUNDS, C1_CONDITION, C2_BOUNDS, C2_CONDITION, C_M_CONDITION,
                             DEGENERATE_POLICIES, EPSILON_RADIUS_FACTOR, POLICY_EPSILON_RADIUS, POLICY_ERROR,
                             TARGET_DENSITY, TARGET_G, TARGET_G1, TARGET_G2, TARGET_REGRESSION)
from knnlab.entity.artifact_entity import EstimateAtPoint, GridEstimate, SplitEstimate
from knnlab.entity.config_entity import EstimatorConfig
from knnlab.entity.kernel import Kernel
from knnlab.entity.neighbor_index import NeighborIndex, knn_radius, knn_radius_many
from knnlab.exception import (DegenerateRadius, DimensionMismatch, InvalidSchedule, InvalidTarget,
                              MissingResponses)
from knnlab.logger import logging
from knnlab.util.util import exact_row_sums

GRID_TARGETS = (TARGET_DENSITY, TARGET_G, TARGET_REGRESSION, TARGET_G1, TARGET_G2)
GRID_CHUNK_ELEMENTS = 1 << 22


def _check_c1(c1: float):
    if not C1_BOUNDS[0] < c1 < C1_BOUNDS[1]:
        raise InvalidSchedule(f"k-schedule exponent c1 must lie in (1/2, 1) ({C1_CONDITION}), got c1={c1}")


def _check_c2(c2: float):
    if not C2_BOUNDS[0] < c2 < C2_BOUNDS[1]:
        raise InvalidSchedule(f"floor exponent c2 must lie in (0, 1/10) ({C2_CONDITION}), got c2={c2}")


def _check_C_M(C_M: float):
    if not C_M > 0:
        raise InvalidSchedule(f"response bound multiplier C_M must be positive ({C_M_CONDITION}), got C_M={C_M}")


def schedule_k(n: int, c1: float) -> int:
    """k_n = max(1, floor(n^c1)), at most n."""
    _check_c1(c1)
    if n < 1:
        raise InvalidSchedule(f"sample size must be >= 1, got n={n}")
    value = float(n) ** c1
    nearest = round(value)
    k = nearest if abs(value - nearest) <= 1e-9 * value else math.floor(value)
    return int(min(max(1, k), n))


def schedule_b(n: int, c2: float) -> float:
    """b_n = n^(-c2)."""
    _check_c2(c2)
    if n < 1:
        raise InvalidSchedule(f"sample size must be >= 1, got n={n}")
    return float(n) ** -c2


def schedule_M(n: int, C_M: float) -> float:
    """M_n = C_M * sqrt(log n)."""
    if n < 2:
        raise InvalidSchedule(f"M_n needs n >= 2, got n={n}")
    _check_C_M(C_M)
    return C_M * math.sqrt(math.log(n))


def validate_estimator_config(config: EstimatorConfig) -> EstimatorConfig:
    _check_c1(config.c1)
    _check_c2(config.c2)
    _check_C_M(config.C_M)
    if not isinstance(config.kernel, Kernel):
        raise InvalidSchedule(f"estimator kernel must be a Kernel, got {type(config.kernel).__name__}")
    if config.degenerate_policy not in DEGENERATE_POLICIES:
        raise InvalidSchedule(f"degenerate_policy must be one of {DEGENERATE_POLICIES}, got {config.degenerate_policy}")
    return config


def make_estimator_config(kernel: Kernel, c1: float = 0.7, c2: float = 0.05, C_M: float = 4.0,
                          degenerate_policy: str = POLICY_ERROR) -> EstimatorConfig:
    return validate_estimator_config(EstimatorConfig(c1=c1, c2=c2, C_M=C_M, kernel=kernel,
                                                     degenerate_policy=degenerate_policy))


def epsilon_radius(index: NeighborIndex) -> float:
    diameter = index.source.diameter_bound()
    return EPSILON_RADIUS_FACTOR * (diameter if diameter > 0.0 else 1.0)


def _radius(index: NeighborIndex, config: EstimatorConfig, x, k: int) -> float:
    try:
        return knn_radius(index, x, k).radius
    except DegenerateRadius:
        if config.degenerate_policy == POLICY_EPSILON_RADIUS:
            epsilon = epsilon_radius(index)
            logging.warning(f"Zero k-NN radius at {np.asarray(x).tolist()}; using epsilon radius {epsilon:.3e}")
            return epsilon
        raise


def _kernel_terms(index: NeighborIndex, kernel: Kernel, x, bandwidth: float) -> np.ndarray:
    if kernel.p != index.p:
        raise DimensionMismatch(f"kernel dimension {kernel.p} does not match data dimension {index.p}")
    x = np.asarray(x, dtype=float).reshape(-1)
    return kernel.evaluate((index.source.X - x) / bandwidth)


def _responses(index: NeighborIndex) -> np.ndarray:
    if not index.source.has_responses:
        raise MissingResponses("the sample has no responses Y")
    return index.source.Y


def _scale(n: int, radius: float, p: int) -> float:
    return n * radius ** p


def _prepare(index: NeighborIndex, config: EstimatorConfig, x, k: Optional[int]) -> Tuple[int, float, np.ndarray]:
    k = schedule_k(index.n, config.c1) if k is None else int(k)
    radius = _radius(index, config, x, k)
    return k, radius, _kernel_terms(index, config.kernel, x, radius)


def density_at(index: NeighborIndex, config: EstimatorConfig, x, k: Optional[int] = None) -> EstimateAtPoint:
    """f_n(x); `k` overrides the schedule k_n."""
    k, radius, terms = _prepare(index, config, x, k)
    value = math.fsum(terms.tolist()) / _scale(index.n, radius, index.p)
    return EstimateAtPoint(value=value, radius_used=radius, k_used=k, floored=False)


def g_at(index: NeighborIndex, config: EstimatorConfig, x, k: Optional[int] = None) -> EstimateAtPoint:
    Y = _responses(index)
    k, radius, terms = _prepare(index, config, x, k)
    value = math.fsum((Y * terms).tolist()) / _scale(index.n, radius, index.p)
    return EstimateAtPoint(value=value, radius_used=radius, k_used=k, floored=False)


def g_split_at(index: NeighborIndex, config: EstimatorConfig, x, k: Optional[int] = None) -> SplitEstimate:
    """Positive-part and negative-part response estimators sharing one R_n(x)."""
    Y = _responses(index)
    k, radius, terms = _prepare(index, config, x, k)
    scale = _scale(index.n, radius, index.p)
    positive = np.where(Y >= 0.0, Y, 0.0)
    negative = np.where(Y < 0.0, -Y, 0.0)
    return SplitEstimate(g1_hat=math.fsum((positive * terms).tolist()) / scale,
                         g2_hat=math.fsum((negative * terms).tolist()) / scale)


def regression_at(index: NeighborIndex, config: EstimatorConfig, x, n: Optional[int] = None,
                  k: Optional[int] = None) -> EstimateAtPoint:
    """r_n(x) = g_n(x) / max(f_n(x), b_n); `n` sets b_n (defaults to the sample size)."""
    Y = _responses(index)
    b_n = schedule_b(index.n if n is None else n, config.c2)
    k, radius, terms = _prepare(index, config, x, k)
    scale = _scale(index.n, radius, index.p)
    f_hat = math.fsum(terms.tolist()) / scale
    g_hat = math.fsum((Y * terms).tolist()) / scale
    floored = f_hat <= b_n
    return EstimateAtPoint(value=g_hat / max(f_hat, b_n), radius_used=radius, k_used=k, floored=floored)


def collomb_regression_at(index: NeighborIndex, config: EstimatorConfig, x,
                          k: Optional[int] = None) -> EstimateAtPoint:
    """Unfloored ratio g_n / f_n; 0 (flagged floored) where f_n vanishes."""
    Y = _responses(index)
    k, radius, terms = _prepare(index, config, x, k)
    f_sum = math.fsum(terms.tolist())
    if f_sum == 0.0:
        return EstimateAtPoint(value=0.0, radius_used=radius, k_used=k, floored=True)
    return EstimateAtPoint(value=math.fsum((Y * terms).tolist()) / f_sum, radius_used=radius,
                           k_used=k, floored=False)


def fixed_bandwidth_at(index: NeighborIndex, kernel: Kernel, x, D_outer: float, D_inner: float,
                       weights: Optional[np.ndarray] = None) -> float:
    """
    1 / (n D_outer^p) * sum_i w_i K((X_i - x) / D_inner); with D_outer == D_inner
    and unit weights this is the fixed-bandwidth kernel density estimate.
    """
    terms = _kernel_terms(index, kernel, x, D_inner)
    if weights is not None:
        terms = weights * terms
    return math.fsum(terms.tolist()) / _scale(index.n, D_outer, index.p)


def response_weights(index: NeighborIndex, target: str) -> Optional[np.ndarray]:
    """Per-point weights h(Y_i) of a target: None (density), Y, Y+ or Y-."""
    if target == TARGET_DENSITY:
        return None
    Y = _responses(index)
    if target in (TARGET_G, TARGET_REGRESSION):
        return Y
    if target == TARGET_G1:
        return np.where(Y >= 0.0, Y, 0.0)
    if target == TARGET_G2:
        return np.where(Y < 0.0, -Y, 0.0)
    raise InvalidTarget(f"unknown target [{target}], expected one of {GRID_TARGETS}")


def estimate_on_grid(index: NeighborIndex, config: EstimatorConfig, grid, target: str,
                     n: Optional[int] = None, k: Optional[int] = None) -> GridEstimate:
    """Evaluates one target at every row of `grid`; same arithmetic as the point functions."""
    if target not in GRID_TARGETS:
        raise InvalidTarget(f"unknown target [{target}], expected one of {GRID_TARGETS}")
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.shape[1] != index.p:
        raise DimensionMismatch(f"grid has dimension {grid.shape[1]}, data has dimension {index.p}")
    k = schedule_k(index.n, config.c1) if k is None else int(k)
    weights = response_weights(index, target)
    b_n = schedule_b(index.n if n is None else n, config.c2) if target == TARGET_REGRESSION else None

    radii, _ = knn_radius_many(index, grid, k)
    degenerate = radii == 0.0
    if np.any(degenerate):
        if config.degenerate_policy != POLICY_EPSILON_RADIUS:
            raise DegenerateRadius(f"{int(np.sum(degenerate))} grid points coincide with at least {k} sample points",
                                   radius=0.0)
        radii[degenerate] = epsilon_radius(index)

    X = index.source.X
    values = np.empty(grid.shape[0])
    floored = np.zeros(grid.shape[0], dtype=bool)
    chunk = max(1, GRID_CHUNK_ELEMENTS // index.n)
    for start in range(0, grid.shape[0], chunk):
        rows = slice(start, start + chunk)
        radius = radii[rows]
        terms = config.kernel.evaluate((X[None, :, :] - grid[rows, None, :]) / radius[:, None, None])
        scale = index.n * radius ** index.p
        if target == TARGET_REGRESSION:
            f_hat = exact_row_sums(terms) / scale
            g_hat = exact_row_sums(weights * terms) / scale
            floored[rows] = f_hat <= b_n
            values[rows] = g_hat / np.maximum(f_hat, b_n)
        elif weights is None:
            values[rows] = exact_row_sums(terms) / scale
        else:
            values[rows] = exact_row_sums(weights * terms) / scale
    return GridEstimate(values=values, radii=radii, k_used=k, floored=floored)
