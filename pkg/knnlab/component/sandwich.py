"""
Sandwich diagnostic for the random-bandwidth estimator.

With deterministic radii

    D-(x) = (k / (n f(x)))^(1/p) * beta^(1/(2p))
    D+(x) = (k / (n f(x)))^(1/p) * beta^(-1/(2p))

and a radially monotone kernel, D- <= R_n(x) <= D+ forces

    f1(x) = 1/(n D+^p) sum K((X_i - x)/D-)  <=  f_n(x)  <=  1/(n D-^p) sum K((X_i - x)/D+) = f2(x).

The same bracket holds for the positive-part and negative-part response sums.
"""
import math
import os
import sys
from typing import Optional

import numpy as np
import pandas as pd

from knnlab.constant import (BETA_CANONICAL, BETA_FIXED, BETA_RULES, SANDWICH_FILE_NAME,
                             SANDWICH_SUMMARY_FILE_NAME, TARGET_DENSITY, TARGET_G1, TARGET_G2)
from knnlab.component.kernel_check import check_radial_monotone
from knnlab.entity.artifact_entity import SandwichArtifact, SandwichPoint, SandwichReport
from knnlab.entity.config_entity import EstimatorConfig, SandwichConfig
from knnlab.entity.estimator import fixed_bandwidth_at, response_weights, schedule_k
from knnlab.entity.kernel import unit_ball_volume
from knnlab.entity.neighbor_index import build_index, knn_radius
from knnlab.entity.sample_set import SampleSet
from knnlab.entity.synthetic_model import SyntheticModel, make_eval_grid, sample
from knnlab.exception import DimensionMismatch, InvalidTarget, KnnLabException, PreconditionFailed
from knnlab.logger import logging
from knnlab.util.util import coordinate_columns, write_csv

SANDWICH_TARGETS = (TARGET_DENSITY, TARGET_G1, TARGET_G2)


def beta_for(n: int, p: int, r: int, beta_rule: str = BETA_CANONICAL, beta: Optional[float] = None) -> float:
    """beta_n = 1 - n^(-(r+1)/p) (canonical) or a fixed value in (0, 1]."""
    if beta_rule == BETA_CANONICAL:
        return 1.0 - float(n) ** (-(r + 1) / p)
    if beta_rule == BETA_FIXED:
        if beta is None or not 0.0 < beta <= 1.0:
            raise PreconditionFailed(f"fixed beta rule needs beta in (0, 1], got {beta}")
        return float(beta)
    raise PreconditionFailed(f"unknown beta rule [{beta_rule}], expected one of {BETA_RULES}")


def sandwich_radii(f_x: float, n: int, k: int, p: int, beta: float,
                   volume_corrected: bool = False) -> tuple:
    """(D-, D+) at a point of true density f_x."""
    if not f_x > 0.0:
        raise PreconditionFailed(f"sandwich radii need a positive density, got f(x)={f_x}")
    mass = n * f_x * (unit_ball_volume(p) if volume_corrected else 1.0)
    base = (k / mass) ** (1.0 / p)
    spread = beta ** (1.0 / (2 * p))
    return base * spread, base / spread


def _within(lower: float, upper: float) -> bool:
    # two ulp of slack per compared sum
    return lower <= upper + 2.0 * np.spacing(abs(upper)) + 2.0 * np.spacing(abs(lower))


def sandwich_diagnostic(model: SyntheticModel, sample_set: SampleSet, config: EstimatorConfig, eval_grid,
                        beta_rule: str = BETA_CANONICAL, beta: Optional[float] = None,
                        target: str = TARGET_DENSITY, volume_corrected: bool = False,
                        k: Optional[int] = None, leaf_size: Optional[int] = None) -> SandwichReport:
    """
    Brackets the k-NN estimate between the two fixed-bandwidth sums at every grid point.

    `ordered_given_containment` reads as the implication contained -> ordered, so it is
    True at points where the radius falls outside [D-, D+]. conditional_order_rate is
    NaN when no point is contained.
    """
    kernel = config.kernel
    if target not in SANDWICH_TARGETS:
        raise InvalidTarget(f"sandwich target must be one of {SANDWICH_TARGETS}, got [{target}]")
    if kernel.p != model.p or sample_set.p != model.p:
        raise DimensionMismatch(f"kernel ({kernel.p}), sample ({sample_set.p}) and model ({model.p}) dimensions differ")
    monotone = check_radial_monotone(kernel)
    if not monotone.holds:
        raise PreconditionFailed(f"kernel {kernel.spec()} is not radially monotone (witness {monotone.witness})")

    grid = np.atleast_2d(np.asarray(eval_grid, dtype=float))
    if grid.shape[0] < 1:
        raise PreconditionFailed("sandwich diagnostic needs a nonempty evaluation grid")
    index = build_index(sample_set) if leaf_size is None else build_index(sample_set, leaf_size=leaf_size)
    n, p = index.n, index.p
    k = schedule_k(n, config.c1) if k is None else int(k)
    beta_n = beta_for(n, p, kernel.order, beta_rule, beta)
    weights = response_weights(index, target)
    densities = model.density(grid)

    per_point = []
    for x, f_x in zip(grid, densities):
        D_minus, D_plus = sandwich_radii(float(f_x), n, k, p, beta_n, volume_corrected)
        R_n = knn_radius(index, x, k).radius
        f1 = fixed_bandwidth_at(index, kernel, x, D_plus, D_minus, weights)
        f_hat = fixed_bandwidth_at(index, kernel, x, R_n, R_n, weights)
        f2 = fixed_bandwidth_at(index, kernel, x, D_minus, D_plus, weights)
        contained = D_minus <= R_n <= D_plus
        ordered = _within(f1, f_hat) and _within(f_hat, f2)
        per_point.append(SandwichPoint(x=tuple(x.tolist()), D_minus=D_minus, D_plus=D_plus, R_n=R_n,
                                       contained=bool(contained), f1=f1, f_hat=f_hat, f2=f2,
                                       ordered_given_containment=bool(ordered or not contained)))

    contained_points = [point for point in per_point if point.contained]
    containment_rate = len(contained_points) / len(per_point)
    if contained_points:
        conditional_order_rate = sum(point.ordered_given_containment for point in contained_points) / len(contained_points)
    else:
        conditional_order_rate = math.nan
    report = SandwichReport(per_point=per_point, containment_rate=containment_rate,
                            conditional_order_rate=conditional_order_rate, beta_n=beta_n)
    logging.info(f"Sandwich on {model.name}/{target}: n={n}, k={k}, beta={beta_n:.6g}, "
                 f"containment={containment_rate:.4f}, conditional order={conditional_order_rate:.4f}")
    return report


def sandwich_dataframe(report: SandwichReport) -> pd.DataFrame:
    p = len(report.per_point[0].x)
    records = []
    for point in report.per_point:
        record = dict(zip(coordinate_columns(p), point.x))
        record.update({field: getattr(point, field) for field in SandwichPoint._fields if field != "x"})
        records.append(record)
    return pd.DataFrame(records)


class SandwichCheck:

    def __init__(self, sandwich_config: SandwichConfig):
        try:
            logging.info(f"{'='*20}Sandwich check log started.{'='*20}")
            self.sandwich_config = sandwich_config
        except Exception as e:
            raise KnnLabException(e, sys) from e

    def initiate_sandwich_check(self) -> SandwichArtifact:
        try:
            config = self.sandwich_config
            trial_sample = sample(config.model, config.n, config.seed, config.estimator_config.C_M)
            grid = make_eval_grid(config.model, config.grid_points)
            report = sandwich_diagnostic(config.model, trial_sample.sample, config.estimator_config, grid,
                                         beta_rule=config.beta_rule, beta=config.beta, target=config.target,
                                         volume_corrected=config.volume_corrected, leaf_size=config.leaf_size)

            sandwich_file_path = os.path.join(config.out_dir, SANDWICH_FILE_NAME)
            summary_file_path = os.path.join(config.out_dir, SANDWICH_SUMMARY_FILE_NAME)
            write_csv(sandwich_file_path, sandwich_dataframe(report))
            violations = sum(1 for point in report.per_point if not point.ordered_given_containment)
            write_csv(summary_file_path, pd.DataFrame([{
                "beta_n": report.beta_n,
                "containment_rate": report.containment_rate,
                "conditional_order_rate": report.conditional_order_rate,
                "violations": violations,
            }]))
            sandwich_artifact = SandwichArtifact(report=report, sandwich_file_path=sandwich_file_path,
                                                 summary_file_path=summary_file_path)
            logging.info(f"Sandwich artifact: [{sandwich_file_path}], [{summary_file_path}], "
                         f"violations={violations}")
            return sandwich_artifact
        except KnnLabException:
            raise
        except Exception as e:
            raise KnnLabException(e, sys) from e

    def __del__(self):
        logging.info(f"{'='*20}Sandwich check log completed.{'='*20}")
