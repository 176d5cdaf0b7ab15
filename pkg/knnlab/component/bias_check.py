import math
import os
import sys
import warnings
from typing import List, Optional

import numpy as np
import pandas as pd

from knnlab.constant import (BIAS_FILE_NAME, BIAS_MARGIN_FACTOR, MAX_TENSOR_QUADRATURE_DIMENSION,
                             MIN_INTEGRATION_BUDGET, QUADRATURE_NODES_PER_AXIS, TARGET_DENSITY,
                             TARGET_G, TARGET_G1, TARGET_G2)
from knnlab.component.kernel_check import quadrature_nodes_per_axis
from knnlab.entity.artifact_entity import BiasCheckArtifact, BiasOracleResult
from knnlab.entity.config_entity import BiasCheckConfig
from knnlab.entity.kernel import Kernel, kernel_monte_carlo, kernel_quadrature
from knnlab.entity.synthetic_model import SyntheticModel
from knnlab.exception import (BoundaryBiasWarning, DimensionMismatch, IntegrationBudgetExceeded,
                              InvalidTarget, KnnLabException, OutsideEvaluationBox, PreconditionFailed)
from knnlab.logger import logging
from knnlab.util.util import coordinate_columns, write_csv

BIAS_TARGETS = (TARGET_DENSITY, TARGET_G, TARGET_G1, TARGET_G2)
MONTE_CARLO_BIAS_BUDGET = 200_000


def _integration_rule(kernel: Kernel, budget: Optional[int]):
    if kernel.p <= MAX_TENSOR_QUADRATURE_DIMENSION:
        if budget is None:
            return kernel_quadrature(kernel, QUADRATURE_NODES_PER_AXIS)
        if budget < MIN_INTEGRATION_BUDGET:
            raise IntegrationBudgetExceeded(f"budget {budget} is below the minimum of {MIN_INTEGRATION_BUDGET}")
        return kernel_quadrature(kernel, quadrature_nodes_per_axis(int(budget), kernel.p))
    return kernel_monte_carlo(kernel, MONTE_CARLO_BIAS_BUDGET if budget is None else int(budget))


def bias_oracle(model: SyntheticModel, kernel: Kernel, D1: float, D2: float, x,
                budget: Optional[int] = None, target: str = TARGET_DENSITY) -> BiasOracleResult:
    """
    Expected value of the fixed-bandwidth pair estimator

        E = (D2/D1)^p * integral K(u) phi(x + D2 u) du

    with phi the model truth for `target`, and its distance to phi(x).
    """
    if target not in BIAS_TARGETS:
        raise InvalidTarget(f"bias target must be one of {BIAS_TARGETS}, got [{target}]")
    if not (D1 > 0.0 and D2 > 0.0):
        raise PreconditionFailed(f"bandwidths must be positive, got D1={D1}, D2={D2}")
    if kernel.p != model.p:
        raise DimensionMismatch(f"kernel dimension {kernel.p} does not match model dimension {model.p}")
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != model.p:
        raise DimensionMismatch(f"point has dimension {x.shape[0]}, model has dimension {model.p}")
    if not bool(model.in_box(x)):
        raise OutsideEvaluationBox(f"point {x.tolist()} lies outside the evaluation box of {model.name}")

    margin = float(np.min(np.minimum(x - model.box_low, model.box_high - x)))
    boundary_flagged = margin < BIAS_MARGIN_FACTOR * D2 * kernel.profile_width
    if boundary_flagged:
        warnings.warn(f"point {x.tolist()} is {margin:.4g} from the edge of the evaluation box, "
                      f"less than {BIAS_MARGIN_FACTOR} * D2 * width", BoundaryBiasWarning, stacklevel=2)

    nodes, weights = _integration_rule(kernel, budget)
    gamma = (D2 / D1) ** model.p
    phi = model.truth(target, x + D2 * nodes)
    expected_value = gamma * math.fsum((weights * phi).tolist())
    truth = float(model.truth(target, x[None, :])[0])
    return BiasOracleResult(expected_value=expected_value, bias_abs=abs(expected_value - truth),
                            truth=truth, gamma=gamma, boundary_flagged=bool(boundary_flagged))


def default_bias_point(model: SyntheticModel) -> np.ndarray:
    """Point at 7/16 of the evaluation box on every axis."""
    return model.box_low + 0.4375 * (model.box_high - model.box_low)


def bias_ratios(results: List[BiasOracleResult]) -> List[float]:
    """bias(D) / bias(D/2) for consecutive halvings."""
    ratios = []
    for coarse, fine in zip(results, results[1:]):
        ratios.append(coarse.bias_abs / fine.bias_abs if fine.bias_abs > 0.0 else math.inf)
    return ratios


class BiasCheck:

    def __init__(self, bias_check_config: BiasCheckConfig):
        try:
            logging.info(f"{'='*20}Bias check log started.{'='*20}")
            self.bias_check_config = bias_check_config
        except Exception as e:
            raise KnnLabException(e, sys) from e

    def initiate_bias_check(self) -> BiasCheckArtifact:
        try:
            config = self.bias_check_config
            x = default_bias_point(config.model) if config.x is None else np.asarray(config.x, dtype=float).reshape(-1)
            bandwidths = [config.d2 / 2 ** step for step in range(config.halvings + 1)]
            results = [bias_oracle(config.model, config.kernel, D1=d2 * config.d1_ratio, D2=d2, x=x,
                                   budget=config.budget, target=config.target)
                       for d2 in bandwidths]
            ratios = bias_ratios(results)

            records = []
            for step, (d2, result) in enumerate(zip(bandwidths, results)):
                record = dict(zip(coordinate_columns(config.model.p), x.tolist()))
                record.update({"D1": d2 * config.d1_ratio, "D2": d2})
                record.update(result._asdict())
                record["ratio"] = ratios[step - 1] if step > 0 else math.nan
                records.append(record)
            bias_file_path = os.path.join(config.out_dir, BIAS_FILE_NAME)
            write_csv(bias_file_path, pd.DataFrame(records))

            bias_check_artifact = BiasCheckArtifact(results=results, ratios=ratios, bias_file_path=bias_file_path)
            logging.info(f"Bias check on {config.model.name}/{config.target} with {config.kernel.spec()}: "
                         f"ratios={ratios}")
            return bias_check_artifact
        except KnnLabException:
            raise
        except Exception as e:
            raise KnnLabException(e, sys) from e

    def __del__(self):
        logging.info(f"{'='*20}Bias check log completed.{'='*20}")
