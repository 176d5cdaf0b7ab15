import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd

from knnlab.constant import (BOUNDARY_INSET_FACTOR, ESTIMATE_TARGETS, MAX_DEGENERATE_FRACTION,
                             MIN_N_GRID_SIZES, PER_N_FILE_NAME, SUMMARY_FILE_NAME, TARGET_DENSITY,
                             TARGET_G, TARGET_REGRESSION)
from knnlab.entity.artifact_entity import RateStudyArtifact, RateStudyResult, RateStudyRow
from knnlab.entity.config_entity import RateStudyConfig
from knnlab.entity.estimator import estimate_on_grid, schedule_b, schedule_k, schedule_M
from knnlab.entity.neighbor_index import build_index
from knnlab.entity.synthetic_model import make_eval_grid, sample
from knnlab.exception import (DegenerateRadius, DimensionMismatch, InvalidTarget, KnnLabException,
                              PreconditionFailed, StudyAborted)
from knnlab.logger import logging
from knnlab.util.util import write_csv

MAX_ATTEMPTS_PER_TRIAL = 10


def sup_error(estimates, truths) -> float:
    """max |estimate - truth| over the evaluation grid."""
    estimates = np.asarray(estimates, dtype=float).reshape(-1)
    truths = np.asarray(truths, dtype=float).reshape(-1)
    if estimates.shape != truths.shape:
        raise DimensionMismatch(f"{estimates.shape[0]} estimates against {truths.shape[0]} truths")
    if estimates.shape[0] < 1:
        raise DimensionMismatch("sup error needs at least one grid point")
    return float(np.max(np.abs(estimates - truths)))


def theory_rate(n: int, k: int, p: int, r: int, M_n: float, b_n: float, target: str) -> float:
    """
    density:    (k/n)^((r+1)/p) + sqrt(n log n / k^2)
    g:          (k/n)^((r+1)/p) + sqrt(n log n M_n^2 / k^2)
    regression: the g rate + b_n
    """
    if n < 2 or not 1 <= k <= n:
        raise PreconditionFailed(f"theory rate needs n >= 2 and 1 <= k <= n, got n={n}, k={k}")
    bias = (k / n) ** ((r + 1) / p)
    if target == TARGET_DENSITY:
        return bias + math.sqrt(n * math.log(n) / k ** 2)
    if target not in (TARGET_G, TARGET_REGRESSION):
        raise InvalidTarget(f"unknown target [{target}], expected one of {ESTIMATE_TARGETS}")
    rate = bias + math.sqrt(n * math.log(n) * M_n ** 2 / k ** 2)
    return rate + b_n if target == TARGET_REGRESSION else rate


def fit_rate(errors: Sequence[float], rates: Sequence[float]) -> Tuple[float, float]:
    """Least-squares fit of log(error) = slope * log(rate) + intercept."""
    errors = np.asarray(errors, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if errors.shape != rates.shape or errors.shape[0] < 2:
        raise DimensionMismatch("rate fit needs two equally long series of at least two values")
    if np.any(errors <= 0.0) or np.any(rates <= 0.0):
        raise PreconditionFailed("rate fit needs strictly positive errors and rates")
    slope, intercept = np.polyfit(np.log(rates), np.log(errors), 1)
    return float(slope), float(intercept)


def _validate(config: RateStudyConfig):
    n_grid = list(config.n_grid)
    if len(n_grid) < MIN_N_GRID_SIZES or any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise PreconditionFailed(f"n_grid must be strictly increasing with at least {MIN_N_GRID_SIZES} sizes, got {n_grid}")
    if n_grid[0] < 2:
        raise PreconditionFailed("sample sizes must be >= 2")
    if config.trials < 1:
        raise PreconditionFailed(f"trials must be >= 1, got {config.trials}")
    if config.target not in ESTIMATE_TARGETS:
        raise InvalidTarget(f"unknown target [{config.target}], expected one of {ESTIMATE_TARGETS}")
    kernel = config.estimator_config.kernel
    if kernel.p != config.model.p:
        raise DimensionMismatch(f"kernel dimension {kernel.p} does not match model dimension {config.model.p}")
    if kernel.order > config.model.r_model:
        raise PreconditionFailed(f"kernel order {kernel.order} exceeds the smoothness {config.model.r_model} "
                                 f"of model {config.model.name}")
    if config.eval_grid is not None and not np.all(config.model.in_box(np.asarray(config.eval_grid))):
        raise PreconditionFailed("eval_grid must lie inside the evaluation box")


def _run_trial(config: RateStudyConfig, n: int, trial: int, grid: np.ndarray,
               truths: np.ndarray) -> Tuple[float, int, int]:
    """Sup error, clip count and number of degenerate attempts of one trial."""
    estimator_config = config.estimator_config
    for attempt in range(MAX_ATTEMPTS_PER_TRIAL):
        trial_sample = sample(config.model, n, config.seed, estimator_config.C_M, stream=(n, trial, attempt))
        index = build_index(trial_sample.sample, leaf_size=config.leaf_size)
        try:
            estimate = estimate_on_grid(index, estimator_config, grid, config.target, n=n)
        except DegenerateRadius:
            logging.warning(f"Degenerate radius in trial {trial} at n={n} (attempt {attempt}); resampling")
            continue
        return sup_error(estimate.values, truths), trial_sample.clip_count, attempt
    raise StudyAborted(f"trial {trial} at n={n} stayed degenerate for {MAX_ATTEMPTS_PER_TRIAL} attempts")


def run_rate_study(config: RateStudyConfig) -> RateStudyResult:
    """
    Monte Carlo sup-error study over config.n_grid. Every trial draws from its own
    (seed, n, trial, attempt) stream, so results do not depend on thread count.
    """
    _validate(config)
    model = config.model
    estimator_config = config.estimator_config
    kernel = estimator_config.kernel
    p, r = model.p, kernel.order

    rows: List[RateStudyRow] = []
    degenerate_trials = 0
    with ThreadPoolExecutor(max_workers=max(1, int(config.threads or 1))) as executor:
        for n in config.n_grid:
            k = schedule_k(n, estimator_config.c1)
            b_n = schedule_b(n, estimator_config.c2)
            M_n = schedule_M(n, estimator_config.C_M)
            if config.eval_grid is not None:
                grid = np.atleast_2d(np.asarray(config.eval_grid, dtype=float))
            else:
                inset = BOUNDARY_INSET_FACTOR * (k / (n * model.c0)) ** (1.0 / p)
                grid = make_eval_grid(model, config.grid_points, inset=inset)
            truths = model.truth(config.target, grid)

            outcomes = list(executor.map(lambda trial: _run_trial(config, n, trial, grid, truths),
                                         range(config.trials)))
            errors = np.array([outcome[0] for outcome in outcomes])
            clips = sum(outcome[1] for outcome in outcomes)
            degenerate_trials += sum(outcome[2] for outcome in outcomes)

            row = RateStudyRow(n=n, k_n=k, b_n=b_n, M_n=M_n,
                               mean_sup_error=float(np.mean(errors)),
                               median=float(np.median(errors)),
                               q10=float(np.quantile(errors, 0.1)),
                               q90=float(np.quantile(errors, 0.9)),
                               clip_rate=clips / (config.trials * n),
                               theory_rate=theory_rate(n, k, p, r, M_n, b_n, config.target))
            logging.info(f"Rate study {model.name}/{config.target}: {row}")
            rows.append(row)

    total_trials = config.trials * len(rows)
    if degenerate_trials > MAX_DEGENERATE_FRACTION * total_trials:
        raise StudyAborted(f"{degenerate_trials} degenerate trials out of {total_trials} "
                           f"(limit {MAX_DEGENERATE_FRACTION:.0%})")

    slope, intercept = fit_rate([row.mean_sup_error for row in rows], [row.theory_rate for row in rows])
    c1 = estimator_config.c1
    result = RateStudyResult(per_n=rows,
                             fitted_slope=slope,
                             fitted_intercept=intercept,
                             theory_exponent_bias=-(1.0 - c1) * (r + 1) / p,
                             theory_exponent_variance=0.5 - c1,
                             degenerate_trials=degenerate_trials)
    logging.info(f"Rate study fit: slope={slope:.4f}, intercept={intercept:.4f}, "
                 f"degenerate trials={degenerate_trials}")
    return result


def per_n_dataframe(result: RateStudyResult) -> pd.DataFrame:
    return pd.DataFrame([row._asdict() for row in result.per_n], columns=list(RateStudyRow._fields))


def summary_dataframe(result: RateStudyResult) -> pd.DataFrame:
    return pd.DataFrame([{
        "fitted_slope": result.fitted_slope,
        "fitted_intercept": result.fitted_intercept,
        "theory_exponent_bias": result.theory_exponent_bias,
        "theory_exponent_variance": result.theory_exponent_variance,
    }])


class RateStudy:

    def __init__(self, rate_study_config: RateStudyConfig):
        try:
            logging.info(f"{'='*20}Rate study log started.{'='*20}")
            self.rate_study_config = rate_study_config
        except Exception as e:
            raise KnnLabException(e, sys) from e

    def initiate_rate_study(self) -> RateStudyArtifact:
        try:
            result = run_rate_study(self.rate_study_config)
            out_dir = self.rate_study_config.out_dir
            per_n_file_path = os.path.join(out_dir, PER_N_FILE_NAME)
            summary_file_path = os.path.join(out_dir, SUMMARY_FILE_NAME)
            write_csv(per_n_file_path, per_n_dataframe(result))
            write_csv(summary_file_path, summary_dataframe(result))
            rate_study_artifact = RateStudyArtifact(result=result,
                                                    per_n_file_path=per_n_file_path,
                                                    summary_file_path=summary_file_path)
            logging.info(f"Rate study artifact: per_n=[{per_n_file_path}], summary=[{summary_file_path}]")
            return rate_study_artifact
        except KnnLabException:
            raise
        except Exception as e:
            raise KnnLabException(e, sys) from e

    def __del__(self):
        logging.info(f"{'='*20}Rate study log completed.{'='*20}")
