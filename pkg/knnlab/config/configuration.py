import math
import os
from typing import Optional

import numpy as np

from knnlab.constant import *
from knnlab.component.bias_check import BIAS_TARGETS
from knnlab.component.sandwich import SANDWICH_TARGETS
from knnlab.entity.config_entity import (BenchConfig, BiasCheckConfig, EstimateConfig, EstimatorConfig,
                                         KernelCheckConfig, RateStudyConfig, SandwichConfig)
from knnlab.entity.estimator import make_estimator_config
from knnlab.entity.kernel import Kernel, parse_kernel_spec
from knnlab.entity.synthetic_model import SyntheticModel, make_model
from knnlab.exception import ConfigValidationError, KnnLabException
from knnlab.logger import logging
from knnlab.util.util import parse_scalar, read_run_file

ESTIMATES_FILE_NAME = "estimates.csv"


def resolve_threads(threads: Optional[int] = None) -> int:
    """--threads, else env KNN_LAB_THREADS, else the available parallelism."""
    value = threads if threads is not None else os.environ.get(THREADS_ENV_KEY)
    if value is None or value == "":
        return os.cpu_count() or 1
    try:
        resolved = int(value)
    except (TypeError, ValueError):
        raise ConfigValidationError("threads", f"threads must be a positive integer, got [{value}]")
    if resolved < 1:
        raise ConfigValidationError("threads", f"threads must be a positive integer, got {resolved}")
    return resolved


def geometric_sizes(n_min: int, n_max: int, n_points: int) -> list:
    ratio = n_max / n_min
    return [int(round(n_min * ratio ** (i / (n_points - 1)))) for i in range(n_points)]


class Configuration:
    """
    Resolves one run: subcommand defaults < run file < overrides. Every value is
    checked here, so a run that starts never stops on a bad parameter.
    """

    def __init__(self, subcommand: str, config_file_path: Optional[str] = None,
                 overrides: Optional[dict] = None, out_dir: Optional[str] = None,
                 threads: Optional[int] = None) -> None:
        if subcommand not in SUBCOMMAND_DEFAULTS:
            raise ConfigValidationError("subcommand", f"unknown subcommand [{subcommand}], expected one of {SUBCOMMANDS}")
        self.subcommand = subcommand
        defaults = dict(COMMON_DEFAULTS, **SUBCOMMAND_DEFAULTS[subcommand])

        file_info = {}
        if config_file_path is not None:
            if not os.path.isfile(config_file_path):
                raise ConfigValidationError("config", f"config file [{config_file_path}] does not exist")
            try:
                file_info = read_run_file(config_file_path)
            except KnnLabException as e:
                raise ConfigValidationError("config", f"cannot parse [{config_file_path}]: {e.args[0]}") from e
            if not isinstance(file_info, dict):
                raise ConfigValidationError("config", f"[{config_file_path}] must hold a mapping of keys to values")

        self.config_info = dict(defaults)
        for source in (file_info, overrides or {}):
            for key, value in source.items():
                if key not in defaults:
                    raise ConfigValidationError(key, f"unknown configuration key [{key}] for {subcommand}")
                self.config_info[key] = value
        if out_dir is not None:
            self.config_info[OUT_DIR_KEY] = out_dir
        self.threads = resolve_threads(threads)
        self.out_dir = self._text(OUT_DIR_KEY)

        getters = {
            KERNEL_CHECK_COMMAND: self.get_kernel_check_config,
            ESTIMATE_COMMAND: self.get_estimate_config,
            RATE_STUDY_COMMAND: self.get_rate_study_config,
            SANDWICH_COMMAND: self.get_sandwich_config,
            BIAS_CHECK_COMMAND: self.get_bias_check_config,
            BENCH_COMMAND: self.get_bench_config,
        }
        self.subcommand_config = getters[subcommand]()
        logging.info(f"Resolved {subcommand} configuration: {self.config_info}")

    @property
    def seed(self):
        return self.config_info.get(SEED_KEY)

    # typed accessors; each failure names its key

    def _value(self, key: str):
        return self.config_info[key]

    def _text(self, key: str) -> str:
        value = self._value(key)
        if not isinstance(value, str) or not value:
            raise ConfigValidationError(key, f"{key} must be a non-empty string, got [{value}]")
        return value

    def _choice(self, key: str, choices) -> str:
        value = self._value(key)
        if value not in choices:
            raise ConfigValidationError(key, f"{key} must be one of {tuple(choices)}, got [{value}]")
        return value

    def _number(self, key: str, low: float = -math.inf, high: float = math.inf,
                open_low: bool = True, open_high: bool = True, allow_none: bool = False,
                condition: Optional[str] = None) -> Optional[float]:
        value = self._value(key)
        if value is None and allow_none:
            return None
        if isinstance(value, str):
            value = parse_scalar(value)
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigValidationError(key, f"{key} must be a finite number, got [{value}]")
        below = value <= low if open_low else value < low
        above = value >= high if open_high else value > high
        if below or above:
            interval = f"{'(' if open_low else '['}{low:g}, {high:g}{')' if open_high else ']'}"
            bound = f"{interval} ({condition})" if condition else interval
            raise ConfigValidationError(key, f"{key} must lie in {bound}, got {key}={value}")
        return float(value)

    def _integer(self, key: str, minimum: int = 1, allow_none: bool = False) -> Optional[int]:
        value = self._value(key)
        if value is None and allow_none:
            return None
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigValidationError(key, f"{key} must be an integer, got [{value}]")
        if value < minimum:
            raise ConfigValidationError(key, f"{key} must be >= {minimum}, got {value}")
        return int(value)

    def _flag(self, key: str) -> bool:
        value = self._value(key)
        if not isinstance(value, bool):
            raise ConfigValidationError(key, f"{key} must be true or false, got [{value}]")
        return value

    def _existing_file(self, key: str) -> str:
        file_path = self._text(key)
        if not os.path.isfile(file_path):
            raise ConfigValidationError(key, f"{key} file [{file_path}] does not exist")
        return file_path

    def _kernel(self, p: Optional[int] = None) -> Kernel:
        value = self._text(KERNEL_KEY)
        try:
            kernel = parse_kernel_spec(value)
        except KnnLabException as e:
            raise ConfigValidationError(KERNEL_KEY, f"{e.args[0]} ({KERNEL_CONDITION})") from e
        if p is not None and kernel.p != p:
            raise ConfigValidationError(KERNEL_KEY, f"kernel dimension {kernel.p} does not match p={p}")
        return kernel

    def _model(self) -> SyntheticModel:
        name = self._choice(MODEL_KEY, MODEL_NAMES)
        p = self._integer(P_KEY)
        sigma = self._number(SIGMA_KEY, low=0.0, open_low=False, allow_none=True)
        box = self._number(BOX_KEY, low=0.0, allow_none=True)
        try:
            return make_model(name, p=p, sigma=sigma, box=box)
        except KnnLabException as e:
            raise ConfigValidationError(MODEL_KEY, e.args[0]) from e

    def _estimator_config(self, kernel: Kernel) -> EstimatorConfig:
        c1 = self._number(C1_KEY, *C1_BOUNDS, condition=C1_CONDITION)
        c2 = self._number(C2_KEY, *C2_BOUNDS, condition=C2_CONDITION)
        C_M = self._number(C_M_KEY, low=0.0, condition=C_M_CONDITION)
        policy = self._choice(DEGENERATE_POLICY_KEY, DEGENERATE_POLICIES)
        return make_estimator_config(kernel, c1=c1, c2=c2, C_M=C_M, degenerate_policy=policy)

    def get_kernel_check_config(self) -> KernelCheckConfig:
        budget = self._integer(BUDGET_KEY, minimum=MIN_INTEGRATION_BUDGET, allow_none=True)
        kernel_check_config = KernelCheckConfig(kernel=self._kernel(),
                                                tolerance=self._number(TOLERANCE_KEY, low=0.0),
                                                method=self._choice(METHOD_KEY, MOMENT_METHODS),
                                                budget=budget,
                                                grid_points=self._integer(GRID_POINTS_KEY, MIN_MONOTONE_POINTS,
                                                                          allow_none=True),
                                                scale_points=self._integer(SCALE_POINTS_KEY, MIN_MONOTONE_POINTS),
                                                out_dir=self.out_dir)
        if kernel_check_config.method == TENSOR_QUADRATURE and kernel_check_config.kernel.p > MAX_TENSOR_QUADRATURE_DIMENSION:
            raise ConfigValidationError(METHOD_KEY, f"{TENSOR_QUADRATURE} supports p <= {MAX_TENSOR_QUADRATURE_DIMENSION}; "
                                                    f"use {MONTE_CARLO}")
        logging.info(f"Kernel check config: {kernel_check_config}")
        return kernel_check_config

    def get_estimate_config(self) -> EstimateConfig:
        out_file_path = self._value(OUT_KEY)
        if out_file_path is None:
            out_file_path = os.path.join(self.out_dir, ESTIMATES_FILE_NAME)
        estimate_config = EstimateConfig(data_file_path=self._existing_file(DATA_KEY),
                                         grid_file_path=self._existing_file(GRID_KEY),
                                         out_file_path=str(out_file_path),
                                         target=self._choice(TARGET_KEY, ESTIMATE_TARGETS),
                                         estimator_config=self._estimator_config(self._kernel()),
                                         leaf_size=self._integer(LEAF_SIZE_KEY))
        logging.info(f"Estimate config: {estimate_config}")
        return estimate_config

    def get_rate_study_config(self) -> RateStudyConfig:
        model = self._model()
        kernel = self._kernel(p=model.p)
        if kernel.order > model.r_model:
            raise ConfigValidationError(KERNEL_KEY, f"kernel order {kernel.order} exceeds the smoothness "
                                                    f"{model.r_model} of model {model.name}")
        n_min = self._integer(N_MIN_KEY, minimum=2)
        n_max = self._integer(N_MAX_KEY, minimum=n_min + 1)
        n_points = self._integer(N_POINTS_KEY, minimum=MIN_N_GRID_SIZES)
        n_grid = geometric_sizes(n_min, n_max, n_points)
        if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
            raise ConfigValidationError(N_POINTS_KEY, f"{n_points} sizes between {n_min} and {n_max} "
                                                      f"are not strictly increasing: {n_grid}")
        rate_study_config = RateStudyConfig(model=model,
                                            estimator_config=self._estimator_config(kernel),
                                            target=self._choice(TARGET_KEY, ESTIMATE_TARGETS),
                                            n_grid=n_grid,
                                            trials=self._integer(TRIALS_KEY, minimum=MIN_TRIALS),
                                            eval_grid=None,
                                            grid_points=self._integer(GRID_KEY),
                                            seed=self._integer(SEED_KEY, minimum=0),
                                            leaf_size=self._integer(LEAF_SIZE_KEY),
                                            threads=self.threads,
                                            out_dir=self.out_dir)
        logging.info(f"Rate study config: {rate_study_config}")
        return rate_study_config

    def get_sandwich_config(self) -> SandwichConfig:
        model = self._model()
        beta_rule = self._choice(BETA_RULE_KEY, BETA_RULES)
        beta = self._number(BETA_KEY, low=0.0, high=1.0, open_high=False, allow_none=beta_rule != BETA_FIXED)
        sandwich_config = SandwichConfig(model=model,
                                         estimator_config=self._estimator_config(self._kernel(p=model.p)),
                                         target=self._choice(TARGET_KEY, SANDWICH_TARGETS),
                                         n=self._integer(N_KEY, minimum=2),
                                         seed=self._integer(SEED_KEY, minimum=0),
                                         grid_points=self._integer(GRID_KEY),
                                         beta_rule=beta_rule,
                                         beta=beta,
                                         volume_corrected=self._flag(VOLUME_CORRECTED_KEY),
                                         leaf_size=self._integer(LEAF_SIZE_KEY),
                                         out_dir=self.out_dir)
        logging.info(f"Sandwich config: {sandwich_config}")
        return sandwich_config

    def get_bias_check_config(self) -> BiasCheckConfig:
        model = self._model()
        x = self._value(X_KEY)
        if x is not None:
            point = np.atleast_1d(np.asarray(x, dtype=object))
            if point.shape != (model.p,) or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in point):
                raise ConfigValidationError(X_KEY, f"x must be {model.p} number(s), got [{x}]")
            point = point.astype(float)
            if not bool(model.in_box(point)):
                raise ConfigValidationError(X_KEY, f"x={point.tolist()} lies outside the evaluation box of {model.name}")
            x = tuple(point.tolist())
        bias_check_config = BiasCheckConfig(model=model,
                                            kernel=self._kernel(p=model.p),
                                            target=self._choice(TARGET_KEY, BIAS_TARGETS),
                                            x=x,
                                            d2=self._number(D2_KEY, low=0.0),
                                            halvings=self._integer(HALVINGS_KEY),
                                            d1_ratio=self._number(D1_RATIO_KEY, low=0.0),
                                            budget=self._integer(BUDGET_KEY, minimum=MIN_INTEGRATION_BUDGET,
                                                                 allow_none=True),
                                            out_dir=self.out_dir)
        logging.info(f"Bias check config: {bias_check_config}")
        return bias_check_config

    def get_bench_config(self) -> BenchConfig:
        n = self._integer(N_KEY)
        k = self._integer(K_KEY)
        if k > n:
            raise ConfigValidationError(K_KEY, f"k={k} exceeds n={n}")
        bench_config = BenchConfig(n=n, p=self._integer(P_KEY), queries=self._integer(QUERIES_KEY), k=k,
                                   leaf_size=self._integer(LEAF_SIZE_KEY),
                                   seed=self._integer(SEED_KEY, minimum=0),
                                   out_dir=self.out_dir)
        logging.info(f"Bench config: {bench_config}")
        return bench_config
