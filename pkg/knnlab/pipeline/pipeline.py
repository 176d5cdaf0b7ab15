import os
import sys

from knnlab.component.bench import IndexBenchmark
from knnlab.component.bias_check import BiasCheck
from knnlab.component.estimation import Estimation
from knnlab.component.kernel_check import KernelCheck
from knnlab.component.rate_study import RateStudy
from knnlab.component.sandwich import SandwichCheck
from knnlab.config.configuration import Configuration
from knnlab.constant import (ARTIFACT_VERSION, BENCH_COMMAND, BIAS_CHECK_COMMAND, CURRENT_TIME_STAMP,
                             ESTIMATE_COMMAND, EXIT_RUNTIME_ERROR, EXIT_SUCCESS, EXIT_VALIDATION_ERROR,
                             KERNEL_CHECK_COMMAND, MANIFEST_FILE_NAME, RATE_STUDY_COMMAND, SANDWICH_COMMAND)
from knnlab.entity.config_entity import RunConfig
from knnlab.exception import ConfigValidationError, InvalidSchedule, KnnLabException, UnsupportedKernelSpec
from knnlab.logger import logging
from knnlab.util.util import write_key_value_file

VALIDATION_ERRORS = (ConfigValidationError, InvalidSchedule, UnsupportedKernelSpec)


class Pipeline:

    def __init__(self, config: Configuration) -> None:
        try:
            os.makedirs(config.out_dir, exist_ok=True)
            self.config = config
        except Exception as e:
            raise KnnLabException(e, sys) from e

    def write_manifest(self) -> str:
        """The resolved run file, re-runnable as --config, headed by version, seed and time."""
        manifest_file_path = os.path.join(self.config.out_dir, MANIFEST_FILE_NAME)
        write_key_value_file(manifest_file_path, self.config.config_info, comments=[
            f"artifact_version: {ARTIFACT_VERSION}",
            f"subcommand: {self.config.subcommand}",
            f"seed: {self.config.seed}",
            f"threads: {self.config.threads}",
            f"created: {CURRENT_TIME_STAMP}",
        ])
        logging.info(f"Manifest written to [{manifest_file_path}]")
        return manifest_file_path

    def start_kernel_check(self):
        return KernelCheck(kernel_check_config=self.config.subcommand_config).initiate_kernel_check()

    def start_estimation(self):
        return Estimation(estimate_config=self.config.subcommand_config).initiate_estimation()

    def start_rate_study(self):
        return RateStudy(rate_study_config=self.config.subcommand_config).initiate_rate_study()

    def start_sandwich_check(self):
        return SandwichCheck(sandwich_config=self.config.subcommand_config).initiate_sandwich_check()

    def start_bias_check(self):
        return BiasCheck(bias_check_config=self.config.subcommand_config).initiate_bias_check()

    def start_benchmark(self):
        return IndexBenchmark(bench_config=self.config.subcommand_config).initiate_benchmark()

    def run_pipeline(self):
        try:
            self.write_manifest()
            stages = {
                KERNEL_CHECK_COMMAND: self.start_kernel_check,
                ESTIMATE_COMMAND: self.start_estimation,
                RATE_STUDY_COMMAND: self.start_rate_study,
                SANDWICH_COMMAND: self.start_sandwich_check,
                BIAS_CHECK_COMMAND: self.start_bias_check,
                BENCH_COMMAND: self.start_benchmark,
            }
            artifact = stages[self.config.subcommand]()
            logging.info(f"{self.config.subcommand} completed")
            return artifact
        except KnnLabException:
            raise
        except Exception as e:
            raise KnnLabException(e, sys) from e


def _one_line(error) -> str:
    message = error.args[0] if error.args else error
    return " ".join(str(message).split())


def dispatch(run_config: RunConfig) -> int:
    """Runs one subcommand; 0 on success, 2 on invalid configuration, 3 on runtime failure."""
    try:
        configuration = Configuration(run_config.subcommand,
                                      config_file_path=run_config.config_path,
                                      overrides=run_config.overrides,
                                      out_dir=run_config.out_dir,
                                      threads=run_config.threads)
        Pipeline(configuration).run_pipeline()
        return EXIT_SUCCESS
    except ConfigValidationError as e:
        message = f"invalid configuration [{e.key}]: {_one_line(e)}"
        status = EXIT_VALIDATION_ERROR
    except VALIDATION_ERRORS as e:
        message = f"invalid configuration: {_one_line(e)}"
        status = EXIT_VALIDATION_ERROR
    except KnnLabException as e:
        message = f"{type(e).__name__}: {_one_line(e)}"
        status = EXIT_RUNTIME_ERROR
    except Exception as e:
        message = f"{type(e).__name__}: {_one_line(e)}"
        status = EXIT_RUNTIME_ERROR
    logging.error(message)
    print(f"knn-lab: {message}", file=sys.stderr)
    return status
