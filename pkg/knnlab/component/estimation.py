import sys

import pandas as pd

from knnlab.constant import TARGET_DENSITY
from knnlab.entity.artifact_entity import EstimationArtifact
from knnlab.entity.config_entity import EstimateConfig
from knnlab.entity.estimator import estimate_on_grid
from knnlab.entity.neighbor_index import build_index
from knnlab.entity.sample_set import load_sample_set
from knnlab.exception import DimensionMismatch, KnnLabException
from knnlab.logger import logging
from knnlab.util.util import coordinate_columns, read_csv, write_csv


def load_grid(file_path: str, p: int):
    """Query points: CSV with header x1,...,xp."""
    dataframe = read_csv(file_path)
    columns = coordinate_columns(p)
    if list(dataframe.columns) != columns:
        raise DimensionMismatch(f"{file_path}: grid header must be {','.join(columns)}, "
                                f"got {','.join(dataframe.columns)}")
    return dataframe[columns].to_numpy(dtype=float)


class Estimation:

    def __init__(self, estimate_config: EstimateConfig):
        try:
            logging.info(f"{'='*20}Estimation log started.{'='*20}")
            self.estimate_config = estimate_config
        except Exception as e:
            raise KnnLabException(e, sys) from e

    def initiate_estimation(self) -> EstimationArtifact:
        try:
            config = self.estimate_config
            sample_set = load_sample_set(config.data_file_path,
                                         require_responses=config.target != TARGET_DENSITY)
            grid = load_grid(config.grid_file_path, sample_set.p)
            index = build_index(sample_set, leaf_size=config.leaf_size)
            logging.info(f"Estimating {config.target} at {grid.shape[0]} points with {index}")
            estimate = estimate_on_grid(index, config.estimator_config, grid, config.target)

            dataframe = pd.DataFrame(grid, columns=coordinate_columns(sample_set.p))
            dataframe["value"] = estimate.values
            dataframe["radius_used"] = estimate.radii
            dataframe["floored"] = estimate.floored
            write_csv(config.out_file_path, dataframe)

            estimation_artifact = EstimationArtifact(out_file_path=config.out_file_path,
                                                     n_points=int(grid.shape[0]), target=config.target)
            logging.info(f"Estimation artifact: {estimation_artifact}")
            return estimation_artifact
        except KnnLabException:
            raise
        except Exception as e:
            raise KnnLabException(e, sys) from e

    def __del__(self):
        logging.info(f"{'='*20}Estimation log completed.{'='*20}")
