import sys
from typing import Optional

import numpy as np
import pandas as pd

from knnlab.exception import InvalidData, KnnLabException, MissingResponses
from knnlab.logger import logging
from knnlab.util.util import coordinate_columns, read_csv, write_csv

RESPONSE_COLUMN = "y"


class SampleSet:
    """
    n observations X (n x p) with optional responses Y.
    Arrays are copied and frozen on construction.
    """

    def __init__(self, X, Y=None):
        X = np.array(X, dtype=float, copy=True)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise InvalidData(f"sample must be a non-empty n x p matrix, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise InvalidData("sample coordinates must all be finite")
        if Y is not None:
            Y = np.array(Y, dtype=float, copy=True).reshape(-1)
            if Y.shape[0] != X.shape[0]:
                raise InvalidData(f"responses have length {Y.shape[0]}, expected {X.shape[0]}")
            if not np.all(np.isfinite(Y)):
                raise InvalidData("responses must all be finite")
            Y.setflags(write=False)
        X.setflags(write=False)
        self.X = X
        self.Y = Y

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def has_responses(self) -> bool:
        return self.Y is not None

    def diameter_bound(self) -> float:
        """Diagonal of the bounding box (an upper bound of the data diameter)."""
        return float(np.sqrt(np.sum((self.X.max(axis=0) - self.X.min(axis=0)) ** 2)))

    def to_dataframe(self) -> pd.DataFrame:
        dataframe = pd.DataFrame(self.X, columns=coordinate_columns(self.p))
        if self.Y is not None:
            dataframe[RESPONSE_COLUMN] = self.Y
        return dataframe

    def __repr__(self) -> str:
        return f"SampleSet(n={self.n}, p={self.p}, responses={self.has_responses})"


def load_sample_set(file_path: str, require_responses: bool = False) -> SampleSet:
    """CSV with header x1,...,xp[,y]."""
    try:
        dataframe = read_csv(file_path)
        has_y = RESPONSE_COLUMN in dataframe.columns
        p = dataframe.shape[1] - int(has_y)
        expected = coordinate_columns(p) + ([RESPONSE_COLUMN] if has_y else [])
        if list(dataframe.columns) != expected:
            raise InvalidData(f"{file_path}: header must be {','.join(expected)}, got {','.join(dataframe.columns)}")
        if require_responses and not has_y:
            raise MissingResponses(f"{file_path}: a response column [{RESPONSE_COLUMN}] is required")
        Y: Optional[np.ndarray] = dataframe[RESPONSE_COLUMN].to_numpy() if has_y else None
        sample = SampleSet(dataframe[coordinate_columns(p)].to_numpy(), Y)
        logging.info(f"Loaded {sample} from [{file_path}]")
        return sample
    except KnnLabException:
        raise
    except Exception as e:
        raise InvalidData(e, sys) from e


def save_sample_set(file_path: str, sample: SampleSet):
    write_csv(file_path, sample.to_dataframe())
    logging.info(f"Saved {sample} to [{file_path}]")
