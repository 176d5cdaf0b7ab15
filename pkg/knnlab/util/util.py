import math
import os
import sys
from typing import List

import numpy as np
import pandas as pd
import yaml

from knnlab.exception import KnnLabException

CSV_FLOAT_FORMAT = "%.17g"


def read_yaml_file(file_path: str) -> dict:
    """
    Reads a YAML file and returns the contents as a dictionary.
    file_path: str
    """
    try:
        with open(file_path, "rb") as yaml_file:
            return yaml.safe_load(yaml_file) or {}
    except Exception as e:
        raise KnnLabException(e, sys) from e


def parse_scalar(text: str):
    """Types a raw `value` string the way YAML would ("0.7" -> float, "true" -> bool)."""
    try:
        value = yaml.safe_load(text)
    except yaml.YAMLError:
        return text.strip()
    if isinstance(value, str):
        # YAML 1.1 reads exponent floats without a dot ("1e-6") as strings
        try:
            return float(value)
        except ValueError:
            return value
    return value


def read_key_value_file(file_path: str) -> dict:
    """
    Reads `key=value` lines; blank lines and `#` comments are skipped.
    file_path: str
    """
    try:
        config = {}
        with open(file_path, "r", encoding="utf-8") as config_file:
            for line_number, line in enumerate(config_file, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{file_path}:{line_number}: expected key=value, got [{line}]")
                key, value = line.split("=", 1)
                config[key.strip()] = parse_scalar(value)
        return config
    except Exception as e:
        raise KnnLabException(e, sys) from e


def read_run_file(file_path: str) -> dict:
    """YAML for .yaml/.yml files, key=value otherwise."""
    if file_path.endswith((".yaml", ".yml")):
        return read_yaml_file(file_path)
    return read_key_value_file(file_path)


def write_csv(file_path: str, dataframe: pd.DataFrame):
    """
    Writes a dataframe with round-trip float formatting so identical
    results give byte-identical files.
    """
    try:
        os.makedirs(os.path.dirname(file_path) or ".", exist_ok=True)
        dataframe.to_csv(file_path, index=False, float_format=CSV_FLOAT_FORMAT,
                         encoding="utf-8", lineterminator="\n")
    except Exception as e:
        raise KnnLabException(e, sys) from e


def read_csv(file_path: str) -> pd.DataFrame:
    try:
        return pd.read_csv(file_path, encoding="utf-8", float_precision="round_trip")
    except Exception as e:
        raise KnnLabException(e, sys) from e


def exact_row_sums(matrix: np.ndarray) -> np.ndarray:
    """
    Correctly rounded sum of every row (math.fsum), independent of the
    order of the terms.
    """
    matrix = np.atleast_2d(matrix)
    return np.array([math.fsum(row) for row in matrix.tolist()], dtype=float)


def coordinate_columns(p: int) -> List[str]:
    return [f"x{j + 1}" for j in range(p)]


def format_scalar(value) -> str:
    """Inverse of parse_scalar for the values a run file holds."""
    text = yaml.safe_dump(value, default_flow_style=True, width=math.inf)
    return text.replace("\n...\n", "").strip()


def write_key_value_file(file_path: str, data: dict, comments: List[str] = ()):
    """Writes `key=value` lines sorted by key, after `# comment` lines."""
    try:
        os.makedirs(os.path.dirname(file_path) or ".", exist_ok=True)
        with open(file_path, "w", encoding="utf-8") as config_file:
            for comment in comments:
                config_file.write(f"# {comment}\n")
            for key in sorted(data):
                config_file.write(f"{key}={format_scalar(data[key])}\n")
    except Exception as e:
        raise KnnLabException(e, sys) from e
