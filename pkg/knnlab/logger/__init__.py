import logging
import os
from datetime import datetime

import pandas as pd

#Log directory and level, overridable for test runs and batch jobs
LOG_DIR = os.getenv("KNN_LAB_LOG_DIR", "logs")
LOG_LEVEL = os.getenv("KNN_LAB_LOG_LEVEL", "INFO").upper()

CURRENT_TIME_STAMP = f"{datetime.now().strftime('%Y-%m-%d-%H-%M-%S')}"
LOG_FILE_NAME = f"knnlab_{CURRENT_TIME_STAMP}_{os.getpid()}.log"

LOG_SEPARATOR = "^;"
LOG_COLUMNS = ["time_stamp", "level", "line_number", "file_name", "function_name", "message"]

os.makedirs(LOG_DIR, exist_ok=True)
LOG_FILE_PATH = os.path.join(LOG_DIR, LOG_FILE_NAME)

logging.basicConfig(filename=LOG_FILE_PATH,
filemode="w",
format=LOG_SEPARATOR.join(["[%(asctime)s]", "%(levelname)s", "%(lineno)s", "%(filename)s",
                           "%(funcName)s()", "%(message)s"]),
level=getattr(logging, LOG_LEVEL, logging.INFO),
force=True
)


def read_log_records(file_path: str = LOG_FILE_PATH) -> pd.DataFrame:
    """One row per log record; continuation lines of multi-line messages are folded in."""
    records = []
    with open(file_path, encoding="utf-8") as log_file:
        for line in log_file:
            fields = line.rstrip("\n").split(LOG_SEPARATOR, len(LOG_COLUMNS) - 1)
            if len(fields) == len(LOG_COLUMNS):
                records.append(fields)
            elif records:
                records[-1][-1] += "\n" + line.rstrip("\n")
    return pd.DataFrame(records, columns=LOG_COLUMNS)
