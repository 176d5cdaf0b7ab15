import os
import tempfile

# keep log files of test runs out of the working tree; must run before knnlab is imported
os.environ.setdefault("KNN_LAB_LOG_DIR", tempfile.mkdtemp(prefix="knnlab-logs-"))

import numpy as np
import pytest

from knnlab.entity.estimator import make_estimator_config
from knnlab.entity.kernel import make_kernel
from knnlab.entity.neighbor_index import build_index
from knnlab.entity.sample_set import SampleSet


@pytest.fixture
def gaussian_1d():
    return make_kernel("gaussian_product", p=1, r=1)


@pytest.fixture
def gaussian_config(gaussian_1d):
    return make_estimator_config(gaussian_1d, c1=0.7, c2=0.05, C_M=4.0)


@pytest.fixture
def two_point_index():
    """X = {-1, 1} with Y = {2, 4}."""
    return build_index(SampleSet(np.array([[-1.0], [1.0]]), np.array([2.0, 4.0])))


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)
