import os
import sys
import time

import numpy as np
import pandas as pd
from sklearn.neighbors import KDTree

from knnlab.constant import BENCH_FILE_NAME
from knnlab.entity.artifact_entity import BenchArtifact
from knnlab.entity.config_entity import BenchConfig
from knnlab.entity.neighbor_index import build_index, bruteforce_query
from knnlab.entity.sample_set import SampleSet
from knnlab.entity.synthetic_model import stream_generator
from knnlab.exception import KnnLabException, NotEnoughPoints
from knnlab.logger import logging
from knnlab.util.util import write_csv

DATA_STREAM = (0,)
QUERY_STREAM = (1,)


class IndexBenchmark:
    """
    Times the kd-tree against brute force (and scikit-learn's KDTree as an outside
    reference) on uniform data in [0, 1]^p. A query agrees when ids and squared
    distances match the brute-force answer exactly.
    """

    def __init__(self, bench_config: BenchConfig):
        try:
            logging.info(f"{'='*20}Index benchmark log started.{'='*20}")
            self.bench_config = bench_config
        except Exception as e:
            raise KnnLabException(e, sys) from e

    def initiate_benchmark(self) -> BenchArtifact:
        try:
            config = self.bench_config
            if not 1 <= config.k <= config.n:
                raise NotEnoughPoints(f"k={config.k} must lie in [1, n={config.n}]")
            data = SampleSet(stream_generator(config.seed, DATA_STREAM).random((config.n, config.p)))
            queries = stream_generator(config.seed, QUERY_STREAM).random((config.queries, config.p))

            start = time.perf_counter()
            index = build_index(data, leaf_size=config.leaf_size)
            build_time_s = time.perf_counter() - start

            start = time.perf_counter()
            tree_answers = [index.query(x, config.k) for x in queries]
            per_query_s = (time.perf_counter() - start) / config.queries

            start = time.perf_counter()
            brute_answers = [bruteforce_query(data, x, config.k) for x in queries]
            brute_force_per_query_s = (time.perf_counter() - start) / config.queries

            reference = KDTree(data.X, leaf_size=config.leaf_size)
            start = time.perf_counter()
            reference.query(queries, k=config.k)
            reference_per_query_s = (time.perf_counter() - start) / config.queries

            agreement_count = sum(
                int(np.array_equal(tree_ids, brute_ids) and np.array_equal(tree_d2, brute_d2))
                for (tree_d2, tree_ids), (brute_d2, brute_ids) in zip(tree_answers, brute_answers))
            if agreement_count < config.queries:
                logging.warning(f"kd-tree disagreed with brute force on {config.queries - agreement_count} queries")

            bench_file_path = os.path.join(config.out_dir, BENCH_FILE_NAME)
            write_csv(bench_file_path, pd.DataFrame([{
                "n": config.n, "p": config.p, "k": config.k, "queries": config.queries,
                "leaf_size": config.leaf_size,
                "build_time_s": build_time_s,
                "per_query_s": per_query_s,
                "brute_force_per_query_s": brute_force_per_query_s,
                "reference_per_query_s": reference_per_query_s,
                "agreement_count": agreement_count,
            }]))
            bench_artifact = BenchArtifact(build_time_s=build_time_s, per_query_s=per_query_s,
                                           brute_force_per_query_s=brute_force_per_query_s,
                                           reference_per_query_s=reference_per_query_s,
                                           agreement_count=agreement_count, queries=config.queries,
                                           bench_file_path=bench_file_path)
            logging.info(f"Index benchmark artifact: {bench_artifact}")
            return bench_artifact
        except KnnLabException:
            raise
        except Exception as e:
            raise KnnLabException(e, sys) from e

    def __del__(self):
        logging.info(f"{'='*20}Index benchmark log completed.{'='*20}")
