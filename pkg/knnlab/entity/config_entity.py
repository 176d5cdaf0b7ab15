from collections import namedtuple


RunConfig = namedtuple("RunConfig", ["subcommand", "config_path", "overrides", "out_dir", "threads"])

EstimatorConfig = namedtuple("EstimatorConfig", ["c1", "c2", "C_M", "kernel", "degenerate_policy"])

KernelCheckConfig = namedtuple("KernelCheckConfig", ["kernel", "tolerance", "method", "budget",
                                                     "grid_points", "scale_points", "out_dir"])

EstimateConfig = namedtuple("EstimateConfig", ["data_file_path", "grid_file_path", "out_file_path",
                                               "target", "estimator_config", "leaf_size"])

RateStudyConfig = namedtuple("RateStudyConfig", ["model", "estimator_config", "target", "n_grid",
                                                 "trials", "eval_grid", "grid_points", "seed",
                                                 "leaf_size", "threads", "out_dir"])

SandwichConfig = namedtuple("SandwichConfig", ["model", "estimator_config", "target", "n", "seed",
                                               "grid_points", "beta_rule", "beta", "volume_corrected",
                                               "leaf_size", "out_dir"])

BiasCheckConfig = namedtuple("BiasCheckConfig", ["model", "kernel", "target", "x", "d2", "halvings",
                                                 "d1_ratio", "budget", "out_dir"])

BenchConfig = namedtuple("BenchConfig", ["n", "p", "queries", "k", "leaf_size", "seed", "out_dir"])
