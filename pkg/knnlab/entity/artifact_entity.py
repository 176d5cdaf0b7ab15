from collections import namedtuple


MomentReport = namedtuple("MomentReport", ["integral_of_K", "max_abs_moment_per_degree",
                                           "abs_moment_r_plus_1", "verified_order", "tolerance_used"])

MonotoneReport = namedtuple("MonotoneReport", ["holds", "witness"])

KernelCheckArtifact = namedtuple("KernelCheckArtifact", ["kernel_spec", "moment_report", "monotone_report",
                                                         "moment_file_path", "summary_file_path"])

RadiusResult = namedtuple("RadiusResult", ["radius", "neighbor_ids"])

EstimateAtPoint = namedtuple("EstimateAtPoint", ["value", "radius_used", "k_used", "floored"])

SplitEstimate = namedtuple("SplitEstimate", ["g1_hat", "g2_hat"])

GridEstimate = namedtuple("GridEstimate", ["values", "radii", "k_used", "floored"])

EstimationArtifact = namedtuple("EstimationArtifact", ["out_file_path", "n_points", "target"])

TrialSample = namedtuple("TrialSample", ["sample", "seed", "clip_count"])

RateStudyRow = namedtuple("RateStudyRow", ["n", "k_n", "b_n", "M_n", "mean_sup_error", "median",
                                           "q10", "q90", "clip_rate", "theory_rate"])

RateStudyResult = namedtuple("RateStudyResult", ["per_n", "fitted_slope", "fitted_intercept",
                                                 "theory_exponent_bias", "theory_exponent_variance",
                                                 "degenerate_trials"])

RateStudyArtifact = namedtuple("RateStudyArtifact", ["result", "per_n_file_path", "summary_file_path"])

SandwichPoint = namedtuple("SandwichPoint", ["x", "D_minus", "D_plus", "R_n", "contained",
                                             "f1", "f_hat", "f2", "ordered_given_containment"])

SandwichReport = namedtuple("SandwichReport", ["per_point", "containment_rate", "conditional_order_rate",
                                               "beta_n"])

SandwichArtifact = namedtuple("SandwichArtifact", ["report", "sandwich_file_path", "summary_file_path"])

BiasOracleResult = namedtuple("BiasOracleResult", ["expected_value", "bias_abs", "truth", "gamma",
                                                   "boundary_flagged"])

BiasCheckArtifact = namedtuple("BiasCheckArtifact", ["results", "ratios", "bias_file_path"])

BenchArtifact = namedtuple("BenchArtifact", ["build_time_s", "per_query_s", "brute_force_per_query_s",
                                             "reference_per_query_s", "agreement_count", "queries",
                                             "bench_file_path"])
