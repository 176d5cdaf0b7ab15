from datetime import datetime

ARTIFACT_VERSION = "knnlab-0.1.0"


def get_current_time_stamp():
    return f"{datetime.now().strftime('%Y-%m-%d-%H-%M-%S')}"


CURRENT_TIME_STAMP = get_current_time_stamp()

#Threads
THREADS_ENV_KEY = "KNN_LAB_THREADS"

#Exit codes
EXIT_SUCCESS = 0
EXIT_VALIDATION_ERROR = 2
EXIT_RUNTIME_ERROR = 3

#Subcommands
KERNEL_CHECK_COMMAND = "kernel-check"
ESTIMATE_COMMAND = "estimate"
RATE_STUDY_COMMAND = "rate-study"
SANDWICH_COMMAND = "sandwich"
BIAS_CHECK_COMMAND = "bias-check"
BENCH_COMMAND = "bench"
SUBCOMMANDS = (KERNEL_CHECK_COMMAND, ESTIMATE_COMMAND, RATE_STUDY_COMMAND,
               SANDWICH_COMMAND, BIAS_CHECK_COMMAND, BENCH_COMMAND)

# Kernel related variables
GAUSSIAN_PRODUCT = "gaussian_product"
GAUSSIAN_RADIAL = "gaussian_radial"
EPANECHNIKOV_RADIAL = "epanechnikov_radial"
POLY_GAUSSIAN = "poly_gaussian_order_r"
KERNEL_FAMILIES = (GAUSSIAN_PRODUCT, GAUSSIAN_RADIAL, EPANECHNIKOV_RADIAL, POLY_GAUSSIAN)

TENSOR_QUADRATURE = "tensor_quadrature"
MONTE_CARLO = "monte_carlo"
MOMENT_METHODS = (TENSOR_QUADRATURE, MONTE_CARLO)

DEFAULT_MOMENT_TOLERANCE = 1e-6
QUADRATURE_NODES_PER_AXIS = 128
MIN_INTEGRATION_BUDGET = 1000
MAX_TENSOR_QUADRATURE_DIMENSION = 3
MC_MAX_STANDARD_ERROR = 1e-2
MONOTONE_BOX_HALF_WIDTH = 6.0
MONOTONE_GRID_POINTS = 256
MONOTONE_SCALE_POINTS = 64
MIN_MONOTONE_POINTS = 16

# Neighbour index related variables
DEFAULT_LEAF_SIZE = 16

# Estimator related variables
TARGET_DENSITY = "density"
TARGET_G = "g"
TARGET_REGRESSION = "regression"
TARGET_G1 = "g1"
TARGET_G2 = "g2"
ESTIMATE_TARGETS = (TARGET_DENSITY, TARGET_G, TARGET_REGRESSION)
POLICY_ERROR = "error"
POLICY_EPSILON_RADIUS = "epsilon_radius"
DEGENERATE_POLICIES = (POLICY_ERROR, POLICY_EPSILON_RADIUS)
EPSILON_RADIUS_FACTOR = 1e-12
C1_BOUNDS = (0.5, 1.0)
C2_BOUNDS = (0.0, 0.1)
KERNEL_CONDITION = "Assumption 4"
C1_CONDITION = "Assumption 5"
C2_CONDITION = "Assumption 6"
C_M_CONDITION = "Assumption 7"

# Synthetic model related variables
MODEL_NAMES = ("M1", "M2", "M3")
DEFAULT_NOISE_SIGMA = 0.5
MIN_ACCEPTANCE_RATE = 1e-3

# Rate lab related variables
MIN_N_GRID_SIZES = 4
MIN_TRIALS = 10
MAX_DEGENERATE_FRACTION = 0.10
BOUNDARY_INSET_FACTOR = 3.0
BETA_CANONICAL = "canonical"
BETA_FIXED = "fixed"
BETA_RULES = (BETA_CANONICAL, BETA_FIXED)
BIAS_MARGIN_FACTOR = 6.0

# Output files
MANIFEST_FILE_NAME = "manifest.txt"
MOMENT_FILE_NAME = "moments.csv"
KERNEL_CHECK_FILE_NAME = "kernel_check.csv"
PER_N_FILE_NAME = "per_n.csv"
SUMMARY_FILE_NAME = "summary.csv"
SANDWICH_FILE_NAME = "sandwich.csv"
SANDWICH_SUMMARY_FILE_NAME = "sandwich_summary.csv"
BIAS_FILE_NAME = "bias.csv"
BENCH_FILE_NAME = "bench.csv"

# Configuration keys
KERNEL_KEY = "kernel"
TOLERANCE_KEY = "tolerance"
METHOD_KEY = "method"
BUDGET_KEY = "budget"
GRID_POINTS_KEY = "grid_points"
SCALE_POINTS_KEY = "scale_points"
DATA_KEY = "data"
GRID_KEY = "grid"
OUT_KEY = "out"
OUT_DIR_KEY = "out_dir"
TARGET_KEY = "target"
C1_KEY = "c1"
C2_KEY = "c2"
C_M_KEY = "C_M"
DEGENERATE_POLICY_KEY = "degenerate_policy"
LEAF_SIZE_KEY = "leaf_size"
MODEL_KEY = "model"
P_KEY = "p"
SIGMA_KEY = "sigma"
BOX_KEY = "box"
N_KEY = "n"
N_MIN_KEY = "n_min"
N_MAX_KEY = "n_max"
N_POINTS_KEY = "n_points"
TRIALS_KEY = "trials"
SEED_KEY = "seed"
BETA_RULE_KEY = "beta_rule"
BETA_KEY = "beta"
VOLUME_CORRECTED_KEY = "volume_corrected"
X_KEY = "x"
D2_KEY = "d2"
HALVINGS_KEY = "halvings"
D1_RATIO_KEY = "d1_ratio"
QUERIES_KEY = "queries"
K_KEY = "k"

COMMON_DEFAULTS = {
    OUT_DIR_KEY: "artifact",
}

KERNEL_CHECK_DEFAULTS = {
    KERNEL_KEY: "gaussian_product:p=1:r=1",
    TOLERANCE_KEY: DEFAULT_MOMENT_TOLERANCE,
    METHOD_KEY: TENSOR_QUADRATURE,
    BUDGET_KEY: None,
    GRID_POINTS_KEY: None,
    SCALE_POINTS_KEY: MONOTONE_SCALE_POINTS,
}

ESTIMATE_DEFAULTS = {
    DATA_KEY: None,
    GRID_KEY: None,
    OUT_KEY: None,
    KERNEL_KEY: "gaussian_product:p=1:r=1",
    TARGET_KEY: TARGET_DENSITY,
    C1_KEY: 0.7,
    C2_KEY: 0.05,
    C_M_KEY: 4.0,
    DEGENERATE_POLICY_KEY: POLICY_ERROR,
    LEAF_SIZE_KEY: DEFAULT_LEAF_SIZE,
}

RATE_STUDY_DEFAULTS = {
    MODEL_KEY: "M3",
    P_KEY: 1,
    SIGMA_KEY: None,
    BOX_KEY: None,
    TARGET_KEY: TARGET_DENSITY,
    KERNEL_KEY: "gaussian_product:p=1:r=1",
    C1_KEY: 0.7,
    C2_KEY: 0.05,
    C_M_KEY: 4.0,
    N_MIN_KEY: 1024,
    N_MAX_KEY: 65536,
    N_POINTS_KEY: 7,
    TRIALS_KEY: 50,
    SEED_KEY: 20240521,
    GRID_KEY: 200,
    DEGENERATE_POLICY_KEY: POLICY_ERROR,
    LEAF_SIZE_KEY: DEFAULT_LEAF_SIZE,
}

SANDWICH_DEFAULTS = {
    MODEL_KEY: "M2",
    P_KEY: 1,
    SIGMA_KEY: None,
    BOX_KEY: None,
    TARGET_KEY: TARGET_DENSITY,
    KERNEL_KEY: "gaussian_product:p=1:r=1",
    C1_KEY: 0.7,
    C2_KEY: 0.05,
    C_M_KEY: 4.0,
    N_KEY: 10000,
    SEED_KEY: 20240521,
    GRID_KEY: 200,
    BETA_RULE_KEY: BETA_CANONICAL,
    BETA_KEY: None,
    VOLUME_CORRECTED_KEY: False,
    DEGENERATE_POLICY_KEY: POLICY_ERROR,
    LEAF_SIZE_KEY: DEFAULT_LEAF_SIZE,
}

BIAS_CHECK_DEFAULTS = {
    MODEL_KEY: "M1",
    P_KEY: 1,
    SIGMA_KEY: None,
    BOX_KEY: None,
    TARGET_KEY: TARGET_G,
    KERNEL_KEY: "gaussian_product:p=1:r=1",
    X_KEY: None,
    D2_KEY: 0.02,
    HALVINGS_KEY: 3,
    D1_RATIO_KEY: 1.0,
    BUDGET_KEY: None,
}

BENCH_DEFAULTS = {
    N_KEY: 100000,
    P_KEY: 3,
    QUERIES_KEY: 1000,
    K_KEY: 10,
    LEAF_SIZE_KEY: DEFAULT_LEAF_SIZE,
    SEED_KEY: 20240521,
}

SUBCOMMAND_DEFAULTS = {
    KERNEL_CHECK_COMMAND: KERNEL_CHECK_DEFAULTS,
    ESTIMATE_COMMAND: ESTIMATE_DEFAULTS,
    RATE_STUDY_COMMAND: RATE_STUDY_DEFAULTS,
    SANDWICH_COMMAND: SANDWICH_DEFAULTS,
    BIAS_CHECK_COMMAND: BIAS_CHECK_DEFAULTS,
    BENCH_COMMAND: BENCH_DEFAULTS,
}
