"""Constants and defaults for the binary-maximin solvers and benchmark."""

PACKAGE = "binary_maximin"

# Solver defaults (normalized units, see optimizers.solve).
DEFAULT_METHOD = "gda-alternating"
DEFAULT_ETA = 0.3
DEFAULT_GAMMA0 = 1.0
DEFAULT_GAMMA_GROWTH = 1.02
DEFAULT_MAX_ITERS = 20_000
DEFAULT_BINARIZE_TOL = 1e-6
DEFAULT_GRAD_TOL = 1e-6
DEFAULT_DIVERGENCE_CAP = 1e6
DEFAULT_BETAS = (0.9, 0.999)
DEFAULT_ADAM_EPS = 1e-8
# Largest stable eta**2 * gamma per method for the dual-fast timescale.
GAMMA_STABILITY_MARGIN = {
    "gda": 0.5,
    "gda-alternating": 0.5,
    "ogda": 0.05,
    "extragradient": 0.05,
}
ADAPTIVE_STEP_SCALE = 0.1
# Multipliers are kept above -DUAL_FLOOR_FRACTION * curvature_bound.
DUAL_FLOOR_FRACTION = 0.5

# Inner minimization.
INNER_NEWTON_MAX_ITERS = 200
INNER_ARMIJO = 1e-4
INNER_GRAD_TOL = 1e-10
INNER_NORM_CAP = 1e8

# Theory.
EIGENVALUE_FLOOR = 1e-10
MAX_ENUMERATION_N = 22
ENUMERATION_CHUNK = 1 << 14
PROBE_MAX_RESAMPLES = 1_000
PROBE_REL_TOL = 1e-9
MAXIMIN_TOL = 1e-8

# Baselines.
LR_RIDGE = 1e-10
LPR_STEP_TOL = 1e-8
STE_LATENT_CLIP = 1.5
STE_DEFAULT_STEPS = 500
STE_DEFAULT_STEP = 5.0
SDR_MAX_N = 200
SDR_DEFAULT_RESTARTS = 3
SDR_STEP_TOL = 1e-13
BASELINE_MAX_ITERS = 20_000

# Data.
DEFAULT_OUTLIER_MAGNITUDE = 1e3
DEFAULT_OUTLIER_STD_MULTIPLE = 10.0
DEFAULT_TRAIN_FRACTION = 0.7

# Benchmark.
ENV_OUTPUT_DIR = "BINARY_MAXIMIN_OUTPUT_DIR"
ENV_WORKERS = "BINARY_MAXIMIN_WORKERS"
ENV_LOG_LEVEL = "BINARY_MAXIMIN_LOG_LEVEL"
DEFAULT_WORKERS = 4
DEFAULT_HISTOGRAM_BINS = 40
HISTOGRAM_RANGE = (-2.0, 2.0)
ROW_TYPE_RUN = "run"
ROW_TYPE_AGGREGATE = "aggregate"

RESULT_COLUMNS: tuple[str, ...] = (
    "row_type",
    "method",
    "loss",
    "sweep",
    "sweep_value",
    "repetition",
    "seed",
    "hamming_error",
    "hamming_error_std",
    "nrmse",
    "nrmse_std",
    "converged",
    "iterations",
    "error",
    "wall_time",
)
NONDETERMINISTIC_COLUMNS: tuple[str, ...] = ("wall_time",)

EXIT_OK = 0
EXIT_RUNTIME_ERROR = 1
EXIT_CONFIG_ERROR = 2
