import math

# Run-time configuration keys (values live in the command config dict)
VAR_OUTPUT_DIR = 'output_dir'
VAR_OUTPUT_DIR_DEFAULT = 'qqlab_out'
VAR_OUTPUT_DIR_ENV = 'QQLAB_OUTPUT_DIR'
VAR_WORKERS = 'workers'
VAR_WORKERS_DEFAULT = 1
VAR_ALPHA0_DEG = 'alpha0_deg'
VAR_ALPHA0_DEG_DEFAULT = 5.0  # small angle of the slope triples
VAR_N_TOTAL = 'n_total'
VAR_N_TOTAL_DEFAULT = 1000000
VAR_SEED_BASE = 'seed_base'
VAR_SEED_BASE_DEFAULT = 0
VAR_OPTIMIZER_RESTARTS = 'optimizer_restarts'
VAR_OPTIMIZER_RESTARTS_DEFAULT = 20
VAR_OPTIMIZER_COMPONENTS = 'optimizer_components'
VAR_OPTIMIZER_COMPONENTS_DEFAULT = 32
VAR_OPTIMIZER_SEED = 'optimizer_seed'
VAR_OPTIMIZER_SEED_DEFAULT = 2024

# n_total sentinel: record holds exact probabilities instead of counts
EXACT_MODE = 0

# Normalization
NORM_TOLERANCE = 1e-9
CANONICAL_ZERO = 1e-12

# Matrices
TRACE_TOLERANCE = 1e-9
PSD_TOLERANCE = 1e-8
RANK_CUTOFF = 1e-13

# Entropies
BINARY_ENTROPY_FLOOR = 1e-300
PURE_FAMILY_TOLERANCE = 1e-12
MIXTURE_EPSILON = 1e-12

# Reconstruction
ZERO_FLOOR = 1e-4
SLOPE_FLOOR = 1e-3
LINEAR_FIT_RATIO = 0.1
ANGLE_DEGENERACY = 1e-6
RANGE_TOLERANCE = 1e-6
SAMPLED_RANGE_TOLERANCE = 5e-3
ROOT_GRID_POINTS = 64
ROOT_MAX_ITERATIONS = 200
ROOT_RESIDUAL = 1e-12
ROOT_DEDUP = 1e-9
PHASE_DEGENERACY = 1e-7  # above the sqrt(eps) noise of acos near 1
EXACT_RESOLUTION = 1e-14

# Basis labels
BASIS_POL_FREQ_16 = 'pol_freq_product_16'
BASIS_BELL_4 = 'bell_pol_4'
BASIS_HV_2 = 'hv_2'

# Frequency filters
FREQ_LABELS = ('h', 'l')
FILTER_NONE = 'none'

HALF_PI = math.pi / 2

STATE_SCHEMA_VERSION = 'v1'
RNG_ALGORITHM = 'numpy.random.PCG64'

# Exit codes
EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_MISSING_RECORDS = 3
EXIT_NUMERICAL = 4

COMMAND_SYNTH = 'synth'
COMMAND_SIMULATE = 'simulate'
COMMAND_RECONSTRUCT = 'reconstruct'
COMMAND_ANALYZE = 'analyze'
COMMAND_COMPARE = 'compare'
COMMAND_SWEEP = 'sweep'
COMMAND_PLAN = 'plan'
