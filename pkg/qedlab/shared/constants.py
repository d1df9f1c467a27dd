MIN_GRID_POINTS = 8

SOLVER_TOL = 1e-10
DEGENERACY_TOL = 1e-8
MAX_DIMENSION = 5_000_000
LANCZOS_MAX_ITERATIONS = 20_000
LANCZOS_SEED = 20140101
DENSE_FALLBACK_DIM = 16

HERMITICITY_TOL = 1e-13
NORM_TOL = 1e-12
CONJUGATION_TOL = 1e-12

SCF_MIXING = 0.3
SCF_ANDERSON_DEPTH = 5
SCF_MAX_ITERATIONS = 200
SCF_DENSITY_TOL = 1e-8
SCF_FIELD_TOL = 1e-8
SCF_OSCILLATION_WINDOW = 6

EQUIVALENCE_TOL = 1e-7
DISPLACEMENT_PAD_LEVELS = 40
LEAKAGE_WARN = 1e-10
SPECTRAL_LEVELS = 3

SCAN_COUNT = 10
SCAN_EPS_EXT = 1e-2
SCAN_EPS_INT = 1e-6
SCAN_AMPLITUDE_RANGE = (0.05, 0.5)
SCAN_POTENTIAL_HARMONICS = 2
RECOVERY_TOL = 1e-7
CROSS_CHECK_MARGIN = 1e-10

CSV_FLOAT_FORMAT = "%.17g"
DEFAULT_OUT_DIR = "results"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED = 2
