# Configuration settings for the ZULF resource engine.
# Every default the pipeline falls back to lives here; the CLI flags override them per run.

# --- Coupling regime ---
DEFAULT_REGIME = "proton"          # proton | hetero
DEFAULT_DIPOLAR = "none"           # none | rdc | full
DEFAULT_KAPPA = 1.0e-3             # RDC scale for weakly aligning media
DEFAULT_R_CUT = 4.0                # Angstrom, dipolar pair cutoff
DEFAULT_MAX_BOND_SEPARATION = 4
XYZ_BOND_TOLERANCE = 1.15          # bond iff d <= 1.15 * (r_cov_i + r_cov_j)

# --- Simulation budget ---
DEFAULT_T2 = 1.0                   # s
DEFAULT_T_MAX = 1.0                # s, t_max = T2
DEFAULT_EPS_MAX = 5.0e-3
DEFAULT_EPS_MEAS = 0.01
DEFAULT_N_POINTS = 400
DEFAULT_COEFF_BITS = 10            # ceil(log2(1000)) for 0.1% coefficient precision
DEFAULT_THRESHOLD = 20             # minimum cluster size included in aggregates
HARDNESS_THRESHOLDS = (16, 20, 32)

# --- Reference points ---
FACTORING_T_COUNT = 1.08e10
FACTORING_LOGICAL_QUBITS = 6190
SMALL_MOLECULE_T_BAND = 1.0e10

# --- Hardware (surface code, AutoCCZ factories) ---
DEFAULT_P_PHYS = 1.0e-4
DEFAULT_P_THRESH = 0.01
DEFAULT_T_CYCLE = 1.0e-6           # s
DEFAULT_T_REACT = 10.0e-6          # s
DEFAULT_ETA = 4                    # terminal |T> output
DEFAULT_TARGET_ERROR = 1.0e-3
D1_RANGE = (3, 25)
D2_MAX = 51

# --- Oracle ---
ORACLE_SPIN_CAP = 14
BLOCK_ENCODING_SPIN_CAP = 6
BLOCK_ENCODING_TERM_CAP = 64

# --- Reports ---
REPORT_SCHEMA_VERSION = "1.0"
CONFIG_PATH_ENV = "ZULF_CONFIG_PATH"
DEFAULT_WORKERS = 4
