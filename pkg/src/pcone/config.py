# Numerical defaults shared by the library, the scenarios and the check suites.

SCENARIO_VERSION = "pc/1"

# relative to max(1, |sigma|)
EIG_TOL = 1e-8
# relative to max(1, |k_i|)
SATURATION_TOL = 1e-8
# on 1 - |cos| between two normalized gradients
COLLINEARITY_TOL = 1e-10
GRADIENT_ZERO_TOL = 1e-14

ORACLE_MAX_ITER = 100000
ORACLE_STARTS = 8
ORACLE_STEP_TOL = 1e-12

DRIFT_TOL = 1e-8
# a state further outside than this multiple of drift_tol aborts integration
DRIFT_HARD_FACTOR = 100.0
CFL_MAX = 0.9

DRIFT_POLICIES = ("none", "radial_return")
BOUNDARY_KINDS = ("velocity", "traction", "free")

BRANCHES = (
    "interior",
    "one",
    "two",
    "tresca_smooth",
    "tresca_degenerate_m1",
    "tresca_degenerate_m3",
)

VOIGT_LABELS = ("11", "22", "33", "12", "13", "23")

# check-suite defaults
CHECK_SAMPLES = 10000
ORACLE_SAMPLES = 1000
KKT_BRANCH_MIN_HITS = 50
# Tresca edge draws per edge family in the oracle suite, each solved in both μ orders
KKT_EDGE_DRAWS = 1000
FD_STEP = 1e-5
FD_MIN_GAP = 1e-2

# convexity spot-check of user-supplied yield functions
CONVEXITY_SAMPLES = 256
CONVEXITY_TOL = 1e-10
CONVEXITY_SEED = 0
