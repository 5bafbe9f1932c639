# Standard Library
import math

VERSION = "1.0.0"

# band edges of the free ray in the unit frame
ALPHA = math.exp(0.5) + math.exp(-0.5) - 2.0
BETA = ALPHA + 4.0

# e^n leaves double range near |n| = 709
MAX_RAY_LENGTH = 700
DENSE_CAP = 6000
EDGE_BAND = 3
HE_CUTOFF = 1.0e4
# absolute bisection tolerance for high energy chains
HE_BISECTION_TOL = 1.0e-12

HERMITIAN_TOL = 1.0e-12
WEIGHT_RTOL = 1.0e-12
RATIO_SERIES_CUTOFF = 1.0e-4
RESIDUAL_TOL = 1.0e-10
COMPACT_TAIL_TOL = 1.0e-6
COMPACT_SINGULAR_COUNT = 20
COMPACT_DECAY_RATIO = 1.0e-2
# Mourre eigenvalues above -TAU_RELATIVE ||[H, iA]|| are within section resolution
TAU_RELATIVE = 0.1
BOUNDED_VARIATION = 0.10
PLATEAU_TOL = 0.20
LAP_CONVERGENCE_TOL = 0.05
H0_RATIO = 0.1
DENSE_RESOLVENT_DIM = 1500

THREADS_ENV = "CUSPFUNNEL_THREADS"
SIDES = ("funnel", "compact", "cusp", "halfline")
KINDS = ("halfline", "half_ray_cusp", "half_ray_funnel", "z_model", "glued")
PRODUCTS = ("twisted", "cartesian")
COMMANDS = (
    "build",
    "spectrum",
    "commutator-check",
    "mourre-scan",
    "lap-scan",
    "evolve",
    "threshold-study",
    "conditions-check",
)

# levels added past a truncation before a commutator is cropped back to it
SECTION_PAD = 3
PERSIST_TOL = 1.0e-8
PROPAGATION_VARIATION = 0.15
