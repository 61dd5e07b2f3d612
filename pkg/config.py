# Main configuration file

import os
from dotenv import load_dotenv

load_dotenv()

# Output
OUTPUT_DIR = os.environ.get("MASLOV_OUT", "maslov_out")  # MASLOV_OUT overrides the default output directory
OUTPUT_FORMATS = ("json", "csv", "svg")
SIGNIFICANT_DIGITS = 12  # floats in JSON reports are rounded to this many significant digits

# Workers (per-trace / per-rung parallelism). `--threads` on the CLI pins it for a run.
THREADS = int(os.environ.get("MASLOV_THREADS", 1))

# Ambient models
SPHERE_CHART_RADIUS = 10.0  # beyond this |z| the mesh builder switches to the antipodal chart
CHART_BOUND = 1.0e3  # points with larger chart norm are outside the chart domain
POSITIVITY_SAMPLES = 1000  # sample size for the positivity bound of perturbed metrics
POSITIVITY_FLOOR = 1.0e-3  # smallest accepted metric eigenvalue for perturbed models

# Finite differences (step = eps_mach ** exponent * coordinate scale)
FD_FIRST_EXPONENT = 1.0 / 3.0
FD_SECOND_EXPONENT = 1.0 / 4.0

# Meshes
MIN_LOOP_VERTICES = 16
MIN_GRID_VERTICES = 16
LAGRANGIAN_TOL_FLAT = 1.0e-8
LAGRANGIAN_TOL_CURVED = 1.0e-6
REPEATED_VERTEX_RATIO = 1.0e-9  # vertices closer than this times the mesh diameter are repeated
CONDITIONING_FLOOR = 1.0e-8  # induced-metric eigenvalue ratio below which frames are flagged

# Linear solves
SOLVER_RTOL = 1.0e-12
SOLVER_MAX_ITERATIONS_FACTOR = 10  # iteration cap = factor * system size

# Transport and Maslov data
RESOLUTION_GUARD = 0.5  # |eta_e| must stay below this multiple of pi
HALF_INTEGER_MARGIN = 0.05  # in units of a full turn (2*pi)
PERIOD_TOL = 1.0e-6
FLAT_TOL = 1.0e-6
PHASE_TOL = 1.0e-6
ZERO_CROSSING_TOL = 1.0e-12
ZERO_CROSSING_RETRIES = 3

# Curvature
L_MINIMAL_TOL = 1.0e-3
H_MINIMAL_TOL = 1.0e-6
MAX_CURVATURE_STEP = 0.5  # |II(t_a, t_a)| / |t_a| along any grid axis above this asks for refinement
TRANSPORT_RESIDUAL_CONSTANT = 0.1  # residual threshold C * h^2

# Flows
LAGRANGIAN_BLOWUP = 10.0
VOLUME_COLLAPSE_RATIO = 0.01
LINE_SEARCH_TOL = 1.0e-10
ARMIJO_SLOPE = 1.0e-4
DESCENT_MIN_STEP = 1.0e-8
DESCENT_GRADIENT_TOL = 1.0e-9
DESCENT_MAX_DISPLACEMENT = 0.4  # per-iteration vertex displacement, in units of the shortest edge
DESCENT_PERIOD_DRIFT = 1.0e-3  # turns; larger fractional-period jumps reject an isodrastic candidate
MAX_BASIS_DEGREE = 8
