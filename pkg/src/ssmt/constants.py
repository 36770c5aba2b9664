"""Central knobs for the statistical suites.

Every tolerance used by the verification suites lives here so that a run
report can be reproduced from the config alone.  See README for the
rationale behind each value.
"""

# Significance level for every Kolmogorov-Smirnov and chi-square test.
KS_ALPHA = 1e-3

# Relative error allowed on Monte Carlo means checked against closed forms.
REL_ERR = 0.05

# Hitting probabilities are checked to a tighter 2% (cheap, low variance).
HIT_REL_ERR = 0.02

# Default replica counts.
N_PATHS = 100_000          # path-level Monte Carlo (potentials, hitting)
N_KS = 5_000               # samples per KS comparison
N_TREES = 10_000           # tree replicas for mean identities
N_STRUCTURAL_SEEDS = 100   # seeds for deterministic excursion checks

# Replicas for the level-tree edge-length law.  Grid detection of level-1
# crossings distorts the shortest edges by ~0.02 in KS distance at
# dt = 1e-3, so this test runs where sampling noise still dominates that
# resolution floor.
N_LEVEL_TREE = 2_500

# Euler grid step for DIFFUSION mode.
DT = 1e-3

# Window half-width used by local-time estimators on grid paths.  Must
# stay >= ~1.6 sqrt(dt): narrower windows see the grid instead of the
# path and distort the local-time law; wider ones pick up an O(eps/2)
# bias at kinks of the potential.
EPS_TOTAL = 0.05
EPS_PROFILE = 0.05

# A grid path "hits" level y when it straddles y between consecutive grid
# points or lands within HIT_TOL_FACTOR * dt * (|a| + sigma) of it.
HIT_TOL_FACTOR = 10.0

# Grid excursions shorter than EXC_MERGE_FACTOR * dt are folded into the
# local-time clock instead of being emitted as excursion atoms.
EXC_MERGE_FACTOR = 10.0

# Tree construction.
X_MIN = 1e-3
NODE_CAP = 1_000_000
REJECTION_BUDGET = 1_000_000

# Level statistics are trusted only for x >= TRUNCATION_MARGIN * x_min.
TRUNCATION_MARGIN = 10.0

# Fourier inversion of -1/psi(i theta): number of quadrature points and
# the frequency cutoff used after subtracting the killed-Brownian (or
# killed-drift) reference whose transform is inverted in closed form.
FOURIER_N = 1 << 21
FOURIER_THETA_MAX = 500.0
FOURIER_THETA_MAX_BV = 20_000.0

# Offspring histograms track n = 0..K_MAX with a pooled tail bucket.
K_MAX = 8
