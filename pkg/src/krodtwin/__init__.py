"""Reduced-order twin models of viscous Burgers flows via randomized Koopman modes."""
from .burgers import PRESETS, Experiment, ExperimentSpec, SnapshotSet, exact_solution, generate_snapshots
from .errors import ConfigError, KrodError, NumericalError, OptimizerDivergenceError, RankDeficiencyError
from .krod import KoopmanTriplet, krod_offline, reconstruct, split_snapshots
from .metrics import EvalReport, evaluate, local_error, mac_matrix, mae, pearson
from .nlarx import NlarxModel, NlarxOrders, fit_nlarx, simulate_nlarx
from .quadrature import QuadratureRule, hermite_rule
from .rsvd import RsvdFactors, rsvd
from .selection import CandidateScore, SelectionResult, pareto_front, score_candidate, select, select_twin
from .twin import TwinModel, build_twin, initial_coefficients, twin_predict, twofold_validate

__version__ = "0.1.0"
