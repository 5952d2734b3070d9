"""Non-commutative perspectives of operator convex functions, with randomized
checks of their regularity, convexity and transformer properties."""

__version__ = "0.1.0"

from .catalog import ScalarFunction, catalog, get_function, midpoint_operator_convexity_test, power
from .errors import DomainError, MatrixFormatError, NonScalarError, NumericError, PerspectaError, UsageError
from .matrix_core import (
    HermitianMatrix,
    LoewnerComparison,
    PDMatrix,
    SpectralDecomposition,
    apply_function,
    congruence,
    eig,
    hermitize,
    inv_sqrt_pd,
    loewner_leq,
    sqrt_pd,
)
from .matrix_io import load_matrix, save_matrix
from .perspective import (
    PerspectiveOrder,
    PerspectiveResult,
    geometric_mean,
    perspective,
    perspective_commuting_oracle,
    quadratic_congruence,
    relative_entropy,
    trace_perspective_neg_log,
)
from .random_ensembles import EnsembleConfig, RngStream
from .regularity import CheckConfig, TrialReport, run_check, run_suite
