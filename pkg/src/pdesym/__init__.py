"""pdesym: symbolic verification of Lie and Q-conditional (nonclassical)
symmetries of PDE systems, with exact zero-residual certificates."""

from .kernel import (
    ConstraintRule,
    ConstraintSet,
    InconclusiveError,
    KernelError,
    differentiate,
    is_zero,
    normalize,
    substitute,
    ufn,
    zero_decision,
)
from .jet import JetSpace, MultiIndex, PDESystem, total_derivative
from .fields import (
    Chart,
    OperatorFamily,
    PointTransformation,
    Prolongation,
    VectorField,
    canonicalize,
    commutator,
    equivalent_families,
    equivalent_mod_group,
    is_involutive,
    pushforward,
    verify_flow,
)
from .invariance import (
    InvarianceReport,
    Verdict,
    determining_system,
    lie_check,
    qcond_check,
)
from .reduction import (
    Ansatz,
    CoordinateChange,
    PhiFamily,
    apply_ansatz,
    change_coordinates,
    phi_family,
    verify_reduction,
)
from . import catalog, parser

__version__ = "0.1.0"
