"""Invariant two-mode Mandel parameter: the minimum of Q over passive mode mixtures."""

__version__ = "0.1.0"

from .closed_forms import (
    ClosedFormReport,
    DiscrepancyLedger,
    q_fock,
    q_squeezed_coherent,
    q_squeezed_thermal,
    q_superposition,
    validate_closed_form,
)
from .errors import (
    ClosedFormMismatch,
    ConvergenceFailure,
    CutoffTooSmall,
    DimensionMismatch,
    InvalidParameter,
    InvalidTemperature,
    InvalidWeight,
    MandelQError,
    NumericalFailure,
    ParseError,
    ValidationError,
    ZeroIntensity,
    ZeroModeIntensity,
)
from .fock import Cutoff
from .minimizer import QResult, SphereQuadratic, invariant_mandel_q, minimize_grid, minimize_sphere_quadratic, reduce_to_sphere_quadratic
from .moments import (
    MomentSummary,
    alpha_of_q,
    extract_moments,
    lambda_of_alpha,
    mandel_q_at,
    mandel_q_covariant_denominator,
    mandel_q_direct,
    q_of_alpha,
)
from .states import (
    CoherentSuperposition,
    ExplicitDensityMatrix,
    Fock,
    SqueezedCoherent,
    SqueezedThermal,
    load_density,
    parse_density,
)
