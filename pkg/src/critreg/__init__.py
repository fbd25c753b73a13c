"""Regularity experiments for quasilinear p-Laplace type equations with Dini-continuous coefficients."""

from .continuity import (
    DiniResult,
    Inverse,
    Modulus,
    StructureReport,
    check_monotone,
    check_structure,
    dini_integral,
    eval_modulus,
    inverse_modulus,
    make_sampling_plan,
)
from .errors import (
    CritregError,
    DimensionError,
    DomainError,
    EllipticityError,
    GeometryError,
    InsufficientDataError,
    InvalidFieldError,
    PreconditionError,
    ValidationError,
)
from .grid import Grid2D, ScalarField, VectorField, gradient_field, read_field, write_field
from .onedim import solve_1d
from .oracles import contrast_1d, harmonic_polynomial, manufactured, radial_p_poisson
from .probe import (
    CauchyReport,
    DecayProfile,
    ExponentReport,
    NormalizationParams,
    ProbePoint,
    cauchy_check,
    dyadic_profile,
    fit_exponent,
    normalize_at,
    one_step_decay,
    oscillation,
    singular_set,
    theoretical_alpha,
)
from .problem import ProblemSpec
from .solver import (
    Coefficient,
    ModelField,
    SolveConfig,
    SolveResult,
    SolverError,
    discrete_residual,
    energy,
    solve_dirichlet,
)

__version__ = "0.1.0"
