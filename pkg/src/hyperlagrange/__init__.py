"""Mu-differentiation and Lagrange multiplier rules over truncated hyperreal series."""

from .expr import ParseError, ProblemDef, ProblemError, load_problem, parse, parse_problem
from .hyperreal import (
    BACKEND,
    ConfigurationError,
    GeneratorSet,
    Hyperreal,
    Monomial,
    NonUnitDivisorError,
    Tolerance,
    approx_eq,
    is_infinitesimal,
    st,
)
from .lagrange import (
    CriticalPoint,
    SolverOptions,
    build_augmented,
    classify,
    solve_general,
    solve_normal,
    verify,
)
from .mudiff import DiffConfig, Gradient, directional, gradient, is_m_critical, partial

__version__ = "0.1.0"
