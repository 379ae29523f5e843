"""Exact modular-form arithmetic, completed L-functions, double Eisenstein
series in holomorphic and real-analytic versions, and the period
machinery tying them together, all at user-controlled precision.

The public modules:

- mpcore    precision contexts, special functions, run profiles
- modforms  exact q-expansions, Hecke operators, eigenforms, Petersson norms
- lfunc     completed L-functions, plain and additively twisted
- dbleis    double Eisenstein series kernels and their identity checks
- periods   Manin-style rationality tables and period pairs
- nonhol    real-analytic Eisenstein series and kernel sums
- cli       the `eiskern` command
"""

from .errors import (
    BadData,
    BadWeight,
    ConvergenceFailure,
    DegenerateSpectrum,
    DomainError,
    DomainFailure,
    EiskernError,
    InsufficientPrecision,
    NonConvergence,
    ParityUnsupported,
    PoleAtOne,
    QuadratureFailure,
    SingularSystem,
)
from .mpcore import DEFAULT_PRECISION, HPComplex, PrecisionProfile, profile_from_env

__version__ = "0.1.0"

__all__ = [
    "BadData",
    "BadWeight",
    "ConvergenceFailure",
    "DEFAULT_PRECISION",
    "DegenerateSpectrum",
    "DomainError",
    "DomainFailure",
    "EiskernError",
    "HPComplex",
    "InsufficientPrecision",
    "NonConvergence",
    "ParityUnsupported",
    "PoleAtOne",
    "PrecisionProfile",
    "QuadratureFailure",
    "SingularSystem",
    "profile_from_env",
    "__version__",
]
