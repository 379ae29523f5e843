"""Exception taxonomy shared across the package.

Two families matter to callers: DomainFailure means the request itself
falls outside an operation's contract, ConvergenceFailure means the
request was legitimate but the numeric budget could not meet the target.
The CLI maps the families to distinct exit codes.
"""


class EiskernError(Exception):
    pass


class DomainFailure(EiskernError):
    pass


class ConvergenceFailure(EiskernError):
    pass


class DomainError(DomainFailure):
    """Argument outside the documented domain of an operation."""


class PoleAtOne(DomainFailure):
    """Zeta-family evaluation requested at (or numerically on top of) s = 1."""


class BadWeight(DomainFailure):
    """Weight incompatible with the requested construction (odd, too small...)."""


class BadData(DomainFailure):
    """Malformed external data (coefficient files, JSON payloads)."""


class ParityUnsupported(DomainFailure):
    """Operation defined only for the other parity class."""


class NonConvergence(ConvergenceFailure):
    """A series, product, or iteration failed to settle within its cap."""


class InsufficientPrecision(ConvergenceFailure):
    """Working precision provably too small for the requested tolerance."""


class DegenerateSpectrum(ConvergenceFailure):
    """Eigenvalues too close to separate at working precision."""


class QuadratureFailure(ConvergenceFailure):
    """Quadrature self-check (resolution halving) disagreed beyond tolerance."""


class SingularSystem(ConvergenceFailure):
    """Linear solve hit a numerically singular matrix."""
