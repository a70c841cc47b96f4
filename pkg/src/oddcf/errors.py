"""Exception hierarchy shared by all modules."""


class OddCFError(Exception):
    """Base class; the CLI maps subclasses to exit codes via ``code``."""

    code = "error"


class PoleError(OddCFError, ZeroDivisionError):
    code = "pole"


class UncertainFloor(OddCFError, ArithmeticError):
    code = "uncertain_floor"


class PrecisionExhausted(OddCFError, ArithmeticError):
    code = "precision_exhausted"


class MixedFieldError(OddCFError, TypeError):
    code = "mixed_field"


class IndistinguishableError(OddCFError, ArithmeticError):
    code = "indistinguishable"


class DomainError(OddCFError, ValueError):
    code = "domain"


class ZeroInput(DomainError):
    code = "zero_input"


class ZeroFuture(DomainError):
    code = "zero_future"


class UnsupportedAlpha(DomainError):
    code = "unsupported_alpha"


class PatternMismatch(OddCFError, ValueError):
    code = "pattern_mismatch"


class DensitySingular(OddCFError, ArithmeticError):
    code = "density_singular"


class OrbitDegenerate(OddCFError, ArithmeticError):
    code = "orbit_degenerate"


class NonTerminatingGuard(OddCFError, RuntimeError):
    code = "non_terminating"


class NeighborhoodTooWide(OddCFError, RuntimeError):
    code = "neighborhood_too_wide"
