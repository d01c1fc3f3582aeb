"""Exception hierarchy shared by all modules."""


class SturmUniqError(Exception):
    """Base class for every error raised by this package."""


# -- expression language ------------------------------------------------------

class ExprSyntaxError(SturmUniqError, ValueError):
    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = tuple(sorted(expected))
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at byte {offset}{detail}")


class UnknownIdentifier(SturmUniqError, ValueError):
    def __init__(self, name, offset):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown identifier {name!r} at byte {offset}")


class EvaluationError(SturmUniqError, ArithmeticError):
    """Non-finite or out-of-domain evaluation that is not a pole."""

    def __init__(self, message, x=None):
        self.x = x
        super().__init__(message if x is None else f"{message} at x={x!r}")


class PoleAt(EvaluationError):
    def __init__(self, x):
        super().__init__("pole", x)


# -- operator model -----------------------------------------------------------

class InvalidOperator(SturmUniqError, ValueError):
    pass


class NonpositiveDiffusion(InvalidOperator):
    def __init__(self, x):
        self.x = x
        super().__init__(f"diffusion coefficient a(x) <= 0 at x={x!r}")


class NegativePotential(InvalidOperator):
    def __init__(self, x):
        self.x = x
        super().__init__(f"killing potential V(x) < 0 at x={x!r}")


class ReferencePointOutOfRange(InvalidOperator):
    pass


# -- numerics -----------------------------------------------------------------

class QuadratureFailure(SturmUniqError, ArithmeticError):
    pass


class NonIntegrableSingularity(QuadratureFailure):
    pass


class TruncationBudgetExceeded(SturmUniqError, ArithmeticError):
    """The Feller series did not reach its tail tolerance.

    ``partial_sum`` is still a valid lower bound for the full sum.
    """

    def __init__(self, partial_sum, tail_ratio, n_terms):
        self.partial_sum = partial_sum
        self.tail_ratio = tail_ratio
        self.n_terms = n_terms
        super().__init__(
            f"series truncated after {n_terms} terms with tail ratio {tail_ratio:.3e}"
        )


class StepSizeUnderflow(SturmUniqError, ArithmeticError):
    def __init__(self, message, trace=None):
        self.trace = trace
        super().__init__(message)


# -- classifier / manifold ----------------------------------------------------

class NotApplicable(SturmUniqError):
    pass


class HypothesisFailed(SturmUniqError):
    def __init__(self, x, which):
        self.x = x
        self.which = which
        super().__init__(f"comparison hypothesis {which!r} violated at x={x!r}")


class UnknownPreset(SturmUniqError, KeyError):
    pass


class ParamOutOfRange(SturmUniqError, ValueError):
    pass


# -- cli ----------------------------------------------------------------------

class ConfigError(SturmUniqError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class ConfigSyntax(ConfigError):
    pass


class ConfigSemantic(ConfigError):
    pass


class NoFlipInRange(SturmUniqError):
    pass
