"""Exception hierarchy shared by all gofperm modules."""


class GofError(ValueError):
    """Base class for every error raised by gofperm."""


class NonFinite(GofError):
    """Input contains NaN or infinite values."""


class DegenerateSample(GofError):
    """Too few observations for the number of parameters (n <= p)."""


class RankDeficient(GofError):
    """Design matrix does not have full column rank."""


class InvalidDesign(GofError):
    """Design matrix is malformed (wrong shape, missing intercept column)."""


class DegenerateVariance(GofError):
    """Residual standard deviation is zero, so the residual process is undefined."""


class IndexOutOfRange(GofError):
    """Ordering key refers to a column that is not a non-intercept covariate."""


class TooLarge(GofError):
    """Exhaustive enumeration requested for too many observations."""


class NoTraces(GofError):
    """No replicate processes were retained for plotting."""


class InvalidParams(GofError):
    """Scenario or configuration parameters are missing or invalid."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class ParseError(GofError):
    """A CSV cell could not be parsed as a number."""


class MissingValue(GofError):
    """A selected CSV cell is empty."""


class UnknownColumn(GofError):
    """A requested column is absent from the CSV header."""
