"""Exception hierarchy shared by all chancap modules.

Every precondition failure derives from :class:`PreconditionError` (itself a
``ValueError``) and carries a stable ``kind`` string that the CLI writes into
its machine-readable error record.
"""


class ChancapError(Exception):
    """Base class for all library errors."""

    kind = "error"


class PreconditionError(ChancapError, ValueError):
    kind = "precondition"


class DimensionMismatchError(PreconditionError):
    kind = "dimension_mismatch"


class NotPositiveDefiniteError(PreconditionError):
    """Covariance is singular or indefinite at the requested dimension.

    Reported as "not purely nondeterministic at this n": only the finite
    section can be checked, never the process-level property.
    """

    kind = "not_positive_definite"


class OutsideSupportError(PreconditionError):
    kind = "outside_support"


class InfeasibleConstraintError(PreconditionError):
    kind = "infeasible_constraint"


class InvalidAutocorrelationError(PreconditionError):
    kind = "invalid_autocorrelation"


class UnboundedCapacityError(PreconditionError):
    kind = "unbounded_capacity"


class EnumerationTooLargeError(PreconditionError):
    """Exact enumeration of an input or output space was refused."""

    kind = "enumeration_too_large"


class GridTooLargeError(PreconditionError):
    kind = "grid_too_large"


class MassOutsideCubeError(PreconditionError):
    kind = "mass_outside_cube"


class UnsupportedError(ChancapError):
    kind = "unsupported"


class SpecFileError(ChancapError):
    """A channel, autocorrelation or code file could not be parsed."""

    kind = "invalid_file"
