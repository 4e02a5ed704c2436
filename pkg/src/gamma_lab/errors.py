"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes (see cli.EXIT_*): configuration
problems, violated mathematical preconditions, and failed internal
consistency checks are reported differently so scripted runs can tell them
apart.
"""


class GammaLabError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(GammaLabError):
    """Malformed or out-of-schema configuration input."""


class PreconditionError(GammaLabError):
    """A documented mathematical precondition does not hold for the input."""


class DimensionMismatchError(PreconditionError):
    """Operands declare incompatible variable dimensions."""


class DegenerateFunctionalError(PreconditionError):
    """The polynomial functional has zero variance.

    A polynomial in independent absolutely-continuous inputs has an
    absolutely continuous law if and only if its variance is nonzero, so a
    zero-variance (constant) limit is rejected before any sampling starts.
    """


class ConsistencyError(GammaLabError):
    """Two independent computation routes for the same quantity disagree.

    Raised, e.g., by the Dirichlet-form adjointness sentinel when
    -int f Lg dmu and int Gamma(f,g) dmu differ, which indicates a
    generator/measure convention mismatch rather than a numerical issue.
    """
