"""Exception hierarchy shared by all modules."""


class RademacherSteinError(Exception):
    """Base class for every error raised by this package."""


class KernelError(RademacherSteinError, ValueError):
    pass


class DiagonalEntry(KernelError):
    """A symmetric kernel was given a tuple with a repeated coordinate."""


class OrderMismatch(KernelError):
    pass


class ConflictingValues(KernelError):
    """Two permutations of the same tuple were given different values."""


class ContractionOutOfRange(KernelError):
    pass


class DimensionTooSmall(RademacherSteinError, ValueError):
    """A kernel reaches coordinates beyond the dimension of the point."""


class DimensionLimit(RademacherSteinError, ValueError):
    """Exhaustive enumeration was requested above the configured ceiling."""


class BadTableLength(RademacherSteinError, ValueError):
    pass


class IndexOutOfRange(RademacherSteinError, IndexError):
    pass


class NotCentered(RademacherSteinError, ValueError):
    pass


class NotNormalized(RademacherSteinError, ValueError):
    pass


class MissingNorm(RademacherSteinError, ValueError):
    """A bound needs a sup-norm the test function does not certify."""


class MissingTailCertificate(RademacherSteinError, ValueError):
    pass


class DegenerateVariance(RademacherSteinError, ValueError):
    pass


class Inapplicable(RademacherSteinError, ValueError):
    """The hypotheses of a bound are not met for the given inputs."""


class EmptySet(RademacherSteinError, ValueError):
    pass


class ZeroMeasure(RademacherSteinError, ValueError):
    pass


class NTooSmall(RademacherSteinError, ValueError):
    pass


class NotInjective(RademacherSteinError, ValueError):
    pass


class InvalidCover(RademacherSteinError, ValueError):
    pass


class QuadratureUnstable(RademacherSteinError, ArithmeticError):
    pass
