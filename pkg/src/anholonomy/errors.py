"""Exception and warning types shared across the package."""


class AnholonomyError(Exception):
    """Base class for all package errors."""


class DimensionError(AnholonomyError, ValueError):
    pass


class NotHermitianError(AnholonomyError, ValueError):
    pass


class NotUnitaryError(AnholonomyError, ValueError):
    pass


class ConvergenceError(AnholonomyError, RuntimeError):
    """Iterative eigensolver did not reach its tolerance within the sweep cap."""


class DegeneracyResolutionError(AnholonomyError, RuntimeError):
    """Unitary eigendecomposition could not separate a cluster of eigenphases."""


class InvalidSystemError(AnholonomyError, ValueError):
    pass


class AmbiguousMatching(AnholonomyError):
    """Branch continuation failed: best eigenvector overlap below threshold at the minimum step."""


class DegenerateBranch(AnholonomyError):
    """A tracked quasienergy branch is degenerate with another level."""


class SatFormatError(AnholonomyError, ValueError):
    pass


class NoSolution(AnholonomyError):
    pass


class MultipleSolutions(AnholonomyError):
    pass


class LevelOrderingError(AnholonomyError):
    """Some level of the composite Hamiltonian lies strictly between the two targets."""


class ZeroTargetOverlap(AnholonomyError, ValueError):
    """Kick vector has no overlap with one of the two target states."""


class NonCyclicPermutationWarning(UserWarning):
    """Holonomy permutation is not a uniform cyclic shift."""


class DegenerateSpectrumWarning(UserWarning):
    pass


class GapCollapseWarning(UserWarning):
    pass


class LevelCoincidenceWarning(UserWarning):
    pass
