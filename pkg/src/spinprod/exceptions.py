"""Exception hierarchy for spinprod."""


class SpinprodError(ValueError):
    """Base class for all library errors."""


class DimensionError(SpinprodError):
    """Raised for non power-of-two dimensions, bad qubit indices or oversize products."""


class NormalizationError(SpinprodError):
    """Raised when a state that must be normalized is not."""


class InvariantError(SpinprodError):
    """Raised when a state or operator violates a structural invariant."""


class PostselectionError(SpinprodError):
    """Raised when a post-selection has (numerically) zero success probability."""


class ShapeError(SpinprodError):
    """Raised when POVM effects are not of the spin-product form."""


class InfeasibleError(SpinprodError):
    """Raised when the meter entanglement is below the requested strength."""


class ReconstructionError(SpinprodError):
    """Raised when process reconstruction is inconsistent with the observed data."""
