"""Exception hierarchy shared by all simulation modules."""


class SimulationError(Exception):
    """Base class for every error raised by :mod:`aqgates`."""


class InvalidParameterError(SimulationError, ValueError):
    """A physical parameter is outside its allowed range."""


class InvalidModelError(SimulationError, ValueError):
    """A Hamiltonian or Lindblad model violates its structural constraints."""


class InvalidStateError(SimulationError, ValueError):
    """A state vector or density operator is not a valid quantum state."""


class NumericalError(SimulationError, RuntimeError):
    """Base class for failures detected while integrating or post-processing."""


class IncompleteScatteringError(NumericalError):
    """The integration window ended before the cavity field decayed."""


class NoSteadyStateError(NumericalError):
    """A trajectory never settled within its time window."""


class TruncationError(NumericalError):
    """Population reached the edge of a truncated Fock space."""


class IncompleteReturnError(NumericalError):
    """A gate protocol left population outside the computational subspace."""


class InsufficientDataError(SimulationError, ValueError):
    """Too few samples to form the requested statistic."""


class GeometryError(InvalidParameterError):
    """Geometric inputs are mutually inconsistent."""


class DegenerateParameterError(InvalidParameterError):
    """Parameters sit on a singular point of a closed-form expression."""


class PositivityWarning(RuntimeWarning):
    """A propagated density operator acquired a negative eigenvalue."""


class ResonanceWarning(RuntimeWarning):
    """A resonance condition is violated by more than the configured tolerance."""
