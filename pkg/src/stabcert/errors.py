"""Exception types raised by stabcert."""


class StabcertError(Exception):
    """Base class for all library errors."""


class ModelError(StabcertError, ValueError):
    """Raised when a spectral model or perturbation violates its invariants."""


class SingularPointError(StabcertError, ValueError):
    """Raised when a resolvent is requested at a point of the spectrum.

    The offending point is kept in ``point`` so that grid scans can log it.
    """

    def __init__(self, msg, point=None):
        super().__init__(msg)
        self.point = point


class DomainError(StabcertError, ValueError):
    """A vector lies outside the domain of a fractional power."""


class SpectrumError(StabcertError):
    """``1`` is (numerically) an eigenvalue of the transfer matrix."""


class UncertifiableError(StabcertError):
    """The model cannot be certified (non-normal, unstable or non-polynomial)."""
