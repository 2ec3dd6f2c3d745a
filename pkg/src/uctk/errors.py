"""Exception types raised by the numerical routines.

All library-specific errors derive from UctkError so callers (and the CLI)
can distinguish validation problems from numerical failures.
"""


class UctkError(Exception):
    """Base class for all library errors."""


class ValidationError(UctkError):
    """Bad input: violated precondition or malformed configuration."""


class NumericalError(UctkError):
    """A numerical procedure failed to converge or lost its bracket."""


# -- validation-type errors ---------------------------------------------------

class OutOfRange(ValidationError):
    pass


class GapRegion(ValidationError):
    """Right state lies in the no-connection gap between the umbilic point
    and the umbilic extension (viscosity ratio below one)."""


class NotInInterval(ValidationError):
    pass


class NotOnLine(ValidationError):
    pass


class BoundaryState(ValidationError):
    """Capillarity coefficients diverge on the boundary of the triangle."""


class NotEquilibrium(ValidationError):
    pass


class CoincidentStates(ValidationError):
    pass


class SeedInvalid(ValidationError):
    pass


# -- numerical-type errors ----------------------------------------------------

class ComplexEigenvalues(NumericalError):
    pass


class InconsistentSpeeds(NumericalError):
    """The two component-wise shock speeds disagree: the states are not
    actually related by the jump condition."""


class Degenerate(NumericalError):
    """Both linearization eigenvalues vanish; no classification possible."""


class NoRealRoot(NumericalError):
    pass


class RootOutOfRange(NumericalError):
    pass


class DegenerateDirection(NumericalError):
    """Requested manifold eigendirection has (near-)zero eigenvalue."""


class NoSectionHit(NumericalError):
    """An invariant-manifold orbit terminated without crossing the section."""


class BracketLost(NumericalError):
    pass


class MaxIterations(NumericalError):
    pass


class PartnerNotFound(NumericalError):
    pass


class NewtonDiverged(NumericalError):
    pass


class CFLWarning(UserWarning):
    """Advisory only: the implicit scheme remains stable but accuracy
    degrades when waves cross many cells per step."""
