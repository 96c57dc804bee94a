"""Exception hierarchy.

Every failure mode raised by the library derives from EqfamError so callers
(and the CLI) can distinguish numerical/validation failures from bugs.
"""


class EqfamError(Exception):
    """Base class for all eqfam errors."""


# --- numerics ---

class NonFinite(EqfamError):
    """Input contains NaN or Inf entries."""


class DegenerateDominantEigenvalue(EqfamError):
    """The two largest eigenvalue moduli are too close to single out a dominant one."""


# --- gcomplex ---

class UnsupportedDimension(EqfamError):
    pass


class UnsupportedDegree(EqfamError):
    pass


class NotSimplicial(EqfamError):
    """A claimed isometry does not permute vertices/simplices of the complex."""


class DimensionMismatch(EqfamError):
    pass


class PredicateNotSimplicial(EqfamError):
    """A sign-predicate domain cut straddles a simplex."""


class BadDecomposition(EqfamError):
    """A chain-level boundary identity required by a fixed-point formula failed."""


class NotACycle(EqfamError):
    pass


# --- pure states / families ---

class VanishingOverlap(EqfamError):
    """Adjacent states nearly orthogonal; the mesh is too coarse or a level crossing sits on an edge."""


class FluxGuardExceeded(EqfamError):
    """A lifted flux exceeded the guard; branch choice is no longer trustworthy."""


class EquivarianceViolated(EqfamError):
    pass


class NotFixedPoint(EqfamError):
    pass


class NotQuantized(EqfamError):
    """A value asserted to be quantized landed too far from the allowed set."""


class DegenerateGroundState(EqfamError):
    pass


class NotFree(EqfamError):
    """A group action required to be free has a fixed vertex."""


class PreconditionViolated(EqfamError):
    pass


# --- MPS ---

class NotNormalizable(EqfamError):
    pass


class NotInjective(EqfamError):
    pass


class NotCanonical(EqfamError):
    pass


class NotClose(EqfamError):
    """Mixed transfer matrix of an edge has no isolated dominant eigenvalue; refine the mesh."""


class VanishingWilsonLoop(EqfamError):
    pass


class GaugeNotBlockDiagonal(EqfamError):
    pass


class NotStabilized(EqfamError):
    pass


class VanishingNorm(EqfamError):
    pass


class SchmidtMismatch(EqfamError):
    """Schmidt spectra at group-related vertices disagree."""


class NotProportionalToIdentity(EqfamError):
    pass


# --- models ---

class WrongSector(EqfamError):
    pass


class UnknownName(EqfamError):
    pass


# --- cli / io ---

class SchemaError(EqfamError):
    pass


class CanonicalizationFailed(EqfamError):
    pass


class MeshMismatch(EqfamError):
    pass
