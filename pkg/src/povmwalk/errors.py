"""Exception hierarchy for povmwalk."""


class PovmWalkError(Exception):
    """Base class for all povmwalk errors."""


class ValidationError(PovmWalkError):
    """Input fails a structural requirement (hermiticity, positivity, completeness...)."""


class SingularOperatorError(PovmWalkError):
    """An operator required to be invertible is singular (or nearly so)."""


class GeometryError(PovmWalkError):
    """The walk geometry is inconsistent (weights non-positive, point outside polytope...)."""


class NumericsError(PovmWalkError):
    """A numerical invariant that should hold by construction was violated."""


class ConstraintError(PovmWalkError):
    """A target operator is incompatible with the destructive measurement model."""
