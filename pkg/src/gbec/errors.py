"""Exception types raised across the calibration library."""


class GbecError(Exception):
    """Base class for all library-specific failures."""


class DegenerateGeometry(GbecError):
    """Input geometry leaves the requested solution underdetermined."""


class CountMismatch(GbecError):
    """Paired inputs differ in length or are too few to solve."""


class InvalidRange(GbecError):
    """A sampling interval or count is empty or reversed."""


class InsufficientMotion(GbecError):
    """Pose set lacks the rotational diversity an AX=XB solve needs."""


class SingularSystem(GbecError):
    """A linear system inside a solver is rank deficient."""


class MissingFeature(GbecError):
    """Digitization data and attachment features do not line up."""


class GroovesRequired(GbecError):
    """Operation applies only to groove-based attachments."""


class BadGeometry(GbecError):
    """Attachment geometry parameters are inconsistent."""


class NonPositiveRadius(GbecError):
    """Circular attachment radius must be positive."""


class ConfigInvalid(GbecError):
    """A configuration or data file failed schema validation."""
