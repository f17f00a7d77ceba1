"""Exception classes raised by the kinematics routines.

Every class derives from :class:`KinematicsError` (itself a ``ValueError``) so
callers can catch the whole family at once. ``exit_code`` is used by the CLI:
2 for parse/validation problems, 3 for numeric degeneracies.
"""


class KinematicsError(ValueError):
    exit_code = 2


class ParseError(KinematicsError):
    exit_code = 2


class LengthMismatch(KinematicsError):
    exit_code = 2


class DimensionMismatch(KinematicsError):
    exit_code = 2


class NonUnitAxis(KinematicsError):
    exit_code = 3


class ZeroLengthVector(KinematicsError):
    exit_code = 3


class DegeneratePair(KinematicsError):
    exit_code = 3


class DegenerateTriple(KinematicsError):
    exit_code = 3


class DegenerateTarget(KinematicsError):
    exit_code = 3


class DegenerateConfiguration(KinematicsError):
    exit_code = 3
