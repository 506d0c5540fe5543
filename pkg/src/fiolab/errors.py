"""Exception hierarchy shared across fiolab modules."""


class FiolabError(Exception):
    """Base class for all fiolab errors."""


class NotHermitian(FiolabError, ValueError):
    pass


class NotUnitary(FiolabError, ValueError):
    pass


class NoConvergence(FiolabError, ArithmeticError):
    pass


class DegenerateClusterFailure(FiolabError, ArithmeticError):
    pass


class NotThetaGroup(FiolabError, ValueError):
    pass


class QuantizationFailure(FiolabError, ArithmeticError):
    pass


class AliasedCoefficient(FiolabError, ValueError):
    pass


class DegenerateFixedSet(FiolabError, ValueError):
    pass


class OrbitTooLong(FiolabError, RuntimeError):
    pass


class OutOfRange(FiolabError, ValueError):
    pass


class DimensionMismatch(FiolabError, ValueError):
    pass


class ZeroMass(FiolabError, ArithmeticError):
    pass


class ConfigInvalid(FiolabError, ValueError):
    pass
