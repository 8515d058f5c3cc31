"""Exception hierarchy"""


class StratClassError(Exception):
    """Base class for every error raised by the package"""


class ConfigError(StratClassError, ValueError):
    """Invalid or inconsistent experiment configuration"""


class DimensionMismatch(StratClassError, ValueError):
    """Vector or matrix dimensions disagree"""


class InvalidExponent(StratClassError, ValueError):
    """Norm exponent p < 1 or cost power r < 1"""


class SingularTransform(StratClassError, ValueError):
    """Cost transform A has smallest singular value below the floor"""


class DegenerateDegree(StratClassError, ValueError):
    """Operation needs a cost power r > 1"""


class UnboundedResponse(StratClassError):
    """Agent utility is unbounded above for the deployed classifier"""


class ScheduleInfeasible(StratClassError, ValueError):
    """Schedule constants yield a smoothing radius outside [0, 1)"""


class ZeroSmoothingStrategicRound(StratClassError):
    """Strategic feedback arrived while the smoothing radius is zero"""


class ProtocolError(StratClassError):
    """Optimizer calls made out of order"""


class NoConvergence(StratClassError):
    """Iterative oracle did not reach its tolerance"""


class DimensionTooLarge(StratClassError, ValueError):
    """Exhaustive grid requested in too many dimensions"""


class LengthMismatch(StratClassError, ValueError):
    """Round records and baseline disagree on the number of rounds"""


class EmitError(StratClassError):
    """Writing an output artifact failed"""
