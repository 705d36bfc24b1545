"""Exception hierarchy shared by all modules."""


class WireBendError(Exception):
    """Base class for all package errors."""


# geometry
class EmptyCurve(WireBendError, ValueError):
    pass


class NonFinite(WireBendError, ValueError):
    pass


class TooFewPoints(WireBendError, ValueError):
    pass


class DegenerateSegment(WireBendError, ValueError):
    pass


class NonOrthogonalNormal(WireBendError, ValueError):
    pass


# bend model
class DegenerateAngle(WireBendError, ValueError):
    pass


class TangentOverlap(WireBendError, ValueError):
    """Neighbouring bend arcs would overlap: not enough straight wire between them."""


class InconsistentAngles(WireBendError, ValueError):
    pass


# simulator
class UnreachablePose(WireBendError):
    pass


class TargetExceedsWorkRange(WireBendError):
    pass


class DiameterTooLarge(WireBendError, ValueError):
    pass


# motion
class NoSolution(WireBendError):
    pass


class PlanningTimeout(WireBendError):
    pass


class CollidingEndpoint(WireBendError, ValueError):
    """Start or goal configuration of a joint path is in collision."""


# planning / io
class SearchTimeout(WireBendError):
    pass


class DivergenceFound(WireBendError):
    def __init__(self, step, message):
        super().__init__(f"step {step}: {message}")
        self.step = step


class ConfigError(WireBendError, ValueError):
    pass


class ParseError(WireBendError, ValueError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line
