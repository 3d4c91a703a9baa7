"""Exception hierarchy shared by every module.

Each error carries a coarse ``kind`` used by the CLI to pick an exit code:
``"input"`` for validation problems and ``"numerical"`` for solver failures.
"""


class MonoFollowError(Exception):
    kind = "input"


class NumericalError(MonoFollowError):
    kind = "numerical"


class NonPositiveDepth(MonoFollowError):
    pass


class EmptyDepthMap(MonoFollowError):
    pass


class ShapeMismatch(MonoFollowError):
    pass


class LengthMismatch(MonoFollowError):
    pass


class InvalidPose(MonoFollowError):
    pass


class SamplingExhausted(NumericalError):
    pass


class DegenerateTriplet(NumericalError):
    pass


class ImageTooSmall(MonoFollowError):
    pass


class InsufficientPoints(NumericalError):
    pass


class DegenerateConfiguration(NumericalError):
    pass


class CheiralityFailure(NumericalError):
    pass


class PointSetFailure(NumericalError):
    """A PnP solve failed for one named correspondence set ("fg" or "bg")."""

    def __init__(self, which, cause):
        super().__init__(f"{which} set: {cause}")
        self.which = which
        self.cause = cause


class TooFewPixels(MonoFollowError):
    pass


class EmptyIntersection(MonoFollowError):
    pass


class TimeReversal(MonoFollowError):
    pass


class NumericalBreakdown(NumericalError):
    pass


class InsufficientSamples(NumericalError):
    pass


class IllConditioned(NumericalError):
    pass


class NoMatchingFrame(MonoFollowError):
    pass


class EmptyBuffer(MonoFollowError):
    pass


class Uninitialized(MonoFollowError):
    pass


class NonPositiveDt(MonoFollowError):
    pass


class NoValidPixels(MonoFollowError):
    pass


class InvalidConfig(MonoFollowError):
    pass
