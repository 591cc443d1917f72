"""Exception types raised across the package."""


class FlowlabError(Exception):
    """Base class for every error raised by flowlab."""


class ConfigurationError(FlowlabError, ValueError):
    pass


class SingularMetricError(FlowlabError):
    pass


class NonFiniteError(FlowlabError, FloatingPointError):
    pass


class PositiveDefinitenessError(FlowlabError):
    """The perturbed metric g + h lost positive definiteness."""

    def __init__(self, message, time=None):
        super().__init__(message if time is None else f"{message} (t={time:.6g})")
        self.time = time


class CFLError(FlowlabError):
    pass


class BlowUpError(FlowlabError):
    pass


class ProbeHorizonError(FlowlabError):
    pass


class EmptyCylinderError(FlowlabError):
    pass


class ConvergenceError(FlowlabError):
    def __init__(self, message, last_ratio=None):
        super().__init__(message)
        self.last_ratio = last_ratio


class BallEscapeError(FlowlabError):
    def __init__(self, message, iteration=None, piece=None):
        super().__init__(message)
        self.iteration = iteration
        self.piece = piece


class DegeneratePairError(FlowlabError):
    pass


class JacobianDegeneracyError(FlowlabError):
    pass
