"""
Custom exceptions for cuspfunnel
"""


class CuspFunnelError(Exception):
    """Base class for errors for cuspfunnel"""

    def __init__(self, *args, **kwargs):
        self.field = kwargs.pop("field", None)
        self.hint = kwargs.pop("hint", None)
        if args:
            message = str(args[0])
            if self.field is not None:
                message = f"{self.field}: {message}"
            if self.hint is not None:
                message = f"{message} ({self.hint})"
            args = (message,) + tuple(args[1:])
        super().__init__(*args, **kwargs)


class GraphValidationError(CuspFunnelError):
    """Raised when a fiber, geometry or weighted graph is malformed"""


class WeightRangeError(GraphValidationError):
    """Raised when exponential ray weights would leave double precision range"""


class WeightMismatchError(CuspFunnelError):
    """Raised when operators living on different weighted spaces are combined"""


class NotHermitianError(CuspFunnelError):
    """Raised when an operator must be flagged Hermitian in its weighted product"""


class PerturbationError(CuspFunnelError):
    """Raised when a perturbation would make a weight nonpositive or is malformed"""


class NonRadialPerturbationError(PerturbationError):
    """Raised when a radial-only computation receives a non-radial perturbation"""


class DenseCapExceededError(CuspFunnelError):
    """Raised when a dense computation would exceed the configured dimension cap"""


class ConfigError(CuspFunnelError):
    """Raised for an experiment configuration that cannot be run"""
