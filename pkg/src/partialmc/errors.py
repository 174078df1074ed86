"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A run configuration is internally inconsistent or out of range."""


class OutOfImageError(ValueError):
    """A (phi, lambda) point has no preimage in the original parameter space.

    Raised by inverse maps when the reconstructed parameters leave their
    legal domain. Importance-sampling callers treat the draw as weight
    zero; this must never be silently clamped.
    """


class SingularJacobianError(ArithmeticError):
    """The numerical Jacobian is non-finite or its determinant underflows."""


class WeightDegeneracyError(RuntimeError):
    """Every importance weight vanished: no draw lies in the target support."""
