"""Prior hyperparameters shared by both models."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PriorSpec:
    """Hyperparameters of the user-specified priors.

    sigma_delta is the prior SD of each per-cell log odds ratio (saturated
    model) and of the missingness slope (count model); it controls how far
    the missingness mechanism may a priori deviate from MAR. alpha0_var is
    the prior variance of the count model's missingness intercept.
    """

    sigma_delta: float
    alpha0_var: float = 10.0

    def __post_init__(self):
        if self.sigma_delta <= 0:
            raise ValueError(f"sigma_delta must be positive, got {self.sigma_delta}")
        if self.alpha0_var <= 0:
            raise ValueError(f"alpha0_var must be positive, got {self.alpha0_var}")
