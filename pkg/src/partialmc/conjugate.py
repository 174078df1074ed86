"""i.i.d. sampling from the saturated model's convenience posterior.

In the reparameterized space the observed-data likelihood factorizes into
Bernoulli/categorical pieces, so flat Beta and Dirichlet convenience
priors on phi are exactly conjugate:

    epsilon | data ~ Beta(1 + n_{R=1}, 1 + n_{R=0})
    zeta    | data ~ Dir(1 + per-cell R=0 counts)
    eta     | data ~ Dir(1 + per-cell R=1 counts)
    xi[x]   | data ~ Beta(1 + n_{x,Y=1,R=1}, 1 + n_{x,Y=0,R=1})

lam carries no information given phi and is drawn from its prior
Normal(0, sigma^2) per component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models.common import PriorSpec
from .models.saturated import SatPhiLambdaSample, SatSufficientStats
from .rng import RngStream


@dataclass(frozen=True)
class SatConveniencePosterior:
    """Parameters of the factorized convenience posterior for (phi, lam)."""

    eps_beta: tuple[float, float]
    zeta_dir: np.ndarray
    eta_dir: np.ndarray
    xi_beta: np.ndarray  # (K, 2): per-cell Beta(a, b)
    lambda_sd: float

    def __post_init__(self):
        object.__setattr__(self, "zeta_dir", np.asarray(self.zeta_dir, dtype=float))
        object.__setattr__(self, "eta_dir", np.asarray(self.eta_dir, dtype=float))
        object.__setattr__(self, "xi_beta", np.asarray(self.xi_beta, dtype=float))
        if np.any(self.zeta_dir < 1) or np.any(self.eta_dir < 1) or np.any(self.xi_beta < 1):
            raise ValueError("posterior concentrations below the +1 prior counts")
        if self.xi_beta.shape != (self.zeta_dir.size, 2) or self.eta_dir.size != self.zeta_dir.size:
            raise ValueError("posterior blocks disagree on the number of cells")

    @property
    def n_cells(self) -> int:
        return self.zeta_dir.size


def posterior_params_sat(stats: SatSufficientStats, prior: PriorSpec) -> SatConveniencePosterior:
    """Conjugate update of the flat convenience priors by the counts."""
    return SatConveniencePosterior(
        eps_beta=(1.0 + stats.n_r1, 1.0 + stats.n_r0),
        zeta_dir=1.0 + stats.n_cell_r0,
        eta_dir=1.0 + stats.n_cell_r1,
        xi_beta=np.column_stack([1.0 + stats.n_cell_y1_r1, 1.0 + stats.n_cell_y0_r1]),
        lambda_sd=prior.sigma_delta,
    )


def draw_phi_lambda_sat(post: SatConveniencePosterior, m: int, rng: RngStream) -> SatPhiLambdaSample:
    """m i.i.d. draws of (phi, lam) from the convenience posterior."""
    if m < 1:
        raise ValueError("m must be >= 1")
    g = rng.generator()
    k = post.n_cells
    eps = g.beta(post.eps_beta[0], post.eps_beta[1], size=m)
    zeta = _dirichlet(g, post.zeta_dir, m)
    eta = _dirichlet(g, post.eta_dir, m)
    xi = g.beta(post.xi_beta[:, 0], post.xi_beta[:, 1], size=(m, k))
    lam = g.normal(0.0, post.lambda_sd, size=(m, k))
    return SatPhiLambdaSample(eps, zeta, eta, xi, lam)


def _dirichlet(g: np.random.Generator, conc: np.ndarray, m: int) -> np.ndarray:
    raw = g.standard_gamma(conc, size=(m, conc.size))
    return raw / raw.sum(axis=1, keepdims=True)
