"""Saturated logistic model with nonignorable missing outcomes.

Binary covariates X_1..X_p index 2^p cells; each cell x carries its own
cell probability alpha[x], outcome probability beta[x] = Pr(Y=1 | x),
observation probability gamma[x] = Pr(R=1 | x, Y=0), and log odds ratio
delta[x] tying missingness to the outcome:

    Pr(R=1 | x, Y=1) = gamma*[x] = expit(logit(gamma[x]) + delta[x]).

delta = 0 everywhere recovers MAR. Priors: alpha ~ Dirichlet(1), beta and
gamma ~ Uniform(0,1) per cell, delta ~ Normal(0, sigma^2) per cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, gammaln, logit

from ..datasets import IncompleteDataset, sat_dataset
from ..rng import RngStream
from .common import PriorSpec

_LOG_2PI = float(np.log(2.0 * np.pi))


def cell_index(x_bits) -> int:
    """Base-2 encode a binary covariate vector into its cell index."""
    bits = np.asarray(x_bits, dtype=np.int64)
    if bits.ndim != 1 or not np.all((bits == 0) | (bits == 1)):
        raise ValueError("x_bits must be a 1-d 0/1 vector")
    return int(np.sum(bits << np.arange(bits.size)))

def cell_bits(index: int, p: int) -> np.ndarray:
    """Inverse of :func:`cell_index`: decode a cell index into p bits."""
    if not 0 <= index < (1 << p):
        raise ValueError(f"cell index {index} out of range for p={p}")
    return (index >> np.arange(p)) & 1


def gamma_star(gamma: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Observation probability when Y=1: expit(logit(gamma) + delta)."""
    return expit(logit(np.asarray(gamma, dtype=float)) + np.asarray(delta, dtype=float))


@dataclass(frozen=True)
class SatTheta:
    """Original parameters (alpha, beta, gamma, delta), one entry per cell."""

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        shapes = {getattr(self, n).shape for n in ("alpha", "beta", "gamma", "delta")}
        if len(shapes) != 1 or self.alpha.ndim != 1 or self.alpha.size < 2:
            raise ValueError("alpha, beta, gamma, delta must be equal-length vectors (>= 2 cells)")

    @property
    def n_cells(self) -> int:
        return self.alpha.size

    @property
    def n_covariates(self) -> int:
        p = self.n_cells.bit_length() - 1
        if (1 << p) != self.n_cells:
            raise ValueError(f"cell count {self.n_cells} is not a power of two")
        return p

    def in_support(self, atol: float = 1e-9) -> bool:
        return bool(
            np.all(self.alpha > 0)
            and abs(self.alpha.sum() - 1.0) <= atol
            and np.all((self.beta > 0) & (self.beta < 1))
            and np.all((self.gamma > 0) & (self.gamma < 1))
            and np.all(np.isfinite(self.delta))
        )

    def validate(self) -> None:
        if not self.in_support(atol=1e-12):
            raise ValueError("SatTheta violates its domain invariants")


@dataclass(frozen=True)
class SatPhiLambda:
    """Identified block phi = (epsilon, zeta, eta, xi) plus lam = delta.

    epsilon = Pr(R=1); zeta and eta are the cell distributions given R=0 and
    R=1; xi[x] = Pr(Y=1 | x, R=1). lam carries the data-untouched remainder.
    """

    epsilon: float
    zeta: np.ndarray
    eta: np.ndarray
    xi: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "epsilon", float(self.epsilon))
        for name in ("zeta", "eta", "xi", "lam"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        shapes = {getattr(self, n).shape for n in ("zeta", "eta", "xi", "lam")}
        if len(shapes) != 1 or self.zeta.ndim != 1:
            raise ValueError("zeta, eta, xi, lam must be equal-length vectors")

    @property
    def n_cells(self) -> int:
        return self.zeta.size

    def in_support(self, atol: float = 1e-9) -> bool:
        return bool(
            0.0 < self.epsilon < 1.0
            and np.all(self.zeta > 0)
            and np.all(self.eta > 0)
            and abs(self.zeta.sum() - 1.0) <= atol
            and abs(self.eta.sum() - 1.0) <= atol
            and np.all((self.xi > 0) & (self.xi < 1))
            and np.all(np.isfinite(self.lam))
        )

    def validate(self) -> None:
        if not self.in_support():
            raise ValueError("SatPhiLambda violates its domain invariants")


class SatThetaSample:
    """Column-oriented batch of SatTheta draws (one row per draw)."""

    param_block_names = ("alpha", "beta", "gamma", "delta")

    def __init__(self, alpha, beta, gamma, delta):
        self.alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
        self.beta = np.atleast_2d(np.asarray(beta, dtype=float))
        self.gamma = np.atleast_2d(np.asarray(gamma, dtype=float))
        self.delta = np.atleast_2d(np.asarray(delta, dtype=float))

    def __len__(self) -> int:
        return self.alpha.shape[0]

    @property
    def n_cells(self) -> int:
        return self.alpha.shape[1]

    def __getitem__(self, i):
        if isinstance(i, (int, np.integer)):
            return SatTheta(self.alpha[i], self.beta[i], self.gamma[i], self.delta[i])
        return SatThetaSample(self.alpha[i], self.beta[i], self.gamma[i], self.delta[i])

    def param_names(self) -> list[str]:
        k = self.n_cells
        return [f"{blk}_{x}" for blk in self.param_block_names for x in range(k)]

    def to_matrix(self) -> np.ndarray:
        """(m, 4K) matrix in param_names order."""
        return np.hstack([self.alpha, self.beta, self.gamma, self.delta])

    def free_matrix(self) -> np.ndarray:
        """(m, 4K-1) matrix dropping the redundant alpha_0 column."""
        return np.hstack([self.alpha[:, 1:], self.beta, self.gamma, self.delta])


class SatPhiLambdaSample:
    """Column-oriented batch of SatPhiLambda draws."""

    def __init__(self, epsilon, zeta, eta, xi, lam):
        self.epsilon = np.asarray(epsilon, dtype=float).reshape(-1)
        self.zeta = np.atleast_2d(np.asarray(zeta, dtype=float))
        self.eta = np.atleast_2d(np.asarray(eta, dtype=float))
        self.xi = np.atleast_2d(np.asarray(xi, dtype=float))
        self.lam = np.atleast_2d(np.asarray(lam, dtype=float))

    def __len__(self) -> int:
        return self.epsilon.size

    @property
    def n_cells(self) -> int:
        return self.zeta.shape[1]

    def __getitem__(self, i):
        if isinstance(i, (int, np.integer)):
            return SatPhiLambda(self.epsilon[i], self.zeta[i], self.eta[i], self.xi[i], self.lam[i])
        return SatPhiLambdaSample(self.epsilon[i], self.zeta[i], self.eta[i], self.xi[i], self.lam[i])


@dataclass(frozen=True)
class SatSufficientStats:
    """Counts that the observed-data likelihood and conjugacy depend on."""

    n_r1: int
    n_r0: int
    n_cell_r0: np.ndarray
    n_cell_r1: np.ndarray
    n_cell_y1_r1: np.ndarray
    n_cell_y0_r1: np.ndarray

    def __post_init__(self):
        for name in ("n_cell_r0", "n_cell_r1", "n_cell_y1_r1", "n_cell_y0_r1"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64))
        if self.n_r1 != int(self.n_cell_r1.sum()) or self.n_r0 != int(self.n_cell_r0.sum()):
            raise ValueError("marginal and per-cell counts disagree")
        if np.any(self.n_cell_r1 != self.n_cell_y1_r1 + self.n_cell_y0_r1):
            raise ValueError("per-cell observed counts do not add up")


def joint_cell_probs(theta: SatTheta) -> np.ndarray:
    """Exact joint table Pr(cell=x, Y=y, R=r), shape (2^p, 2, 2).

    Index order is [x, y, r]. The table sums to 1 to within rounding and is
    the enumeration oracle every reparameterization is checked against.
    """
    gstar = gamma_star(theta.gamma, theta.delta)
    table = np.empty((theta.n_cells, 2, 2))
    table[:, 1, 1] = theta.alpha * theta.beta * gstar
    table[:, 1, 0] = theta.alpha * theta.beta * (1.0 - gstar)
    table[:, 0, 1] = theta.alpha * (1.0 - theta.beta) * theta.gamma
    table[:, 0, 0] = theta.alpha * (1.0 - theta.beta) * (1.0 - theta.gamma)
    return table


def sufficient_stats_sat(d: IncompleteDataset) -> SatSufficientStats:
    """Tally the per-cell (Y, R) counts of a saturated-model dataset."""
    if d.kind != "sat":
        raise ValueError(f"expected a sat dataset, got kind={d.kind!r}")
    k = d.n_cells
    obs = d.r == 1
    n_cell_r0 = np.bincount(d.cells[~obs], minlength=k)
    n_cell_y1_r1 = np.bincount(d.cells[obs & (d.y == 1.0)], minlength=k)
    n_cell_y0_r1 = np.bincount(d.cells[obs & (d.y == 0.0)], minlength=k)
    n_cell_r1 = n_cell_y1_r1 + n_cell_y0_r1
    return SatSufficientStats(
        n_r1=int(n_cell_r1.sum()),
        n_r0=int(n_cell_r0.sum()),
        n_cell_r0=n_cell_r0,
        n_cell_r1=n_cell_r1,
        n_cell_y1_r1=n_cell_y1_r1,
        n_cell_y0_r1=n_cell_y0_r1,
    )


def simulate_sat(theta: SatTheta, n: int, rng: RngStream) -> IncompleteDataset:
    """Draw n i.i.d. rows from the joint table, masking Y where R = 0."""
    if n < 0:
        raise ValueError("n must be >= 0")
    theta.validate()
    g = rng.generator()
    flat = joint_cell_probs(theta).reshape(-1)
    outcome = np.searchsorted(np.cumsum(flat), g.random(n), side="right")
    cells = outcome >> 2
    y = ((outcome >> 1) & 1).astype(float)
    r = outcome & 1
    y[r == 0] = np.nan
    return sat_dataset(cells, y, r, theta.n_covariates)


def sample_prior_sat(p: int, prior: PriorSpec, rng: RngStream) -> SatTheta:
    """One draw of (alpha, beta, gamma, delta) from the priors."""
    g = rng.generator()
    k = 1 << p
    raw = g.standard_gamma(np.ones(k))
    alpha = raw / raw.sum()
    beta = g.random(k)
    gamma = g.random(k)
    delta = g.normal(0.0, prior.sigma_delta, size=k)
    return SatTheta(alpha, beta, gamma, delta)


def log_prior_sat(theta: SatTheta, prior: PriorSpec) -> float:
    """Log density of the stated priors at theta; -inf outside support."""
    if not theta.in_support():
        return -np.inf
    k = theta.n_cells
    log_dir = float(gammaln(k))  # Dirichlet(1,...,1) normalizing constant
    sd = prior.sigma_delta
    log_norm = float(np.sum(-0.5 * _LOG_2PI - np.log(sd) - 0.5 * (theta.delta / sd) ** 2))
    return log_dir + log_norm  # Unif(0,1) factors contribute 0 on support


def log_likelihood_sat(theta: SatTheta, d: IncompleteDataset) -> float:
    """Observed-data log likelihood, marginalizing Y on rows with R = 0."""
    stats = sufficient_stats_sat(d)
    return _log_likelihood_sat_from_stats(theta, stats)


def _log_likelihood_sat_from_stats(theta: SatTheta, stats: SatSufficientStats) -> float:
    if not theta.in_support():
        return -np.inf
    a, b, c = theta.alpha, theta.beta, theta.gamma
    gstar = gamma_star(c, theta.delta)
    with np.errstate(divide="ignore"):
        terms = [
            (stats.n_cell_y1_r1, np.log(a * b * gstar)),
            (stats.n_cell_y0_r1, np.log(a * (1.0 - b) * c)),
            (stats.n_cell_r0, np.log(a * (b * (1.0 - gstar) + (1.0 - b) * (1.0 - c)))),
        ]
        total = 0.0
        for counts, logs in terms:
            active = counts > 0
            if np.any(active):
                total += float(np.sum(counts[active] * logs[active]))
    return total
