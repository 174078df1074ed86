"""Incomplete count model: Poisson outcome with outcome-dependent missingness.

    Y ~ Pois(mu),   R | Y=y ~ Bern(expit(alpha0 + alpha1 * y)).

alpha1 = 0 gives MAR; alpha1 != 0 makes the missingness nonignorable.
Priors: mu ~ Gamma(1,1) (shape-rate), alpha0 ~ Normal(0, alpha0_var),
alpha1 ~ Normal(0, sigma^2). The observed-data likelihood marginalizes the
missing outcomes over a truncated Poisson range whose tail mass is below
1e-12.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, log_expit
from scipy.stats import poisson

from ..datasets import IncompleteDataset, count_dataset
from ..rng import RngStream
from .common import PriorSpec

_LOG_2PI = float(np.log(2.0 * np.pi))

TAIL_TOL = 1e-12
MIN_TRUNCATION = 50


@dataclass(frozen=True)
class CountTheta:
    """Original parameters (mu, alpha0, alpha1)."""

    mu: float
    alpha0: float
    alpha1: float

    def __post_init__(self):
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "alpha0", float(self.alpha0))
        object.__setattr__(self, "alpha1", float(self.alpha1))

    def in_support(self) -> bool:
        return self.mu > 0 and np.isfinite(self.mu) and np.isfinite(self.alpha0) and np.isfinite(self.alpha1)

    def validate(self) -> None:
        if not self.in_support():
            raise ValueError("CountTheta violates its domain invariants")


@dataclass(frozen=True)
class CountPhiLambda:
    """Identified block phi = (p, q) plus lam = alpha1.

    p = Pr(R=1) and q = E(Y | R=1) are directly estimable; the missingness
    slope is not and rides along as lam.
    """

    p: float
    q: float
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "q", float(self.q))
        object.__setattr__(self, "lam", float(self.lam))

    def in_support(self) -> bool:
        return 0.0 < self.p < 1.0 and self.q > 0 and np.isfinite(self.q) and np.isfinite(self.lam)

    def validate(self) -> None:
        if not self.in_support():
            raise ValueError("CountPhiLambda violates its domain invariants")


class CountThetaSample:
    """Column-oriented batch of CountTheta draws."""

    def __init__(self, mu, alpha0, alpha1):
        self.mu = np.asarray(mu, dtype=float).reshape(-1)
        self.alpha0 = np.asarray(alpha0, dtype=float).reshape(-1)
        self.alpha1 = np.asarray(alpha1, dtype=float).reshape(-1)

    def __len__(self) -> int:
        return self.mu.size

    def __getitem__(self, i):
        if isinstance(i, (int, np.integer)):
            return CountTheta(self.mu[i], self.alpha0[i], self.alpha1[i])
        return CountThetaSample(self.mu[i], self.alpha0[i], self.alpha1[i])

    def param_names(self) -> list[str]:
        return ["mu", "alpha0", "alpha1"]

    def to_matrix(self) -> np.ndarray:
        return np.column_stack([self.mu, self.alpha0, self.alpha1])

    free_matrix = to_matrix


class CountPhiLambdaSample:
    """Column-oriented batch of CountPhiLambda draws."""

    def __init__(self, p, q, lam):
        self.p = np.asarray(p, dtype=float).reshape(-1)
        self.q = np.asarray(q, dtype=float).reshape(-1)
        self.lam = np.asarray(lam, dtype=float).reshape(-1)

    def __len__(self) -> int:
        return self.p.size

    def __getitem__(self, i):
        if isinstance(i, (int, np.integer)):
            return CountPhiLambda(self.p[i], self.q[i], self.lam[i])
        return CountPhiLambdaSample(self.p[i], self.q[i], self.lam[i])


def poisson_tail_cutoff(mu: float, tol: float = TAIL_TOL, floor: int = MIN_TRUNCATION) -> int:
    """Smallest y_max with Pr(Y > y_max) < tol under Pois(mu), at least floor."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    y_max = int(poisson.isf(tol, mu))
    while poisson.sf(y_max, mu) >= tol:
        y_max += 1
    return max(floor, y_max)


def simulate_count(theta: CountTheta, n: int, rng: RngStream) -> IncompleteDataset:
    """Draw n rows of (Y, R), masking Y where R = 0."""
    if n < 0:
        raise ValueError("n must be >= 0")
    theta.validate()
    g = rng.generator()
    y = g.poisson(theta.mu, size=n).astype(float)
    prob_obs = _expit(theta.alpha0 + theta.alpha1 * y)
    r = (g.random(n) < prob_obs).astype(np.int64)
    y[r == 0] = np.nan
    return count_dataset(y, r)


def _expit(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=float)))


def log_prior_count(theta: CountTheta, prior: PriorSpec) -> float:
    """Log density of Gamma(1,1) x Normal(0, alpha0_var) x Normal(0, sigma^2)."""
    if not theta.in_support():
        return -np.inf
    log_gamma11 = -theta.mu  # Gamma(1,1) = Exp(1)
    v0 = prior.alpha0_var
    log_a0 = -0.5 * (_LOG_2PI + np.log(v0)) - 0.5 * theta.alpha0**2 / v0
    sd1 = prior.sigma_delta
    log_a1 = -0.5 * _LOG_2PI - np.log(sd1) - 0.5 * (theta.alpha1 / sd1) ** 2
    return float(log_gamma11 + log_a0 + log_a1)


def observed_count_table(d: IncompleteDataset) -> tuple[np.ndarray, int]:
    """Per-value counts of the observed outcomes plus the missing-row count."""
    if d.kind != "count":
        raise ValueError(f"expected a count dataset, got kind={d.kind!r}")
    obs_y = d.y[d.r == 1].astype(np.int64)
    counts = np.bincount(obs_y) if obs_y.size else np.zeros(1, dtype=np.int64)
    return counts, int(np.sum(d.r == 0))


def log_likelihood_count(theta: CountTheta, d: IncompleteDataset) -> float:
    """Observed-data log likelihood, truncating the missing-Y sum at the tail cutoff."""
    counts, n_r0 = observed_count_table(d)
    return _log_likelihood_count_from_table(theta, counts, n_r0)


def _log_likelihood_count_from_table(theta: CountTheta, obs_counts: np.ndarray, n_r0: int) -> float:
    if not theta.in_support():
        return -np.inf
    mu, a0, a1 = theta.mu, theta.alpha0, theta.alpha1
    total = 0.0
    active = obs_counts > 0
    if np.any(active):
        y = np.nonzero(active)[0].astype(float)
        c = obs_counts[active].astype(float)
        log_pois = y * np.log(mu) - mu - gammaln(y + 1.0)
        total += float(np.sum(c * (log_pois + log_expit(a0 + a1 * y))))
    if n_r0 > 0:
        y_max = poisson_tail_cutoff(mu)
        y = np.arange(y_max + 1, dtype=float)
        pmf = np.exp(y * np.log(mu) - mu - gammaln(y + 1.0))
        miss_mass = float(np.sum(pmf * _expit(-(a0 + a1 * y))))
        with np.errstate(divide="ignore"):
            total += n_r0 * float(np.log(miss_mass))
    return total
