"""Pseudo-transparent reparameterization for the incomplete count model.

No exact reparameterization splits this model into a data-identified block
plus a free remainder, so a first-order approximation stands in:

    p = expit(alpha0 + alpha1 * mu)          ~ Pr(R=1)
    q = mu * exp(alpha1 * (1 - p))           ~ E(Y | R=1)
    lam = alpha1

with the exact algebraic inverse mu = q * exp(-lam * (1 - p)),
alpha0 = logit(p) - lam * mu. The two maps are mutual inverses by
construction even though neither conditional is exact, which is what makes
the reparameterization pseudo: the true likelihood still moves (weakly)
with lam at fixed (p, q).

The importance sampler here (the convenience-likelihood method) draws
(p, q, lam) i.i.d. from conjugate convenience posteriors, imputes missing
outcomes as Poisson with mean E(Y | R=0) ~ mu * exp(-alpha1 * p), and
weights by the ratio of complete-data joint likelihoods; its weight
collapse on realistic sample sizes is reproduced, not patched. The
identification scan counts roots of the moment equation f(mu) = 0 built
from the estimable cell masses c_y = Pr(Y=y, R=1), y = 0, 1, 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from time import perf_counter

import numpy as np
from scipy.special import expit, gammaln, log_expit, logit

from .datasets import IncompleteDataset
from .diagnostics import DiagnosticsReport, report_from_importance
from .errors import WeightDegeneracyError
from .importance import WeightedSample, normalize_weights, resample_indices
from .models.common import PriorSpec
from .models.count import (
    CountPhiLambda,
    CountPhiLambdaSample,
    CountTheta,
    CountThetaSample,
    observed_count_table,
    poisson_tail_cutoff,
)
from .numdiff import batch_jacobian_logdet
from .rng import RngStream, split

_LOG_2PI = float(np.log(2.0 * np.pi))


def forward_pseudo(theta: CountTheta) -> CountPhiLambda:
    """Taylor-approximate map theta -> (p, q, lam); exact at alpha1 = 0."""
    theta.validate()
    p = float(expit(theta.alpha0 + theta.alpha1 * theta.mu))
    q = float(theta.mu * np.exp(theta.alpha1 * (1.0 - p)))
    return CountPhiLambda(p=p, q=q, lam=theta.alpha1)


def inverse_pseudo(pl: CountPhiLambda) -> CountTheta:
    """Stated closed-form inverse; exact round trip with :func:`forward_pseudo`."""
    pl.validate()
    mu = pl.q * np.exp(-pl.lam * (1.0 - pl.p))
    alpha0 = float(logit(pl.p) - pl.lam * mu)
    return CountTheta(mu=float(mu), alpha0=alpha0, alpha1=pl.lam)


def impute_missing_mean(theta: CountTheta) -> float:
    """First-order conditional mean E(Y | R=0) ~ mu * exp(-alpha1 * expit(alpha0 + alpha1 * mu))."""
    theta.validate()
    return float(theta.mu * np.exp(-theta.alpha1 * expit(theta.alpha0 + theta.alpha1 * theta.mu)))


def exact_phi_count(theta: CountTheta, tol: float = 1e-12) -> tuple[float, float]:
    """Exact (Pr(R=1), E(Y | R=1)) by truncated series, for approximation audits."""
    y = np.arange(poisson_tail_cutoff(theta.mu, tol=tol) + 1, dtype=float)
    pmf = np.exp(y * np.log(theta.mu) - theta.mu - gammaln(y + 1.0))
    obs_prob = expit(theta.alpha0 + theta.alpha1 * y)
    joint = pmf * obs_prob
    p_exact = float(joint.sum())
    return p_exact, float(np.sum(y * joint) / p_exact)


def _inverse_pseudo_free_batch(x: np.ndarray) -> np.ndarray:
    """Vectorized inverse on (n, 3) coordinates (p, q, lam) -> (mu, alpha0, alpha1)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    p, q, lam = x[:, 0], x[:, 1], x[:, 2]
    with np.errstate(all="ignore"):
        mu = q * np.exp(-lam * (1.0 - p))
        p_safe = np.where((p > 0.0) & (p < 1.0), p, np.nan)
        alpha0 = np.log(p_safe) - np.log1p(-p_safe) - lam * mu
    return np.column_stack([mu, alpha0, lam])


# ---------------------------------------------------------------------------
# Convenience-likelihood importance sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PseudoIstpResult:
    weighted: WeightedSample
    theta: CountThetaSample
    report: DiagnosticsReport


def pseudo_istp_count(
    d: IncompleteDataset,
    prior: PriorSpec,
    m: int,
    rng: RngStream,
    step: float = 1e-6,
    chunk: int = 4096,
) -> PseudoIstpResult:
    """Importance sampling with the pseudo reparameterization.

    i.i.d. draws p ~ Beta(1+n_R1, 1+n_R0), q ~ Gamma(1+sum y_obs,
    rate 1+n_R1), lam ~ Normal(0, sigma^2); per draw the missing outcomes
    are imputed Poisson from a fresh substream, and the log weight compares
    the true and convenience complete-data joint likelihoods on that same
    imputed dataset, plus the prior ratio with its 3x3 numerical Jacobian
    factor. Wall time covers sampling through resampling.
    """
    if d.kind != "count":
        raise ValueError(f"expected a count dataset, got kind={d.kind!r}")
    if m < 1:
        raise ValueError("m must be >= 1")
    obs_counts, n_r0 = observed_count_table(d)
    n_r1 = int(d.n - n_r0)
    y_obs_vals = np.nonzero(obs_counts)[0].astype(float)
    c_obs = obs_counts[obs_counts > 0].astype(float)
    sum_y_obs = float(np.sum(y_obs_vals * c_obs))
    lgam_obs = float(np.sum(c_obs * gammaln(y_obs_vals + 1.0)))

    draw_stream, impute_stream, resample_stream = split(rng, 3)
    t0 = perf_counter()

    g = draw_stream.generator()
    p = g.beta(1.0 + n_r1, 1.0 + n_r0, size=m)
    q = g.gamma(1.0 + sum_y_obs, 1.0 / (1.0 + n_r1), size=m)
    lam = g.normal(0.0, prior.sigma_delta, size=m)

    mu = q * np.exp(-lam * (1.0 - p))
    alpha0 = logit(p) - lam * mu

    coords = np.column_stack([p, q, lam])
    logdet, ok = batch_jacobian_logdet(_inverse_pseudo_free_batch, coords, step=step, chunk=chunk)

    # Per-draw imputation of the missing outcomes, each from its own substream.
    sum_y_mis = np.zeros(m)
    lgam_mis = np.zeros(m)
    r_mis_true = np.zeros(m)  # sum of log Pr(R=0 | y~) under the true model
    if n_r0 > 0:
        imp_mean = mu * np.exp(-lam * expit(alpha0 + lam * mu))
        substreams = split(impute_stream, m)
        for i in range(m):
            y_til = substreams[i].generator().poisson(imp_mean[i], size=n_r0).astype(float)
            sum_y_mis[i] = y_til.sum()
            lgam_mis[i] = float(np.sum(gammaln(y_til + 1.0)))
            r_mis_true[i] = float(np.sum(log_expit(-(alpha0[i] + lam[i] * y_til))))

    with np.errstate(all="ignore"):
        log_mu = np.log(mu)
        log_q = np.log(q)
        # True complete-data joint likelihood on (y_obs, y~, r).
        obs_r_true = (
            log_expit(alpha0[:, None] + lam[:, None] * y_obs_vals[None, :]) @ c_obs
            if y_obs_vals.size
            else np.zeros(m)
        )
        log_l_true = (
            sum_y_obs * log_mu - n_r1 * mu - lgam_obs + obs_r_true
            + sum_y_mis * log_mu - n_r0 * mu - lgam_mis + r_mis_true
        )
        # Convenience joint: R ~ Bern(p) and Y ~ Pois(q) on every row.
        log_l_conv = (
            n_r1 * np.log(p) + n_r0 * np.log1p(-p)
            + sum_y_obs * log_q - n_r1 * q - lgam_obs
            + sum_y_mis * log_q - n_r0 * q - lgam_mis
        )
        # Priors: target pi0(theta) through the map, convenience on (phi, lam).
        sd1 = prior.sigma_delta
        v0 = prior.alpha0_var
        log_pi0 = (
            -mu
            - 0.5 * (_LOG_2PI + np.log(v0)) - 0.5 * alpha0**2 / v0
            - 0.5 * _LOG_2PI - np.log(sd1) - 0.5 * (lam / sd1) ** 2
        )
        log_conv_prior = -q - 0.5 * _LOG_2PI - np.log(sd1) - 0.5 * (lam / sd1) ** 2
        logw = np.where(
            ok, log_pi0 + logdet + log_l_true - log_conv_prior - log_l_conv, -np.inf
        )
    logw[~np.isfinite(logw)] = -np.inf

    finite = np.isfinite(logw)
    if not np.any(finite):
        raise WeightDegeneracyError(
            "every pseudo-reparameterization weight vanished "
            f"(jacobian failures: {int(np.sum(~ok))}/{m})"
        )
    norm, ess = normalize_weights(logw)
    idx = resample_indices(norm, m, resample_stream)
    wall = perf_counter() - t0

    draws = CountPhiLambdaSample(p, q, lam)
    theta = CountThetaSample(mu[idx], alpha0[idx], lam[idx])
    weighted = WeightedSample(
        draws=draws,
        log_weights=logw,
        norm_weights=norm,
        ess=ess,
        n_zero_weight=int(np.sum(~finite)),
    )
    report = report_from_importance(
        importance_ess=ess,
        resampled_matrix=theta.to_matrix(),
        param_names=theta.param_names(),
        target_param="mu",
        total_draws=m,
        wall_time_sec=wall,
        n_zero_weight=int(np.sum(~finite)),
        multi_matrix=theta.to_matrix(),
    )
    return PseudoIstpResult(weighted=weighted, theta=theta, report=report)


# ---------------------------------------------------------------------------
# Identification scan
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CHatEstimates:
    """Estimated cell masses c_y = Pr(Y=y, R=1) for y = 0, 1, 2."""

    c: np.ndarray
    n: int

    def __post_init__(self):
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        if self.c.shape != (3,) or np.any(self.c < 0) or np.any(self.c > 1) or self.c.sum() > 1 + 1e-12:
            raise ValueError("c must be three masses in [0,1] summing to at most 1")


@dataclass(frozen=True)
class RootScan:
    """Result of the identification root search."""

    roots: np.ndarray
    n_grid_invalid: int

    def __post_init__(self):
        object.__setattr__(self, "roots", np.asarray(self.roots, dtype=float))


def chat_estimates(d: IncompleteDataset) -> CHatEstimates:
    """Relative frequencies of (Y=y, R=1) for y = 0, 1, 2 over all rows."""
    if d.kind != "count":
        raise ValueError(f"expected a count dataset, got kind={d.kind!r}")
    obs = d.r == 1
    c = np.array([float(np.sum(obs & (d.y == float(y)))) for y in range(3)])
    return CHatEstimates(c=c / max(d.n, 1), n=d.n)


def population_chat(theta: CountTheta) -> CHatEstimates:
    """Population c_y = Pois(y; mu) * expit(alpha0 + alpha1 * y), y = 0, 1, 2."""
    theta.validate()
    y = np.arange(3, dtype=float)
    pmf = np.exp(y * np.log(theta.mu) - theta.mu - gammaln(y + 1.0))
    return CHatEstimates(c=pmf * expit(theta.alpha0 + theta.alpha1 * y), n=0)


def _moment_gap(mu: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """f(mu) and the validity mask of the implied observation probabilities."""
    mu = np.asarray(mu, dtype=float)
    with np.errstate(all="ignore"):
        a0 = c[0] * np.exp(mu)
        a1 = c[1] * np.exp(mu) / mu
        valid = (a0 > 0.0) & (a0 < 1.0) & (a1 > 0.0) & (a1 < 1.0) & (mu > 0.0)
        h = expit(2.0 * logit(a1) - logit(a0))
        f = np.exp(-mu) * mu**2 / 2.0 * h - c[2]
    return np.where(valid, f, np.nan), valid


def identification_roots(
    c: CHatEstimates, mu_max: float, grid: int = 4096, f_tol: float = 1e-12
) -> RootScan:
    """Scan f(mu) = exp(-mu) mu^2 / 2 * h(c0 e^mu, c1 e^mu / mu) - c2 for roots.

    Uniform grid over (1e-6, mu_max], skipping points where either implied
    observation probability leaves (0, 1); every sign change between
    consecutive valid points is bisected until |f| < f_tol. No root is a
    legal, reported outcome.
    """
    if np.any(c.c <= 0.0):
        raise ValueError("identification scan needs strictly positive c0, c1, c2")
    if mu_max <= 0:
        raise ValueError("mu_max must be positive")
    mus = np.linspace(1e-6, mu_max, grid)
    f, valid = _moment_gap(mus, c.c)
    n_invalid = int(np.sum(~valid))

    roots: list[float] = []
    idx_valid = np.nonzero(valid)[0]
    for a_i, b_i in zip(idx_valid[:-1], idx_valid[1:]):
        if b_i != a_i + 1:
            continue  # bracket spans an invalid region
        fa, fb = f[a_i], f[b_i]
        if fa == 0.0:
            roots.append(float(mus[a_i]))
            continue
        if fa * fb < 0.0:
            roots.append(_bisect(mus[a_i], mus[b_i], fa, fb, c.c, f_tol))
    if idx_valid.size and f[idx_valid[-1]] == 0.0:
        roots.append(float(mus[idx_valid[-1]]))
    return RootScan(roots=np.array(sorted(roots)), n_grid_invalid=n_invalid)


def _bisect(lo: float, hi: float, f_lo: float, f_hi: float, c: np.ndarray, f_tol: float) -> float:
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = float(_moment_gap(np.array([mid]), c)[0][0])
        if not np.isfinite(f_mid) or abs(f_mid) < f_tol:
            return mid
        if f_lo * f_mid < 0.0:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)
