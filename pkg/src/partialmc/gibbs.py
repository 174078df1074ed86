"""Metropolis-within-Gibbs baselines in the original parameterization.

These chains stand in for an off-the-shelf graph sampler: data-augmented
Gibbs with conjugate blocks where the model offers them and adaptive
random-walk Metropolis elsewhere. Missing outcomes are imputed node by
node every sweep, which is what makes the per-sweep cost grow with the
data size. Step sizes adapt by Robbins-Monro on the log scale during
burn-in only (target acceptance 0.44 for scalar blocks, 0.234 for the
paired per-cell blocks) and freeze afterwards, so the kept draws come from
a fixed kernel.

The count model gets two chains: one on (mu, alpha0, alpha1) directly, and
one that walks the reparameterized state (p, q, alpha1), maps each
proposal back to theta, and scores it with the true observed-data
likelihood (missing outcomes marginalized, so no imputation).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from time import perf_counter

import numpy as np
from scipy.special import expit, gammaln, log_expit, logit

from .datasets import IncompleteDataset
from .errors import ConfigError
from .models.common import PriorSpec
from .models.count import (
    CountPhiLambda,
    _log_likelihood_count_from_table,
    observed_count_table,
    poisson_tail_cutoff,
)
from .models.saturated import SatTheta, gamma_star, sufficient_stats_sat
from .pseudo_count import inverse_pseudo
from .rng import RngStream, split

TARGET_ACCEPT_SCALAR = 0.44
TARGET_ACCEPT_PAIRED = 0.234


@dataclass(frozen=True)
class MwgConfig:
    """Random-walk proposal tuning for the Metropolis blocks."""

    step_sizes: dict = field(default_factory=dict)  # block name -> initial proposal SD
    adapt: bool = True
    adapt_window: int = 50
    target_accept: float | None = None  # None: 0.44 scalar, 0.234 paired

    def __post_init__(self):
        for name, s in self.step_sizes.items():
            if s <= 0:
                raise ConfigError(f"step size for block {name!r} must be positive")
        if self.target_accept is not None and not 0.0 < self.target_accept < 1.0:
            raise ConfigError("target_accept must lie in (0, 1)")
        if self.adapt_window < 1:
            raise ConfigError("adapt_window must be >= 1")

    def initial(self, block: str, default: float) -> float:
        return float(self.step_sizes.get(block, default))

    def target(self, paired: bool) -> float:
        if self.target_accept is not None:
            return self.target_accept
        return TARGET_ACCEPT_PAIRED if paired else TARGET_ACCEPT_SCALAR


@dataclass
class ChainOutput:
    """Kept draws of every chain plus acceptance and timing bookkeeping."""

    chains: int
    iters_kept: int
    burnin: int
    draws: np.ndarray  # (chains, iters_kept, n_params)
    param_names: list[str]
    accept_rates: dict
    wall_time_sec: float

    def column(self, name: str) -> np.ndarray:
        """Draws of one parameter as a (chains, iters_kept) array."""
        return self.draws[:, :, self.param_names.index(name)]

    def pooled(self) -> np.ndarray:
        """All chains concatenated: (chains * iters_kept, n_params)."""
        return self.draws.reshape(-1, self.draws.shape[2])


class _AdaptiveScale:
    """Robbins-Monro adaptation of a log proposal scale during burn-in."""

    def __init__(self, initial: float, target: float, window: int, adapt: bool):
        self.log_s = np.log(initial) * np.ones(1)
        self.target = target
        self.window = window
        self.adapt = adapt
        self._accepts = 0.0
        self._count = 0
        self._round = 0

    def as_vector(self, k: int) -> None:
        self.log_s = np.full(k, float(self.log_s[0]))

    @property
    def scale(self) -> np.ndarray:
        return np.exp(self.log_s)

    def update(self, accepted, in_burnin: bool) -> None:
        if not (self.adapt and in_burnin):
            return
        self._accepts = self._accepts + np.asarray(accepted, dtype=float)
        self._count += 1
        if self._count >= self.window:
            self._round += 1
            rate = self._accepts / self._count
            self.log_s = self.log_s + (2.0 / np.sqrt(self._round)) * (rate - self.target)
            self._accepts = 0.0
            self._count = 0


def impute_y_sat(cell: int, theta: SatTheta, rng: RngStream) -> int:
    """One Bernoulli imputation of a missing outcome in the given cell.

    Pr(Y=1 | cell, R=0) = beta (1-gamma*) / (beta (1-gamma*) + (1-beta)(1-gamma)).
    """
    b = theta.beta[cell]
    c = theta.gamma[cell]
    gs = gamma_star(theta.gamma, theta.delta)[cell]
    p1 = b * (1.0 - gs) / (b * (1.0 - gs) + (1.0 - b) * (1.0 - c))
    return int(rng.generator().random() < p1)


def _check_run_shape(chains: int, iters: int, burnin: int) -> None:
    if chains < 1 or iters < 1 or burnin < 0:
        raise ConfigError("need chains >= 1, iters >= 1, burnin >= 0")


# ---------------------------------------------------------------------------
# Saturated model
# ---------------------------------------------------------------------------


def gibbs_sat(
    d: IncompleteDataset,
    prior: PriorSpec,
    chains: int = 3,
    iters: int = 15000,
    burnin: int = 2000,
    cfg: MwgConfig | None = None,
    rng: RngStream = RngStream(0),
) -> ChainOutput:
    """Data-augmented Gibbs for the saturated model.

    Per sweep: impute every missing Y from its full conditional; draw
    alpha | complete data ~ Dirichlet(1 + cell counts); draw each
    beta_x | complete data ~ Beta(1 + n_{x,1}, 1 + n_{x,0}); update each
    (gamma_x, delta_x) pair by random-walk Metropolis on (logit gamma_x,
    delta_x) against the complete-data likelihood times the priors. The
    paired blocks are conditionally independent across cells given the
    complete data, so they are accepted cell-wise in one pass.
    """
    if d.kind != "sat":
        raise ValueError(f"expected a sat dataset, got kind={d.kind!r}")
    _check_run_shape(chains, iters, burnin)
    cfg = cfg or MwgConfig()
    stats = sufficient_stats_sat(d)
    k = d.n_cells
    cell_counts = stats.n_cell_r0 + stats.n_cell_r1
    m11 = stats.n_cell_y1_r1.astype(float)  # y=1, r=1 (fixed)
    m01 = stats.n_cell_y0_r1.astype(float)  # y=0, r=1 (fixed)
    n_r0_cell = stats.n_cell_r0.astype(float)
    mis_cells = d.cells[d.r == 0]
    mis_cells_list = mis_cells.tolist()
    n_mis = len(mis_cells_list)

    total = burnin + iters
    draws = np.empty((chains, iters, 4 * k))
    sd = prior.sigma_delta
    target = cfg.target(paired=True)
    kept_accepts = 0.0
    kept_updates = 0

    t0 = perf_counter()
    for ci, stream in enumerate(split(rng, chains)):
        g = stream.generator()
        # Disperse chain starts by drawing from the priors.
        raw = g.standard_gamma(np.ones(k))
        alpha = raw / raw.sum()
        beta = g.random(k)
        gamma = g.random(k)
        delta = g.normal(0.0, sd, size=k)
        lg = logit(gamma)

        step = _AdaptiveScale(cfg.initial("gamma_delta", 0.5), target, cfg.adapt_window, cfg.adapt)
        step.as_vector(k)

        for t in range(total):
            in_burnin = t < burnin
            # (i) node-wise imputation of the missing outcomes
            gstar = expit(lg + delta)
            denom = beta * (1.0 - gstar) + (1.0 - beta) * (1.0 - gamma)
            p1 = (beta * (1.0 - gstar) / denom).tolist()
            u = g.random(n_mis)
            k1 = [0] * k
            for j in range(n_mis):
                cell = mis_cells_list[j]
                if u[j] < p1[cell]:
                    k1[cell] += 1
            k1 = np.asarray(k1, dtype=float)

            # (ii) alpha | complete data (cell counts do not involve y)
            raw = g.standard_gamma(1.0 + cell_counts)
            alpha = raw / raw.sum()

            # (iii) beta | complete data
            n_y1 = m11 + k1
            n_y0 = m01 + (n_r0_cell - k1)
            beta = g.beta(1.0 + n_y1, 1.0 + n_y0)

            # (iv) paired (gamma, delta) random walk per cell
            s = step.scale
            lg_prop = lg + s * g.normal(size=k)
            de_prop = delta + s * g.normal(size=k)
            logp_cur = _sat_rm_block_logpost(lg, delta, m11, k1, m01, n_r0_cell - k1, sd)
            logp_prop = _sat_rm_block_logpost(lg_prop, de_prop, m11, k1, m01, n_r0_cell - k1, sd)
            accept = np.log(g.random(k)) < (logp_prop - logp_cur)
            lg = np.where(accept, lg_prop, lg)
            delta = np.where(accept, de_prop, delta)
            gamma = expit(lg)
            step.update(accept, in_burnin)

            if not in_burnin:
                draws[ci, t - burnin, :k] = alpha
                draws[ci, t - burnin, k : 2 * k] = beta
                draws[ci, t - burnin, 2 * k : 3 * k] = gamma
                draws[ci, t - burnin, 3 * k :] = delta
                kept_accepts += float(np.mean(accept))
                kept_updates += 1
    wall = perf_counter() - t0

    names = [f"{blk}_{x}" for blk in ("alpha", "beta", "gamma", "delta") for x in range(k)]
    return ChainOutput(
        chains=chains,
        iters_kept=iters,
        burnin=burnin,
        draws=draws,
        param_names=names,
        accept_rates={"gamma_delta": kept_accepts / max(kept_updates, 1)},
        wall_time_sec=wall,
    )


def _sat_rm_block_logpost(lg, delta, m11, m10, m01, m00, sd):
    # Complete-data likelihood of (gamma, delta) per cell, plus the
    # Unif(0,1) prior transformed to the logit scale and the Normal prior.
    z = lg + delta
    loglik = (
        m11 * log_expit(z)
        + m10 * log_expit(-z)
        + m01 * log_expit(lg)
        + m00 * log_expit(-lg)
    )
    log_prior = log_expit(lg) + log_expit(-lg) - 0.5 * (delta / sd) ** 2
    return loglik + log_prior


# ---------------------------------------------------------------------------
# Count model, original parameterization
# ---------------------------------------------------------------------------


def mcmc_count_original(
    d: IncompleteDataset,
    prior: PriorSpec,
    chains: int = 3,
    iters: int = 15000,
    burnin: int = 2000,
    cfg: MwgConfig | None = None,
    rng: RngStream = RngStream(0),
) -> ChainOutput:
    """Data-augmented Metropolis-within-Gibbs on (mu, alpha0, alpha1).

    Missing outcomes are drawn from their discrete full conditional
    (proportional to Pois(y; mu)(1 - expit(alpha0 + alpha1 y)), truncated
    at the shared tail cutoff); mu moves by random walk on log mu, the
    missingness coefficients by scalar random walks.
    """
    if d.kind != "count":
        raise ValueError(f"expected a count dataset, got kind={d.kind!r}")
    _check_run_shape(chains, iters, burnin)
    cfg = cfg or MwgConfig()
    obs_counts, n_r0 = observed_count_table(d)
    n_r1 = int(d.n - n_r0)
    y_obs_grid = np.arange(obs_counts.size, dtype=float)
    sum_y_obs = float(np.sum(y_obs_grid * obs_counts))
    n = d.n
    sd1 = prior.sigma_delta
    v0 = prior.alpha0_var
    target = cfg.target(paired=False)

    total = burnin + iters
    names = ["mu", "alpha0", "alpha1"]
    draws = np.empty((chains, iters, 3))
    kept_accepts = {name: 0.0 for name in names}
    kept_updates = 0

    def r_loglik(a0, a1, c_mis):
        grid = np.arange(max(obs_counts.size, c_mis.size), dtype=float)
        z = a0 + a1 * grid
        val = 0.0
        if obs_counts.size:
            val += float(np.sum(obs_counts * log_expit(z[: obs_counts.size])))
        if c_mis.size:
            val += float(np.sum(c_mis * log_expit(-z[: c_mis.size])))
        return val

    t0 = perf_counter()
    for ci, stream in enumerate(split(rng, chains)):
        g = stream.generator()
        mu = float(g.gamma(1.0, 1.0)) + 0.1  # keep the start away from 0
        a0 = float(g.normal(0.0, np.sqrt(v0)))
        a1 = float(g.normal(0.0, sd1))
        steps = {
            "mu": _AdaptiveScale(cfg.initial("mu", 0.3), target, cfg.adapt_window, cfg.adapt),
            "alpha0": _AdaptiveScale(cfg.initial("alpha0", 0.5), target, cfg.adapt_window, cfg.adapt),
            "alpha1": _AdaptiveScale(cfg.initial("alpha1", 0.3), target, cfg.adapt_window, cfg.adapt),
        }

        for t in range(total):
            in_burnin = t < burnin
            # impute missing outcomes from the discrete full conditional
            if n_r0 > 0:
                y_max = poisson_tail_cutoff(mu)
                grid = np.arange(y_max + 1, dtype=float)
                logp = grid * np.log(mu) - mu - _lgamma_cache(y_max) + log_expit(-(a0 + a1 * grid))
                probs = np.exp(logp - logp.max())
                cdf = np.cumsum(probs)
                cdf /= cdf[-1]
                y_mis = np.searchsorted(cdf, g.random(n_r0), side="right")
                c_mis = np.bincount(y_mis).astype(float)
                sum_y_mis = float(y_mis.sum())
            else:
                c_mis = np.zeros(0)
                sum_y_mis = 0.0
            sum_y = sum_y_obs + sum_y_mis

            # mu | complete data: random walk on log mu
            s = float(steps["mu"].scale[0])
            log_mu_prop = np.log(mu) + s * g.normal()
            mu_prop = float(np.exp(log_mu_prop))
            delta_logpost = (
                sum_y * (log_mu_prop - np.log(mu))
                - n * (mu_prop - mu)
                + (-(mu_prop) + mu)  # Gamma(1,1) prior
                + (log_mu_prop - np.log(mu))  # log-scale Jacobian
            )
            acc_mu = np.log(g.random()) < delta_logpost
            if acc_mu:
                mu = mu_prop
            steps["mu"].update(acc_mu, in_burnin)

            # alpha0 | rest
            s = float(steps["alpha0"].scale[0])
            a0_prop = a0 + s * g.normal()
            delta_logpost = (
                r_loglik(a0_prop, a1, c_mis)
                - r_loglik(a0, a1, c_mis)
                - 0.5 * (a0_prop**2 - a0**2) / v0
            )
            acc_a0 = np.log(g.random()) < delta_logpost
            if acc_a0:
                a0 = a0_prop
            steps["alpha0"].update(acc_a0, in_burnin)

            # alpha1 | rest
            s = float(steps["alpha1"].scale[0])
            a1_prop = a1 + s * g.normal()
            delta_logpost = (
                r_loglik(a0, a1_prop, c_mis)
                - r_loglik(a0, a1, c_mis)
                - 0.5 * (a1_prop**2 - a1**2) / sd1**2
            )
            acc_a1 = np.log(g.random()) < delta_logpost
            if acc_a1:
                a1 = a1_prop
            steps["alpha1"].update(acc_a1, in_burnin)

            if not in_burnin:
                draws[ci, t - burnin] = (mu, a0, a1)
                kept_accepts["mu"] += float(acc_mu)
                kept_accepts["alpha0"] += float(acc_a0)
                kept_accepts["alpha1"] += float(acc_a1)
                kept_updates += 1
    wall = perf_counter() - t0

    rates = {name: kept_accepts[name] / max(kept_updates, 1) for name in names}
    return ChainOutput(
        chains=chains,
        iters_kept=iters,
        burnin=burnin,
        draws=draws,
        param_names=names,
        accept_rates=rates,
        wall_time_sec=wall,
    )


_LGAMMA_TABLE = np.zeros(1)


def _lgamma_cache(y_max: int) -> np.ndarray:
    """lgamma(y+1) for y = 0..y_max, grown lazily."""
    global _LGAMMA_TABLE
    if _LGAMMA_TABLE.size <= y_max:
        _LGAMMA_TABLE = gammaln(np.arange(max(y_max + 1, 128), dtype=float) + 1.0)
    return _LGAMMA_TABLE[: y_max + 1]


# ---------------------------------------------------------------------------
# Count model, pseudo-reparameterized chain
# ---------------------------------------------------------------------------


def mcmc_count_pseudo(
    d: IncompleteDataset,
    prior: PriorSpec,
    chains: int = 3,
    iters: int = 15000,
    burnin: int = 2000,
    cfg: MwgConfig | None = None,
    rng: RngStream = RngStream(0),
) -> ChainOutput:
    """Metropolis-within-Gibbs on the reparameterized state (p, q, alpha1).

    Convenience priors Beta(1,1), Gamma(1,1), Normal(0, sigma^2) on the
    state; every proposal is mapped back to theta and scored with the true
    observed-data likelihood, so missing outcomes are marginalized rather
    than imputed. Proposals leaving (0,1) for p or (0, inf) for q are
    rejected outright.
    """
    if d.kind != "count":
        raise ValueError(f"expected a count dataset, got kind={d.kind!r}")
    _check_run_shape(chains, iters, burnin)
    cfg = cfg or MwgConfig()
    obs_counts, n_r0 = observed_count_table(d)
    sd1 = prior.sigma_delta
    target = cfg.target(paired=False)

    def logpost(p, q, lam):
        if not (0.0 < p < 1.0 and q > 0.0):
            return -np.inf
        theta = inverse_pseudo(CountPhiLambda(p=p, q=q, lam=lam))
        loglik = _log_likelihood_count_from_table(theta, obs_counts, n_r0)
        return loglik - q - 0.5 * (lam / sd1) ** 2

    total = burnin + iters
    names = ["mu", "alpha0", "alpha1", "p", "q"]
    draws = np.empty((chains, iters, 5))
    kept_accepts = {"p": 0.0, "q": 0.0, "alpha1": 0.0}
    kept_updates = 0

    t0 = perf_counter()
    for ci, stream in enumerate(split(rng, chains)):
        g = stream.generator()
        p = float(g.beta(1.0, 1.0))
        q = float(g.gamma(1.0, 1.0)) + 0.1
        lam = float(g.normal(0.0, sd1))
        steps = {
            "p": _AdaptiveScale(cfg.initial("p", 0.1), target, cfg.adapt_window, cfg.adapt),
            "q": _AdaptiveScale(cfg.initial("q", 0.5), target, cfg.adapt_window, cfg.adapt),
            "alpha1": _AdaptiveScale(cfg.initial("alpha1", max(0.3 * sd1, 1e-3)), target, cfg.adapt_window, cfg.adapt),
        }
        cur = logpost(p, q, lam)

        for t in range(total):
            in_burnin = t < burnin
            accs = {}
            for block in ("p", "q", "alpha1"):
                s = float(steps[block].scale[0])
                cand = [p, q, lam]
                cand[("p", "q", "alpha1").index(block)] += s * g.normal()
                prop = logpost(*cand)
                accept = prop > -np.inf and np.log(g.random()) < (prop - cur)
                if accept:
                    p, q, lam = cand
                    cur = prop
                accs[block] = accept
                steps[block].update(accept, in_burnin)

            if not in_burnin:
                theta = inverse_pseudo(CountPhiLambda(p=p, q=q, lam=lam))
                draws[ci, t - burnin] = (theta.mu, theta.alpha0, theta.alpha1, p, q)
                for block, acc in accs.items():
                    kept_accepts[block] += float(acc)
                kept_updates += 1
    wall = perf_counter() - t0

    rates = {name: kept_accepts[name] / max(kept_updates, 1) for name in kept_accepts}
    return ChainOutput(
        chains=chains,
        iters_kept=iters,
        burnin=burnin,
        draws=draws,
        param_names=names,
        accept_rates=rates,
        wall_time_sec=wall,
    )
