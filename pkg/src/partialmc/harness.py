"""Scenario orchestration: data generation, method dispatch, persistence.

One :class:`RunConfig` fully determines a run, including every random
stream, so identical configs produce byte-identical draw files. Scenario
grids vary one axis (n, p, or sigma) around a base configuration and
aggregate per-level diagnostics into a single CSV. Wall time covers
sampling, weighting, and resampling only; data generation and file I/O sit
outside the timed region (the summary JSON records this boundary).
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from importlib import resources

import numpy as np
import pandas as pd

from .datasets import IncompleteDataset, write_dataset_csv
from .diagnostics import DiagnosticsReport, report_from_chains
from .errors import ConfigError
from .gibbs import ChainOutput, MwgConfig, gibbs_sat, mcmc_count_original, mcmc_count_pseudo
from .importance import istp_sat
from .models.common import PriorSpec
from .models.count import CountTheta, simulate_count
from .models.saturated import SatTheta, sample_prior_sat, simulate_sat
from .pseudo_count import chat_estimates, identification_roots, population_chat, pseudo_istp_count
from .rng import RngStream, split, tap

FIXTURE_SEED = 20240101  # prior draw seed behind the frozen sat truths

SAT_METHODS = ("gibbs", "istp")
COUNT_METHODS = ("gibbs", "pseudo-mcmc", "pseudo-is")
CHAIN_METHODS = ("gibbs", "pseudo-mcmc")


@dataclass(frozen=True)
class RunConfig:
    """Everything one run needs; hashable and JSON-serializable."""

    model: str
    method: str
    n: int
    seed: int
    p: int = 3
    sigma: float = 0.5
    draws: int = 45000
    chains: int = 3
    burnin: int = 2000
    out_dir: str | None = None
    true_params: str | None = None

    def __post_init__(self):
        if self.model not in ("sat", "count"):
            raise ConfigError(f"unknown model {self.model!r}")
        allowed = SAT_METHODS if self.model == "sat" else COUNT_METHODS
        if self.method not in allowed:
            raise ConfigError(f"method {self.method!r} not available for model {self.model!r}")
        if self.n < 0:
            raise ConfigError("n must be >= 0")
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive")
        if self.model == "sat" and self.p < 1:
            raise ConfigError("p must be >= 1")
        if self.draws < 1:
            raise ConfigError("draws must be >= 1")
        if self.method in CHAIN_METHODS:
            if self.chains < 1 or self.burnin < 0:
                raise ConfigError("need chains >= 1 and burnin >= 0")
            if self.draws % self.chains != 0:
                raise ConfigError("draws must be divisible by chains for chain methods")

    @property
    def iters_kept(self) -> int:
        return self.draws // self.chains

    @property
    def prior(self) -> PriorSpec:
        return PriorSpec(sigma_delta=self.sigma)

    @property
    def target_param(self) -> str:
        return "beta_1" if self.model == "sat" else "mu"

    def echo(self) -> dict:
        return dataclasses.asdict(self)


# ---------------------------------------------------------------------------
# Frozen true parameters
# ---------------------------------------------------------------------------


def default_true_params(model: str, p: int = 3):
    """Load the packaged frozen truth for a model (per-p files for sat)."""
    name = f"sat_p{p}.json" if model == "sat" else "count.json"
    path = resources.files("partialmc.fixtures").joinpath(name)
    with path.open("r") as fh:
        return params_from_dict(json.load(fh))


def load_true_params(path: str):
    with open(path) as fh:
        return params_from_dict(json.load(fh))


def params_from_dict(payload: dict):
    if payload.get("model") == "sat":
        return SatTheta(
            alpha=np.asarray(payload["alpha"]),
            beta=np.asarray(payload["beta"]),
            gamma=np.asarray(payload["gamma"]),
            delta=np.asarray(payload["delta"]),
        )
    if payload.get("model") == "count":
        return CountTheta(mu=payload["mu"], alpha0=payload["alpha0"], alpha1=payload["alpha1"])
    raise ConfigError(f"unrecognized true-parameter payload: {payload.get('model')!r}")


def params_to_dict(theta) -> dict:
    if isinstance(theta, SatTheta):
        return {
            "model": "sat",
            "p": theta.n_covariates,
            "alpha": theta.alpha.tolist(),
            "beta": theta.beta.tolist(),
            "gamma": theta.gamma.tolist(),
            "delta": theta.delta.tolist(),
        }
    return {
        "model": "count",
        "mu": theta.mu,
        "alpha0": theta.alpha0,
        "alpha1": theta.alpha1,
    }


def make_dataset(config: RunConfig) -> tuple[IncompleteDataset, object]:
    """Simulate (or load the truth for) the run's dataset.

    The data substream depends on (seed, model, n, p) but not on sigma, so
    prior-width sweeps at a fixed seed share their dataset exactly.
    """
    if config.true_params is not None:
        theta = load_true_params(config.true_params)
    else:
        theta = default_true_params(config.model, config.p)
    if config.model == "sat" and theta.n_covariates != config.p:
        raise ConfigError(
            f"true parameters are for p={theta.n_covariates}, run asks for p={config.p}"
        )
    stream = tap(RngStream(config.seed), f"data/{config.model}/n={config.n}/p={config.p}")
    if config.model == "sat":
        return simulate_sat(theta, config.n, stream), theta
    return simulate_count(theta, config.n, stream), theta


# ---------------------------------------------------------------------------
# Single run
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunResult:
    config: RunConfig
    report: DiagnosticsReport
    draws_frame: pd.DataFrame
    weights_frame: pd.DataFrame | None


def run(config: RunConfig, dataset: IncompleteDataset | None = None) -> RunResult:
    """Execute one configured run and persist its artifacts if out_dir is set."""
    if dataset is None:
        dataset, _ = make_dataset(config)
    sampler_stream = tap(RngStream(config.seed), f"method/{config.method}")

    if config.method == "istp":
        result = istp_sat(dataset, config.prior, config.draws, sampler_stream)
        report = result.report
        draws_frame = _importance_draws_frame(config, result.theta)
        weights_frame = _weights_frame(result.weighted)
    elif config.method == "pseudo-is":
        result = pseudo_istp_count(dataset, config.prior, config.draws, sampler_stream)
        report = result.report
        draws_frame = _importance_draws_frame(config, result.theta)
        weights_frame = _weights_frame(result.weighted)
    else:
        chain = _run_chain_method(config, dataset, sampler_stream)
        report = _chain_report(config, chain)
        draws_frame = _chain_draws_frame(config, chain)
        weights_frame = None

    report.config_echo.update(config.echo())
    report.config_echo["timing_note"] = (
        "wall_time_sec covers sampling, weighting and resampling only; "
        "data generation and I/O are excluded"
    )
    if config.out_dir:
        persist_run(config, report, draws_frame, weights_frame)
    return RunResult(config=config, report=report, draws_frame=draws_frame, weights_frame=weights_frame)


def _run_chain_method(config: RunConfig, dataset: IncompleteDataset, stream: RngStream) -> ChainOutput:
    kwargs = dict(
        prior=config.prior,
        chains=config.chains,
        iters=config.iters_kept,
        burnin=config.burnin,
        cfg=MwgConfig(),
        rng=stream,
    )
    if config.model == "sat":
        return gibbs_sat(dataset, **kwargs)
    if config.method == "gibbs":
        return mcmc_count_original(dataset, **kwargs)
    return mcmc_count_pseudo(dataset, **kwargs)


def _chain_report(config: RunConfig, chain: ChainOutput) -> DiagnosticsReport:
    draws = chain.draws
    if config.model == "sat":
        multi = draws[:, :, 1:]  # drop alpha_0: the simplex makes it redundant
    else:
        multi = draws[:, :, :3]  # (mu, alpha0, alpha1); p and q are functions of them
    return report_from_chains(
        draws=draws,
        param_names=chain.param_names,
        target_param=config.target_param,
        wall_time_sec=chain.wall_time_sec,
        multi_matrix=multi.reshape(-1, multi.shape[2]),
    )


def _chain_draws_frame(config: RunConfig, chain: ChainOutput) -> pd.DataFrame:
    c, nkeep, n_params = chain.draws.shape
    return pd.DataFrame(
        {
            "method": config.method,
            "chain": np.repeat(np.arange(c), nkeep * n_params),
            "iter": np.tile(np.repeat(np.arange(nkeep), n_params), c),
            "param": np.tile(chain.param_names, c * nkeep),
            "value": chain.draws.reshape(-1),
        }
    )


def _importance_draws_frame(config: RunConfig, theta_sample) -> pd.DataFrame:
    matrix = theta_sample.to_matrix()
    m, n_params = matrix.shape
    return pd.DataFrame(
        {
            "method": config.method,
            "chain": 0,
            "iter": np.repeat(np.arange(m), n_params),
            "param": np.tile(theta_sample.param_names(), m),
            "value": matrix.reshape(-1),
        }
    )


def _weights_frame(weighted) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "draw": np.arange(weighted.log_weights.size),
            "log_weight": weighted.log_weights,
            "norm_weight": weighted.norm_weights,
        }
    )


def _atomic_write_text(path: str, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _atomic_write_csv(frame: pd.DataFrame, path: str) -> None:
    tmp = f"{path}.tmp"
    frame.to_csv(tmp, index=False, float_format="%.17g")
    os.replace(tmp, path)


def persist_run(
    config: RunConfig,
    report: DiagnosticsReport,
    draws_frame: pd.DataFrame,
    weights_frame: pd.DataFrame | None,
) -> None:
    os.makedirs(config.out_dir, exist_ok=True)
    _atomic_write_csv(draws_frame, os.path.join(config.out_dir, "draws.csv"))
    if weights_frame is not None:
        _atomic_write_csv(weights_frame, os.path.join(config.out_dir, "weights.csv"))
    _atomic_write_text(
        os.path.join(config.out_dir, "summary.json"),
        json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n",
    )


# ---------------------------------------------------------------------------
# Scenario grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioGrid:
    """One varied axis (n, p, or sigma) over a base configuration."""

    axis: str
    levels: tuple
    base: RunConfig

    def __post_init__(self):
        if self.axis not in ("n", "p", "sigma"):
            raise ConfigError(f"unknown grid axis {self.axis!r}")
        levels = tuple(self.levels)
        if not levels or any(b <= a for a, b in zip(levels, levels[1:])):
            raise ConfigError("levels must be non-empty and strictly increasing")
        if self.axis == "p" and self.base.model != "sat":
            raise ConfigError("the p axis only applies to the sat model")
        object.__setattr__(self, "levels", levels)


GRID_COLUMNS = [
    "axis",
    "level",
    "method",
    "ess_target",
    "ess_median",
    "multi_ess",
    "importance_ess",
    "time_sec",
    "ess_per_sec",
    "status",
]


def run_grid(grid: ScenarioGrid) -> pd.DataFrame:
    """One run per level with split seeds; failures are recorded, not fatal."""
    level_seeds = [s.stream_id for s in split(RngStream(grid.base.seed), len(grid.levels))]
    rows = []
    for level, seed in zip(grid.levels, level_seeds):
        overrides = {grid.axis: level, "seed": seed}
        if grid.base.out_dir:
            overrides["out_dir"] = os.path.join(grid.base.out_dir, f"{grid.axis}_{level}")
        cfg = dataclasses.replace(grid.base, **overrides)
        row = {
            "axis": grid.axis,
            "level": level,
            "method": cfg.method,
            "ess_target": np.nan,
            "ess_median": np.nan,
            "multi_ess": np.nan,
            "importance_ess": np.nan,
            "time_sec": np.nan,
            "ess_per_sec": np.nan,
            "status": "ok",
        }
        try:
            report = run(cfg).report
            row.update(
                ess_target=report.ess_target,
                ess_median=report.ess_median,
                multi_ess=np.nan if report.multi_ess is None else report.multi_ess,
                importance_ess=(
                    np.nan if report.importance_ess is None else report.importance_ess
                ),
                time_sec=report.wall_time_sec,
                ess_per_sec=report.ess_per_sec,
            )
        except Exception as exc:  # record and continue with the next level
            row["status"] = f"failed: {exc}"
        rows.append(row)
    frame = pd.DataFrame(rows, columns=GRID_COLUMNS)
    if grid.base.out_dir:
        os.makedirs(grid.base.out_dir, exist_ok=True)
        _atomic_write_csv(frame, os.path.join(grid.base.out_dir, "grid.csv"))
    return frame


# ---------------------------------------------------------------------------
# Identification check
# ---------------------------------------------------------------------------


def identify(
    config: RunConfig,
    analytic: bool = False,
    mu_max: float | None = None,
    grid_points: int = 4096,
) -> dict:
    """Root-count identification report for the count model.

    analytic=True uses the population cell masses implied by the true
    parameters instead of estimates from simulated data.
    """
    if config.model != "count":
        raise ConfigError("identification check applies to the count model")
    dataset, theta_true = make_dataset(config)
    if analytic:
        c_hat = population_chat(theta_true)
        default_max = 5.0 * theta_true.mu
    else:
        c_hat = chat_estimates(dataset)
        y_obs = dataset.y[dataset.r == 1]
        default_max = 5.0 * float(np.mean(y_obs)) if y_obs.size else 25.0
    mu_cap = mu_max if mu_max is not None else default_max

    report: dict = {"c_hat": c_hat.c.tolist(), "mode": "analytic" if analytic else "estimated"}
    try:
        scan = identification_roots(c_hat, mu_max=mu_cap, grid=grid_points)
        report["roots"] = scan.roots.tolist()
        report["n_grid_invalid"] = scan.n_grid_invalid
    except ValueError as exc:
        report["roots"] = []
        report["n_grid_invalid"] = grid_points
        report["note"] = str(exc)
    if config.out_dir:
        os.makedirs(config.out_dir, exist_ok=True)
        _atomic_write_text(
            os.path.join(config.out_dir, "identification.json"),
            json.dumps(report, indent=2, sort_keys=True) + "\n",
        )
    return report


def simulate_to_dir(config: RunConfig) -> str:
    """Simulate the configured dataset and persist it with its truth."""
    if not config.out_dir:
        raise ConfigError("simulate-data needs --out-dir")
    dataset, theta = make_dataset(config)
    os.makedirs(config.out_dir, exist_ok=True)
    path = os.path.join(config.out_dir, "dataset.csv")
    write_dataset_csv(dataset, path)
    _atomic_write_text(
        os.path.join(config.out_dir, "true_params.json"),
        json.dumps(params_to_dict(theta), indent=2, sort_keys=True) + "\n",
    )
    return path
