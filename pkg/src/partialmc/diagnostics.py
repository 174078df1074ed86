"""ESS estimators, weighted summaries, and the per-run diagnostics report.

Univariate ESS comes from combined-chain autocorrelations truncated by the
initial monotone positive sequence rule; multivariate ESS is the
batch-means determinant ratio m * (|Lambda| / |Sigma|)^(1/p) with batch
size floor(sqrt(m)). Importance-sampling ESS (1 / sum w_i^2) lives with
the weight arithmetic in :mod:`partialmc.importance`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


class ZeroVarianceWarning(UserWarning):
    """A chain was constant; its ESS is reported as the total draw count."""


class UnreliableEstimateWarning(UserWarning):
    """The batch-means covariance is near-singular; multi ESS is unreliable."""


def _as_chains(chain_values) -> np.ndarray:
    arr = np.asarray(chain_values, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError("chain_values must be one vector per chain")
    return arr


def ess_autocorr(chain_values) -> float:
    """Autocorrelation-based ESS of one scalar parameter across chains.

    Accepts a 1-d array (single chain) or a (chains, iters) array. Constant
    input warns ZeroVarianceWarning and returns the total draw count.
    """
    chains = _as_chains(chain_values)
    c, n = chains.shape
    if c < 2 and n < 100:
        raise ValueError("need at least 2 chains or 100 draws")
    total = c * n
    within = float(np.mean(np.var(chains, axis=1, ddof=1))) if n > 1 else 0.0
    if within == 0.0:
        warnings.warn("constant chain: zero variance", ZeroVarianceWarning)
        return float(total)
    if c > 1:
        var_plus = within * (n - 1) / n + float(np.var(np.mean(chains, axis=1), ddof=1))
    else:
        var_plus = within * (n - 1) / n
    if var_plus <= 0.0:
        warnings.warn("constant chain: zero variance", ZeroVarianceWarning)
        return float(total)

    acov = np.mean([_autocovariance(ch) for ch in chains], axis=0)
    rho = 1.0 - (within - acov) / var_plus

    # Geyer pairs: truncate at the first non-positive pair, then force the
    # kept pairs to be non-increasing.
    n_pairs = rho.size // 2
    pairs = rho[: 2 * n_pairs].reshape(n_pairs, 2).sum(axis=1)
    kept = []
    for value in pairs:
        if value <= 0.0 and kept:
            break
        kept.append(max(value, 0.0) if not kept else value)
        if kept[-1] <= 0.0:
            break
    kept = np.minimum.accumulate(np.asarray(kept)) if kept else np.array([1.0])
    kept = kept[kept > 0.0]
    tau = max(-1.0 + 2.0 * float(kept.sum()), 1.0 / total)
    return float(np.clip(total / tau, 1.0, total))


def _autocovariance(x: np.ndarray) -> np.ndarray:
    n = x.size
    centered = x - x.mean()
    width = 1 << (2 * n - 1).bit_length()
    freq = np.fft.rfft(centered, width)
    acov = np.fft.irfft(freq * np.conj(freq), width)[:n].real
    return acov / n


def multi_ess(draws: np.ndarray) -> float:
    """Multivariate ESS m * (|Lambda| / |Sigma|)^(1/p) via batch means.

    Lambda is the sample covariance; Sigma is the non-overlapping
    batch-means long-run covariance with batch size floor(sqrt(m)). Warns
    UnreliableEstimateWarning when Sigma (or Lambda) is near-singular
    (condition number above 1e12), in which case the returned number should
    not be trusted.
    """
    draws = np.asarray(draws, dtype=float)
    if draws.ndim == 1:
        draws = draws[:, None]
    m, p = draws.shape
    b = int(np.floor(np.sqrt(m)))
    if m < 4 * b or b < 2:
        raise ValueError(f"too few draws for batch means: m={m}")
    spread = draws.max(axis=0) - draws.min(axis=0)
    if np.any(spread == 0.0):
        col = int(np.argmax(spread == 0.0))
        raise ValueError(f"column {col} is constant")

    a = m // b
    used = draws[: a * b]
    lam = np.cov(draws, rowvar=False).reshape(p, p)
    batch_means = used.reshape(a, b, p).mean(axis=1)
    sigma = b * np.cov(batch_means, rowvar=False).reshape(p, p)

    unreliable = _condition_number(sigma) > 1e12 or _condition_number(lam) > 1e12
    with np.errstate(all="ignore"):
        _, logdet_lam = np.linalg.slogdet(lam)
        _, logdet_sigma = np.linalg.slogdet(sigma)
        value = float(m * np.exp((logdet_lam - logdet_sigma) / p))
    if unreliable or not np.isfinite(value):
        warnings.warn(
            "batch-means covariance is near-singular; multivariate ESS unreliable",
            UnreliableEstimateWarning,
        )
    return value


def _condition_number(mat: np.ndarray) -> float:
    try:
        sv = np.linalg.svd(mat, compute_uv=False)
    except np.linalg.LinAlgError:
        return np.inf
    if sv.size == 0 or sv.min() == 0.0:
        return np.inf
    return float(sv.max() / sv.min())


def split_rhat(chain_values) -> float:
    """Split-chain potential scale reduction factor."""
    chains = _as_chains(chain_values)
    c, n = chains.shape
    half = n // 2
    split = np.vstack([chains[:, :half], chains[:, half : 2 * half]])
    within = float(np.mean(np.var(split, axis=1, ddof=1)))
    if within == 0.0:
        return 1.0
    between = float(np.var(np.mean(split, axis=1), ddof=1))
    var_plus = within * (half - 1) / half + between
    return float(np.sqrt(var_plus / within))


@dataclass(frozen=True)
class Summary:
    """Per-column posterior summaries (population-style moments)."""

    mean: np.ndarray
    sd: np.ndarray
    q025: np.ndarray
    q500: np.ndarray
    q975: np.ndarray


def summarize(draws: np.ndarray, weights: np.ndarray | None = None) -> Summary:
    """Mean, SD, and 2.5/50/97.5% quantiles, optionally importance-weighted.

    Quantiles are inverse-CDF (step function) quantiles, so uniform weights
    reproduce the unweighted summary exactly and a point mass reproduces
    the single draw.
    """
    draws = np.asarray(draws, dtype=float)
    if draws.size == 0:
        raise ValueError("empty draws")
    if draws.ndim == 1:
        draws = draws[:, None]
    m, p = draws.shape
    if weights is None:
        weights = np.full(m, 1.0 / m)
    else:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (m,):
            raise ValueError("weights must match the number of draws")
    mean = weights @ draws
    sd = np.sqrt(np.maximum(weights @ (draws - mean) ** 2, 0.0))
    qs = np.empty((3, p))
    for j in range(p):
        order = np.argsort(draws[:, j], kind="stable")
        cum = np.cumsum(weights[order])
        cum /= cum[-1]
        idx = np.searchsorted(cum, [0.025, 0.5, 0.975], side="left")
        qs[:, j] = draws[order, j][np.minimum(idx, m - 1)]
    return Summary(mean=mean, sd=sd, q025=qs[0], q500=qs[1], q975=qs[2])


@dataclass
class DiagnosticsReport:
    """ESS and timing diagnostics for one sampling run."""

    ess_by_param: dict[str, float]
    ess_median: float
    ess_target: float
    target_param: str
    total_draws: int
    wall_time_sec: float
    ess_per_sec: float
    multi_ess: float | None = None
    multi_ess_unreliable: bool = False
    importance_ess: float | None = None
    n_zero_weight: int = 0
    weight_degenerate: bool = False
    config_echo: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "ess_by_param": {k: float(v) for k, v in self.ess_by_param.items()},
            "ess_median": float(self.ess_median),
            "ess_target": float(self.ess_target),
            "target_param": self.target_param,
            "total_draws": int(self.total_draws),
            "wall_time_sec": float(self.wall_time_sec),
            "ess_per_sec": float(self.ess_per_sec),
            "multi_ess": None if self.multi_ess is None else float(self.multi_ess),
            "multi_ess_unreliable": bool(self.multi_ess_unreliable),
            "importance_ess": None if self.importance_ess is None else float(self.importance_ess),
            "n_zero_weight": int(self.n_zero_weight),
            "weight_degenerate": bool(self.weight_degenerate),
            "config_echo": self.config_echo,
        }


def _clip_ess(value: float, total: int) -> float:
    return float(np.clip(value, 1.0, total))


def report_from_chains(
    draws: np.ndarray,
    param_names: list[str],
    target_param: str,
    wall_time_sec: float,
    multi_matrix: np.ndarray | None = None,
) -> DiagnosticsReport:
    """Build a report from (chains, iters, params) posterior draws.

    ``multi_matrix`` supplies the columns used for multivariate ESS (the
    free coordinates; passing linearly dependent columns would make the
    sample covariance singular by construction). Multivariate ESS is
    computed per chain and summed.
    """
    c, n, _ = draws.shape
    total = c * n
    ess_by_param = {
        name: ess_autocorr(draws[:, :, j]) for j, name in enumerate(param_names)
    }
    multi_value: float | None = None
    unreliable = False
    if multi_matrix is not None:
        per_chain = []
        matrix = multi_matrix.reshape(c, n, -1)
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", UnreliableEstimateWarning)
                for ci in range(c):
                    per_chain.append(multi_ess(matrix[ci]))
                unreliable = any(
                    issubclass(w.category, UnreliableEstimateWarning) for w in caught
                )
            multi_value = float(np.sum(per_chain))
            if not np.isfinite(multi_value):
                multi_value, unreliable = None, True
            else:
                multi_value = _clip_ess(multi_value, total)
        except ValueError:
            multi_value, unreliable = None, True
    ess_target = ess_by_param[target_param]
    wall = max(wall_time_sec, 1e-12)
    return DiagnosticsReport(
        ess_by_param=ess_by_param,
        ess_median=float(np.median(list(ess_by_param.values()))),
        ess_target=ess_target,
        target_param=target_param,
        total_draws=total,
        wall_time_sec=wall_time_sec,
        ess_per_sec=ess_target / wall,
        multi_ess=multi_value,
        multi_ess_unreliable=unreliable,
    )


def report_from_importance(
    importance_ess: float,
    resampled_matrix: np.ndarray,
    param_names: list[str],
    target_param: str,
    total_draws: int,
    wall_time_sec: float,
    n_zero_weight: int,
    multi_matrix: np.ndarray | None = None,
) -> DiagnosticsReport:
    """Build a report for an importance-sampling run.

    The importance ESS 1 / sum(w^2) is the common ESS of every parameter,
    so it fills ess_by_param, the median, and the headline value.
    """
    ess = _clip_ess(importance_ess, total_draws)
    multi_value: float | None = None
    unreliable = False
    if multi_matrix is not None:
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", UnreliableEstimateWarning)
                multi_value = multi_ess(multi_matrix)
                unreliable = any(
                    issubclass(w.category, UnreliableEstimateWarning) for w in caught
                )
            if not np.isfinite(multi_value):
                multi_value, unreliable = None, True
            else:
                multi_value = _clip_ess(multi_value, total_draws)
        except ValueError:
            multi_value, unreliable = None, True
    wall = max(wall_time_sec, 1e-12)
    return DiagnosticsReport(
        ess_by_param={name: ess for name in param_names},
        ess_median=ess,
        ess_target=ess,
        target_param=target_param,
        total_draws=total_draws,
        wall_time_sec=wall_time_sec,
        ess_per_sec=ess / wall,
        multi_ess=multi_value,
        multi_ess_unreliable=unreliable,
        importance_ess=float(importance_ess),
        n_zero_weight=n_zero_weight,
        weight_degenerate=importance_ess < 10.0,
    )
