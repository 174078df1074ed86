"""Monte Carlo inference for partially identified Bayesian models.

The package builds around two worked models with nonignorable missing
outcomes: a saturated logistic model that admits an exact transparent
reparameterization (enabling i.i.d. importance sampling from conjugate
convenience posteriors) and an incomplete count model where only an
approximate, pseudo-transparent reparameterization exists. Metropolis-
within-Gibbs baselines in the original parameterization, ESS/time
diagnostics, and a scenario harness round out the toolkit.
"""

from .conjugate import SatConveniencePosterior, draw_phi_lambda_sat, posterior_params_sat
from .datasets import IncompleteDataset, count_dataset, read_dataset_csv, sat_dataset, write_dataset_csv
from .diagnostics import (
    DiagnosticsReport,
    Summary,
    UnreliableEstimateWarning,
    ZeroVarianceWarning,
    ess_autocorr,
    multi_ess,
    split_rhat,
    summarize,
)
from .errors import ConfigError, OutOfImageError, SingularJacobianError, WeightDegeneracyError
from .gibbs import ChainOutput, MwgConfig, gibbs_sat, impute_y_sat, mcmc_count_original, mcmc_count_pseudo
from .harness import (
    RunConfig,
    ScenarioGrid,
    default_true_params,
    identify,
    load_true_params,
    make_dataset,
    run,
    run_grid,
)
from .importance import (
    IstpResult,
    WeightedSample,
    combined_ess,
    istp_sat,
    log_weight_sat,
    normalize_weights,
    resample,
    resample_indices,
)
from .models import (
    CountPhiLambda,
    CountPhiLambdaSample,
    CountTheta,
    CountThetaSample,
    PriorSpec,
    SatPhiLambda,
    SatPhiLambdaSample,
    SatSufficientStats,
    SatTheta,
    SatThetaSample,
    cell_bits,
    cell_index,
    gamma_star,
    joint_cell_probs,
    log_likelihood_count,
    log_likelihood_sat,
    log_prior_count,
    log_prior_sat,
    sample_prior_sat,
    simulate_count,
    simulate_sat,
    sufficient_stats_sat,
)
from .pseudo_count import (
    CHatEstimates,
    PseudoIstpResult,
    RootScan,
    chat_estimates,
    exact_phi_count,
    forward_pseudo,
    identification_roots,
    impute_missing_mean,
    inverse_pseudo,
    population_chat,
    pseudo_istp_count,
)
from .rng import DistSpec, RngStream, draw, split, tap
from .tp_saturated import (
    forward_tp,
    free_coords,
    free_dim,
    inverse_tp,
    jacobian_logdet_inverse,
    phi_lambda_from_free,
)

__version__ = "0.1.0"
