from .common import PriorSpec
from .count import (
    CountPhiLambda,
    CountPhiLambdaSample,
    CountTheta,
    CountThetaSample,
    log_likelihood_count,
    log_prior_count,
    observed_count_table,
    poisson_tail_cutoff,
    simulate_count,
)
from .saturated import (
    SatPhiLambda,
    SatPhiLambdaSample,
    SatSufficientStats,
    SatTheta,
    SatThetaSample,
    cell_bits,
    cell_index,
    gamma_star,
    joint_cell_probs,
    log_likelihood_sat,
    log_prior_sat,
    sample_prior_sat,
    simulate_sat,
    sufficient_stats_sat,
)

__all__ = [
    "PriorSpec",
    "CountPhiLambda",
    "CountPhiLambdaSample",
    "CountTheta",
    "CountThetaSample",
    "SatPhiLambda",
    "SatPhiLambdaSample",
    "SatSufficientStats",
    "SatTheta",
    "SatThetaSample",
    "cell_bits",
    "cell_index",
    "gamma_star",
    "joint_cell_probs",
    "log_likelihood_count",
    "log_likelihood_sat",
    "log_prior_count",
    "log_prior_sat",
    "observed_count_table",
    "poisson_tail_cutoff",
    "sample_prior_sat",
    "simulate_count",
    "simulate_sat",
    "sufficient_stats_sat",
]
