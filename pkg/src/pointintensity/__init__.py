"""Bayesian estimation of Poisson process intensities with piecewise-constant models."""

from .conjugate import (IndepGammaPosterior, IndepGammaPrior, PosteriorBand, bin_log_evidence,
                        calibrate_beta, credible_band, fit_conjugate, log_marginal_likelihood,
                        posterior_mean, select_bins_empirical_bayes)
from .core import (BinGrid, BinnedCounts, EventSeries, PiecewiseIntensity, bin_events,
                   fold_periodic, l2_distance, log_likelihood)
from .diagnostics import autocorrelation, batch_means_se, effective_sample_size
from .errors import ConfigurationError, DataError, NumericalError, ParameterError, PointIntensityError
from .gmc import (AlphaPrior, ChainOutput, GmcHyperparams, GmcState, gibbs_sweep, mwg_alpha_update,
                  rule_of_thumb_bins, run_gmc, sample_gmc_prior, summarize_chain)
from .io import FitConfig, FitReport, ingest_events, read_report, write_events, write_report
from .rand import (GammaParams, RngStream, gamma_quantile, log_gamma_fn, sample_gamma,
                   sample_inverse_gamma)
from .rjmcmc import ModelIndexPrior, RjConfig, RjOutput, exact_model_posterior, run_rj
from .simulate import (NamedIntensity, contraction_experiment, mse_experiment, named_intensity,
                       simulate_poisson)

__all__ = [
    "AlphaPrior", "autocorrelation", "batch_means_se", "bin_events", "bin_log_evidence",
    "BinGrid", "BinnedCounts", "calibrate_beta", "ChainOutput", "ConfigurationError",
    "contraction_experiment", "credible_band", "DataError", "effective_sample_size",
    "EventSeries", "exact_model_posterior", "fit_conjugate", "FitConfig", "FitReport",
    "fold_periodic", "gamma_quantile", "GammaParams", "gibbs_sweep", "GmcHyperparams",
    "GmcState", "IndepGammaPosterior", "IndepGammaPrior", "ingest_events", "l2_distance",
    "log_gamma_fn", "log_likelihood", "log_marginal_likelihood", "ModelIndexPrior",
    "mse_experiment", "mwg_alpha_update", "named_intensity", "NamedIntensity", "NumericalError",
    "ParameterError", "PiecewiseIntensity", "PointIntensityError", "posterior_mean",
    "PosteriorBand", "read_report", "RjConfig", "RjOutput", "RngStream", "rule_of_thumb_bins",
    "run_gmc", "run_rj", "sample_gamma", "sample_gmc_prior", "sample_inverse_gamma",
    "select_bins_empirical_bayes", "simulate_poisson", "summarize_chain", "write_events",
    "write_report",
]

__version__ = "0.1.0"
