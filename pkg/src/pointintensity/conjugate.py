"""Independent gamma prior on bin heights: closed-form posterior and evidence."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .core import BinGrid, BinnedCounts, EventSeries, PiecewiseIntensity, bin_events
from .errors import ConfigurationError, NumericalError, ParameterError
from .rand import GammaParams, RngStream, gamma_quantile, log_gamma_fn, sample_gamma_array


@dataclass(frozen=True)
class IndepGammaPrior:
    """Heights i.i.d. ``G(shape, rate)``."""

    shape: float = 0.1
    rate: float = 0.1

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ParameterError(f"prior shape and rate must be positive, got {self}")

    @property
    def mean(self):
        return self.shape / self.rate


@dataclass(frozen=True, eq=False)
class IndepGammaPosterior:
    grid: BinGrid
    shape: np.ndarray
    rate: np.ndarray

    def bin(self, k):
        return GammaParams(float(self.shape[k]), float(self.rate[k]))

    def sample(self, rng: RngStream, size=1):
        """Posterior draws of the heights, one row per draw."""
        shape = np.broadcast_to(self.shape, (size, self.grid.N))
        rate = np.broadcast_to(self.rate, (size, self.grid.N))
        return sample_gamma_array(rng, shape, rate)


@dataclass(frozen=True, eq=False)
class PosteriorBand:
    """Pointwise posterior mean with lower/upper curves per credibility level."""

    grid: BinGrid
    mean: np.ndarray
    levels: tuple  # of (level, lower, upper)

    def band(self, level):
        for lv, lo, hi in self.levels:
            if math.isclose(lv, level):
                return lo, hi
        raise KeyError(level)

    def mean_intensity(self):
        return PiecewiseIntensity(self.grid, self.mean)


def fit_conjugate(counts: BinnedCounts, prior: IndepGammaPrior) -> IndepGammaPosterior:
    shape = prior.shape + counts.counts.astype(float)
    rate = prior.rate + counts.exposure
    return IndepGammaPosterior(counts.grid, shape, rate)


def posterior_mean(post: IndepGammaPosterior) -> PiecewiseIntensity:
    return PiecewiseIntensity(post.grid, post.shape / post.rate)


def credible_band(post: IndepGammaPosterior, levels=(0.75, 0.95)) -> PosteriorBand:
    """Equal-tailed marginal credible intervals for every bin and level."""
    out = []
    for level in levels:
        if not 0.0 < level < 1.0:
            raise ParameterError(f"credibility level must lie in (0, 1), got {level}")
        lo_p, hi_p = (1.0 - level) / 2.0, (1.0 + level) / 2.0
        lower = np.array([gamma_quantile(lo_p, post.bin(k)) for k in range(post.grid.N)])
        upper = np.array([gamma_quantile(hi_p, post.bin(k)) for k in range(post.grid.N)])
        out.append((float(level), lower, upper))
    return PosteriorBand(post.grid, post.shape / post.rate, tuple(out))


def bin_log_evidence(counts: BinnedCounts, prior: IndepGammaPrior):
    """Per-bin terms of the log marginal likelihood (without the ``nT`` constant)."""
    a, b = prior.shape, prior.rate
    H = counts.counts.astype(float)
    return (
        a * math.log(b)
        - log_gamma_fn(a)
        + log_gamma_fn(a + H)
        - (a + H) * np.log(counts.exposure + b)
    )


def log_marginal_likelihood(counts: BinnedCounts, prior: IndepGammaPrior,
                            include_constant=True) -> float:
    """Log evidence of the binned model; ``include_constant`` adds the N-free ``nT`` term."""
    lml = math.fsum(bin_log_evidence(counts, prior))
    if include_constant:
        lml += counts.n * counts.grid.horizon
    return lml


def default_candidates(data: EventSeries):
    return range(1, max(1, min(200, data.total_events())) + 1)


def select_bins_empirical_bayes(data: EventSeries, prior: IndepGammaPrior, candidates=None):
    """Number of uniform bins maximising the marginal likelihood.

    Returns ``(N_best, profile)`` where ``profile`` lists ``(N, LML)`` for each
    candidate. Ties go to the smaller ``N``.
    """
    if candidates is None:
        candidates = default_candidates(data)
    candidates = sorted(set(int(c) for c in candidates))
    if not candidates or candidates[0] < 1:
        raise ConfigurationError("candidate bin numbers must be a non-empty set of integers >= 1")
    profile = []
    for N in candidates:
        counts = bin_events(data, BinGrid.uniform(data.horizon, N))
        profile.append((N, log_marginal_likelihood(counts, prior)))
    best = profile[0]
    for entry in profile[1:]:
        if entry[1] > best[1]:
            best = entry
    return best[0], profile


def beta_equation_residual(counts: BinnedCounts, alpha, beta):
    """``alpha/beta - mean_k (H_k + alpha)/(n Delta_k + beta)``."""
    H = counts.counts.astype(float)
    terms = (H + alpha) / (counts.exposure + beta)
    return alpha / beta - math.fsum(terms) / H.size


def calibrate_beta(counts: BinnedCounts, alpha: float) -> float:
    """Rate that maximises the marginal likelihood for a fixed prior shape.

    Solves the stationarity condition where the prior mean equals the average
    posterior mean. Requires at least one event.
    """
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    if counts.total == 0:
        raise ConfigurationError(
            "beta cannot be calibrated without events; set beta manually"
        )
    H = counts.counts.astype(float)
    expo = counts.exposure
    N = H.size

    # beta * residual(beta): alpha at 0, tends to -mean(H) < 0, strictly decreasing
    def g(beta):
        return alpha - beta * math.fsum((H + alpha) / (expo + beta)) / N

    hi = alpha * expo.max() / max(H.mean(), 1e-300) + 1.0
    while g(hi) > 0:
        hi *= 2.0
        if hi > 1e300:
            raise NumericalError("could not bracket the beta fixed point")
    lo = hi
    while g(lo) < 0:
        lo *= 0.5
        if lo < 1e-300:
            raise NumericalError("could not bracket the beta fixed point")
    beta = optimize.brentq(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)

    # polish with Newton on the residual itself
    for _ in range(5):
        f = beta_equation_residual(counts, alpha, beta)
        if f == 0.0:
            break
        df = -alpha / beta**2 + math.fsum((H + alpha) / (expo + beta) ** 2) / N
        if df == 0.0:
            break
        step = f / df
        nxt = beta - step
        if not nxt > 0 or abs(beta_equation_residual(counts, alpha, nxt)) >= abs(f):
            break
        beta = nxt
    return float(beta)
