"""Reversible-jump sampler over the number of uniform bins.

Within a model the heights have independent gamma priors, so each model's
evidence is available in closed form and the jump reduces to a Metropolis
walk on ``N`` with target ``R(N) = log ML_N + log pi_N``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .conjugate import IndepGammaPrior, log_marginal_likelihood
from .core import BinGrid, EventSeries, bin_events
from .errors import ConfigurationError, ParameterError
from .gmc import rule_of_thumb_bins
from .rand import as_stream, sample_gamma_array


@dataclass(frozen=True)
class ModelIndexPrior:
    """Prior on ``N``: discrete uniform on ``1..nmax`` or a Poisson restricted to ``1..nmax``."""

    kind: str = "uniform"
    nmax: int = 50
    mean: float = 0.0

    def __post_init__(self):
        if self.kind not in ("uniform", "shifted_poisson"):
            raise ParameterError(f"unknown model prior {self.kind!r}")
        if self.nmax < 1:
            raise ParameterError("nmax must be >= 1")
        if self.kind == "shifted_poisson" and not self.mean > 0:
            raise ParameterError("Poisson mean must be positive")

    @classmethod
    def uniform(cls, nmax):
        return cls("uniform", int(nmax))

    @classmethod
    def shifted_poisson(cls, mean, nmax=None):
        nmax = int(nmax) if nmax is not None else max(50, int(mean + 10 * math.sqrt(mean)) + 1)
        return cls("shifted_poisson", nmax, float(mean))

    def log_probs(self):
        """Normalised log prior masses for ``N = 1..nmax``."""
        k = np.arange(1, self.nmax + 1, dtype=float)
        if self.kind == "uniform":
            return np.full(self.nmax, -math.log(self.nmax))
        lp = k * math.log(self.mean) - gammaln(k + 1.0)
        return lp - logsumexp(lp)

    def describe(self):
        if self.kind == "uniform":
            return f"uniform:{self.nmax}"
        return f"shiftpoisson:{self.mean!r}:{self.nmax}"


@dataclass(frozen=True)
class RjConfig:
    eta: float = 0.45
    psi_prior: IndepGammaPrior = field(default_factory=IndepGammaPrior)
    model_prior: ModelIndexPrior = field(default_factory=ModelIndexPrior)
    iterations: int = 30000
    burn_in: int = None
    seed: int = None
    init_n: int = None
    draw_psi: bool = False
    memoize: bool = True

    def __post_init__(self):
        if not 0.0 < self.eta < 0.5:
            raise ParameterError(f"eta must lie in (0, 1/2), got {self.eta}")
        b = self.burn_in_count
        if not self.iterations > b >= 0:
            raise ConfigurationError("need iterations > burn_in >= 0")

    @property
    def burn_in_count(self):
        return self.iterations // 2 if self.burn_in is None else int(self.burn_in)


@dataclass(frozen=True, eq=False)
class RjOutput:
    chain: np.ndarray  # kept model indices
    frequencies: dict  # N -> count over kept iterations
    scores: dict  # cached R(N)
    accepted: int
    burn_in: int
    iterations: int
    psi_draws: list = None  # per kept iterate, heights on that model's grid
    horizon: float = None

    def model_probabilities(self):
        total = sum(self.frequencies.values())
        return {k: v / total for k, v in sorted(self.frequencies.items())}


class ModelScorer:
    """Evaluates ``R(N)``, binning the data at most once per ``N`` when memoised."""

    def __init__(self, data: EventSeries, cfg: RjConfig):
        self.data = data
        self.cfg = cfg
        self.log_prior = cfg.model_prior.log_probs()
        self.cache = {}
        self.evaluations = 0
        self._counts = {}

    def counts(self, N):
        if N not in self._counts:
            self._counts[N] = bin_events(self.data, BinGrid.uniform(self.data.horizon, N))
        return self._counts[N]

    def __call__(self, N):
        N = int(N)
        if not 1 <= N <= self.cfg.model_prior.nmax:
            raise ConfigurationError(f"model index {N} outside 1..{self.cfg.model_prior.nmax}")
        if self.cfg.memoize and N in self.cache:
            return self.cache[N]
        self.evaluations += 1
        counts = bin_events(self.data, BinGrid.uniform(self.data.horizon, N))
        r = log_marginal_likelihood(counts, self.cfg.psi_prior) + self.log_prior[N - 1]
        if self.cfg.memoize:
            self.cache[N] = r
        return r


def log_model_score(data: EventSeries, N: int, cfg: RjConfig) -> float:
    return ModelScorer(data, cfg)(N)


def proposal_probs(N, eta, nmax):
    """``{target: probability}`` for the neighbour-walk proposal from ``N``."""
    if nmax == 1:
        return {1: 1.0}
    if N == 1:
        return {1: 0.5, 2: 0.5}
    if N == nmax:
        return {N: 0.5, N - 1: 0.5}
    return {N - 1: eta, N: 1.0 - 2.0 * eta, N + 1: eta}


def proposal_log_ratio(current, proposed, eta, nmax=None) -> float:
    """``log q(current | proposed) - log q(proposed | current)``."""
    if current < 1 or proposed < 1 or abs(current - proposed) > 1:
        raise ConfigurationError(f"invalid proposal {current} -> {proposed}")
    nmax = max(current, proposed) + 1 if nmax is None else nmax
    fwd = proposal_probs(current, eta, nmax).get(proposed, 0.0)
    bwd = proposal_probs(proposed, eta, nmax).get(current, 0.0)
    if fwd == 0.0 or bwd == 0.0:
        raise ConfigurationError(f"proposal {current} -> {proposed} is not reversible")
    return math.log(bwd) - math.log(fwd)


def _propose(N, eta, nmax, u):
    probs = proposal_probs(N, eta, nmax)
    acc = 0.0
    last = N
    for target, p in sorted(probs.items()):
        acc += p
        last = target
        if u < acc:
            return target
    return last


def run_rj(data: EventSeries, cfg: RjConfig, scorer=None) -> RjOutput:
    rng = as_stream(cfg.seed)
    g = rng.generator
    nmax = cfg.model_prior.nmax
    scorer = ModelScorer(data, cfg) if scorer is None else scorer
    N = cfg.init_n if cfg.init_n is not None else min(rule_of_thumb_bins(data), nmax)
    if not 1 <= N <= nmax:
        raise ConfigurationError(f"initial model {N} outside 1..{nmax}")
    burn = cfg.burn_in_count
    r_cur = scorer(N)
    chain = np.empty(cfg.iterations - burn, dtype=np.int64)
    draws = [] if cfg.draw_psi else None
    psi_rng = rng.split(1)
    accepted = 0
    for it in range(cfg.iterations):
        u_prop, u_acc = g.random(2)
        prop = _propose(N, cfg.eta, nmax, u_prop)
        if prop != N:
            r_prop = scorer(prop)
            log_a = r_prop - r_cur + proposal_log_ratio(N, prop, cfg.eta, nmax)
            if math.log(u_acc) < log_a:
                N, r_cur = prop, r_prop
                accepted += 1
        if it >= burn:
            chain[it - burn] = N
            if draws is not None:
                c = scorer.counts(N)
                draws.append(sample_gamma_array(
                    psi_rng, cfg.psi_prior.shape + c.counts, cfg.psi_prior.rate + c.exposure))
    values, counts = np.unique(chain, return_counts=True)
    freqs = {int(v): int(c) for v, c in zip(values, counts)}
    return RjOutput(chain, freqs, dict(getattr(scorer, "cache", {})), accepted, burn,
                    cfg.iterations, draws, data.horizon)


def exact_model_posterior(data: EventSeries, cfg: RjConfig):
    """Posterior over ``N`` by enumeration: list of ``(N, probability)``."""
    scorer = ModelScorer(data, cfg)
    ns = np.arange(1, cfg.model_prior.nmax + 1)
    r = np.array([scorer(n) for n in ns])
    p = np.exp(r - logsumexp(r))
    return [(int(n), float(q)) for n, q in zip(ns, p)]


def rj_posterior_band(out: RjOutput, n_eval=200, levels=(0.75, 0.95)):
    """Model-averaged band on a uniform evaluation grid from the within-model draws."""
    from .gmc import band_from_samples

    if not out.psi_draws:
        raise ConfigurationError("run_rj was not asked to draw heights (draw_psi=False)")
    grid = BinGrid.uniform(out.horizon, n_eval)
    mids = 0.5 * (grid.edges[:-1] + grid.edges[1:])
    rows = np.empty((len(out.psi_draws), n_eval))
    for i, psi in enumerate(out.psi_draws):
        rows[i] = psi[BinGrid.uniform(out.horizon, psi.size).locate(mids)]
    return band_from_samples(grid, rows, levels)
