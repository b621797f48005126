"""Gamma Markov chain prior on bin heights and its Gibbs sampler.

Heights ``psi_1..psi_N`` are linked through latent ``zeta_2..zeta_N``::

    psi_1 ~ G(a1, b1),  zeta_k | psi_{k-1} ~ IG(a_z, a_z psi_{k-1}),
    psi_k | zeta_k ~ G(a_p, a_p / zeta_k).

A sweep redraws every ``zeta`` and then every ``psi`` from their full
conditionals, followed (when the two coupling parameters are tied to a
single ``alpha``) by a Metropolis-within-Gibbs random-walk step on
``log(alpha)``.

Internally the sampler stores ``w_k = 1 / zeta_k``; this keeps the state
finite when a small shape parameter makes ``zeta_k`` overflow.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .conjugate import PosteriorBand
from .core import BinGrid, BinnedCounts, EventSeries, PiecewiseIntensity, bin_events
from .errors import ConfigurationError, ParameterError
from .rand import RngStream, as_stream, std_gamma

_EXPONENTIAL, _GAMMA, _UNIFORM, _LEVY = 0, 1, 2, 3
_PRIOR_CODES = {"exponential": _EXPONENTIAL, "gamma": _GAMMA, "uniform": _UNIFORM, "levy": _LEVY}


@dataclass(frozen=True)
class AlphaPrior:
    """Prior on the tied coupling parameter ``alpha``.

    ``exponential(rate)``, ``gamma(shape, rate)``, ``uniform(upper)`` on
    ``(0, upper)`` or ``levy(scale)``; the standard Levy law is ``IG(1/2, 1/2)``.
    """

    kind: str = "exponential"
    p1: float = 0.1
    p2: float = 0.0

    def __post_init__(self):
        if self.kind not in _PRIOR_CODES:
            raise ParameterError(f"unknown alpha prior {self.kind!r}")
        if not self.p1 > 0 or (self.kind == "gamma" and not self.p2 > 0):
            raise ParameterError(f"alpha prior parameters must be positive: {self}")

    @classmethod
    def exponential(cls, rate=0.1):
        return cls("exponential", rate)

    @classmethod
    def gamma(cls, shape, rate):
        return cls("gamma", shape, rate)

    @classmethod
    def uniform(cls, upper):
        return cls("uniform", upper)

    @classmethod
    def levy(cls, scale=1.0):
        return cls("levy", scale)

    @property
    def code(self):
        return _PRIOR_CODES[self.kind]

    def logpdf(self, alpha):
        return _alpha_log_prior(alpha, self.code, self.p1, self.p2)

    def sample(self, rng: RngStream):
        g = rng.generator
        if self.kind == "exponential":
            return float(g.exponential(1.0 / self.p1))
        if self.kind == "gamma":
            return float(std_gamma(g, self.p1) / self.p2)
        if self.kind == "uniform":
            return float(g.uniform(0.0, self.p1))
        return float(self.p1 / g.standard_normal() ** 2)

    def describe(self):
        if self.kind == "gamma":
            return f"gamma:{self.p1!r},{self.p2!r}"
        if self.kind == "levy":
            return "levy" if self.p1 == 1.0 else f"levy:{self.p1!r}"
        return f"{self.kind}:{self.p1!r}"


@dataclass(frozen=True)
class GmcHyperparams:
    """Hyperparameters of the gamma Markov chain prior.

    With ``tie_alpha`` (default) both couplings equal one ``alpha`` that is
    sampled under ``alpha_prior``, starting from ``alpha_init``. Otherwise
    ``alpha_zeta`` and ``alpha_psi`` stay fixed at the given values.
    """

    alpha1: float = 0.1
    beta1: float = 0.1
    alpha_zeta: float = 1.0
    alpha_psi: float = 1.0
    tie_alpha: bool = True
    alpha_prior: AlphaPrior = field(default_factory=AlphaPrior)
    alpha_init: float = 1.0

    def __post_init__(self):
        for name in ("alpha1", "beta1", "alpha_zeta", "alpha_psi", "alpha_init"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")

    @classmethod
    def fixed(cls, alpha_zeta, alpha_psi=None, alpha1=0.1, beta1=0.1):
        alpha_psi = alpha_zeta if alpha_psi is None else alpha_psi
        return cls(alpha1, beta1, alpha_zeta, alpha_psi, tie_alpha=False)


@dataclass(frozen=True, eq=False)
class GmcState:
    """Sampler state. ``zeta`` has ``N - 1`` entries (``zeta_2..zeta_N``)."""

    psi: np.ndarray
    zeta: np.ndarray
    rng: RngStream
    alpha: float = None
    mwg_log_step: float = 0.0

    @property
    def N(self):
        return self.psi.size


@dataclass(frozen=True, eq=False)
class ChainOutput:
    grid: BinGrid
    psi: np.ndarray  # kept iterations x bins
    alpha: np.ndarray  # kept alpha values (None when alpha is fixed)
    accepted: int
    proposed: int
    burn_in: int
    iterations: int
    thin: int = 1
    mwg_step: float = float("nan")
    seed: int = None

    @property
    def kept(self):
        return self.psi.shape[0]

    @property
    def acceptance_rate(self):
        return self.accepted / self.proposed if self.proposed else float("nan")

    def save(self, path):
        np.savez(
            path, edges=self.grid.edges, psi=self.psi,
            alpha=np.array([]) if self.alpha is None else self.alpha,
            meta=np.array([self.accepted, self.proposed, self.burn_in, self.iterations, self.thin]),
            mwg_step=np.array(self.mwg_step),
            seed=np.array(-1 if self.seed is None else self.seed),
        )

    @classmethod
    def load(cls, path):
        with np.load(path) as z:
            accepted, proposed, burn_in, iterations, thin = (int(v) for v in z["meta"])
            alpha = z["alpha"] if z["alpha"].size else None
            seed = int(z["seed"])
            return cls(BinGrid(z["edges"]), z["psi"], alpha, accepted, proposed, burn_in,
                       iterations, thin, float(z["mwg_step"]), None if seed < 0 else seed)


# numba kernels -------------------------------------------------------------

@njit(cache=True)
def _alpha_log_prior(alpha, code, p1, p2):
    if not alpha > 0.0:
        return -np.inf
    if code == 0:
        return math.log(p1) - p1 * alpha
    if code == 1:
        return p1 * math.log(p2) - math.lgamma(p1) + (p1 - 1.0) * math.log(alpha) - p2 * alpha
    if code == 2:
        return -math.log(p1) if alpha < p1 else -np.inf
    return 0.5 * math.log(p1 / (2.0 * math.pi)) - 1.5 * math.log(alpha) - p1 / (2.0 * alpha)


@njit(cache=True)
def _coupling_statistic(psi, w):
    s = 0.0
    for k in range(1, psi.size):
        s += (math.log(psi[k - 1]) + math.log(psi[k]) + 2.0 * math.log(w[k])
              - (psi[k - 1] + psi[k]) * w[k])
    return s


@njit(cache=True)
def _log_alpha_target(log_alpha, stat, n_bins, code, p1, p2):
    a = math.exp(log_alpha)
    lp = _alpha_log_prior(a, code, p1, p2)
    if lp == -np.inf or not a > 0.0 or a == np.inf:
        return -np.inf
    return log_alpha + lp + 2.0 * (n_bins - 1) * (a * math.log(a) - math.lgamma(a)) + a * stat


@njit(cache=True)
def _draw_zeta(gen, psi, w, az, ap):
    for k in range(1, psi.size):
        w[k] = std_gamma(gen, az + ap) / (az * psi[k - 1] + ap * psi[k])


@njit(cache=True)
def _draw_psi(gen, psi, w, H, expo, a1, b1, az, ap):
    N = psi.size
    if N == 1:
        psi[0] = std_gamma(gen, a1 + H[0]) / (b1 + expo[0])
        return
    psi[0] = std_gamma(gen, a1 + az + H[0]) / (b1 + az * w[1] + expo[0])
    for k in range(1, N - 1):
        psi[k] = std_gamma(gen, ap + az + H[k]) / (ap * w[k] + az * w[k + 1] + expo[k])
    psi[N - 1] = std_gamma(gen, ap + H[N - 1]) / (ap * w[N - 1] + expo[N - 1])


@njit(cache=True)
def _mwg_step(gen, psi, w, alpha, step, code, p1, p2):
    """One random-walk update of log(alpha); returns (alpha, accepted, accept_prob)."""
    stat = _coupling_statistic(psi, w)
    t = math.log(alpha)
    t_new = t + step * gen.standard_normal()
    cur = _log_alpha_target(t, stat, psi.size, code, p1, p2)
    new = _log_alpha_target(t_new, stat, psi.size, code, p1, p2)
    if not math.isfinite(new):
        return alpha, False, 0.0
    log_ratio = new - cur
    prob = 1.0 if log_ratio >= 0.0 else math.exp(log_ratio)
    if math.log(gen.random()) < log_ratio:
        return math.exp(t_new), True, prob
    return alpha, False, prob


@njit(cache=True)
def _run_chain(gen, psi, w, H, expo, a1, b1, az, ap, tie, code, p1, p2,
               alpha, log_step, iters, burn_in, thin, target, psi_out, alpha_out):
    accepted = 0
    proposed = 0
    row = 0
    for it in range(iters):
        _draw_zeta(gen, psi, w, az, ap)
        _draw_psi(gen, psi, w, H, expo, a1, b1, az, ap)
        if tie:
            alpha, acc, prob = _mwg_step(gen, psi, w, alpha, math.exp(log_step), code, p1, p2)
            az = alpha
            ap = alpha
            if it < burn_in:
                # Robbins-Monro on the log step size, frozen after burn-in
                log_step += (prob - target) / (1.0 + it) ** 0.6
            else:
                proposed += 1
                if acc:
                    accepted += 1
        if it >= burn_in and (it - burn_in) % thin == 0:
            psi_out[row, :] = psi
            alpha_out[row] = alpha
            row += 1
    return alpha, log_step, accepted, proposed


@njit(cache=True)
def _prior_chain(gen, a1, b1, az, ap, psi, zeta):
    psi[0] = std_gamma(gen, a1) / b1
    for k in range(1, psi.size):
        zeta[k - 1] = az * psi[k - 1] / std_gamma(gen, az)
        psi[k] = std_gamma(gen, ap) * zeta[k - 1] / ap


# public API ----------------------------------------------------------------

def _couplings(hp: GmcHyperparams, alpha):
    if hp.tie_alpha:
        a = hp.alpha_init if alpha is None else alpha
        return a, a
    return hp.alpha_zeta, hp.alpha_psi


def sample_gmc_prior(rng, hp: GmcHyperparams, grid: BinGrid, alpha=None):
    """One realisation of the prior chain: ``(PiecewiseIntensity, zeta)``.

    With tied couplings ``alpha`` defaults to a draw from ``hp.alpha_prior``.
    """
    rng = as_stream(rng)
    if hp.tie_alpha and alpha is None:
        alpha = hp.alpha_prior.sample(rng)
    az, ap = _couplings(hp, alpha)
    psi = np.empty(grid.N)
    zeta = np.empty(grid.N - 1)
    _prior_chain(rng.generator, hp.alpha1, hp.beta1, az, ap, psi, zeta)
    return PiecewiseIntensity(grid, psi), zeta


def zeta_conditional(psi, hp: GmcHyperparams, alpha=None):
    """Shape and scale of the inverse-gamma conditionals of ``zeta_2..zeta_N``."""
    az, ap = _couplings(hp, alpha)
    psi = np.asarray(psi, float)
    return np.full(psi.size - 1, az + ap), az * psi[:-1] + ap * psi[1:]


def psi_conditional(zeta, counts: BinnedCounts, hp: GmcHyperparams, alpha=None):
    """Shape and rate of the gamma conditionals of ``psi_1..psi_N`` given ``zeta``."""
    az, ap = _couplings(hp, alpha)
    H = counts.counts.astype(float)
    expo = counts.exposure
    N = H.size
    if N == 1:
        return np.array([hp.alpha1 + H[0]]), np.array([hp.beta1 + expo[0]])
    w = 1.0 / np.asarray(zeta, float)
    shape = np.empty(N)
    rate = np.empty(N)
    shape[0] = hp.alpha1 + az + H[0]
    rate[0] = hp.beta1 + az * w[0] + expo[0]
    shape[1:-1] = ap + az + H[1:-1]
    rate[1:-1] = ap * w[:-1] + az * w[1:] + expo[1:-1]
    shape[-1] = ap + H[-1]
    rate[-1] = ap * w[-1] + expo[-1]
    return shape, rate


def _padded_w(zeta):
    w = np.empty(len(zeta) + 1)
    w[0] = np.nan
    w[1:] = 1.0 / np.asarray(zeta, float)
    return w


def draw_zeta(state: GmcState, hp: GmcHyperparams) -> GmcState:
    az, ap = _couplings(hp, state.alpha)
    w = _padded_w(state.zeta)
    _draw_zeta(state.rng.generator, np.ascontiguousarray(state.psi, dtype=float), w, az, ap)
    return replace(state, zeta=1.0 / w[1:])


def draw_psi(state: GmcState, counts: BinnedCounts, hp: GmcHyperparams) -> GmcState:
    az, ap = _couplings(hp, state.alpha)
    psi = np.array(state.psi, dtype=float)
    w = _padded_w(state.zeta)
    _draw_psi(state.rng.generator, psi, w, counts.counts.astype(float), counts.exposure,
              hp.alpha1, hp.beta1, az, ap)
    return replace(state, psi=psi)


def gibbs_sweep(state: GmcState, counts: BinnedCounts, hp: GmcHyperparams) -> GmcState:
    """Redraw all ``zeta`` and then all ``psi`` from their full conditionals."""
    if state.N != counts.grid.N:
        raise ConfigurationError(f"state has {state.N} bins, data has {counts.grid.N}")
    return draw_psi(draw_zeta(state, hp), counts, hp)


def log_alpha_target(log_alpha, psi, zeta, prior: AlphaPrior):
    """Unnormalised log full conditional of ``log(alpha)`` (Jacobian included)."""
    psi = np.asarray(psi, float)
    stat = _coupling_statistic(psi, _padded_w(zeta))
    return _log_alpha_target(float(log_alpha), stat, psi.size, prior.code, prior.p1, prior.p2)


def mwg_alpha_update(state: GmcState, hp: GmcHyperparams) -> GmcState:
    """Metropolis-within-Gibbs update of the tied coupling ``alpha``."""
    if not hp.tie_alpha:
        raise ConfigurationError("alpha is only sampled when the couplings are tied")
    if state.N < 2:
        raise ConfigurationError("alpha update needs at least two bins")
    alpha = hp.alpha_init if state.alpha is None else state.alpha
    p = hp.alpha_prior
    new_alpha, _, _ = _mwg_step(state.rng.generator, np.asarray(state.psi, float),
                                _padded_w(state.zeta), alpha, math.exp(state.mwg_log_step),
                                p.code, p.p1, p.p2)
    return replace(state, alpha=new_alpha)


def initial_state(counts: BinnedCounts, hp: GmcHyperparams, rng, init=None, mwg_step=1.0):
    """Start from a draw of the diffuse independent-gamma posterior unless ``init`` is given."""
    rng = as_stream(rng)
    if init is None:
        g = rng.generator
        shape = 0.1 + counts.counts.astype(float)
        rate = 0.1 + counts.exposure
        psi = np.array([std_gamma(g, a) / b for a, b in zip(shape, rate)])
    else:
        psi = np.array(init.heights if isinstance(init, PiecewiseIntensity) else init, float)
        if psi.size != counts.grid.N or np.any(~(psi > 0)):
            raise ConfigurationError("initial heights must be positive, one per bin")
    psi = np.maximum(psi, np.finfo(float).tiny)
    zeta = 0.5 * (psi[:-1] + psi[1:])
    alpha = hp.alpha_init if hp.tie_alpha else None
    return GmcState(psi, zeta, rng, alpha, math.log(mwg_step))


def run_gmc(data: EventSeries, grid: BinGrid, hp: GmcHyperparams = None, iters=30000,
            burn_in=None, init=None, rng=None, thin=1, mwg_step=1.0,
            target_acceptance=0.35) -> ChainOutput:
    """Run the Gibbs sampler; the first ``burn_in`` iterations (default half) are dropped."""
    hp = GmcHyperparams() if hp is None else hp
    counts = data if isinstance(data, BinnedCounts) else bin_events(data, grid)
    return run_gmc_counts(counts, hp, iters, burn_in, init, rng, thin, mwg_step, target_acceptance)


def run_gmc_counts(counts: BinnedCounts, hp: GmcHyperparams, iters=30000, burn_in=None,
                   init=None, rng=None, thin=1, mwg_step=1.0, target_acceptance=0.35):
    iters = int(iters)
    burn_in = iters // 2 if burn_in is None else int(burn_in)
    if not iters > burn_in >= 0:
        raise ConfigurationError(f"need iters > burn_in >= 0, got {iters}, {burn_in}")
    if thin < 1:
        raise ConfigurationError("thin must be >= 1")
    rng = as_stream(rng)
    state = initial_state(counts, hp, rng, init, mwg_step)
    tie = hp.tie_alpha and counts.grid.N >= 2
    az, ap = _couplings(hp, state.alpha)
    kept = (iters - burn_in + thin - 1) // thin
    psi_out = np.empty((kept, counts.grid.N))
    alpha_out = np.empty(kept)
    psi = state.psi.copy()
    w = _padded_w(state.zeta)
    p = hp.alpha_prior
    alpha, log_step, accepted, proposed = _run_chain(
        rng.generator, psi, w, counts.counts.astype(float), counts.exposure,
        float(hp.alpha1), float(hp.beta1), float(az), float(ap), tie, p.code, float(p.p1),
        float(p.p2), float(az), state.mwg_log_step, iters, burn_in, int(thin),
        float(target_acceptance), psi_out, alpha_out)
    return ChainOutput(counts.grid, psi_out, alpha_out if tie else None, accepted, proposed,
                       burn_in, iters, int(thin), math.exp(log_step) if tie else float("nan"),
                       rng.seed)


def rule_of_thumb_bins(data, cap=50) -> int:
    """Nearest integer to a quarter of the event count, at least 1 and at most ``cap``."""
    total = data.total_events() if isinstance(data, EventSeries) else int(data)
    return int(max(1, min(cap, math.floor(total / 4.0 + 0.5))))


def summarize_chain(out: ChainOutput, grid: BinGrid = None, levels=(0.75, 0.95)) -> PosteriorBand:
    """Posterior mean and equal-tailed empirical bands from the kept samples."""
    grid = out.grid if grid is None else grid
    if out.kept == 0:
        raise ConfigurationError("chain has no kept samples")
    return band_from_samples(grid, out.psi, levels)


def band_from_samples(grid, samples, levels=(0.75, 0.95)) -> PosteriorBand:
    samples = np.asarray(samples, float)
    mean = samples.mean(axis=0)
    bands = []
    for level in levels:
        if not 0.0 < level < 1.0:
            raise ParameterError(f"credibility level must lie in (0, 1), got {level}")
        lo, hi = np.quantile(samples, [(1 - level) / 2, (1 + level) / 2], axis=0, method="linear")
        bands.append((float(level), lo, hi))
    return PosteriorBand(grid, mean, tuple(bands))
