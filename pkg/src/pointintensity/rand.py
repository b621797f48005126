"""Random variates and special functions used by the samplers.

Gamma variates use the Marsaglia-Tsang squeeze/rejection method, boosted
through ``G(a) = G(a + 1) * U**(1/a)`` for shapes below one. The kernels are
compiled with numba and draw from a numpy ``Generator`` so a seeded
:class:`RngStream` reproduces whole sampler trajectories bit for bit.
"""

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np
from numba import njit
from scipy import special

from .errors import NumericalError, ParameterError


class RngStream:
    """Seeded, splittable random stream (single owner).

    Sub-streams derived with :meth:`split` are statistically independent of
    the parent and of each other, and depend only on ``(seed, stream ids)``.
    """

    def __init__(self, seed=None, _key=()):
        if seed is None:
            seed = int(np.random.SeedSequence().entropy % (1 << 64))
        self.seed = int(seed)
        self.key = tuple(_key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def split(self, stream_id):
        return RngStream(self.seed, self.key + (int(stream_id),))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, key={self.key})"


def as_stream(rng):
    if isinstance(rng, RngStream):
        return rng
    return RngStream(rng)


@dataclass(frozen=True)
class GammaParams:
    """Gamma law with ``shape`` and ``rate`` (mean ``shape / rate``)."""

    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0) or not (
            math.isfinite(self.shape) and math.isfinite(self.rate)
        ):
            raise ParameterError(f"gamma parameters must be positive, got {self}")

    @property
    def mean(self):
        return self.shape / self.rate

    @property
    def variance(self):
        return self.shape / self.rate**2


@njit(cache=True)
def std_gamma(gen, a):
    """One G(a, 1) variate."""
    boost = 1.0
    if a < 1.0:
        boost = gen.random() ** (1.0 / a)
        a += 1.0
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = gen.standard_normal()
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = gen.random()
        x2 = x * x
        if u < 1.0 - 0.0331 * x2 * x2:
            return d * v * boost
        if math.log(u) < 0.5 * x2 + d * (1.0 - v + math.log(v)):
            return d * v * boost


@njit(cache=True)
def _fill_gamma(gen, shape, rate, out):
    for i in range(out.size):
        out[i] = std_gamma(gen, shape[i]) / rate[i]


def _check_positive(name, arr):
    if np.any(~(arr > 0)) or np.any(~np.isfinite(arr)):
        raise ParameterError(f"{name} must be positive and finite")


def sample_gamma_array(rng: RngStream, shape, rate):
    """Elementwise ``G(shape[i], rate[i])`` draws; arrays broadcast."""
    shape, rate = np.broadcast_arrays(np.asarray(shape, float), np.asarray(rate, float))
    _check_positive("shape", shape)
    _check_positive("rate", rate)
    out = np.empty(shape.shape)
    _fill_gamma(rng.generator, np.ascontiguousarray(shape).ravel(),
                np.ascontiguousarray(rate).ravel(), out.reshape(-1))
    return out


def sample_gamma(rng: RngStream, params: GammaParams, size=None):
    if size is None:
        return float(sample_gamma_array(rng, params.shape, params.rate))
    return sample_gamma_array(rng, np.full(size, params.shape), params.rate)


def sample_inverse_gamma(rng: RngStream, shape, scale, size=None):
    """Inverse-gamma draws with the given shape and scale: ``scale / G(shape, 1)``."""
    if not (shape > 0 and scale > 0):
        raise ParameterError(f"inverse gamma needs shape > 0 and scale > 0, got {shape}, {scale}")
    g = sample_gamma(rng, GammaParams(shape, 1.0), size)
    return scale / g


# Regularised incomplete gamma --------------------------------------------

_EPS = 1e-16
_FPMIN = 1e-300
_LOG_DENORM_MIN = math.log(5e-324)


@njit(cache=True)
def _gamma_p_series(a, x):
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(100000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


@njit(cache=True)
def _gamma_q_contfrac(a, x):
    # modified Lentz evaluation of the continued fraction for Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, 100000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


@njit(cache=True)
def gamma_p(a, x):
    """Regularised lower incomplete gamma function P(a, x)."""
    if x <= 0.0:
        return 0.0
    if x < a + 1.0:
        return _gamma_p_series(a, x)
    return 1.0 - _gamma_q_contfrac(a, x)


@njit(cache=True)
def gamma_q(a, x):
    if x <= 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x)
    return _gamma_q_contfrac(a, x)


@njit(cache=True)
def _gamma_p_vec(a, x, out):
    for i in range(x.size):
        out[i] = gamma_p(a, x[i])


def gamma_cdf(x, params: GammaParams):
    """CDF of ``G(shape, rate)``; vectorised over ``x``."""
    xs = np.asarray(x, dtype=float)
    out = np.empty(xs.size)
    _gamma_p_vec(float(params.shape), np.ascontiguousarray(xs * params.rate).ravel(), out)
    return out.reshape(xs.shape) if xs.ndim else float(out[0])


def inverse_gamma_cdf(x, shape, scale):
    xs = np.asarray(x, dtype=float)
    flat = np.ascontiguousarray(xs).ravel()
    out = np.empty(flat.size)
    with np.errstate(divide="ignore"):
        _gamma_p_vec(float(shape), scale / flat, out)
    out = 1.0 - out
    out[flat <= 0] = 0.0
    return out.reshape(xs.shape) if xs.ndim else float(out[0])


def _initial_guess(a, p):
    # Wilson-Hilferty, with the small-x series P(a, x) ~ x^a / Gamma(a + 1) as fallback
    z = NormalDist().inv_cdf(p)
    t = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * math.sqrt(a))
    wh = a * t**3
    small = math.exp((math.log(p) + math.lgamma(a + 1.0)) / a)
    if wh <= 0 or (a < 1.0 and small < 1.0):
        return small
    return wh


def _standard_gamma_quantile(a, p, tol=1e-12):
    if (math.log(p) + math.lgamma(a + 1.0)) / a < _LOG_DENORM_MIN:
        # quantile lies below the smallest representable double
        return 0.0
    lo, hi = 0.0, max(1.0, a)
    while gamma_p(a, hi) < p:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise NumericalError(f"cannot bracket gamma quantile for shape={a}, p={p}")
    x = min(max(_initial_guess(a, p), lo), hi)
    if not lo < x < hi:
        x = 0.5 * (lo + hi)
    lg = math.lgamma(a)
    for _ in range(500):
        f = gamma_p(a, x) - p
        if abs(f) < tol:
            return x
        if f < 0:
            lo = x
        else:
            hi = x
        dens = math.exp((a - 1.0) * math.log(x) - x - lg) if x > 0 else 0.0
        step = f / dens if dens > 0 else math.inf
        nxt = x - step
        if not (lo < nxt < hi) or not math.isfinite(nxt):
            nxt = 0.5 * (lo + hi) if lo > 0 else 0.5 * hi
            # geometric bisection when the bracket spans many decades
            if lo > 0 and hi / lo > 1e3:
                nxt = math.sqrt(lo * hi)
        if nxt == x or hi - lo <= 4 * np.finfo(float).eps * hi:
            return nxt
        x = nxt
    raise NumericalError(f"gamma quantile did not converge for shape={a}, p={p}")


def gamma_quantile(p, params: GammaParams) -> float:
    """Quantile of ``G(shape, rate)``: bracketed Newton on P(shape, rate * x) = p."""
    if not 0.0 < p < 1.0:
        raise ParameterError(f"probability must lie in (0, 1), got {p}")
    return _standard_gamma_quantile(float(params.shape), float(p)) / params.rate


def log_gamma_fn(x):
    """``ln Gamma(x)`` for positive ``x`` (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ParameterError("log-gamma is only defined here for positive arguments")
    out = special.gammaln(arr)
    return float(out) if arr.ndim == 0 else out
