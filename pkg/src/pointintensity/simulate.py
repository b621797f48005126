"""Test intensities, a thinning simulator and the rate experiments."""

import csv
import math
import sys
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .conjugate import IndepGammaPrior, fit_conjugate, posterior_mean
from .core import BinGrid, EventSeries, PiecewiseIntensity, bin_events
from .errors import ConfigurationError
from .rand import RngStream, as_stream, sample_gamma_array

_SQRT2PI = math.sqrt(2.0 * math.pi)
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def _normal_pdf(x, mu, sigma):
    z = (x - mu) / sigma
    return np.exp(-0.5 * z * z) / (sigma * _SQRT2PI)


@dataclass(frozen=True, eq=False)
class NamedIntensity:
    """A closed-form intensity on ``[0, horizon]`` with a known upper bound ``lam_max``."""

    name: str
    func: object
    lam_max: float
    horizon: float
    breakpoints: tuple = ()
    _cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    def integral(self, a=0.0, b=None):
        b = self.horizon if b is None else b
        key = ("int", a, b)
        if key not in self._cache:
            pts = [p for p in self.breakpoints if a < p < b] or None
            val, _ = integrate.quad(lambda x: float(self(x)), a, b, points=pts, limit=500,
                                    epsabs=1e-13, epsrel=1e-12)
            self._cache[key] = val
        return self._cache[key]

    def bin_moments(self, grid: BinGrid, panels=8):
        """``(int_B lam, int_B lam^2)`` for every bin, by composite Gauss-Legendre."""
        lo, hi = grid.edges[:-1], grid.edges[1:]
        sub = np.linspace(0.0, 1.0, panels + 1)
        a = lo[:, None] + (hi - lo)[:, None] * sub[None, :-1]
        b = lo[:, None] + (hi - lo)[:, None] * sub[None, 1:]
        half = 0.5 * (b - a)
        x = 0.5 * (a + b)[..., None] + half[..., None] * _GL_NODES
        v = self(x)
        m1 = np.sum(half * (v @ _GL_WEIGHTS), axis=1)
        m2 = np.sum(half * ((v * v) @ _GL_WEIGHTS), axis=1)
        return m1, m2

    def bin_averages(self, grid: BinGrid):
        """Exact (adaptive quadrature) bin averages of the intensity."""
        return np.array([self.integral(a, b) / (b - a)
                         for a, b in zip(grid.edges[:-1], grid.edges[1:])])


def oscillating_exponential():
    return NamedIntensity(
        "oscillating_exponential",
        lambda x: 2.0 * np.exp(-x / 5.0) * (5.0 + 4.0 * np.cos(x)),
        18.0, 10.0)


def _bart_simpson(x):
    out = 0.5 * _normal_pdf(x, 3.0, 1.0)
    for j in range(5):
        out = out + 0.1 * _normal_pdf(x, j / 2.0 + 2.0, 0.1)
    return out


def bart_simpson():
    # bound: sum of the component maxima
    bound = 0.5 / _SQRT2PI + 5 * 0.1 / (0.1 * _SQRT2PI)
    return NamedIntensity("bart_simpson", _bart_simpson, bound, 6.0,
                          tuple(j / 2.0 + 2.0 for j in range(5)))


def step_sine():
    return NamedIntensity(
        "step_sine",
        lambda x: 2.0 + 0.2 * np.sin(30.0 * x) + ((x >= 0.7) & (x <= 1.0)),
        3.2, 1.0, (0.7,))


def constant(c=1.0, horizon=1.0):
    c = float(c)
    return NamedIntensity(f"constant({c!r})", lambda x: np.full(np.shape(x), c),
                          c, float(horizon))


def linear(intercept=1.0, slope=2.0, horizon=1.0):
    a, b, T = float(intercept), float(slope), float(horizon)
    if min(a, a + b * T) < 0:
        raise ConfigurationError("linear intensity must be nonnegative on [0, T]")
    return NamedIntensity(f"linear({a!r},{b!r})", lambda x: a + b * x, max(a, a + b * T), T)


def custom_step(step: PiecewiseIntensity):
    return NamedIntensity("custom_step", step.evaluate, float(step.heights.max()),
                          step.grid.horizon, tuple(step.grid.edges[1:-1]))


NAMED = {
    "oscillating_exponential": oscillating_exponential,
    "bart_simpson": bart_simpson,
    "step_sine": step_sine,
    "constant": constant,
    "linear": linear,
}


def named_intensity(spec: str) -> NamedIntensity:
    """Build an intensity from ``name[:arg,...]``, e.g. ``constant:5,2`` or ``bart_simpson``."""
    name, _, args = spec.partition(":")
    if name not in NAMED:
        raise ConfigurationError(f"unknown intensity {name!r}; choose from {sorted(NAMED)}")
    params = [float(a) for a in args.replace(":", ",").split(",") if a.strip()] if args else []
    return NAMED[name](*params)


# simulation ----------------------------------------------------------------

def _candidates(rng: RngStream, intensity: NamedIntensity, n):
    g = rng.generator
    T = intensity.horizon
    per_rep = g.poisson(intensity.lam_max * T, size=n)
    total = int(per_rep.sum())
    times = g.uniform(0.0, T, size=total)
    u = g.random(total)
    keep = u * intensity.lam_max < intensity(times)
    return per_rep, times, keep


def _split(per_rep, times, mask, horizon):
    bounds = np.cumsum(per_rep)[:-1]
    reps = [np.sort(t[m]) for t, m in zip(np.split(times, bounds), np.split(mask, bounds))]
    return EventSeries(horizon, reps)


def simulate_poisson(rng, intensity: NamedIntensity, n: int) -> EventSeries:
    """``n`` independent realisations by Lewis-Shedler thinning of a rate ``lam_max`` process."""
    rng = as_stream(rng)
    if n < 1:
        raise ConfigurationError("need at least one replicate")
    if not intensity.lam_max > 0:
        return EventSeries.empty(intensity.horizon, n)
    per_rep, times, keep = _candidates(rng, intensity, n)
    return _split(per_rep, times, keep, intensity.horizon)


def thin_split(rng, intensity: NamedIntensity, n: int):
    """Dominating process together with its kept and rejected parts."""
    rng = as_stream(rng)
    per_rep, times, keep = _candidates(rng, intensity, n)
    T = intensity.horizon
    everything = np.ones_like(keep)
    return (_split(per_rep, times, everything, T), _split(per_rep, times, keep, T),
            _split(per_rep, times, ~keep, T))


# experiments ---------------------------------------------------------------

def bins_for(n, h=1.0, c=1.0):
    return max(1, int(round(c * n ** (1.0 / (2.0 * h + 1.0)))))


def squared_l2_to_truth(heights, grid: BinGrid, moments):
    """``||lambda - truth||^2`` for step functions given the truth's bin moments; rows broadcast."""
    m1, m2 = moments
    heights = np.asarray(heights, float)
    val = (heights**2) @ grid.widths - 2.0 * heights @ m1 + m2.sum()
    return np.maximum(val, 0.0)


def mse_experiment(intensity: NamedIntensity, sample_sizes, h=1.0, replications=50, rng=0,
                   c=1.0, prior=None, n_bins=None):
    """Mean squared L2 error of the conjugate posterior mean against sample size.

    ``N = round(c * n**(1/(2h+1)))`` unless ``n_bins`` fixes it. Returns rows with
    keys ``n, N, metric, value, seed`` (metrics ``mse`` and ``mse_se``).
    """
    if not 0 < h <= 1:
        raise ConfigurationError("regularity h must lie in (0, 1]")
    rng = as_stream(rng)
    prior = IndepGammaPrior(0.1, 0.1) if prior is None else prior
    rows = []
    for i, n in enumerate(sample_sizes):
        N = bins_for(n, h, c) if n_bins is None else int(n_bins)
        grid = BinGrid.uniform(intensity.horizon, N)
        moments = intensity.bin_moments(grid)
        errs = np.empty(replications)
        for r in range(replications):
            data = simulate_poisson(rng.split(i).split(r), intensity, n)
            est = posterior_mean(fit_conjugate(bin_events(data, grid), prior))
            errs[r] = squared_l2_to_truth(est.heights, grid, moments)
        rows.append(dict(n=n, N=N, metric="mse", value=float(errs.mean()), seed=rng.seed))
        rows.append(dict(n=n, N=N, metric="mse_se",
                         value=float(errs.std(ddof=1) / math.sqrt(replications)) if replications > 1 else float("nan"),
                         seed=rng.seed))
    return rows


def contraction_experiment(intensity: NamedIntensity, sample_sizes, h=1.0, M=3.0, draws=1000,
                           datasets=20, rng=0, c=1.0, prior=None):
    """Posterior mass outside the ``M * n**(-h/(2h+1))`` L2 ball around the truth.

    One row per (sample size, dataset) with metric ``mass``.
    """
    rng = as_stream(rng)
    prior = IndepGammaPrior(0.1, 0.1) if prior is None else prior
    rows = []
    for i, n in enumerate(sample_sizes):
        N = bins_for(n, h, c)
        grid = BinGrid.uniform(intensity.horizon, N)
        moments = intensity.bin_moments(grid)
        radius = M * n ** (-h / (2.0 * h + 1.0))
        for d in range(datasets):
            sub = rng.split(i).split(d)
            data = simulate_poisson(sub.split(0), intensity, n)
            post = fit_conjugate(bin_events(data, grid), prior)
            psi = sample_gamma_array(sub.split(1), np.broadcast_to(post.shape, (draws, N)),
                                     np.broadcast_to(post.rate, (draws, N)))
            dist = np.sqrt(squared_l2_to_truth(psi, grid, moments))
            rows.append(dict(n=n, N=N, metric="mass", value=float(np.mean(dist >= radius)),
                             seed=rng.seed, dataset=d))
    return rows


def mass_by_dataset(rows):
    """``{dataset: [mass at each n in order]}`` from :func:`contraction_experiment` rows."""
    out = {}
    for r in rows:
        out.setdefault(r["dataset"], []).append(r["value"])
    return out


def log_log_slope(rows, metric="mse"):
    pts = [(r["n"], r["value"]) for r in rows if r["metric"] == metric]
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])


TABLE_COLUMNS = ("n", "N", "metric", "value", "seed")


def write_table(rows, out=None):
    """Write experiment rows as CSV with the fixed column set (extra keys are dropped)."""
    close = False
    if out is None or out == "-":
        fh = sys.stdout
    elif hasattr(out, "write"):
        fh = out
    else:
        fh, close = open(out, "w", newline=""), True
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for r in rows:
            w.writerow([repr(r[k]) if isinstance(r[k], float) else r[k] for k in TABLE_COLUMNS])
    finally:
        if close:
            fh.close()
