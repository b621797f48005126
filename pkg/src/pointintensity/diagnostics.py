"""Chain diagnostics: autocorrelation, effective sample size, batch-means errors."""

import math

import numpy as np


def autocorrelation(series, max_lag):
    """Biased sample autocorrelation at lags ``0..max_lag``.

    A constant series has autocorrelation 1 at lag 0 and 0 elsewhere.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if not n > max_lag >= 0:
        raise ValueError(f"series of length {n} is too short for max_lag={max_lag}")
    x = x - x.mean()
    denom = np.dot(x, x)
    out = np.zeros(max_lag + 1)
    out[0] = 1.0
    if denom == 0.0:
        return out
    # FFT with zero padding gives the full linear autocovariance in O(n log n)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, size)
    acov = np.fft.irfft(f * np.conj(f), size)[: max_lag + 1]
    out[1:] = acov[1:] / denom
    return out


def effective_sample_size(series):
    """ESS from Geyer's initial positive sequence of autocorrelation pairs."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 4:
        return float(n)
    rho = autocorrelation(x, n - 1)
    if np.all(rho[1:] == 0):
        return float(n)
    tau = -1.0
    for k in range(0, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
    return float(n / max(tau, 1e-12))


def batch_means_se(series, batch_size=None):
    """Monte Carlo standard error of the mean by non-overlapping batch means."""
    x = np.asarray(series, dtype=float)
    n = x.size
    b = int(math.sqrt(n)) if batch_size is None else int(batch_size)
    k = n // b
    if k < 2:
        raise ValueError("too few batches for a batch-means estimate")
    means = x[: k * b].reshape(k, b).mean(axis=1)
    return float(math.sqrt(b * means.var(ddof=1) / n))
