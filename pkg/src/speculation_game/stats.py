"""Stylized-fact statistics on simulated price series.

All functions are pure. Curves come back as small dataclasses so the harness
can average them across trials and serialise them.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft

from .validation import DegenerateSeriesError, check_nonconstant, check_positive_int, check_series

Z95 = 1.959963984540054


@dataclass
class ReturnSeries:
    values: np.ndarray
    scale: int = 1
    # index t of p(t) each return ends at
    times: np.ndarray = field(default=None, repr=False)


@dataclass
class AcfCurve:
    lags: np.ndarray
    correlations: np.ndarray
    band_halfwidth: float
    n: int = 0


@dataclass
class KurtosisCurve:
    scales: np.ndarray
    kurtoses: np.ndarray
    sizes: np.ndarray
    omitted: list = field(default_factory=list)


@dataclass
class VolumeVolatility:
    volume: np.ndarray
    volatility: np.ndarray
    correlation: float
    scale: int


@dataclass
class LeadLagResult:
    lags: np.ndarray
    rho_cf: np.ndarray
    asymmetry: np.ndarray
    band_halfwidth: float
    sampling: tuple = (10, 5, 50)


@dataclass
class LeverageCurve:
    lags: np.ndarray
    values: np.ndarray


@dataclass
class HorizonDistribution:
    theta: float
    sign: int
    horizons: np.ndarray
    probabilities: np.ndarray
    censored_count: int
    waiting_times: np.ndarray = field(default=None, repr=False)
    # number of non-overlapping passages (restart at each hit)
    n_independent: int = 0

    @property
    def histogram(self):
        return dict(zip(self.horizons.tolist(), self.probabilities.tolist()))


# ---------------------------------------------------------------------------

def positive_segments(prices):
    """``(start, stop)`` bounds of maximal runs of strictly positive prices."""
    pos = np.concatenate([[False], np.asarray(prices) > 0, [False]])
    edges = np.flatnonzero(np.diff(pos.astype(np.int8)))
    return list(zip(edges[::2], edges[1::2]))


def log_returns(prices, dt=1):
    """``ln p(t) - ln p(t - dt)`` over strictly positive price segments.

    Returns spanning a non-positive price are dropped, so the output may be
    shorter than ``len(prices) - dt``.
    """
    dt = check_positive_int(dt, "dt")
    prices = check_series(prices, "prices", allow_empty=True)
    values, times = [], []
    for start, stop in positive_segments(prices):
        if stop - start <= dt:
            continue
        logp = np.log(prices[start:stop])
        values.append(logp[dt:] - logp[:-dt])
        times.append(np.arange(start + dt, stop))
    if not values:
        raise DegenerateSeriesError(f"fewer than {dt + 1} consecutive positive prices")
    return ReturnSeries(np.concatenate(values), dt, np.concatenate(times))


def normalize(x):
    """Zero mean, unit (population) variance."""
    x = check_series(x)
    check_nonconstant(x)
    return (x - x.mean()) / x.std()


def excess_kurtosis(x):
    x = check_series(x)
    check_nonconstant(x)
    d = x - x.mean()
    m2 = np.mean(d * d)
    return float(np.mean(d ** 4) / m2 ** 2 - 3.0)


def autocorrelation(x, max_lag):
    """Biased sample ACF for lags ``0..max_lag`` with a 95% white-noise band."""
    x = check_series(x, min_length=max_lag + 1)
    check_nonconstant(x)
    n = x.size
    d = x - x.mean()
    size = fft.next_fast_len(2 * n - 1)
    spec = fft.rfft(d, size)
    acov = fft.irfft(spec * np.conj(spec), size)[:max_lag + 1]
    rho = acov / acov[0]
    rho[0] = 1.0
    return AcfCurve(np.arange(max_lag + 1), rho, Z95 / np.sqrt(n), n)


def fit_exponential_decay(acf, lag_range=(1, 100)):
    """Least-squares fit of ``ln rho = ln A - rate * lag``; returns ``(A, rate)``."""
    lo, hi = lag_range
    mask = (acf.lags >= lo) & (acf.lags <= hi)
    lags = np.asarray(acf.lags[mask], dtype=float)
    rho = np.asarray(acf.correlations[mask], dtype=float)
    if lags.size < 2:
        raise ValueError("need at least two lags in range")
    bad = np.flatnonzero(rho <= 0)
    if bad.size:
        raise ValueError(f"non-positive correlation at lag {int(lags[bad[0]])}")
    slope, intercept = np.polyfit(lags, np.log(rho), 1)
    return float(np.exp(intercept)), float(-slope)


def aggregate(x, dt):
    """Sums over non-overlapping windows of ``dt`` values (remainder dropped)."""
    m = x.size // dt
    return x[:m * dt].reshape(m, dt).sum(axis=1)


def kurtosis_curve(returns, scales, min_samples=30):
    """Excess kurtosis of aggregated unit returns for each scale.

    Scales with zero variance are skipped and listed in ``omitted``.
    """
    returns = check_series(returns)
    scales = np.asarray(sorted(set(int(s) for s in scales)))
    if returns.size // scales.max() < min_samples:
        raise ValueError(f"largest scale {scales.max()} leaves fewer than {min_samples} samples")
    kept, kurt, sizes, omitted = [], [], [], []
    for dt in scales:
        agg = aggregate(returns, dt)
        if np.ptp(agg) == 0:
            omitted.append(int(dt))
            continue
        kept.append(dt)
        kurt.append(excess_kurtosis(agg))
        sizes.append(agg.size)
    return KurtosisCurve(np.array(kept), np.array(kurt), np.array(sizes), omitted)


def window_means(x, dt):
    m = x.size // dt
    return x[:m * dt].reshape(m, dt).mean(axis=1)


def volume_volatility(buy_volume, sell_volume, returns, dt):
    """Window-mean trading volume against window-mean absolute return.

    The volume of a window is the larger of its mean buy and mean sell
    volume. Inputs must be aligned step by step.
    """
    dt = check_positive_int(dt, "dt")
    qb = check_series(buy_volume, "buy_volume")
    qs = check_series(sell_volume, "sell_volume")
    r = check_series(returns, "returns")
    if not qb.size == qs.size == r.size:
        raise ValueError("volume and return series must be aligned")
    volume = np.maximum(window_means(qb, dt), window_means(qs, dt))
    volatility = window_means(np.abs(r), dt)
    check_nonconstant(volume, "volume")
    check_nonconstant(volatility, "volatility")
    return VolumeVolatility(volume, volatility, float(np.corrcoef(volume, volatility)[0, 1]), dt)


def coarse_fine_volatility(returns, dt=10, n=5, stride=50):
    """Coarse and fine volatilities sampled every ``stride`` unit steps.

    For each block the ``n`` consecutive ``dt``-step returns give
    ``v_c = |sum|`` and ``v_f = mean(|r|)``.
    """
    r = check_series(returns)
    if stride < n * dt:
        raise ValueError("stride must be >= n * dt")
    span = n * dt
    if r.size < span:
        raise ValueError("not enough returns for one sample")
    count = (r.size - span) // stride + 1
    starts = np.arange(count) * stride
    blocks = r[starts[:, None] + np.arange(span)].reshape(count, n, dt).sum(axis=2)
    return np.abs(blocks.sum(axis=1)), np.abs(blocks).mean(axis=1)


def lagged_corr(x, y, lag):
    """Pearson correlation of ``x(t + lag)`` with ``y(t)`` over the overlap."""
    if lag >= 0:
        a, b = x[lag:], y[:y.size - lag]
    else:
        a, b = x[:x.size + lag], y[-lag:]
    check_nonconstant(a)
    check_nonconstant(b)
    return float(np.corrcoef(a, b)[0, 1])


def lead_lag_asymmetry(v_coarse, v_fine, max_lag, sampling=(10, 5, 50)):
    vc = check_series(v_coarse, "v_coarse", min_length=max_lag + 2)
    vf = check_series(v_fine, "v_fine", min_length=max_lag + 2)
    if vc.size != vf.size:
        raise ValueError("series must be aligned")
    lags = np.arange(-max_lag, max_lag + 1)
    rho = np.array([lagged_corr(vc, vf, int(k)) for k in lags])
    asym = rho[max_lag + 1:] - rho[max_lag - 1::-1]
    return LeadLagResult(lags, rho, asym, Z95 / np.sqrt(vc.size), tuple(sampling))


def leverage(returns, max_lag):
    """``<r(t+tau)^2 r(t)> / <r(t)^2>^2`` for ``tau`` in ``[-max_lag, max_lag]``.

    Raw moments, no mean subtraction.
    """
    r = check_series(returns, min_length=max_lag + 1)
    m2 = np.mean(r * r)
    if m2 == 0:
        raise DegenerateSeriesError("returns are identically zero")
    sq = r * r
    lags = np.arange(-max_lag, max_lag + 1)
    vals = np.empty(lags.size)
    n = r.size
    for k, tau in enumerate(lags):
        if tau >= 0:
            vals[k] = np.mean(sq[tau:] * r[:n - tau])
        else:
            vals[k] = np.mean(sq[:n + tau] * r[-tau:])
    return LeverageCurve(lags, vals / m2 ** 2)


def _first_reach(logp, theta):
    """Smallest ``k >= 1`` with ``logp[t+k] - logp[t] >= theta`` (0 if never)."""
    n = logp.size
    # binary lifting over a sparse table of forward block maxima
    levels = [logp]
    while (1 << len(levels)) <= n:
        prev, half = levels[-1], 1 << (len(levels) - 1)
        shifted = np.full(n, -np.inf)
        shifted[:n - half] = prev[half:]
        levels.append(np.maximum(prev, shifted))
    target = logp + theta - 1e-12 * max(1.0, theta)
    pos = np.arange(1, n + 1)
    for lvl in range(len(levels) - 1, -1, -1):
        inside = pos < n
        block = np.full(n, np.inf)
        block[inside] = levels[lvl][pos[inside]]
        pos = np.where(inside & (block < target), pos + (1 << lvl), pos)
    hit = pos < n
    return np.where(hit, pos - np.arange(n), 0)


def inverse_statistics(prices, theta=0.01, sign=1):
    """Waiting time for the log return from each start to reach ``sign * theta``.

    Every positive-price start is either observed or counted as censored
    (the level is never reached before the segment ends).
    """
    if not theta > 0:
        raise ValueError("theta must be > 0")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    prices = check_series(prices, "prices")
    waits, censored, chained = [], 0, 0
    for start, stop in positive_segments(prices):
        logp = np.log(prices[start:stop])
        k = _first_reach(sign * logp, theta)
        waits.append(k[k > 0])
        censored += int(np.count_nonzero(k == 0))
        chained += renewal_count(k)
    waits = np.concatenate(waits) if waits else np.zeros(0, dtype=np.int64)
    horizons, counts = np.unique(waits, return_counts=True)
    probs = counts / counts.sum() if counts.size else counts.astype(float)
    return HorizonDistribution(theta, sign, horizons, probs, censored, waits, chained)


def renewal_count(waits):
    """Passages in the chain that restarts at each hit, starting from index 0."""
    t, count = 0, 0
    while t < waits.size and waits[t] > 0:
        count += 1
        t += int(waits[t])
    return count


def average_horizon_distributions(dists):
    """Pointwise mean of several histograms over the union of horizons."""
    horizons = np.unique(np.concatenate([d.horizons for d in dists]))
    probs = np.zeros(horizons.size)
    for d in dists:
        probs[np.searchsorted(horizons, d.horizons)] += d.probabilities
    first = dists[0]
    return HorizonDistribution(first.theta, first.sign, horizons, probs / len(dists),
                               sum(d.censored_count for d in dists),
                               np.concatenate([d.waiting_times for d in dists]),
                               sum(d.n_independent for d in dists))


def ks_distance(a, b):
    """Largest CDF gap between two horizon histograms."""
    grid = np.union1d(a.horizons, b.horizons)
    cdf = []
    for d in (a, b):
        p = np.zeros(grid.size)
        p[np.searchsorted(grid, d.horizons)] = d.probabilities
        cdf.append(np.cumsum(p))
    return float(np.max(np.abs(cdf[0] - cdf[1])))


def ks_critical_value(n, m, alpha=0.05):
    """Asymptotic two-sample Kolmogorov-Smirnov critical value."""
    return float(np.sqrt(-0.5 * np.log(alpha / 2)) * np.sqrt((n + m) / (n * m)))


def average_curves(curves, attr):
    """Pointwise mean of ``attr`` across curves of identical shape."""
    return np.mean([getattr(c, attr) for c in curves], axis=0)


def exceedance_clustering(x, level=2.0):
    """``Pr[|x(t+1)| > level | |x(t)| > level] / Pr[|x| > level]`` for normalised ``x``.

    Values well above 1 mean large moves follow large moves.
    """
    x = check_series(x, min_length=2)
    big = np.abs(x) > level
    rate = big.mean()
    if rate == 0 or not big[:-1].any():
        return float("nan")
    return float(big[1:][big[:-1]].mean() / rate)
