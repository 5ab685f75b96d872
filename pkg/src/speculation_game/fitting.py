"""Maximum-likelihood fits used by the stylized-fact diagnostics.

Estimators follow the scikit-learn conventions: hyper-parameters in
``__init__``, learned attributes with a trailing underscore after ``fit``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, signal, special, stats
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .validation import DegenerateSeriesError, check_nonconstant, check_positive_samples, check_series


class PowerLawTail(BaseEstimator):
    """Continuous power-law tail ``p(x) ~ x**-alpha`` for ``x >= xmin``.

    With ``xmin=None`` the cutoff is chosen among the sample values by
    minimising the Kolmogorov-Smirnov distance between the tail and the
    fitted law. Candidates leaving fewer than ``min_tail`` points are skipped;
    when more than ``max_candidates`` remain, an evenly spaced subset (by
    rank) is scanned. ``max_candidates=None`` scans them all.
    """

    def __init__(self, xmin=None, min_tail=50, max_candidates=1000):
        self.xmin = xmin
        self.min_tail = min_tail
        self.max_candidates = max_candidates

    @staticmethod
    def _alpha(tail, xmin):
        logs = np.log(tail / xmin).sum()
        return 1.0 + tail.size / logs if logs > 0 else np.nan

    @staticmethod
    def _ks(tail, xmin, alpha):
        n = tail.size
        model = 1.0 - (tail / xmin) ** (1.0 - alpha)
        upper = np.arange(1, n + 1) / n
        return float(max(np.max(np.abs(upper - model)), np.max(np.abs(upper - 1.0 / n - model))))

    def fit(self, X, y=None):
        x = np.sort(check_positive_samples(X, "samples", min_length=50))
        if np.unique(x).size < 3:
            raise DegenerateSeriesError("power-law scan needs at least three distinct values")
        if self.xmin is not None:
            tail = x[x >= self.xmin]
            if tail.size < 2:
                raise ValueError("fewer than two samples above xmin")
            alpha = self._alpha(tail, self.xmin)
            self.xmin_, self.alpha_ = float(self.xmin), float(alpha)
            self.n_tail_ = tail.size
            self.ks_distance_ = self._ks(tail, self.xmin, alpha)
        else:
            values, first = np.unique(x, return_index=True)
            keep = (x.size - first) >= max(self.min_tail, 2)
            cand = first[keep]
            if cand.size == 0:
                raise DegenerateSeriesError("no cutoff leaves enough tail samples")
            if self.max_candidates is not None and cand.size > self.max_candidates:
                pick = np.unique(np.linspace(0, cand.size - 1, self.max_candidates).round().astype(int))
                cand = cand[pick]
            best = (np.inf, None, None)
            for k in cand:
                tail = x[k:]
                alpha = self._alpha(tail, x[k])
                if not np.isfinite(alpha):
                    continue
                d = self._ks(tail, x[k], alpha)
                if d < best[0]:
                    best = (d, x[k], alpha)
            if best[1] is None:
                raise DegenerateSeriesError("no usable cutoff")
            self.ks_distance_, self.xmin_, self.alpha_ = float(best[0]), float(best[1]), float(best[2])
            self.n_tail_ = int(np.count_nonzero(x >= self.xmin_))
        self.n_samples_ = x.size
        return self

    def score_samples(self, X):
        """Log-density of each sample under the fitted tail (``-inf`` below ``xmin``)."""
        check_is_fitted(self, "alpha_")
        x = check_series(X)
        with np.errstate(divide="ignore"):
            out = np.log(self.alpha_ - 1.0) - np.log(self.xmin_) - self.alpha_ * np.log(x / self.xmin_)
        return np.where(x >= self.xmin_, out, -np.inf)

    def ccdf(self, x):
        check_is_fitted(self, "alpha_")
        x = np.asarray(x, dtype=float)
        return np.where(x >= self.xmin_, (x / self.xmin_) ** (1.0 - self.alpha_), 1.0)


class ExponentialTail(BaseEstimator):
    """Shifted exponential ``rate * exp(-rate (x - xmin))`` for ``x >= xmin``."""

    def __init__(self, xmin=None):
        self.xmin = xmin

    def fit(self, X, y=None):
        x = check_series(X, "samples")
        xmin = float(x.min()) if self.xmin is None else float(self.xmin)
        tail = x[x >= xmin]
        if tail.size == 0:
            raise ValueError("no samples above xmin")
        excess = np.mean(tail - xmin)
        if excess <= 0:
            raise DegenerateSeriesError("all tail samples equal xmin")
        self.xmin_ = xmin
        self.rate_ = 1.0 / excess
        self.n_tail_ = tail.size
        self.log_likelihood_ = float(self.score_samples(tail).sum())
        return self

    def score_samples(self, X):
        check_is_fitted(self, "rate_")
        x = check_series(X)
        return np.where(x >= self.xmin_, np.log(self.rate_) - self.rate_ * (x - self.xmin_), -np.inf)

    def ccdf(self, x):
        check_is_fitted(self, "rate_")
        x = np.asarray(x, dtype=float)
        return np.where(x >= self.xmin_, np.exp(-self.rate_ * (x - self.xmin_)), 1.0)


@dataclass
class VuongResult:
    lr: float
    p_value: float
    favored: str
    degenerate: bool = False


def vuong_test(X, first, second, significance=0.1, names=("power-law", "exponential")):
    """Normalised log-likelihood ratio test between two fitted tail models.

    Both models are evaluated on the samples at or above ``first.xmin_``;
    the second model must share that cutoff. Two-sided normal p-value.
    """
    if not np.isclose(first.xmin_, second.xmin_):
        raise ValueError("models must share the same cutoff")
    x = check_series(X)
    tail = x[x >= first.xmin_]
    d = first.score_samples(tail) - second.score_samples(tail)
    sd = d.std()
    if tail.size < 2 or sd == 0:
        return VuongResult(0.0, 1.0, "inconclusive", degenerate=True)
    lr = float(d.sum() / (np.sqrt(tail.size) * sd))
    p = float(2.0 * stats.norm.sf(abs(lr)))
    favored = "inconclusive"
    if p < significance:
        favored = names[0] if lr > 0 else names[1]
    return VuongResult(lr, p, favored)


# ---------------------------------------------------------------------------
# GARCH(1,1)

def garch_variance(returns, a0, a1, b1, initial=None):
    """Conditional variance recursion seeded with the sample variance."""
    r = np.asarray(returns, dtype=float)
    s0 = r.var() if initial is None else initial
    x = a0 + a1 * r[:-1] ** 2
    out = np.empty_like(r)
    out[0] = s0
    if r.size > 1:
        out[1:] = signal.lfilter([1.0], [1.0, -b1], x, zi=[b1 * s0])[0]
    return out


def garch_loglik(returns, a0, a1, b1, initial=None):
    var = garch_variance(returns, a0, a1, b1, initial)
    r = np.asarray(returns, dtype=float)
    return float(-0.5 * np.sum(np.log(2 * np.pi * var) + r * r / var))


def _unpack(theta):
    a0 = np.exp(theta[0])
    persistence = special.expit(theta[1])
    share = special.expit(theta[2])
    return a0, persistence * share, persistence * (1.0 - share)


def _pack(a0, a1, b1):
    return np.array([np.log(a0), special.logit(a1 + b1), special.logit(a1 / (a1 + b1))])


class Garch11(TransformerMixin, BaseEstimator):
    """Gaussian GARCH(1,1) fitted by maximum likelihood.

    Constraints ``a0 > 0``, ``a1, b1 >= 0`` and ``a1 + b1 < 1`` hold by
    construction of the search space (log for ``a0``, logistic persistence
    and ARCH share). The optimiser is Nelder-Mead, stopping when the simplex
    spread drops below ``xatol``. ``transform`` returns standardised
    residuals.
    """

    def __init__(self, init_arch=0.05, init_garch=0.90, xatol=1e-8, max_iter=5000):
        self.init_arch = init_arch
        self.init_garch = init_garch
        self.xatol = xatol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        r = check_series(X, "returns", min_length=500)
        check_nonconstant(r, "returns")
        var = r.var()
        z = r / np.sqrt(var)  # fit in unit-variance coordinates, rescale a0 afterwards

        def nll(theta):
            a0, a1, b1 = _unpack(theta)
            value = -garch_loglik(z, a0, a1, b1, initial=1.0)
            return value if np.isfinite(value) else 1e300

        a1, b1 = self.init_arch, self.init_garch
        x0 = _pack(1.0 - a1 - b1, a1, b1)
        res = optimize.minimize(nll, x0, method="Nelder-Mead",
                                options={"xatol": self.xatol, "fatol": np.inf,
                                         "maxiter": self.max_iter, "maxfev": 4 * self.max_iter})
        a0, a1, b1 = _unpack(res.x)
        self.a0_ = float(a0 * var)
        self.a1_ = float(a1)
        self.b1_ = float(b1)
        self.sample_variance_ = float(var)
        self.converged_ = bool(res.success)
        self.n_iter_ = int(res.nit)
        self.log_likelihood_ = garch_loglik(r, self.a0_, self.a1_, self.b1_, initial=var)
        return self

    @property
    def unconditional_variance_(self):
        return self.a0_ / (1.0 - self.a1_ - self.b1_)

    def conditional_variance(self, X):
        check_is_fitted(self, "a0_")
        r = check_series(X, "returns")
        return garch_variance(r, self.a0_, self.a1_, self.b1_, initial=self.sample_variance_)

    def transform(self, X):
        return garch_residuals(X, self)


def garch_residuals(returns, fit):
    """``r_t / sigma_t`` under the fitted volatility recursion."""
    var = fit.conditional_variance(returns)
    if np.any(var <= 0):
        raise DegenerateSeriesError("non-positive conditional variance")
    return check_series(returns) / np.sqrt(var)


def simulate_garch11(a0, a1, b1, n, rng, burn=1000):
    """Draw a Gaussian GARCH(1,1) path of length ``n`` after ``burn`` steps."""
    eps = rng.standard_normal(n + burn)
    r = np.empty(n + burn)
    var = a0 / (1.0 - a1 - b1)
    for t in range(n + burn):
        r[t] = np.sqrt(var) * eps[t]
        var = a0 + a1 * r[t] ** 2 + b1 * var
    return r[burn:]
