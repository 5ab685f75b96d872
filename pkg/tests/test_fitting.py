import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from speculation_game.fitting import (
    ExponentialTail, Garch11, PowerLawTail, garch_loglik, garch_residuals, garch_variance,
    simulate_garch11, vuong_test,
)
from speculation_game.validation import DegenerateSeriesError


def pareto(alpha, n, seed, xmin=1.0):
    u = np.random.default_rng(seed).random(n)
    return xmin * (1 - u) ** (-1 / (alpha - 1))


# -- power law -------------------------------------------------------------

def test_powerlaw_fixed_cutoff_matches_closed_form():
    x = pareto(3.5, 100_000, 0)
    fit = PowerLawTail(xmin=1.0).fit(x)
    oracle = 1 + x.size / np.log(x).sum()
    assert fit.alpha_ == pytest.approx(oracle, rel=1e-12)
    assert 3.4 <= fit.alpha_ <= 3.6 and fit.n_tail_ == x.size


def test_powerlaw_scan_recovers_exponent():
    fit = PowerLawTail().fit(pareto(3.5, 100_000, 1))
    assert abs(fit.alpha_ - 3.5) <= 0.1
    assert fit.xmin_ >= 1.0 and fit.n_tail_ >= 50


def test_powerlaw_scan_finds_cutoff_above_exponential_body():
    rng = np.random.default_rng(2)
    body = rng.uniform(0.1, 2.0, 6_000)
    tail = pareto(3.0, 4_000, 3, xmin=2.0)
    fit = PowerLawTail(max_candidates=None).fit(np.concatenate([body, tail]))
    assert 1.8 <= fit.xmin_ <= 2.6
    assert abs(fit.alpha_ - 3.0) < 0.25


def test_powerlaw_candidate_cap_close_to_full_scan():
    x = pareto(3.0, 20_000, 4) + np.random.default_rng(5).exponential(0.3, 20_000)
    full = PowerLawTail(max_candidates=None).fit(x)
    capped = PowerLawTail(max_candidates=500).fit(x)
    assert capped.ks_distance_ >= full.ks_distance_
    assert capped.ks_distance_ - full.ks_distance_ < 0.01


@pytest.mark.parametrize("n", [1_000, 10_000, 100_000])
def test_powerlaw_error_shrinks_with_n(n):
    errs = [abs(PowerLawTail(xmin=1.0).fit(pareto(3.5, n, s)).alpha_ - 3.5) for s in range(5)]
    assert np.mean(errs) < 4 * 2.5 / np.sqrt(n)


def test_powerlaw_degenerate_inputs():
    with pytest.raises(DegenerateSeriesError):
        PowerLawTail().fit(np.r_[np.ones(40), 2 * np.ones(40)])
    with pytest.raises(ValueError):
        PowerLawTail().fit(np.ones(10))
    with pytest.raises(ValueError):
        PowerLawTail().fit(-pareto(3, 100, 0))


def test_powerlaw_density_and_ccdf():
    fit = PowerLawTail(xmin=1.0).fit(pareto(3.0, 1000, 6))
    a = fit.alpha_
    assert fit.score_samples(np.array([2.0]))[0] == pytest.approx(np.log(a - 1) - a * np.log(2))
    assert fit.score_samples(np.array([0.5]))[0] == -np.inf
    assert fit.ccdf(2.0) == pytest.approx(2 ** (1 - a))
    with pytest.raises(NotFittedError):
        PowerLawTail().ccdf(2.0)


def test_estimators_follow_sklearn_conventions():
    est = PowerLawTail(min_tail=80)
    assert est.get_params() == {"xmin": None, "min_tail": 80, "max_candidates": 1000}
    assert clone(est).get_params() == est.get_params()
    g = Garch11(init_arch=0.1)
    assert clone(g).set_params(xatol=1e-6).get_params()["xatol"] == 1e-6


# -- exponential -----------------------------------------------------------

def test_exponential_unit_excess():
    fit = ExponentialTail(xmin=2.0).fit(np.full(10, 3.0))
    assert fit.rate_ == 1.0


def test_exponential_recovers_rate():
    x = np.random.default_rng(7).exponential(0.5, 100_000)
    fit = ExponentialTail(xmin=0.0).fit(x)
    assert 1.97 <= fit.rate_ <= 2.03
    assert fit.log_likelihood_ == pytest.approx(x.size * np.log(fit.rate_) - fit.rate_ * x.sum())


@settings(max_examples=25)
@given(st.floats(-5, 5), st.integers(0, 10 ** 6))
def test_exponential_shift_invariance(shift, seed):
    x = np.random.default_rng(seed).exponential(1.0, 200) + 1.0
    a = ExponentialTail(xmin=1.0).fit(x).rate_
    b = ExponentialTail(xmin=1.0 + shift).fit(x + shift).rate_
    assert a == pytest.approx(b, rel=1e-9)


def test_exponential_errors():
    with pytest.raises(ValueError):
        ExponentialTail(xmin=10.0).fit(np.ones(5))
    with pytest.raises(DegenerateSeriesError):
        ExponentialTail(xmin=1.0).fit(np.ones(5))


# -- Vuong -----------------------------------------------------------------

def _pair(x, xmin):
    return PowerLawTail(xmin=xmin).fit(x), ExponentialTail(xmin=xmin).fit(x)


def test_vuong_favors_true_model():
    x = pareto(2.5, 20_000, 8)
    pl, ex = _pair(x, 1.0)
    assert vuong_test(x, pl, ex).favored == "power-law"
    y = 1.0 + np.random.default_rng(9).exponential(1.0, 20_000)
    pl, ex = _pair(y, 1.0)
    res = vuong_test(y, pl, ex)
    assert res.favored == "exponential" and res.lr < 0 and res.p_value < 0.1


def test_vuong_antisymmetric():
    x = pareto(3.0, 5_000, 10)
    pl, ex = _pair(x, 1.0)
    ab = vuong_test(x, pl, ex)
    ba = vuong_test(x, ex, pl, names=("exponential", "power-law"))
    assert ba.lr == pytest.approx(-ab.lr) and ba.p_value == pytest.approx(ab.p_value)
    assert ab.favored == ba.favored


def test_vuong_identical_models_inconclusive():
    x = pareto(3.0, 500, 11)
    pl = PowerLawTail(xmin=1.0).fit(x)
    res = vuong_test(x, pl, pl)
    assert res.degenerate and res.favored == "inconclusive" and res.lr == 0.0


def test_vuong_requires_common_cutoff():
    x = pareto(3.0, 500, 12)
    with pytest.raises(ValueError):
        vuong_test(x, PowerLawTail(xmin=1.0).fit(x), ExponentialTail(xmin=1.5).fit(x))


def test_vuong_lr_formula():
    x = pareto(3.0, 3_000, 13)
    pl, ex = _pair(x, 1.0)
    d = pl.score_samples(x) - ex.score_samples(x)
    assert vuong_test(x, pl, ex).lr == pytest.approx(d.sum() / (np.sqrt(d.size) * d.std()))


# -- GARCH -----------------------------------------------------------------

def _garch_loop(r, a0, a1, b1, s0):
    out = [s0]
    for t in range(1, r.size):
        out.append(a0 + a1 * r[t - 1] ** 2 + b1 * out[-1])
    return np.array(out)


@settings(max_examples=25)
@given(st.integers(0, 10 ** 6), st.floats(1e-6, 1.0), st.floats(0, 0.5), st.floats(0, 0.49))
def test_garch_variance_matches_recursion(seed, a0, a1, b1):
    r = np.random.default_rng(seed).standard_normal(50)
    np.testing.assert_allclose(garch_variance(r, a0, a1, b1), _garch_loop(r, a0, a1, b1, r.var()),
                               rtol=1e-10)
    assert np.all(garch_variance(r, a0, a1, b1)[1:] >= a0)


def test_garch_constant_volatility_reduction():
    r = np.random.default_rng(14).standard_normal(100) * 2
    var = garch_variance(r, 4.0, 0.0, 0.0, initial=4.0)
    np.testing.assert_array_equal(var, 4.0)
    expected = -0.5 * np.sum(np.log(2 * np.pi * 4.0) + r * r / 4.0)
    assert garch_loglik(r, 4.0, 0.0, 0.0, initial=4.0) == pytest.approx(expected)


def test_garch_residuals_constant_volatility():
    class Fixed:
        def conditional_variance(self, r):
            return np.full(len(r), 4.0)

    r = np.arange(1.0, 6.0)
    np.testing.assert_allclose(garch_residuals(r, Fixed()), r / 2)


def test_garch_recovers_parameters():
    r = simulate_garch11(1e-5, 0.10, 0.85, 50_000, np.random.default_rng(15))
    fit = Garch11().fit(r)
    assert fit.converged_
    assert abs(fit.a1_ - 0.10) <= 0.05 and abs(fit.b1_ - 0.85) <= 0.05
    assert fit.a0_ > 0 and fit.a1_ + fit.b1_ < 1
    resid = fit.transform(r)
    assert 0.95 <= resid.var() <= 1.05


def test_garch_iid_unconditional_variance():
    v = 2.5e-4
    r = np.random.default_rng(16).normal(0, np.sqrt(v), 20_000)
    fit = Garch11().fit(r)
    assert fit.unconditional_variance_ == pytest.approx(v, rel=0.05)
    assert 0.95 <= fit.transform(r).var() <= 1.05


def test_garch_deterministic_and_validated():
    r = simulate_garch11(1e-5, 0.1, 0.8, 2000, np.random.default_rng(17))
    a, b = Garch11().fit(r), Garch11().fit(r)
    assert (a.a0_, a.a1_, a.b1_) == (b.a0_, b.a1_, b.b1_)
    with pytest.raises(ValueError):
        Garch11().fit(r[:100])
    with pytest.raises(DegenerateSeriesError):
        Garch11().fit(np.zeros(1000))
    with pytest.raises(NotFittedError):
        Garch11().transform(r)


def test_garch_iteration_cap_reports_non_convergence():
    r = simulate_garch11(1e-5, 0.1, 0.8, 2000, np.random.default_rng(18))
    fit = Garch11(max_iter=3).fit(r)
    assert not fit.converged_ and np.isfinite(fit.log_likelihood_)
