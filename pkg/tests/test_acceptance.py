"""Acceptance suite at desk scale: 10 trials x 50,000 steps, N=1000, M=5, S=2, B=9, C=3.

The baseline trials are produced by the step auditor, so the accounting check
and the stylized-fact checks share one simulation. Each test prints its
measured values (visible with ``-s``); the terminal summary lists one
PASS/FAIL line per criterion.
"""
from pathlib import Path

import numpy as np
import pytest

from _audit import Violations, audited_run
from speculation_game import harness, io, stats
from speculation_game.cli import main
from speculation_game.config import ExperimentSpec
from speculation_game.engine import GameConfig, MarketEngine, run_trial
from speculation_game.fitting import Garch11, PowerLawTail, simulate_garch11

BASELINE = ExperimentSpec(game=GameConfig(seed=0))


@pytest.fixture(scope="module")
def baseline():
    violations = Violations()
    trials = [audited_run(BASELINE.game, k, violations)[0] for k in range(BASELINE.trials)]
    analysis, report = harness.analyze(trials, BASELINE)
    return trials, violations, analysis, report


def show(n, **values):
    print(f"\ncriterion {n}: " + ", ".join(f"{k}={v}" for k, v in values.items()))


@pytest.mark.criterion(1)
def test_engine_exactness(baseline):
    _, violations, _, _ = baseline
    for k in range(BASELINE.trials, 2 * BASELINE.trials):
        audited_run(BASELINE.game, k, violations)
    show(1, steps=violations.steps, violations=violations.counts)
    assert violations.steps >= 10 ** 6
    assert violations.total == 0, violations.counts


@pytest.mark.criterion(2)
def test_hand_simulated_oracle():
    cfg = GameConfig(n_players=3, memory=1, n_strategies=1, board_lot=10,
                     cognitive_threshold=0.5, initial_price=100.0, steps=5)
    tables = np.array([[[1, -1, 0, 1, -1]], [[0, 1, -1, -1, 1]], [[-1, 0, 1, 1, -1]]])
    for backend in ("numpy", "numba"):
        eng = MarketEngine.from_tables(cfg, tables, [25, 10, 30], (0,))
        res = eng.run(backend=backend)
        assert list(res.excess_demand) == [2, -4, 0, 1, 4]
        assert list(res.quantized_move) == [2, -2, 0, 1, 2]
        assert list(res.cognitive_price) == [0, 2, 0, 0, 1, 3]
        assert list(res.price_change * 3) == [2, -4, 0, 1, 4]
        assert list(res.n_buyers) == [1, 1, 1, 1, 2]
        assert list(res.n_sellers) == [1, 2, 1, 1, 0]
        assert list(eng.wealth) == [25, 12, 22]
        assert list(eng.gains[:, 0]) == [0, 2, -3]


@pytest.mark.criterion(3)
def test_determinism(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("steps = 10000\ntrials = 2\nseed = 7\n"
                   "analyses = acf, tails, volume, garch, leadlag, leverage, inverse\n")
    for name in ("a", "b"):
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
    for k in range(2):
        for path in (io.trial_path, io.replacement_path):
            a = Path(path(tmp_path / "a", k)).read_bytes()
            assert a == Path(path(tmp_path / "b", k)).read_bytes()
    show(3, identical_files=4)


@pytest.mark.criterion(4)
def test_heavy_tails(baseline):
    m = baseline[3]["heavy tails"].measured
    show(4, alpha=m["alpha"], xmin=m["xmin"], n_tail=m["n_tail"], lr=m["vuong_lr"], p=m["vuong_p"])
    assert 2 <= m["alpha"] <= 5
    assert abs(m["alpha"] - 3.87) <= 0.5
    assert m["vuong_lr"] > 0 and m["vuong_p"] < 0.1


@pytest.mark.criterion(5)
def test_no_return_autocorrelation(baseline):
    m = baseline[3]["absence of autocorrelation in returns"].measured
    show(5, fraction_inside=m["fraction_inside"], entry_lag=m["entry_lag"], band=m["band"])
    assert m["fraction_inside"] >= 0.9
    assert m["entry_lag"] is not None and abs(m["entry_lag"] - 14) <= 10


@pytest.mark.criterion(6)
def test_slow_volatility_decay(baseline):
    m = baseline[3]["slow decay of autocorrelation in volatilities"].measured
    show(6, rate=m["rate"], amplitude=m["amplitude"], fraction_positive=m["fraction_positive"])
    assert 3e-3 <= m["rate"] <= 1.2e-2
    assert m["max_lag"] >= 1000 and m["fraction_positive"] >= 0.9


@pytest.mark.criterion(7)
def test_volume_volatility_correlation(baseline):
    corr = baseline[2]["volume_volatility"]
    show(7, correlations=corr)
    assert corr[5] >= 0.6
    assert corr[5] <= corr[10] <= corr[20]


@pytest.mark.criterion(8)
def test_aggregational_gaussianity(baseline):
    k = baseline[2]["kurtosis"]
    at = dict(zip(k.scales.tolist(), k.kurtoses.tolist()))
    show(8, kurtosis=at)
    assert at[1280] < at[80] < at[20]


@pytest.mark.criterion(9)
def test_conditional_heavy_tails(baseline):
    m = baseline[3]["conditional heavy tails"].measured
    show(9, raw=m["raw_kurtosis"], residual=m["residual_kurtosis"])
    assert 0 < m["residual_kurtosis"] < m["raw_kurtosis"]


@pytest.mark.criterion(10)
def test_time_scale_asymmetry(baseline):
    ll = baseline[2]["leadlag"]
    asym = ll.asymmetry
    show(10, asymmetry_1_3=asym[:3].tolist(), band=ll.band_halfwidth)
    assert np.all(asym[:3] < 0)
    assert asym[0] < -ll.band_halfwidth


@pytest.mark.criterion(11)
def test_leverage_effect(baseline):
    lev = baseline[2]["leverage"]
    pos = (lev.lags >= 1) & (lev.lags <= 10)
    neg = (lev.lags >= -50) & (lev.lags <= -10)
    low = lev.values[pos].min()
    spread = np.abs(lev.values[neg]).mean()
    show(11, min_L=low, min_lag=int(lev.lags[pos][np.argmin(lev.values[pos])]),
         mean_abs_negative=spread, ratio=spread / abs(low))
    assert low <= -5
    assert spread < 0.25 * abs(low)


@pytest.mark.criterion(12)
def test_gain_loss_symmetry(baseline):
    ks = baseline[2]["horizon_ks"]
    show(12, **ks)
    assert ks["statistic"] < ks["critical_value"]


@pytest.mark.criterion(13)
def test_buyer_seller_balance(baseline):
    trials = baseline[0]
    buyers = np.mean([t.n_buyers.mean() for t in trials])
    sellers = np.mean([t.n_sellers.mean() for t in trials])
    total = buyers + sellers
    n = BASELINE.game.n_players
    show(13, mean_buyers=buyers, mean_sellers=sellers, mean_total=total)
    assert abs(buyers - sellers) <= 0.1 * total
    assert n / 4 <= total <= 2 * n / 3


@pytest.mark.criterion(14)
def test_extreme_state_at_unit_board_lot(baseline):
    base = np.abs(baseline[0][0].price_change).max()
    extreme = run_trial(BASELINE.game.replace(board_lot=1), 0)
    big = np.abs(extreme.price_change).max()
    show(14, baseline_max=base, b1_max=big, ratio=big / base, min_price=extreme.price.min())
    assert extreme.price_change.size == 50_000
    assert big >= 10 * base


@pytest.mark.criterion(15)
def test_fitting_oracles():
    u = np.random.default_rng(0).random(100_000)
    alpha = PowerLawTail().fit((1 - u) ** (-1 / 2.5)).alpha_
    r = simulate_garch11(1e-5, 0.1, 0.85, 50_000, np.random.default_rng(1))
    g = Garch11().fit(r)
    lags = np.arange(0, 101)
    acf = stats.AcfCurve(lags, 0.2853 * np.exp(-0.006 * lags), 0.0)
    amp, rate = stats.fit_exponential_decay(acf, (1, 100))
    show(15, alpha=alpha, a1=g.a1_, b1=g.b1_, amplitude=amp, rate=rate)
    assert abs(alpha - 3.5) <= 0.1
    assert abs(g.a1_ - 0.1) <= 0.05 and abs(g.b1_ - 0.85) <= 0.05
    assert abs(amp - 0.2853) <= 1e-9 and abs(rate - 0.006) <= 1e-9
