"""Pass/fail summary of the eleven stylized facts.

Every entry stores the measured values next to the thresholds that produced
its verdict, so a change of threshold is visible in the report itself.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats as sps

PASS, FAIL, NA = "pass", "fail", "not-applicable"

FACTS = (
    "volatility clustering",
    "intermittency",
    "heavy tails",
    "absence of autocorrelation in returns",
    "slow decay of autocorrelation in volatilities",
    "volume/volatility correlation",
    "aggregational gaussianity",
    "conditional heavy tails",
    "asymmetry in time scales",
    "leverage effect",
    "gain/loss asymmetry",
)

# Rate of |z| > 5 for a standard normal variable.
GAUSSIAN_EXCEED5 = float(2 * sps.norm.sf(5.0))

THRESHOLDS = {
    "volatility clustering": {"level": 2.0, "min_ratio": 2.0},
    "intermittency": {"level": 5.0, "min_ratio_to_gaussian": 10.0},
    "heavy tails": {"alpha_range": [2.0, 5.0], "vuong_significance": 0.1},
    "absence of autocorrelation in returns": {"lag_range": [20, 100], "min_fraction_inside": 0.9,
                                              "entry_lag_range": [4, 24]},
    "slow decay of autocorrelation in volatilities": {"rate_range": [3e-3, 1.2e-2],
                                                      "fit_max_lag": 100,
                                                      "positive_max_lag": 1000,
                                                      "min_fraction_positive": 0.9},
    "volume/volatility correlation": {"min_corr_at_5": 0.6, "trend_scales": [5, 10, 20]},
    "aggregational gaussianity": {"scales": [20, 80, 1280]},
    "conditional heavy tails": {"residual_range": "(0, raw)"},
    "asymmetry in time scales": {"negative_lags": [1, 2, 3], "outside_band_lag": 1},
    "leverage effect": {"min_lag_range": [1, 10], "max_min_value": -5.0,
                        "negative_lag_range": [-50, -10], "max_ratio": 0.25},
    "gain/loss asymmetry": {"alpha": 0.05, "expected": "absent"},
}


@dataclass
class FactEntry:
    name: str
    verdict: str
    measured: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    note: str = ""


@dataclass
class StylizedFactReport:
    facts: list
    diagnostics: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name):
        for f in self.facts:
            if f.name == name:
                return f
        raise KeyError(name)

    def verdicts(self):
        return {f.name: f.verdict for f in self.facts}

    def to_dict(self):
        return _plain({"facts": [asdict(f) for f in self.facts],
                       "diagnostics": self.diagnostics, "meta": self.meta})

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, data):
        return cls([FactEntry(**f) for f in data["facts"]], data.get("diagnostics", {}),
                   data.get("meta", {}))


def _plain(obj):
    """Turn numpy scalars/arrays into JSON types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _verdict(ok):
    return PASS if ok else FAIL


def _at(lags, values, lag):
    return float(values[np.flatnonzero(lags == lag)[0]])


def _clustering(a):
    th = THRESHOLDS["volatility clustering"]
    ratio = a["clustering"]
    return _verdict(ratio >= th["min_ratio"]), {"exceedance_ratio": ratio}


def _intermittency(a):
    th = THRESHOLDS["intermittency"]
    rate = a["exceed5"]
    ratio = rate / GAUSSIAN_EXCEED5
    return _verdict(ratio >= th["min_ratio_to_gaussian"]), {
        "exceed_rate": rate, "gaussian_rate": GAUSSIAN_EXCEED5, "ratio_to_gaussian": ratio,
        "unit_excess_kurtosis": a["unit_kurtosis"]}


def _heavy_tails(a):
    lo, hi = THRESHOLDS["heavy tails"]["alpha_range"]
    pl, v = a["powerlaw"], a["vuong"]
    ok = lo <= pl.alpha_ <= hi and v.lr > 0 and v.p_value < THRESHOLDS["heavy tails"]["vuong_significance"]
    return _verdict(ok), {"alpha": pl.alpha_, "xmin": pl.xmin_, "n_tail": pl.n_tail_,
                          "n_positive": pl.n_samples_, "ks_distance": pl.ks_distance_,
                          "exponential_rate": a["exponential"].rate_, "vuong_lr": v.lr,
                          "vuong_p": v.p_value, "favored": v.favored}


def entry_lag(acf):
    """First lag ``>= 1`` whose correlation lies inside the band (``None`` if never)."""
    inside = np.flatnonzero((acf.lags >= 1) & (np.abs(acf.correlations) <= acf.band_halfwidth))
    return int(acf.lags[inside[0]]) if inside.size else None


def _no_return_acf(a):
    th = THRESHOLDS["absence of autocorrelation in returns"]
    acf = a["acf_returns"]
    lo, hi = th["lag_range"]
    sel = (acf.lags >= lo) & (acf.lags <= hi)
    if not sel.any():
        return NA, {}
    frac = float(np.mean(np.abs(acf.correlations[sel]) <= acf.band_halfwidth))
    lag = entry_lag(acf)
    elo, ehi = th["entry_lag_range"]
    ok = frac >= th["min_fraction_inside"] and lag is not None and elo <= lag <= ehi
    return _verdict(ok), {"fraction_inside": frac, "entry_lag": lag, "band": acf.band_halfwidth}


def _slow_decay(a):
    th = THRESHOLDS["slow decay of autocorrelation in volatilities"]
    acf = a["acf_volatility"]
    amp, rate = a["volatility_decay"]
    sel = (acf.lags >= 1) & (acf.lags <= th["positive_max_lag"])
    frac = float(np.mean(acf.correlations[sel] > 0))
    lo, hi = th["rate_range"]
    ok = bool(np.isfinite(rate)) and lo <= rate <= hi and frac >= th["min_fraction_positive"]
    return _verdict(ok), {"amplitude": amp, "rate": rate, "fraction_positive": frac,
                          "max_lag": int(acf.lags[-1])}


def _volume(a):
    th = THRESHOLDS["volume/volatility correlation"]
    corr = a["volume_volatility"]
    scales = th["trend_scales"]
    if not all(s in corr for s in scales):
        return NA, {"correlations": corr}
    series = [corr[s] for s in scales]
    ok = series[0] >= th["min_corr_at_5"] and all(x <= y for x, y in zip(series, series[1:]))
    return _verdict(ok), {"correlations": {str(k): v for k, v in corr.items()}}


def _aggregational(a):
    k = a["kurtosis"]
    scales = THRESHOLDS["aggregational gaussianity"]["scales"]
    measured = {"scales": k.scales, "kurtoses": k.kurtoses}
    if not all(s in k.scales for s in scales):
        return NA, measured
    k20, k80, k1280 = (_at(k.scales, k.kurtoses, s) for s in scales)
    return _verdict(k1280 < k80 < k20), measured


def _conditional(a):
    raw, resid = a["garch_raw_kurtosis"], a["garch_residual_kurtosis"]
    fits = a["garch_fits"]
    return _verdict(0 < resid < raw), {
        "raw_kurtosis": raw, "residual_kurtosis": resid,
        "a0": [f.a0_ for f in fits], "a1": [f.a1_ for f in fits], "b1": [f.b1_ for f in fits],
        "converged": [f.converged_ for f in fits]}


def _time_scales(a):
    ll = a["leadlag"]
    asym = ll.asymmetry  # index k holds tau = k + 1
    neg = THRESHOLDS["asymmetry in time scales"]["negative_lags"]
    ok = all(asym[t - 1] < 0 for t in neg) and asym[0] < -ll.band_halfwidth
    return _verdict(ok), {"asymmetry": asym, "band": ll.band_halfwidth,
                          "rho_cf": ll.rho_cf, "sampling": list(ll.sampling)}


def _leverage(a):
    th = THRESHOLDS["leverage effect"]
    lev = a["leverage"]
    lo, hi = th["min_lag_range"]
    pos = (lev.lags >= lo) & (lev.lags <= hi)
    nlo, nhi = th["negative_lag_range"]
    neg = (lev.lags >= nlo) & (lev.lags <= nhi)
    if not pos.any() or not neg.any():
        return NA, {}
    low = float(lev.values[pos].min())
    at = int(lev.lags[pos][np.argmin(lev.values[pos])])
    spread = float(np.mean(np.abs(lev.values[neg])))
    ok = low <= th["max_min_value"] and spread < th["max_ratio"] * abs(low)
    return _verdict(ok), {"min_value": low, "min_lag": at, "mean_abs_negative_lags": spread,
                          "ratio": spread / abs(low) if low else None}


def _gain_loss(a):
    ks = a["horizon_ks"]
    symmetric = ks["statistic"] < ks["critical_value"]
    measured = dict(ks)
    measured["asymmetry_detected"] = not symmetric
    measured["censored_gain"] = a["horizon_gain"].censored_count
    measured["censored_loss"] = a["horizon_loss"].censored_count
    return _verdict(symmetric), measured


_RULES = {
    "volatility clustering": ((), _clustering),
    "intermittency": ((), _intermittency),
    "heavy tails": (("tails",), _heavy_tails),
    "absence of autocorrelation in returns": (("acf",), _no_return_acf),
    "slow decay of autocorrelation in volatilities": (("acf",), _slow_decay),
    "volume/volatility correlation": (("volume",), _volume),
    "aggregational gaussianity": (("kurtosis",), _aggregational),
    "conditional heavy tails": (("garch",), _conditional),
    "asymmetry in time scales": (("leadlag",), _time_scales),
    "leverage effect": (("leverage",), _leverage),
    "gain/loss asymmetry": (("inverse",), _gain_loss),
}

_NOTES = {
    "gain/loss asymmetry": "expected absent: the model has symmetric up/down dynamics; "
                           "pass means no significant difference between gain and loss horizons",
}


def build_report(analysis, spec):
    """Assemble the eleven-fact report from an :class:`Analysis`."""
    facts = []
    for name in FACTS:
        needs, rule = _RULES[name]
        if all(spec.enabled(n) for n in needs):
            verdict, measured = rule(analysis)
        else:
            verdict, measured = NA, {}
        facts.append(FactEntry(name, verdict, measured, THRESHOLDS[name], _NOTES.get(name, "")))
    diagnostics = {}
    if "orders" in analysis:
        o = dict(analysis["orders"])
        n = spec.game.n_players
        o["balance_ok"] = abs(o["mean_buyers"] - o["mean_sellers"]) <= 0.1 * o["mean_total"]
        o["total_range"] = [n / 4, 2 * n / 3]
        o["total_ok"] = n / 4 <= o["mean_total"] <= 2 * n / 3
        diagnostics["orders"] = o
    meta = {"trials": spec.trials, "steps": spec.game.steps, "seed": spec.game.seed,
            "n_players": spec.game.n_players, "memory": spec.game.memory,
            "n_strategies": spec.game.n_strategies, "board_lot": spec.game.board_lot,
            "cognitive_threshold": spec.game.cognitive_threshold,
            "analyses": list(spec.analyses)}
    return StylizedFactReport(facts, _plain(diagnostics), meta)
