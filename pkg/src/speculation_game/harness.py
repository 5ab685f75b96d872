"""Experiment orchestration: run trials, analyse them, write the results."""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from scipy import stats as sps

from . import io
from .analysis import analyze_trials
from .engine import run_trial
from .report import build_report


class TrialError(RuntimeError):
    def __init__(self, trial, err):
        super().__init__(f"trial {trial}: {type(err).__name__}: {err}")
        self.trial = trial


@dataclass
class ExperimentResult:
    spec: object
    trials: list
    analysis: object
    report: object


def _run_one(config, k):
    try:
        return run_trial(config, k)
    except Exception as err:  # re-raised with the trial index attached
        raise TrialError(k, err) from err


def run_trials(spec):
    """Simulate ``spec.trials`` trials; trial ``k`` uses substream ``(seed, k)``."""
    if spec.workers == 1:
        return [_run_one(spec.game, k) for k in range(spec.trials)]
    return Parallel(n_jobs=spec.workers)(delayed(_run_one)(spec.game, k)
                                         for k in range(spec.trials))


def analyze(trials, spec):
    try:
        analysis = analyze_trials(trials, spec)
    except Exception as err:
        raise RuntimeError(f"analysis failed: {type(err).__name__}: {err}") from err
    return analysis, build_report(analysis, spec)


def run_experiment(spec):
    trials = run_trials(spec)
    analysis, report = analyze(trials, spec)
    return ExperimentResult(spec, trials, analysis, report)


# ---------------------------------------------------------------------------
# curves

def thin_ccdf(x, y, points=2000):
    """Keep at most ``points`` CCDF points, spaced geometrically in rank from the tail."""
    n = x.size
    if n <= points:
        return x, y
    from_end = np.unique(np.geomspace(1, n, points).astype(int))
    idx = (n - from_end)[::-1]
    return x[idx], y[idx]


def gaussian_density(x):
    return sps.norm.pdf(x)


def curves(analysis, trials):
    """Plottable curves keyed by file stem: ``(x, y, band or None)``."""
    a = analysis
    out = {}
    r0 = a.returns[0]
    out["returns"] = (np.arange(1, r0.size + 1), r0, None)
    x, y = a["return_density"]
    out["return_density"] = (x, y, None)
    out["gaussian_density"] = (x, gaussian_density(x), None)
    out["price"] = (np.arange(trials[0].price.size), trials[0].price, None)
    out["price_change"] = (np.arange(1, trials[0].steps + 1), trials[0].price_change, None)
    out["buyers"] = (np.arange(1, trials[0].steps + 1), trials[0].n_buyers, None)
    out["sellers"] = (np.arange(1, trials[0].steps + 1), trials[0].n_sellers, None)
    if "powerlaw" in a:
        out["tail_positive"] = (*thin_ccdf(*a["tail_positive"]), None)
        out["tail_negative"] = (*thin_ccdf(*a["tail_negative"]), None)
        pl, ex = a["powerlaw"], a["exponential"]
        tx, ty = thin_ccdf(*a["tail_positive"])
        keep = tx >= pl.xmin_
        share = pl.n_tail_ / pl.n_samples_
        out["powerlaw_fit"] = (tx[keep], share * pl.ccdf(tx[keep]), None)
        out["exponential_fit"] = (tx[keep], share * ex.ccdf(tx[keep]), None)
    if "acf_returns" in a:
        for name in ("acf_returns", "acf_volatility"):
            c = a[name]
            out[name] = (c.lags, c.correlations, c.band_halfwidth)
        amp, rate = a["volatility_decay"]
        lags = np.arange(0, 101)
        out["volatility_decay_fit"] = (lags, amp * np.exp(-rate * lags), None)
    if "volume_volatility" in a:
        corr = a["volume_volatility"]
        out["volume_volatility_corr"] = (np.array(list(corr)), np.array(list(corr.values())), None)
        if "volume_scatter" in a:
            out["volume_volatility_scatter"] = (*a["volume_scatter"], None)
    if "kurtosis" in a:
        k = a["kurtosis"]
        out["kurtosis"] = (k.scales, k.kurtoses, None)
    if "garch_fits" in a:
        out["garch_residual_density"] = (*a["garch_residual_density"], None)
    if "leadlag" in a:
        ll = a["leadlag"]
        out["leadlag_rho"] = (ll.lags, ll.rho_cf, ll.band_halfwidth)
        out["leadlag_asymmetry"] = (np.arange(1, ll.asymmetry.size + 1), ll.asymmetry,
                                    ll.band_halfwidth)
    if "leverage" in a:
        lev = a["leverage"]
        out["leverage"] = (lev.lags, lev.values, None)
    if "horizon_gain" in a:
        for name in ("horizon_gain", "horizon_loss"):
            d = a[name]
            out[name] = (d.horizons, d.probabilities, None)
    return out


def write_curves(directory, curve_map, names=None):
    os.makedirs(directory, exist_ok=True)
    for name, (x, y, band) in curve_map.items():
        if names is None or name in names:
            io.write_curve(os.path.join(directory, f"{name}.csv"), x, y, band)


def write_trials(directory, trials):
    os.makedirs(directory, exist_ok=True)
    for k, t in enumerate(trials):
        io.write_trial_csv(io.trial_path(directory, k), t)
        io.write_replacements(io.replacement_path(directory, k), t)


def write_outputs(result, directory):
    """Trial CSVs, replacement logs, curve CSVs, report and the spec used."""
    os.makedirs(directory, exist_ok=True)
    io.write_spec(os.path.join(directory, io.SPEC_FILE), result.spec)
    write_trials(directory, result.trials)
    write_curves(os.path.join(directory, "curves"), curves(result.analysis, result.trials))
    io.write_report(os.path.join(directory, io.REPORT_FILE), result.report)


def analyze_directory(directory, report_path):
    """Re-run the analyses on the trial CSVs in ``directory``.

    Curves are written to ``curves/`` next to ``report_path``.
    """
    spec = io.read_spec(directory)
    trials = io.read_trials(directory)
    spec = spec.replace(trials=len(trials))
    analysis, report = analyze(trials, spec)
    parent = os.path.dirname(os.path.abspath(report_path))
    os.makedirs(parent, exist_ok=True)
    io.write_report(report_path, report)
    write_curves(os.path.join(parent, "curves"), curves(analysis, trials))
    return report


# ---------------------------------------------------------------------------
# figures

# figure -> (analyses, overrides, curve names)
FIGURES = {
    2: ((), {"trials": 1}, ("returns",)),
    3: ((), {}, ("return_density", "gaussian_density")),
    4: (("tails",), {}, ("tail_positive", "tail_negative")),
    5: (("tails",), {}, ("tail_positive", "powerlaw_fit", "exponential_fit")),
    6: (("acf",), {}, ("acf_returns", "acf_volatility")),
    7: (("acf",), {}, ("acf_volatility", "volatility_decay_fit")),
    8: (("volume",), {}, ("volume_volatility_scatter", "volume_volatility_corr")),
    9: (("kurtosis",), {}, ("kurtosis",)),
    10: (("garch",), {}, ("garch_residual_density", "gaussian_density", "return_density")),
    11: (("leadlag",), {}, ("leadlag_rho", "leadlag_asymmetry")),
    12: (("leverage",), {}, ("leverage",)),
    13: (("inverse",), {}, ("horizon_gain", "horizon_loss")),
    14: (("orders",), {"trials": 1}, ("buyers", "sellers")),
    15: ((), {"trials": 1, "board_lot": 1}, ("price_change", "price")),
}


def figure_spec(figure, spec):
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure}; choose from {min(FIGURES)}..{max(FIGURES)}")
    analyses, overrides, _ = FIGURES[figure]
    return spec.replace(analyses=analyses, **overrides)


def reproduce(figure, spec, directory):
    """Run the smallest experiment behind ``figure`` and write its curve files."""
    fspec = figure_spec(figure, spec)
    result = run_experiment(fspec)
    os.makedirs(directory, exist_ok=True)
    io.write_spec(os.path.join(directory, io.SPEC_FILE), fspec)
    write_curves(directory, curves(result.analysis, result.trials), FIGURES[figure][2])
    io.write_report(os.path.join(directory, io.REPORT_FILE), result.report)
    return result
