"""CSV and JSON persistence for trials, curves and reports.

Floats in CSV files are written with 17 significant digits, which is enough
for an exact round trip of IEEE doubles.
"""
from __future__ import annotations

import json
import os
import warnings

import numpy as np

from .config import load_spec, serialize_spec
from .engine import TrialResult
from .report import StylizedFactReport

TRIAL_COLUMNS = ("t", "p", "dp", "h", "P", "D", "q_buy", "q_sell", "n_buyers", "n_sellers",
                 "n_replaced")
FLOAT_COLUMNS = {"p", "dp"}
FLOAT_FMT = "%.17g"
SPEC_FILE = "experiment.cfg"
REPORT_FILE = "report.json"


def trial_path(directory, k):
    return os.path.join(directory, f"trial_{k:04d}.csv")


def replacement_path(directory, k):
    return os.path.join(directory, f"trial_{k:04d}_replacements.csv")


def _wrap(action, path, func):
    try:
        return func()
    except OSError as err:
        raise OSError(f"cannot {action} {path}: {err.strerror or err}") from err


def write_trial_csv(path, trial):
    cols = trial.columns()
    fmt = [FLOAT_FMT if c in FLOAT_COLUMNS else "%d" for c in TRIAL_COLUMNS]
    data = np.column_stack([np.asarray(cols[c], dtype=float) for c in TRIAL_COLUMNS])
    _wrap("write", path, lambda: np.savetxt(path, data, fmt=fmt, delimiter=",",
                                            header=",".join(TRIAL_COLUMNS), comments=""))


def read_trial_csv(path, replacements_path=None):
    def load():
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            if tuple(header) != TRIAL_COLUMNS:
                raise ValueError(f"{path}: unexpected header {header}")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        return data

    data = _wrap("read", path, load)
    cols = {c: data[:, k] for k, c in enumerate(TRIAL_COLUMNS)}
    repl = None
    if replacements_path is not None and os.path.exists(replacements_path):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)  # empty log
            repl = _wrap("read", replacements_path,
                         lambda: np.loadtxt(replacements_path, dtype=np.int64, delimiter=",",
                                            skiprows=1, ndmin=2))
    return TrialResult.from_columns(cols, repl)


def write_replacements(path, trial):
    _wrap("write", path, lambda: np.savetxt(path, trial.replacements.reshape(-1, 2), fmt="%d",
                                            delimiter=",", header="t,player", comments=""))


def write_curve(path, x, y, band=None):
    """Write ``x,y[,band]`` rows; a scalar band is repeated on every row."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    cols, header = [x, y], "x,y"
    if band is not None:
        cols.append(np.broadcast_to(np.asarray(band, dtype=float), x.shape))
        header += ",band"
    _wrap("write", path, lambda: np.savetxt(path, np.column_stack(cols), fmt=FLOAT_FMT,
                                            delimiter=",", header=header, comments=""))


def read_curve(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return {name: data[:, k] for k, name in enumerate(header)}


def write_report(path, report):
    def dump():
        with open(path, "w") as fh:
            fh.write(report.to_json())

    _wrap("write", path, dump)


def read_report(path):
    def load():
        with open(path) as fh:
            return json.load(fh)

    return StylizedFactReport.from_dict(_wrap("read", path, load))


def write_spec(path, spec):
    def dump():
        with open(path, "w") as fh:
            fh.write(serialize_spec(spec))

    _wrap("write", path, dump)


def read_trials(directory):
    """Load every ``trial_NNNN.csv`` of ``directory`` in index order."""
    names = sorted(f for f in os.listdir(directory)
                   if f.startswith("trial_") and f.endswith(".csv") and "_replacements" not in f)
    if not names:
        raise FileNotFoundError(f"no trial CSV files in {directory}")
    out = []
    for name in names:
        k = int(name[len("trial_"):-len(".csv")])
        out.append(read_trial_csv(os.path.join(directory, name), replacement_path(directory, k)))
    return out


def read_spec(directory):
    return load_spec(os.path.join(directory, SPEC_FILE))
