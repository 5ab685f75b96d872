"""Input validation helpers shared by the statistics and fitting code."""
import numpy as np
from sklearn.utils.validation import check_array


class DegenerateSeriesError(ValueError):
    """Raised when a statistic is undefined for the given data (e.g. zero variance)."""


def check_series(x, name="series", min_length=1, allow_empty=False):
    """Return ``x`` as a finite 1-d float64 array.

    Raises ``ValueError`` for non-finite values, wrong dimensionality, or too
    few observations.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2 and 1 in x.shape:
        x = x.ravel()
    if x.size == 0:
        if allow_empty:
            return x
        raise ValueError(f"{name} is empty")
    x = check_array(x.reshape(-1, 1), dtype=np.float64, ensure_min_samples=1,
                    input_name=name).ravel()
    if x.size < min_length:
        raise ValueError(f"{name} needs at least {min_length} observations, got {x.size}")
    return x


def check_positive_samples(x, name="samples", min_length=1):
    x = check_series(x, name=name, min_length=min_length)
    if np.any(x <= 0):
        raise ValueError(f"{name} must be strictly positive")
    return x


def check_nonconstant(x, name="series"):
    """Raise ``DegenerateSeriesError`` if ``x`` has zero variance."""
    if x.size == 0 or np.ptp(x) == 0:
        raise DegenerateSeriesError(f"{name} has zero variance")
    return x


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or int(value) != value:
        raise TypeError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value
