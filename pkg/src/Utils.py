import math
from dataclasses import dataclass

import numpy as np
from sklearn.linear_model import LinearRegression

from src.Errors import InvalidArgumentError
from src.Nodes import TWO_PI, wrap_angle


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual_rms: float
    count: int


def fit_loglog(x, y) -> SlopeFit:
    """Ordinary least squares line through (log10 x, log10 y)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape:
        raise InvalidArgumentError("x and y must have the same length")
    if x.size < 3:
        raise InvalidArgumentError(f"a slope fit needs at least 3 samples, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))) or np.any(x <= 0) or np.any(y <= 0):
        raise InvalidArgumentError("slope fits need finite positive data")
    log_x = np.log10(x).reshape(-1, 1)
    log_y = np.log10(y)
    model = LinearRegression().fit(log_x, log_y)
    residual = log_y - model.predict(log_x)
    return SlopeFit(slope=float(model.coef_[0]), intercept=float(model.intercept_),
                    residual_rms=float(np.sqrt(np.mean(residual ** 2))), count=int(x.size))


def fit_slope(records, x_field, y_field, filter=None) -> SlopeFit:
    """Slope of y_field against x_field over records, fields may be attribute names or callables."""
    def value(record, key):
        return key(record) if callable(key) else getattr(record, key)

    selected = [r for r in records if filter is None or filter(r)]
    x = [value(r, x_field) for r in selected]
    y = [value(r, y_field) for r in selected]
    if any(v is None for v in x + y):
        raise InvalidArgumentError(f"records lack values for '{x_field}' or '{y_field}'")
    return fit_loglog(x, y)


def log_uniform(rng, low, high):
    if not 0 < low <= high:
        raise InvalidArgumentError(f"log-uniform range needs 0 < low <= high, got [{low}, {high}]")
    if low == high:
        return float(low)
    return float(10 ** rng.uniform(math.log10(low), math.log10(high)))


def log_grid(low, high, count):
    if count == 1:
        return [float(low)]
    return [float(v) for v in np.logspace(math.log10(low), math.log10(high), count)]


def evenly_spaced_centers(count, offset=0.0):
    """Cluster centres spread uniformly on the circle, the first one at ``offset``."""
    centers = offset + TWO_PI * np.arange(count) / count
    return [float(wrap_angle(c)) for c in centers]
