"""Performance evaluators: correlation coefficient, RMSE, absolute error mean,
and wall-clock timing.

All statistics use population (divide-by-n) forms and are meant to be fed
raw, denormalized sand fraction.
"""
import time

import numpy as np

from .errors import DataError, DegenerateError


def _paired(target, predicted):
    target = np.asarray(target, dtype=float).ravel()
    predicted = np.asarray(predicted, dtype=float).ravel()
    if target.shape != predicted.shape:
        raise DataError(f"length mismatch: {target.size} vs {predicted.size}")
    if target.size == 0:
        raise DataError("empty series")
    if not (np.all(np.isfinite(target)) and np.all(np.isfinite(predicted))):
        raise DataError("non-finite values in paired series")
    return target, predicted


def cc(target, predicted):
    """Pearson correlation coefficient of two equal-length series."""
    target, predicted = _paired(target, predicted)
    dt = target - target.mean()
    dp = predicted - predicted.mean()
    st = np.sqrt(np.mean(dt * dt))
    sp = np.sqrt(np.mean(dp * dp))
    if st == 0.0 or sp == 0.0:
        raise DegenerateError("correlation undefined for a zero-variance series")
    r = np.mean(dt * dp) / (st * sp)
    return float(np.clip(r, -1.0, 1.0))


def rmse(target, predicted):
    target, predicted = _paired(target, predicted)
    d = target - predicted
    return float(np.sqrt(np.mean(d * d)))


def aem(target, predicted):
    """Absolute error mean, ``mean(|target - predicted|)``."""
    target, predicted = _paired(target, predicted)
    return float(np.mean(np.abs(target - predicted)))


def evaluate(target, predicted):
    """Return ``(cc, rmse, aem)`` for one paired series."""
    return cc(target, predicted), rmse(target, predicted), aem(target, predicted)


def timed(func, *args, **kwargs):
    """Call ``func`` and return ``(result, wall_time_seconds)``."""
    start = time.perf_counter()
    result = func(*args, **kwargs)
    return result, time.perf_counter() - start
