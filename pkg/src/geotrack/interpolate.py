"""Cubic Hermite interpolation on uniform grids, batched over trailing axes."""
from __future__ import annotations

import numpy as np

from .errors import ConfigurationError


def check_uniform(times: np.ndarray) -> float:
    """Validate a strictly increasing uniform grid; return its step."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ConfigurationError("time grid must be a 1-D array with >= 2 samples")
    steps = np.diff(times)
    if np.any(steps <= 0):
        raise ConfigurationError("time grid must be strictly increasing")
    dt = float(steps[0])
    if np.max(np.abs(steps - dt)) > 1e-9 * max(1.0, abs(dt)):
        raise ConfigurationError("time grid must be uniform")
    return dt


def hermite(
    t: np.ndarray,
    t0: float,
    dt: float,
    values: np.ndarray,
    slopes: np.ndarray,
) -> np.ndarray:
    """Piecewise-cubic Hermite evaluation on the uniform grid t0 + k dt.

    ``values`` and ``slopes`` have shape (K, ...); the result has shape
    t.shape + values.shape[1:].  Queries are clamped to the grid span.
    """
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    tq = np.atleast_1d(t)
    k = np.clip(np.floor((tq - t0) / dt).astype(int), 0, len(values) - 2)
    s = (tq - t0) / dt - k
    s2 = s * s
    s3 = s2 * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    extra = (1,) * (values.ndim - 1)
    out = (
        h00.reshape(h00.shape + extra) * values[k]
        + (dt * h10).reshape(h10.shape + extra) * slopes[k]
        + h01.reshape(h01.shape + extra) * values[k + 1]
        + (dt * h11).reshape(h11.shape + extra) * slopes[k + 1]
    )
    return out[0] if scalar else out


def centered_slopes(values: np.ndarray, dt: float) -> np.ndarray:
    """Second-order slopes for Hermite nodes (one-sided at the ends)."""
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2.0 * dt)
    out[0] = (values[1] - values[0]) / dt
    out[-1] = (values[-1] - values[-2]) / dt
    return out
