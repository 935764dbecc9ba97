"""Shared generators for randomized property tests.

Random configurations keep marks bounded away from 0 (so finite-difference
steps never cross the origin) and away from -1 (so stochastic exponentials
stay regular).
"""

from __future__ import annotations

import numpy as np

from lentparticle import JumpConfiguration


def random_config(
    seed: int,
    n_min: int = 2,
    n_max: int = 8,
    horizon: float = 1.0,
    dim: int = 1,
    mag_low: float = 0.05,
    mag_high: float = 0.8,
    drift=None,
) -> JumpConfiguration:
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_min, n_max + 1))
    times = np.sort(rng.uniform(1e-3, horizon, n))
    while np.any(np.diff(times) <= 0.0):
        times = np.sort(rng.uniform(1e-3, horizon, n))
    mags = rng.uniform(mag_low, mag_high, (n, dim))
    signs = np.where(rng.uniform(size=(n, dim)) < 0.5, -1.0, 1.0)
    return JumpConfiguration(
        horizon=horizon,
        times=times,
        marks=mags * signs,
        compensator_drift=drift,
    )


def random_axis_config(
    seed: int,
    n_min: int = 2,
    n_max: int = 8,
    horizon: float = 1.0,
    mag_low: float = 0.05,
    mag_high: float = 0.8,
) -> JumpConfiguration:
    """Two-dimensional marks supported on the coordinate axes."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_min, n_max + 1))
    times = np.sort(rng.uniform(1e-3, horizon, n))
    while np.any(np.diff(times) <= 0.0):
        times = np.sort(rng.uniform(1e-3, horizon, n))
    marks = np.zeros((n, 2))
    axis = rng.integers(0, 2, n)
    mags = rng.uniform(mag_low, mag_high, n)
    signs = np.where(rng.uniform(size=n) < 0.5, -1.0, 1.0)
    marks[np.arange(n), axis] = mags * signs
    return JumpConfiguration(horizon=horizon, times=times, marks=marks)


def rel_gap(a: np.ndarray, b: np.ndarray) -> float:
    """Max-norm discrepancy normalized by 1 + the first argument's scale."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.abs(a - b).max() / (1.0 + np.abs(a).max()))
