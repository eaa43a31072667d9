"""Shared builders and hand-rolled oracles used across the test suite."""

import math

import numpy as np

from bitetiming.signals import AlignedWindow


def make_window(rng, end_t=1.0, scale=1.0):
    """Random aligned window with well-spread channel values."""
    return AlignedWindow(
        window_end_t=end_t,
        imu_accel=rng.normal(0.0, scale, (3, 200)),
        mic=rng.uniform(-1.0, 1.0, 100),
    )


def brute_force_stats(samples):
    """The six window statistics computed with Python builtins only.

    Deliberately avoids numpy reductions so it cannot share a code path with
    the package implementation: max/min/range through builtin min/max, mean
    and population std through explicit sums, RMS through math.sqrt.
    """
    xs = [float(v) for v in samples]
    n = len(xs)
    x_max = max(xs)
    x_min = min(xs)
    mean = sum(xs) / n
    var = sum((v - mean) ** 2 for v in xs) / n
    rms = math.sqrt(sum(v * v for v in xs) / n)
    return [x_max, x_min, mean, math.sqrt(var), x_max - x_min, rms]


def brute_force_features(window):
    """All 48 features in half-major, axis, stat order, written from scratch."""
    out = []
    for imu_cols, mic_cols in ((slice(0, 100), slice(0, 50)), (slice(100, 200), slice(50, 100))):
        for axis in range(3):
            out.extend(brute_force_stats(window.imu_accel[axis, imu_cols]))
        out.extend(brute_force_stats(window.mic[mic_cols]))
    return np.array(out)
