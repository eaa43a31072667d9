"""Statistical window features and per-feature z-normalization.

Each one-second aligned window is split into two 500 ms halves, and each of
the four sensor axes (three accelerometer channels plus the microphone)
contributes six summary statistics per half, for 2 x 4 x 6 = 48 features.
Feature order is half-major, then axis, then statistic, and is pinned by
``FEATURE_ORDER_ID`` so trained models can refuse mismatched extractors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError
from .signals import AlignedWindow, split_low_level

STAT_NAMES = ("max", "min", "mean", "std", "range", "rms")
AXIS_NAMES = ("ax", "ay", "az", "mic")
HALF_NAMES = ("h1", "h2")

FEATURE_DIM = len(HALF_NAMES) * len(AXIS_NAMES) * len(STAT_NAMES)

# Identifies the exact feature layout produced by build_feature_vector.
# Bump the trailing version if the order, the statistics, or the window
# split ever change; stored model files carry this id and are rejected
# when it no longer matches.
FEATURE_ORDER_ID = "half-axis-stat/v1"

ABLATIONS = ("imu+mic", "imu", "mic")


def feature_names() -> list[str]:
    """Names for all 48 features in extraction order, e.g. 'h1.ax.max'."""
    return [
        f"{half}.{axis}.{stat}"
        for half in HALF_NAMES
        for axis in AXIS_NAMES
        for stat in STAT_NAMES
    ]


def axis_features(samples: np.ndarray) -> np.ndarray:
    """Six summary statistics of one axis over one half-window.

    Returns [max, min, mean, population std, range, RMS] as float64.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise InsufficientDataError(
            f"axis_features needs a non-empty 1-D array, got shape {x.shape}"
        )
    x_max = np.max(x)
    x_min = np.min(x)
    return np.array(
        [
            x_max,
            x_min,
            np.mean(x),
            np.std(x),
            x_max - x_min,
            np.sqrt(np.mean(x * x)),
        ],
        dtype=np.float64,
    )


def build_feature_vector(window: AlignedWindow) -> np.ndarray:
    """Extract the 48-dimensional feature vector from one aligned window."""
    first, second = split_low_level(window)
    parts = []
    for imu_half, mic_half in (first, second):
        for axis in range(3):
            parts.append(axis_features(imu_half[axis]))
        parts.append(axis_features(mic_half))
    return np.concatenate(parts)


def ablation_indices(ablation: str) -> np.ndarray:
    """Column indices into the 48-vector kept by a modality ablation.

    'imu+mic' keeps all 48, 'imu' the 36 accelerometer features, 'mic' the
    12 microphone features. Indices are returned in extraction order.
    """
    if ablation not in ABLATIONS:
        raise ValueError(f"unknown ablation {ablation!r}, expected one of {ABLATIONS}")
    keep = []
    i = 0
    for _half in HALF_NAMES:
        for axis in AXIS_NAMES:
            is_mic = axis == "mic"
            wanted = (
                ablation == "imu+mic"
                or (ablation == "imu" and not is_mic)
                or (ablation == "mic" and is_mic)
            )
            if wanted:
                keep.extend(range(i, i + len(STAT_NAMES)))
            i += len(STAT_NAMES)
    return np.array(keep, dtype=np.intp)


def feature_dim(ablation: str) -> int:
    return ablation_indices(ablation).size


@dataclass(frozen=True)
class NormalizationStats:
    """Per-feature mean and standard deviation fitted on training rows."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise ValueError(
                f"mean and std must be matching 1-D arrays, "
                f"got {self.mean.shape} and {self.std.shape}"
            )

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationStats":
        return cls(
            mean=np.asarray(d["mean"], dtype=np.float64),
            std=np.asarray(d["std"], dtype=np.float64),
        )


def fit_normalizer(rows: np.ndarray) -> NormalizationStats:
    """Fit per-column mean and population std on a (n_rows, n_features) matrix.

    Columns with zero variance get std 1.0 so constant features pass through
    unscaled instead of dividing by zero.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise ValueError(f"rows must be 2-D, got shape {rows.shape}")
    if rows.shape[0] < 2:
        raise InsufficientDataError(
            f"normalizer needs at least 2 rows, got {rows.shape[0]}"
        )
    mean = np.mean(rows, axis=0)
    std = np.std(rows, axis=0)
    std = np.where(std == 0.0, 1.0, std)
    return NormalizationStats(mean=mean, std=std)


def apply_normalizer(stats: NormalizationStats, features: np.ndarray) -> np.ndarray:
    """Z-score one feature vector or a matrix of row vectors."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape[-1] != stats.mean.shape[0]:
        raise ValueError(
            f"feature dim {features.shape[-1]} does not match "
            f"normalizer dim {stats.mean.shape[0]}"
        )
    return (features - stats.mean) / stats.std
