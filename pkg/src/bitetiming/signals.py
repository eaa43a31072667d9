"""Uniform resampling of irregular sensor tracks and aligned window slicing.

Raw wearable tracks arrive with irregular timestamps. Everything downstream
works on fixed-rate grids: accelerometer channels at 200 Hz and the throat
microphone at 100 Hz, sliced into one-second windows that end on a shared
2 Hz cadence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CoverageError, InsufficientDataError

IMU_RATE_HZ = 200.0
MIC_RATE_HZ = 100.0
WINDOW_SECONDS = 1.0
DEFAULT_HOP_SECONDS = 0.5

IMU_WINDOW_SAMPLES = int(round(IMU_RATE_HZ * WINDOW_SECONDS))
MIC_WINDOW_SAMPLES = int(round(MIC_RATE_HZ * WINDOW_SECONDS))

# Tolerance for "does this instant land on the grid" arithmetic. Grid times
# are start + k / rate, so accumulated float error is far below this.
_TIME_EPS = 1e-9


@dataclass(frozen=True)
class UniformSeries:
    """A fixed-rate multi-channel series starting at ``start_t``."""

    start_t: float
    rate_hz: float
    values: np.ndarray  # shape (channels, n_samples)

    def __post_init__(self) -> None:
        if self.rate_hz <= 0:
            raise ValueError(f"rate_hz must be positive, got {self.rate_hz}")
        if self.values.ndim != 2 or self.values.shape[1] < 1:
            raise ValueError(
                f"values must have shape (channels, n_samples), got {self.values.shape}"
            )

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]

    @property
    def end_t(self) -> float:
        return self.start_t + (self.n_samples - 1) / self.rate_hz

    def times(self) -> np.ndarray:
        return self.start_t + np.arange(self.n_samples) / self.rate_hz


def resample_linear(
    t: np.ndarray,
    values: np.ndarray,
    rate_hz: float,
    span: tuple[float, float] | None = None,
) -> UniformSeries:
    """Linearly interpolate an irregular series onto a uniform grid.

    Args:
        t: strictly increasing sample timestamps, shape (n,).
        values: sample values, shape (n,) or (n, channels).
        rate_hz: target grid rate.
        span: (start, end) of the grid; defaults to the full input span.
            The grid covers start + k / rate_hz for every k with
            start + k / rate_hz <= end.

    Raises:
        InsufficientDataError: fewer than two input samples.
        CoverageError: the requested span extends past the input samples;
            extrapolation is never performed.
    """
    t = np.asarray(t, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if t.ndim != 1 or t.size != values.shape[0]:
        raise ValueError(
            f"t must be 1-D and match values rows, got {t.shape} vs {values.shape}"
        )
    if t.size < 2:
        raise InsufficientDataError(
            f"resampling needs at least 2 samples, got {t.size}"
        )
    if np.any(np.diff(t) <= 0):
        raise ValueError("timestamps must be strictly increasing")

    start, end = span if span is not None else (float(t[0]), float(t[-1]))
    if end < start:
        raise ValueError(f"span end {end} precedes start {start}")
    if start < t[0] - _TIME_EPS or end > t[-1] + _TIME_EPS:
        raise CoverageError(
            f"span [{start}, {end}] not covered by samples [{t[0]}, {t[-1]}]"
        )

    n_grid = int(np.floor((end - start) * rate_hz + _TIME_EPS)) + 1
    grid = start + np.arange(n_grid) / rate_hz

    cols = values.reshape(values.shape[0], -1)
    out = np.empty((cols.shape[1], n_grid), dtype=np.float64)
    for c in range(cols.shape[1]):
        out[c] = np.interp(grid, t, cols[:, c])
    return UniformSeries(start_t=start, rate_hz=float(rate_hz), values=out)


@dataclass(frozen=True)
class AlignedWindow:
    """One second of synchronized sensor data ending at ``window_end_t``.

    ``imu_accel`` holds the three accelerometer channels at 200 Hz (3 x 200)
    and ``mic`` the microphone amplitude at 100 Hz (100,). Both cover the
    identical interval (window_end_t - 1 s, window_end_t].
    """

    window_end_t: float
    imu_accel: np.ndarray
    mic: np.ndarray

    def __post_init__(self) -> None:
        if self.imu_accel.shape != (3, IMU_WINDOW_SAMPLES):
            raise ValueError(
                f"imu_accel must be (3, {IMU_WINDOW_SAMPLES}), got {self.imu_accel.shape}"
            )
        if self.mic.shape != (MIC_WINDOW_SAMPLES,):
            raise ValueError(
                f"mic must be ({MIC_WINDOW_SAMPLES},), got {self.mic.shape}"
            )


def slice_windows(
    imu: UniformSeries,
    mic: UniformSeries,
    hop_seconds: float = DEFAULT_HOP_SECONDS,
) -> list[AlignedWindow]:
    """Cut one-second aligned windows from resampled IMU and mic series.

    Window end times start one second into the common span of the two series
    and advance by ``hop_seconds``. Each window takes the trailing 200 IMU and
    100 mic samples, i.e. the grid points inside (end - 1 s, end].

    Raises:
        InsufficientDataError: the common span is shorter than one window.
    """
    if imu.rate_hz != IMU_RATE_HZ or imu.values.shape[0] != 3:
        raise ValueError(
            f"imu series must be 3 channels at {IMU_RATE_HZ} Hz, "
            f"got {imu.values.shape[0]} at {imu.rate_hz}"
        )
    if mic.rate_hz != MIC_RATE_HZ or mic.values.shape[0] != 1:
        raise ValueError(
            f"mic series must be 1 channel at {MIC_RATE_HZ} Hz, "
            f"got {mic.values.shape[0]} at {mic.rate_hz}"
        )
    if hop_seconds <= 0:
        raise ValueError(f"hop_seconds must be positive, got {hop_seconds}")

    common_start = max(imu.start_t, mic.start_t)
    common_end = min(imu.end_t, mic.end_t)
    first_end = common_start + WINDOW_SECONDS
    if first_end > common_end + _TIME_EPS:
        raise InsufficientDataError(
            f"common span {common_end - common_start:.3f} s is shorter than "
            f"one {WINDOW_SECONDS} s window"
        )

    n_windows = int(np.floor((common_end - first_end) / hop_seconds + _TIME_EPS)) + 1
    windows = []
    for k in range(n_windows):
        end_t = first_end + k * hop_seconds
        imu_stop = int(round((end_t - imu.start_t) * imu.rate_hz))
        mic_stop = int(round((end_t - mic.start_t) * mic.rate_hz))
        imu_block = imu.values[:, imu_stop - IMU_WINDOW_SAMPLES + 1 : imu_stop + 1]
        mic_block = mic.values[0, mic_stop - MIC_WINDOW_SAMPLES + 1 : mic_stop + 1]
        windows.append(
            AlignedWindow(
                window_end_t=end_t,
                imu_accel=imu_block.copy(),
                mic=mic_block.copy(),
            )
        )
    return windows


def split_low_level(
    window: AlignedWindow,
) -> tuple[tuple[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]:
    """Split an aligned window into its two 500 ms halves.

    Returns ((imu_first, mic_first), (imu_second, mic_second)) where the
    first half holds IMU samples [0, 100) and mic samples [0, 50).
    Concatenating the halves reconstructs the window exactly.
    """
    imu_half = IMU_WINDOW_SAMPLES // 2
    mic_half = MIC_WINDOW_SAMPLES // 2
    first = (window.imu_accel[:, :imu_half], window.mic[:mic_half])
    second = (window.imu_accel[:, imu_half:], window.mic[mic_half:])
    return first, second
