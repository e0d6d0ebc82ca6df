"""Short-time Fourier analysis and mel spectrogram rendering.

Frames are 1024 samples with a 256-sample hop, windowed by a periodic Hann
and centered by reflect padding, so a clip of N samples yields
1 + floor(N / hop) frames.  Mel energies use area-integrated triangular
filters: each filter weight is the mean of the triangle over a bin's
frequency support rather than a point sample, which keeps every filter row
non-zero even when triangles are narrower than the bin spacing.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import BandMismatch, InvalidRange, WindowOverflow

FFT_SIZE = 1024
HOP = 256
N_MELS = 128

#: Fixed classifier input geometry: mel bands x frames (0.2 s at 44.1 kHz).
MODEL_BANDS = 128
MODEL_FRAMES = 35

_DB_FLOOR = -80.0


@dataclass
class Spectrogram:
    """Power spectrogram, shape (frames, fft_size // 2 + 1)."""

    power: np.ndarray
    fft_size: int
    hop: int
    sample_rate_hz: int

    @property
    def frequencies_hz(self) -> np.ndarray:
        return np.arange(self.power.shape[1]) * self.sample_rate_hz / self.fft_size


@dataclass
class MelSpectrogram:
    """Mel band energies mapped to [0, 1], shape (frames, n_mels)."""

    values: np.ndarray
    sample_rate_hz: int
    fmin_hz: float
    fmax_hz: float

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def n_mels(self) -> int:
        return self.values.shape[1]


@dataclass
class ModelInput:
    """Classifier input image, shape (MODEL_BANDS, MODEL_FRAMES)."""

    image: np.ndarray


def hz_to_mel(f_hz):
    """Map frequency in Hz to mel: 2595 * log10(1 + f / 700)."""
    return 2595.0 * np.log10(1.0 + np.asarray(f_hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    """Inverse of hz_to_mel."""
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def stft_power(samples: np.ndarray, sample_rate_hz: int, fft_size: int = FFT_SIZE, hop: int = HOP) -> Spectrogram:
    """Power spectrogram of a mono signal.

    Raises WindowOverflow when the signal is shorter than one analysis
    window.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidRange(f"expected a 1-D signal, got shape {x.shape}")
    n = len(x)
    if n < fft_size:
        raise WindowOverflow(f"signal of {n} samples is shorter than one {fft_size}-sample window")

    pad = fft_size // 2
    padded = np.pad(x, pad, mode="reflect")
    n_frames = 1 + n // hop
    frames = np.lib.stride_tricks.sliding_window_view(padded, fft_size)[::hop][:n_frames]
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(fft_size) / fft_size)
    spectrum = np.fft.rfft(frames * window, axis=1)
    power = (spectrum.real**2 + spectrum.imag**2)
    return Spectrogram(power=power, fft_size=fft_size, hop=hop, sample_rate_hz=sample_rate_hz)


def _triangle_integral(x: np.ndarray, left: np.ndarray, center: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Cumulative area of unit-height triangles, broadcast over filters x edges."""
    rising = np.clip(x, left, center)
    falling = np.clip(x, center, right)
    area_rise = (rising - left) ** 2 / (2.0 * (center - left))
    area_fall = ((right - center) ** 2 - (right - falling) ** 2) / (2.0 * (right - center))
    return area_rise + area_fall


def mel_filterbank(
    sample_rate_hz: int,
    fft_size: int = FFT_SIZE,
    n_mels: int = N_MELS,
    fmin_hz: float = 0.0,
    fmax_hz: float | None = None,
) -> np.ndarray:
    """Triangular mel filterbank, shape (n_mels, fft_size // 2 + 1).

    Triangle corners sit at n_mels + 2 equally spaced points on the mel
    axis.  Each weight is the triangle's average value over the bin's
    support [f_k - bw/2, f_k + bw/2] with bw = sample_rate / fft_size, so
    every filter overlaps at least one bin regardless of how narrow it is.
    """
    if fmax_hz is None:
        fmax_hz = sample_rate_hz / 2.0
    if not (0.0 <= fmin_hz < fmax_hz <= sample_rate_hz / 2.0):
        raise InvalidRange(f"need 0 <= fmin < fmax <= Nyquist, got [{fmin_hz}, {fmax_hz}] at rate {sample_rate_hz}")
    if n_mels < 1:
        raise InvalidRange(f"n_mels must be >= 1, got {n_mels}")

    corners = mel_to_hz(np.linspace(hz_to_mel(fmin_hz), hz_to_mel(fmax_hz), n_mels + 2))
    left = corners[:-2, None]
    center = corners[1:-1, None]
    right = corners[2:, None]

    n_bins = fft_size // 2 + 1
    bin_width = sample_rate_hz / fft_size
    freqs = np.arange(n_bins) * bin_width
    lo = freqs - bin_width / 2.0
    hi = freqs + bin_width / 2.0

    weights = _triangle_integral(hi[None, :], left, center, right)
    weights -= _triangle_integral(lo[None, :], left, center, right)
    weights /= bin_width
    return weights


def mel_center_frequencies(
    sample_rate_hz: int = 44_100,
    n_mels: int = N_MELS,
    fmin_hz: float = 0.0,
    fmax_hz: float | None = None,
) -> np.ndarray:
    """Center frequency in Hz of each mel filter."""
    if fmax_hz is None:
        fmax_hz = sample_rate_hz / 2.0
    corners = mel_to_hz(np.linspace(hz_to_mel(fmin_hz), hz_to_mel(fmax_hz), n_mels + 2))
    return corners[1:-1]


def mel_spectrogram(
    samples: np.ndarray,
    sample_rate_hz: int,
    fft_size: int = FFT_SIZE,
    hop: int = HOP,
    n_mels: int = N_MELS,
    fmin_hz: float = 0.0,
    fmax_hz: float | None = None,
) -> MelSpectrogram:
    """Mel spectrogram normalized to [0, 1].

    Band energies are converted to dB relative to the clip maximum, floored
    at -80 dB, and mapped linearly so the floor is 0 and the maximum is 1.
    An all-zero signal maps to all zeros.
    """
    spec = stft_power(samples, sample_rate_hz, fft_size=fft_size, hop=hop)
    fb = mel_filterbank(sample_rate_hz, fft_size=fft_size, n_mels=n_mels, fmin_hz=fmin_hz, fmax_hz=fmax_hz)
    energy = spec.power @ fb.T

    ref = energy.max()
    if ref <= 0.0:
        values = np.zeros_like(energy)
    else:
        db = 10.0 * np.log10(np.maximum(energy / ref, 10.0 ** (_DB_FLOOR / 10.0)))
        values = (db - _DB_FLOOR) / -_DB_FLOOR
    if fmax_hz is None:
        fmax_hz = sample_rate_hz / 2.0
    return MelSpectrogram(values=values, sample_rate_hz=sample_rate_hz, fmin_hz=fmin_hz, fmax_hz=fmax_hz)


def to_model_input(mel: MelSpectrogram) -> ModelInput:
    """Fix a mel spectrogram to the classifier geometry (128 bands x 35 frames).

    The band count must already be 128; the frame axis is center-cropped when
    too long and zero-padded symmetrically when too short.
    """
    if mel.n_mels != MODEL_BANDS:
        raise BandMismatch(f"expected {MODEL_BANDS} mel bands, got {mel.n_mels}")
    image = mel.values.T  # (bands, frames)
    n = image.shape[1]
    if n == MODEL_FRAMES:
        out = image.copy()
    elif n > MODEL_FRAMES:
        start = (n - MODEL_FRAMES) // 2
        out = image[:, start : start + MODEL_FRAMES].copy()
    else:
        pad_left = (MODEL_FRAMES - n) // 2
        out = np.zeros((MODEL_BANDS, MODEL_FRAMES))
        out[:, pad_left : pad_left + n] = image
    return ModelInput(image=out)


def mel_to_pgm_bytes(mel: MelSpectrogram) -> bytes:
    """Render a mel spectrogram as a binary PGM (P5) image.

    Rows run from the highest band at the top to the lowest at the bottom;
    columns are frames.  Values quantize [0, 1] to 0..255.
    """
    img = np.clip(np.round(mel.values.T[::-1] * 255.0), 0, 255).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    return header + img.tobytes()


def mel_to_csv(mel: MelSpectrogram) -> str:
    """One CSV row per frame, one column per mel band, 6 decimal places."""
    buf = io.StringIO()
    np.savetxt(buf, mel.values, delimiter=",", fmt="%.6f")
    return buf.getvalue()
