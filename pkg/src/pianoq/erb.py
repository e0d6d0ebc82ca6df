"""Equivalent-rectangular-bandwidth (ERB) band analysis.

Two published bandwidth approximations are provided: a quadratic fit
(erb_moore83) and the linear fit (erb_glasberg90) that also defines the
ERB-rate (Cam) scale.  The filterbank places 77 channels at uniform
ERB-rate spacing from 26 Hz to 16 kHz; each channel integrates the power
spectrum over an ideal rectangular band one ERB wide, with fractional-bin
overlap so bands narrower than an FFT bin still collect their share.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, EmptyInput, InputError, InvalidRate
from .labels import PIANO_LABELS

N_CHANNELS = 77
FRAME_SAMPLES = 256
FMIN_HZ = 26.0
FMAX_HZ = 16_000.0

DURATION_MODES = ("1.0", "1.2", "full")


def _require_nonnegative(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if np.any(arr < 0):
        raise DomainError(f"{name} must be non-negative")
    return arr


def erb_moore83(f_khz):
    """Quadratic ERB fit: 6.23 f^2 + 93.39 f + 28.52, f in kHz, result in Hz."""
    f = _require_nonnegative(f_khz, "frequency")
    return 6.23 * f * f + 93.39 * f + 28.52


def erb_glasberg90(f_khz):
    """Linear ERB fit: 24.7 (4.37 f + 1), f in kHz, result in Hz."""
    f = _require_nonnegative(f_khz, "frequency")
    return 24.7 * (4.37 * f + 1.0)


def erb_rate(f_hz):
    """ERB-rate in Cams: 21.4 log10(4.37 f / 1000 + 1)."""
    f = _require_nonnegative(f_hz, "frequency")
    return 21.4 * np.log10(4.37 * f / 1000.0 + 1.0)


def inverse_erb_rate(rate):
    """Frequency in Hz whose ERB-rate is the given value."""
    r = _require_nonnegative(rate, "rate")
    return (10.0 ** (r / 21.4) - 1.0) * 1000.0 / 4.37


@dataclass
class ErbFilterbank:
    """77 rectangular bands, one ERB wide, centers uniform on the Cam scale."""

    center_freqs_hz: np.ndarray
    bandwidths_hz: np.ndarray
    sample_rate_hz: int
    frame_samples: int = FRAME_SAMPLES
    band_weights: np.ndarray = field(repr=False, default=None)  # (channels, bins)


@dataclass
class ErbRepresentation:
    """Per-frame ERB band powers for one clip."""

    band_power: np.ndarray  # (frames, 77), non-negative
    time_mean: np.ndarray  # (77,), column means
    duration_mode: str

    @property
    def n_frames(self) -> int:
        return self.band_power.shape[0]


@dataclass
class BrandErbSummary:
    """Mean ERB vectors per pitch and their brand-level average."""

    brand_label: str
    mean_erb_by_pitch: dict[int, np.ndarray]
    brand_average: np.ndarray


def build_filterbank(sample_rate_hz: int) -> ErbFilterbank:
    """Construct the 77-channel bank for a given rate.

    Rates below 32 kHz are rejected so the 16 kHz top band stays under
    Nyquist.
    """
    if sample_rate_hz < 32_000:
        raise InvalidRate(f"sample rate {sample_rate_hz} Hz is below the 32 kHz minimum")
    rates = np.linspace(erb_rate(FMIN_HZ), erb_rate(FMAX_HZ), N_CHANNELS)
    centers = inverse_erb_rate(rates)
    bandwidths = erb_glasberg90(centers / 1000.0)

    # Fractional overlap of each rectangular band with each FFT bin's
    # support [f_k - bw/2, f_k + bw/2], in units of one bin width.
    n_bins = FRAME_SAMPLES // 2 + 1
    bin_width = sample_rate_hz / FRAME_SAMPLES
    bin_lo = np.arange(n_bins) * bin_width - bin_width / 2.0
    bin_hi = bin_lo + bin_width
    band_lo = (centers - bandwidths / 2.0)[:, None]
    band_hi = (centers + bandwidths / 2.0)[:, None]
    overlap = np.minimum(band_hi, bin_hi[None, :]) - np.maximum(band_lo, bin_lo[None, :])
    weights = np.clip(overlap, 0.0, None) / bin_width

    return ErbFilterbank(
        center_freqs_hz=centers,
        bandwidths_hz=bandwidths,
        sample_rate_hz=sample_rate_hz,
        frame_samples=FRAME_SAMPLES,
        band_weights=weights,
    )


def _standardize_duration(samples: np.ndarray, sample_rate_hz: int, duration_mode: str) -> np.ndarray:
    mode = str(duration_mode)
    if mode not in DURATION_MODES:
        raise InputError(f"duration mode {duration_mode!r} not in {DURATION_MODES}")
    if mode == "full":
        return samples
    n_target = int(round(float(mode) * sample_rate_hz))
    if len(samples) >= n_target:
        return samples[:n_target]
    out = np.zeros(n_target)
    out[: len(samples)] = samples
    return out


def erb_representation(samples: np.ndarray, bank: ErbFilterbank, duration_mode: str = "full") -> ErbRepresentation:
    """Frame a clip into non-overlapping 256-sample Hann windows and
    integrate each frame's power spectrum over the bank's bands.

    The clip is first truncated or zero-padded to the duration mode
    ("1.0" / "1.2" seconds, or "full" to leave it untouched).
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise EmptyInput("expected a non-empty 1-D signal")
    x = _standardize_duration(x, bank.sample_rate_hz, duration_mode)

    n_frames = len(x) // bank.frame_samples
    if n_frames == 0:
        raise EmptyInput(f"clip shorter than one {bank.frame_samples}-sample frame")
    frames = x[: n_frames * bank.frame_samples].reshape(n_frames, bank.frame_samples)
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(bank.frame_samples) / bank.frame_samples)
    spectrum = np.fft.rfft(frames * window, axis=1)
    power = spectrum.real**2 + spectrum.imag**2
    band_power = power @ bank.band_weights.T
    return ErbRepresentation(
        band_power=band_power,
        time_mean=band_power.mean(axis=0),
        duration_mode=str(duration_mode),
    )


def summarize_brand(reps: dict[int, ErbRepresentation], brand_label: str) -> BrandErbSummary:
    """Collect per-pitch mean ERB vectors and average them for a brand.

    Pitches may be sparse (some instruments lack notes); the average runs
    over whichever pitches are present.
    """
    if brand_label not in PIANO_LABELS:
        raise InputError(f"unknown brand label {brand_label!r}")
    if not reps:
        raise EmptyInput(f"no pitches supplied for {brand_label}")
    by_pitch = {int(p): rep.time_mean.copy() for p, rep in sorted(reps.items())}
    stacked = np.stack(list(by_pitch.values()))
    return BrandErbSummary(
        brand_label=brand_label,
        mean_erb_by_pitch=by_pitch,
        brand_average=stacked.mean(axis=0),
    )
