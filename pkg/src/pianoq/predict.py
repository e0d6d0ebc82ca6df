"""Clip-level inference: slice, transform, classify, aggregate.

A whole recording is scored by cutting it into 0.2 s windows, running the
classifier on each window's mel image, and averaging the per-window
probability vectors arithmetically.
"""

from __future__ import annotations

import numpy as np

from .audio import SLICE_WINDOW_S, WORKING_RATE_HZ, AudioClip, resample, slice_clip
from .cnn import MicroCnn, ProbabilityVector, softmax
from .errors import TooShort
from .scoring import QualityProfile, ScoreReport, make_score_report
from .spectral import mel_spectrogram, to_model_input

#: Forward-pass chunk size; keeps im2col buffers modest for long clips.
_CHUNK = 64


def _slice_probabilities(model: MicroCnn, clip: AudioClip) -> np.ndarray:
    """Per-slice probability rows, shape (n_slices, 7)."""
    if clip.sample_rate_hz != WORKING_RATE_HZ:
        clip = resample(clip, WORKING_RATE_HZ)
    slices = slice_clip(clip)
    if len(slices) == 0:
        raise TooShort(
            f"clip of {clip.duration_s:.3f} s is shorter than one {SLICE_WINDOW_S} s window"
        )
    images = np.stack(
        [
            to_model_input(mel_spectrogram(s.samples, WORKING_RATE_HZ)).image
            for s in slices
        ]
    )[:, None]
    rows = []
    for start in range(0, len(images), _CHUNK):
        logits, _ = model.forward_batch(images[start : start + _CHUNK])
        rows.append(softmax(logits))
    return np.concatenate(rows, axis=0)


def predict_clip(model: MicroCnn, clip: AudioClip) -> ProbabilityVector:
    """Arithmetic mean of slice-wise probabilities, renormalized."""
    probs = _slice_probabilities(model, clip)
    mean = probs.mean(axis=0)
    return ProbabilityVector(probs=mean / mean.sum())


def score_clip(model: MicroCnn, clip: AudioClip, profile: QualityProfile) -> ScoreReport:
    """Classify a clip and weight the profile ratings by its probabilities."""
    probs = _slice_probabilities(model, clip)
    mean = probs.mean(axis=0)
    vector = ProbabilityVector(probs=mean / mean.sum())
    return make_score_report(vector, probs.shape[0], profile)
