"""Synthetic seven-brand piano corpus.

Each note is a sum of exponentially decaying partials on the equal-
tempered scale, with brand identity encoded in two physical knobs:
string inharmonicity (partial k sits at k*f0*sqrt(1 + B k^2)) and
spectral tilt (a per-octave gain slope).  White noise at 30 dB SNR keeps
the classifier honest.  88 notes per brand, 1.0 s each, deterministic
given seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import WORKING_RATE_HZ, AudioClip, save_wav
from .dataset import DatasetIndex, index_from_clips, write_manifest
from .labels import PIANO_LABELS

NOTES_PER_BRAND = 88
NOTE_DURATION_S = 1.2
#: Fundamental decay constant.  Long enough that late slices still sit
#: well above the (non-decaying) noise floor, as on a grand with the
#: sustain pedal down.
DECAY_TAU_S = 0.9
SNR_DB = 30.0

#: Per-brand (inharmonicity B, spectral tilt dB/octave), in label order.
#: Tilt steps 4 dB/octave down the list while B is interleaved so that
#: brands adjacent in tilt differ by 50x or more in B.  Near the pitch
#: extremes one of the two cues always degrades (partials merge below
#: the FFT resolution at the bottom; few partials remain at the top),
#: and the interleaving keeps the other cue wide open there.
BRAND_VOICES = {
    "PearlRiver": (1.0e-5, 1.0),
    "YoungChang": (2.2e-3, -3.0),
    "Steinway-T": (4.0e-5, -7.0),
    "Hsinghai": (8.5e-3, -11.0),
    "Kawai": (1.5e-4, -15.0),
    "Steinway": (3.2e-2, -19.0),
    "Kawai-G": (6.0e-4, -23.0),
}


@dataclass
class SynthNote:
    clip: AudioClip
    label: str
    pitch: int  # 0..87, A0-based


def note_frequency_hz(pitch: int) -> float:
    """Equal temperament from A0 = 27.5 Hz."""
    return 27.5 * 2.0 ** (pitch / 12.0)


def synth_note(label: str, pitch: int, rng: np.random.Generator,
               sample_rate_hz: int = WORKING_RATE_HZ,
               duration_s: float = NOTE_DURATION_S) -> SynthNote:
    """One decaying note with the brand's inharmonicity and tilt."""
    inharmonicity, tilt_db_per_octave = BRAND_VOICES[label]
    f0 = note_frequency_hz(pitch)
    t = np.arange(int(round(duration_s * sample_rate_hz))) / sample_rate_hz

    x = np.zeros_like(t)
    for k in range(1, 21):
        f_k = k * f0 * np.sqrt(1.0 + inharmonicity * k * k)
        if f_k >= 0.45 * sample_rate_hz:
            break
        gain_db = tilt_db_per_octave * np.log2(f_k / f0)
        amp = k ** -0.5 * 10.0 ** (gain_db / 20.0)
        # higher partials die a little faster, roughly like real strings
        tau = DECAY_TAU_S / (1.0 + 0.05 * (k - 1))
        x += amp * np.exp(-t / tau) * np.sin(2.0 * np.pi * f_k * t)

    signal_power = np.mean(x * x)
    noise_sigma = np.sqrt(signal_power / 10.0 ** (SNR_DB / 10.0))
    x = x + rng.normal(0.0, noise_sigma, x.shape)
    x *= 0.7 / np.abs(x).max()

    clip = AudioClip(samples=x, sample_rate_hz=sample_rate_hz, source_id=f"{label}_{pitch:02d}")
    return SynthNote(clip=clip, label=label, pitch=pitch)


def synth_corpus(seed: int = 0) -> list[SynthNote]:
    """All 7 brands x 88 notes, in a deterministic order."""
    rng = np.random.default_rng(seed)
    return [
        synth_note(label, pitch, rng)
        for label in PIANO_LABELS
        for pitch in range(NOTES_PER_BRAND)
    ]


def synth_dataset_index(seed: int = 0, split_seed: int = 1) -> DatasetIndex:
    """In-memory sliced dataset over the full synthetic corpus."""
    notes = synth_corpus(seed)
    return index_from_clips([(n.clip, n.label) for n in notes], split_seed)


def write_corpus(out_dir: str | Path, seed: int = 0) -> Path:
    """Write the corpus as WAV files plus a manifest.csv; returns its path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for note in synth_corpus(seed):
        name = f"{note.clip.source_id}.wav"
        save_wav(out / name, note.clip)
        rows.append((name, note.label, note.clip.source_id))
    manifest = out / "manifest.csv"
    write_manifest(manifest, rows)
    return manifest
