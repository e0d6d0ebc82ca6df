"""
ERB band analysis across the keyboard
=====================================

Builds the 77-channel ERB filterbank, runs a few notes from two brands
through it, and compares the smoothness of the brand-average curves.
The per-pitch band energies go to demos/out/erb_curves.csv.
"""

import csv
from pathlib import Path

import numpy as np

from pianoq.audio import WORKING_RATE_HZ
from pianoq.erb import build_filterbank, erb_representation, summarize_brand
from pianoq.synth import synth_note

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

bank = build_filterbank(WORKING_RATE_HZ)
print(
    f"{len(bank.center_freqs_hz)} channels from "
    f"{bank.center_freqs_hz[0]:.0f} Hz to {bank.center_freqs_hz[-1]:.0f} Hz"
)

# A bright-tilt brand against a dark-tilt one, sampled every octave.
pitches = [3, 15, 27, 39, 51, 63, 75, 87]
rng = np.random.default_rng(1)
summaries = {}
for label in ("PearlRiver", "Kawai-G"):
    reps = {}
    for pitch in pitches:
        note = synth_note(label, pitch, rng)
        reps[pitch] = erb_representation(note.clip.samples, bank, duration_mode="1.0")
    summaries[label] = summarize_brand(reps, label)

# Smoothness: mean absolute step between adjacent channels of the
# brand-average curve, relative to its mean level.
for label, summary in summaries.items():
    curve = summary.brand_average
    roughness = np.abs(np.diff(curve)).mean() / curve.mean()
    print(f"{label:12s} roughness {roughness:.3f}")

with open(out_dir / "erb_curves.csv", "w", newline="") as fh:
    writer = csv.writer(fh)
    writer.writerow(["brand", "pitch"] + [f"c{i:02d}" for i in range(77)])
    for label, summary in summaries.items():
        for pitch, curve in summary.mean_erb_by_pitch.items():
            writer.writerow([label, pitch] + [f"{v:.6g}" for v in curve])
        writer.writerow([label, "average"] + [f"{v:.6g}" for v in summary.brand_average])
print(f"wrote {out_dir / 'erb_curves.csv'}")
