"""
Slicing a recording and rendering mel spectrograms
==================================================

Synthesizes one piano note, cuts it into the 0.2 s windows the
classifier consumes, and exports the first window's mel spectrogram as
CSV and PGM under demos/out/.
"""

from pathlib import Path

import numpy as np

from pianoq.audio import WORKING_RATE_HZ, slice_clip
from pianoq.spectral import mel_spectrogram, mel_to_csv, mel_to_pgm_bytes, to_model_input
from pianoq.synth import synth_note

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

# One middle-register Steinway note (pitch 39 is roughly middle C).
rng = np.random.default_rng(0)
note = synth_note("Steinway", 39, rng)
clip = note.clip
print(f"note {clip.source_id}: {clip.duration_s:.2f} s at {clip.sample_rate_hz} Hz")

# The 1.2 s note yields six non-overlapping 0.2 s slices.
pieces = slice_clip(clip)
print(f"{len(pieces)} slices of {pieces.window_s} s each")

# Render each slice; the classifier input is a fixed 128 x 35 image.
for i, piece in enumerate(pieces):
    mel = mel_spectrogram(piece.samples, WORKING_RATE_HZ)
    image = to_model_input(mel).image
    print(
        f"  slice {i}: mel {mel.values.shape[0]} frames x {mel.values.shape[1]} bands, "
        f"model input {image.shape}, energy spread {image.std():.3f}"
    )

first = mel_spectrogram(pieces.slices[0].samples, WORKING_RATE_HZ)
(out_dir / "slice0_mel.csv").write_text(mel_to_csv(first))
(out_dir / "slice0_mel.pgm").write_bytes(mel_to_pgm_bytes(first))
print(f"wrote {out_dir / 'slice0_mel.csv'} and {out_dir / 'slice0_mel.pgm'}")
