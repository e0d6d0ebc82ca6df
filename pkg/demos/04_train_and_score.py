"""
Training a small classifier and scoring a clip
==============================================

Trains the micro-CNN on a middle-register subset of the synthetic corpus
(a couple of minutes of CPU time), evaluates it, saves the checkpoint,
and scores a freshly synthesized clip against the bundled quality
profile.  The full-corpus training run lives in the acceptance suite.
"""

import json
from pathlib import Path

import numpy as np

from pianoq.checkpoint import model_id, save_model
from pianoq.dataset import index_from_clips
from pianoq.labels import PIANO_LABELS
from pianoq.predict import score_clip
from pianoq.scoring import default_profile_path, load_profile, score_response_dict
from pianoq.synth import synth_note
from pianoq.training import TrainConfig, evaluate, train

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

# Two octaves around middle C, every brand: 182 notes, ~1100 slices.
rng = np.random.default_rng(0)
clips = []
for label in PIANO_LABELS:
    for pitch in range(27, 53):
        note = synth_note(label, pitch, rng)
        clips.append((note.clip, note.label))
index = index_from_clips(clips, seed=1)
print(f"{len(index.entries)} slices from {len(clips)} notes")

config = TrainConfig(epochs=8, learning_rate=0.2, seed=0, decay_epochs=(6,))
model, history = train(index, config)
for h in history:
    print(
        f"epoch {h.epoch:2d}: train {h.train_accuracy:.3f} / {h.train_loss:.4f}, "
        f"val {h.val_accuracy:.3f} / {h.val_loss:.4f}"
    )

metrics = evaluate(model, index, split="test")
print(f"test accuracy {metrics.accuracy:.3f}, weighted F1 {metrics.weighted_f1:.3f}")

model_path = out_dir / "demo_model.pqm"
save_model(model_path, model)
print(f"saved {model_id(model)} to {model_path}")

# Score an unseen clip: a new random phase of a note the model never saw.
probe = synth_note("Steinway-T", 40, np.random.default_rng(99))
profile = load_profile(default_profile_path())
report = score_clip(model, probe.clip, profile)
print(json.dumps(score_response_dict(report, model_id(model)), indent=2))
