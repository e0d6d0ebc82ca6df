"""
2-D embeddings of ERB features
==============================

Computes mean ERB vectors for a band of middle-register notes from every
brand, projects them with PCA and t-SNE, and reports how well the brands
separate.  Coordinates land in demos/out/.
"""

import csv
from pathlib import Path

import numpy as np

from pianoq.audio import WORKING_RATE_HZ
from pianoq.embedding import pca_2d, tsne_2d
from pianoq.erb import build_filterbank, erb_representation
from pianoq.labels import PIANO_LABELS
from pianoq.synth import synth_note

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

# Six adjacent mid-register notes per brand keep the pitch variation
# small relative to the brand voicing differences.
pitches = range(36, 42)
rng = np.random.default_rng(2)
bank = build_filterbank(WORKING_RATE_HZ)
features = []
labels = []
for label in PIANO_LABELS:
    for pitch in pitches:
        note = synth_note(label, pitch, rng)
        rep = erb_representation(note.clip.samples, bank, duration_mode="1.0")
        features.append(rep.time_mean)
        labels.append(label)
x = np.log1p(np.stack(features))
print(f"feature matrix {x.shape}")


def write_points(path, emb):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["brand", "x", "y"])
        for label, (px, py) in zip(labels, emb.points):
            writer.writerow([label, f"{px:.6g}", f"{py:.6g}"])


def purity_5nn(points):
    d = np.linalg.norm(points[:, None] - points[None], axis=2)
    np.fill_diagonal(d, np.inf)
    nearest = np.argsort(d, axis=1)[:, :5]
    same = [
        np.mean([labels[j] == labels[i] for j in nearest[i]]) for i in range(len(labels))
    ]
    return float(np.mean(same))


pca = pca_2d(x)
shares = pca.meta["explained_variance"]
print(
    f"PCA explained variance {shares[0]:.2f} + {shares[1]:.2f}, "
    f"5-NN brand purity {purity_5nn(pca.points):.2f}"
)
write_points(out_dir / "pca.csv", pca)

tsne = tsne_2d(x, seed=0)
print(
    f"t-SNE final KL {tsne.meta['kl_history'][-1]:.3f}, "
    f"5-NN brand purity {purity_5nn(tsne.points):.2f}"
)
write_points(out_dir / "tsne.csv", tsne)
print(f"wrote {out_dir / 'pca.csv'} and {out_dir / 'tsne.csv'}")
