"""Dataset indexing, manifest files, and leakage-free splits.

A manifest is a CSV with header ``path,label,source_id``; each row points
at one recording.  Splitting is by source recording, never by slice, so
windows cut from the same note can never straddle the train/test
boundary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import WORKING_RATE_HZ, load_wav, resample, slice_clip
from .errors import EmptySplit, InputError
from .labels import PIANO_LABELS
from .spectral import ModelInput, mel_spectrogram, to_model_input

MANIFEST_HEADER = ["path", "label", "source_id"]
SPLIT_NAMES = ("train", "val", "test")
SPLIT_FRACTIONS = (0.8, 0.1, 0.1)


@dataclass
class DatasetIndex:
    """Slice-level samples plus the source-level split assignment."""

    entries: list[tuple[ModelInput, int, str]]
    split: dict[str, str] = field(default_factory=dict)

    def subset(self, split_name: str) -> list[tuple[ModelInput, int, str]]:
        if split_name not in SPLIT_NAMES:
            raise InputError(f"unknown split {split_name!r}")
        return [e for e in self.entries if self.split.get(e[2]) == split_name]

    def stacked(self, split_name: str):
        """Images (B, 1, 128, 35) and targets (B,) for one split."""
        part = self.subset(split_name)
        if not part:
            raise EmptySplit(f"split {split_name!r} is empty")
        images = np.stack([np.asarray(mi.image, dtype=np.float64) for mi, _, _ in part])[:, None]
        targets = np.asarray([t for _, t, _ in part], dtype=np.int64)
        return images, targets

    def class_counts(self, split_name: str) -> np.ndarray:
        counts = np.zeros(len(PIANO_LABELS), dtype=np.int64)
        for _, t, _ in self.subset(split_name):
            counts[t] += 1
        return counts


def split_by_source(source_ids, seed: int, fractions=SPLIT_FRACTIONS) -> dict[str, str]:
    """Assign each unique source_id to train/val/test by seeded shuffle.

    Fractions apply to source counts (default 80/10/10); every source_id
    lands in exactly one split.
    """
    if abs(sum(fractions) - 1.0) > 1e-9 or len(fractions) != 3:
        raise InputError(f"fractions must be three values summing to 1, got {fractions}")
    unique = sorted(set(source_ids))
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(unique))
    n_train = int(len(unique) * fractions[0])
    n_val = int(len(unique) * fractions[1])
    split = {}
    for rank, idx in enumerate(order):
        if rank < n_train:
            name = "train"
        elif rank < n_train + n_val:
            name = "val"
        else:
            name = "test"
        split[unique[idx]] = name
    return split


def read_manifest(path: str | Path) -> list[tuple[str, str, str]]:
    """Rows of (path, label, source_id); validates header and labels."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != MANIFEST_HEADER:
            raise InputError(f"manifest header must be {','.join(MANIFEST_HEADER)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise InputError(f"manifest line {lineno}: expected 3 columns, got {len(row)}")
            wav_path, label, source_id = row
            if label not in PIANO_LABELS:
                raise InputError(f"manifest line {lineno}: unknown label {label!r}")
            if not source_id:
                raise InputError(f"manifest line {lineno}: empty source_id")
            rows.append((wav_path, label, source_id))
    if not rows:
        raise InputError(f"manifest {path} has no data rows")
    return rows


def write_manifest(path: str | Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        writer.writerows(rows)


def index_from_clips(labeled_clips, seed: int) -> DatasetIndex:
    """Build a DatasetIndex from (AudioClip, label) pairs.

    Each clip is cut into 0.2 s slices; every slice becomes one entry
    carrying the clip's source_id, and sources are split 80/10/10.
    """
    entries = []
    source_ids = []
    for clip, label in labeled_clips:
        if label not in PIANO_LABELS:
            raise InputError(f"unknown label {label!r}")
        target = PIANO_LABELS.index(label)
        if clip.sample_rate_hz != WORKING_RATE_HZ:
            clip = resample(clip, WORKING_RATE_HZ)
        source_ids.append(clip.source_id)
        for piece in slice_clip(clip):
            mel = mel_spectrogram(piece.samples, piece.sample_rate_hz)
            entries.append((to_model_input(mel), target, clip.source_id))
    if not entries:
        raise EmptySplit("no clips produced any slices")
    return DatasetIndex(entries=entries, split=split_by_source(source_ids, seed))


def index_from_manifest(manifest_path: str | Path, seed: int) -> DatasetIndex:
    """Load every manifest row's WAV and index its slices.

    Relative paths resolve against the manifest's directory.
    """
    rows = read_manifest(manifest_path)
    base = Path(manifest_path).parent
    clips = []
    for wav_path, label, source_id in rows:
        p = Path(wav_path)
        if not p.is_absolute():
            p = base / p
        clip = load_wav(p)
        clip.source_id = source_id
        clips.append((clip, label))
    return index_from_clips(clips, seed)
