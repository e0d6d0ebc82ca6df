"""Canonical piano brand labels.

The index of a brand in PIANO_LABELS is its class id everywhere: training
targets, confusion-matrix axes, probability vectors, and quality profiles
all use this one ordering.
"""

PIANO_LABELS = [
    "PearlRiver",
    "YoungChang",
    "Steinway-T",
    "Hsinghai",
    "Kawai",
    "Steinway",
    "Kawai-G",
]

N_CLASSES = len(PIANO_LABELS)
