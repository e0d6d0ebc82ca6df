"""Piano sound-quality scoring from short recordings.

The pipeline slices a recording into 0.2 s windows, renders each window as
a mel spectrogram, classifies the brand with a small convolutional network
trained under class-balanced focal loss, and converts the averaged class
probabilities into an expected quality score against a survey-derived
profile.  Supporting modules cover ERB-band psychoacoustic analysis, 2-D
embeddings of band energies, survey statistics, a command-line interface,
and an HTTP scoring service.
"""

from .labels import N_CLASSES, PIANO_LABELS

__version__ = "0.1.0"

__all__ = ["PIANO_LABELS", "N_CLASSES", "__version__"]
