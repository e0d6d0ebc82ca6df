"""WAV decoding, windowed-sinc resampling, and fixed-length slicing.

The decoder is a minimal RIFF reader: little-endian, ``fmt `` and ``data``
chunks required, everything else skipped.  Supported payloads are 16/24-bit
integer PCM and 32-bit float, mono or stereo.  All clips are float64 in
[-1, 1] after loading.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorruptHeader, InputError, UnsupportedFormat

#: Working sample rate of the whole pipeline; clips are resampled to this
#: on ingest so a 0.2 s analysis window is always 8 820 samples.
WORKING_RATE_HZ = 44_100

#: Analysis window and hop used for dataset slicing, in seconds.
SLICE_WINDOW_S = 0.2
SLICE_HOP_S = 0.2

_RESAMPLE_TAPS_PER_SIDE = 32
_RESAMPLE_KAISER_BETA = 8.6


@dataclass
class AudioClip:
    """Mono sample sequence with its rate and originating recording id."""

    samples: np.ndarray  # float64, values in [-1, 1]
    sample_rate_hz: int
    source_id: str = ""

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


@dataclass
class SliceSet:
    """Equal-length windows cut from one parent clip."""

    slices: list[AudioClip]
    window_s: float
    hop_s: float
    parent_source_id: str

    def __len__(self) -> int:
        return len(self.slices)

    def __iter__(self):
        return iter(self.slices)


def _read_exact(fh, n: int, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise CorruptHeader(f"truncated {what}: wanted {n} bytes, got {len(buf)}")
    return buf


def load_wav(path: str | Path) -> AudioClip:
    """Decode a PCM WAV file to a normalized mono clip.

    Stereo channels are averaged sample-wise; integer samples are rescaled
    to [-1, 1] by dividing by the type's maximum magnitude (32768 for
    16-bit, 2^23 for 24-bit).

    Raises:
        FileNotFoundError: missing file.
        UnsupportedFormat: codec, bit depth, or channel count not handled.
        CorruptHeader: truncated or inconsistent RIFF structure.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        riff, _size, wave = struct.unpack("<4sI4s", _read_exact(fh, 12, "RIFF header"))
        if riff != b"RIFF" or wave != b"WAVE":
            raise CorruptHeader(f"not a RIFF/WAVE file: {path.name}")

        fmt = None
        data = None
        while True:
            head = fh.read(8)
            if len(head) == 0:
                break
            if len(head) != 8:
                raise CorruptHeader("truncated chunk header")
            cid, csize = struct.unpack("<4sI", head)
            if cid == b"fmt ":
                if csize < 16:
                    raise CorruptHeader(f"fmt chunk too small ({csize} bytes)")
                body = _read_exact(fh, csize, "fmt chunk")
                fmt = struct.unpack("<HHIIHH", body[:16])
            elif cid == b"data":
                data = _read_exact(fh, csize, "data chunk")
            else:
                fh.seek(csize, 1)
            if csize % 2:  # chunks are word-aligned
                fh.seek(1, 1)
        if fmt is None:
            raise CorruptHeader("missing fmt chunk")
        if data is None:
            raise CorruptHeader("missing data chunk")

    audio_format, channels, sample_rate, _byte_rate, block_align, bits = fmt
    if audio_format not in (1, 3):
        raise UnsupportedFormat(f"audio format tag {audio_format} (only PCM and IEEE float)")
    if channels not in (1, 2):
        raise UnsupportedFormat(f"{channels} channels (only mono or stereo)")
    if sample_rate <= 0:
        raise CorruptHeader(f"non-positive sample rate {sample_rate}")

    if audio_format == 1 and bits == 16:
        decoded = np.frombuffer(data[: len(data) - len(data) % 2], dtype="<i2").astype(np.float64)
        decoded /= 32768.0
    elif audio_format == 1 and bits == 24:
        raw = np.frombuffer(data[: len(data) - len(data) % 3], dtype=np.uint8).reshape(-1, 3)
        vals = (
            raw[:, 0].astype(np.int32)
            | (raw[:, 1].astype(np.int32) << 8)
            | (raw[:, 2].astype(np.int32) << 16)
        )
        vals = np.where(vals >= 1 << 23, vals - (1 << 24), vals)
        decoded = vals.astype(np.float64) / float(1 << 23)
    elif audio_format == 3 and bits == 32:
        decoded = np.frombuffer(data[: len(data) - len(data) % 4], dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedFormat(f"{bits}-bit format tag {audio_format}")

    expected_align = channels * bits // 8
    if block_align != expected_align:
        raise CorruptHeader(f"block align {block_align} != channels*bytes {expected_align}")
    if len(data) % expected_align:
        raise CorruptHeader("data chunk size is not a whole number of frames")

    if channels == 2:
        decoded = decoded.reshape(-1, 2).mean(axis=1)
    if decoded.size == 0:
        raise CorruptHeader("empty data chunk")
    if not np.all(np.isfinite(decoded)):
        raise CorruptHeader("non-finite sample values")
    np.clip(decoded, -1.0, 1.0, out=decoded)
    return AudioClip(samples=decoded, sample_rate_hz=int(sample_rate), source_id=path.stem)


def save_wav(path: str | Path, clip: AudioClip) -> None:
    """Write a mono clip as 16-bit PCM WAV (inverse of the 16-bit load path)."""
    x = np.clip(np.asarray(clip.samples, dtype=np.float64), -1.0, 1.0)
    ints = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2")
    payload = ints.tobytes()
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sI4s", b"RIFF", 36 + len(payload), b"WAVE"))
        fh.write(struct.pack("<4sI", b"fmt ", 16))
        fh.write(struct.pack("<HHIIHH", 1, 1, clip.sample_rate_hz, clip.sample_rate_hz * 2, 2, 16))
        fh.write(struct.pack("<4sI", b"data", len(payload)))
        fh.write(payload)


def resample(clip: AudioClip, target_rate_hz: int) -> AudioClip:
    """Band-limited resampling with a Kaiser-windowed sinc kernel.

    The kernel keeps 32 sinc lobes per side (stretched when downsampling so
    the cutoff tracks the narrower Nyquist), and each output sample is
    normalized by its kernel sum so constant signals pass through exactly.
    Output duration equals input duration within one sample period.
    """
    if target_rate_hz <= 0:
        raise InputError(f"target rate must be positive, got {target_rate_hz}")
    if target_rate_hz == clip.sample_rate_hz:
        return AudioClip(clip.samples.copy(), clip.sample_rate_hz, clip.source_id)

    x = np.asarray(clip.samples, dtype=np.float64)
    ratio = target_rate_hz / clip.sample_rate_hz
    n_out = int(round(len(x) * ratio))
    if n_out == 0:
        return AudioClip(np.zeros(0), target_rate_hz, clip.source_id)

    scale = min(1.0, ratio)  # cutoff relative to the input rate
    half_extent = _RESAMPLE_TAPS_PER_SIDE / scale  # input samples per side
    half_taps = int(np.ceil(half_extent))
    offsets = np.arange(-half_taps, half_taps + 1)

    out = np.empty(n_out)
    i0_beta = np.i0(_RESAMPLE_KAISER_BETA)
    block = 65_536
    for start in range(0, n_out, block):
        idx_out = np.arange(start, min(start + block, n_out))
        center = idx_out / ratio  # position in input-sample units
        base = np.floor(center).astype(np.int64)
        taps = base[:, None] + offsets[None, :]
        t = taps - center[:, None]
        u = np.clip(t / half_extent, -1.0, 1.0)
        kernel = np.sinc(scale * t) * (np.i0(_RESAMPLE_KAISER_BETA * np.sqrt(1.0 - u * u)) / i0_beta)
        kernel *= np.abs(t) <= half_extent
        kernel /= kernel.sum(axis=1, keepdims=True)
        valid = (taps >= 0) & (taps < len(x))
        gathered = np.where(valid, x[np.clip(taps, 0, len(x) - 1)], 0.0)
        out[idx_out] = (gathered * kernel).sum(axis=1)

    np.clip(out, -1.0, 1.0, out=out)
    return AudioClip(out, target_rate_hz, clip.source_id)


def slice_clip(
    clip: AudioClip,
    window_s: float = SLICE_WINDOW_S,
    hop_s: float = SLICE_HOP_S,
) -> SliceSet:
    """Cut a clip into fixed-length windows.

    Slice i starts at sample round(i * hop_s * rate); a trailing remainder
    shorter than the window is discarded.  An empty result is valid.
    """
    if window_s <= 0 or hop_s <= 0:
        raise InputError("window_s and hop_s must be positive")
    sr = clip.sample_rate_hz
    n = len(clip.samples)
    w = int(np.floor(window_s * sr + 0.5))
    hop_exact = hop_s * sr

    if n < w:
        count = 0
    else:
        count = int(np.floor((n - w) / hop_exact)) + 1
        while count > 0 and int(np.floor((count - 1) * hop_exact + 0.5)) + w > n:
            count -= 1

    slices = []
    for i in range(count):
        start = int(np.floor(i * hop_exact + 0.5))
        slices.append(
            AudioClip(
                samples=clip.samples[start : start + w].copy(),
                sample_rate_hz=sr,
                source_id=f"{clip.source_id}[{i}]",
            )
        )
    return SliceSet(slices=slices, window_s=window_s, hop_s=hop_s, parent_source_id=clip.source_id)
