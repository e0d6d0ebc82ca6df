"""Synthetic corpus: note construction, determinism, and disk layout."""

import functools

import numpy as np
import pytest

from pianoq.audio import WORKING_RATE_HZ, load_wav
from pianoq.dataset import read_manifest
from pianoq.labels import N_CLASSES, PIANO_LABELS
from pianoq.synth import (
    BRAND_VOICES,
    NOTE_DURATION_S,
    NOTES_PER_BRAND,
    note_frequency_hz,
    synth_corpus,
    synth_dataset_index,
    synth_note,
    write_corpus,
)


@functools.lru_cache(maxsize=1)
def corpus0():
    return synth_corpus(seed=0)


@functools.lru_cache(maxsize=1)
def index0():
    return synth_dataset_index()


class TestNoteFrequency:
    def test_a0_and_octaves(self):
        np.testing.assert_allclose(note_frequency_hz(0), 27.5)
        np.testing.assert_allclose(note_frequency_hz(12), 55.0)
        np.testing.assert_allclose(note_frequency_hz(48), 440.0, rtol=1e-12)

    def test_semitone_ratio(self):
        r = note_frequency_hz(31) / note_frequency_hz(30)
        np.testing.assert_allclose(r, 2.0 ** (1.0 / 12.0), rtol=1e-12)


class TestSynthNote:
    def test_shape_and_normalization(self):
        note = synth_note("Kawai", 40, np.random.default_rng(0))
        assert note.clip.sample_rate_hz == WORKING_RATE_HZ
        assert len(note.clip.samples) == round(NOTE_DURATION_S * WORKING_RATE_HZ)
        np.testing.assert_allclose(np.abs(note.clip.samples).max(), 0.7, rtol=1e-12)

    def test_source_id_embeds_label_and_pitch(self):
        note = synth_note("Steinway", 7, np.random.default_rng(1))
        assert note.clip.source_id == "Steinway_07"
        assert note.label == "Steinway"
        assert note.pitch == 7

    def test_spectrum_peaks_near_stretched_partials(self):
        """The second partial sits at 2 f0 sqrt(1 + 4B), not at 2 f0."""
        label = "Steinway"  # largest inharmonicity
        b = BRAND_VOICES[label][0]
        note = synth_note(label, 40, np.random.default_rng(2))
        x = note.clip.samples
        spec = np.abs(np.fft.rfft(x * np.hanning(len(x))))
        freqs = np.fft.rfftfreq(len(x), 1.0 / WORKING_RATE_HZ)
        f0 = note_frequency_hz(40)
        expected = 2.0 * f0 * np.sqrt(1.0 + 4.0 * b)
        window = (freqs > expected - 15) & (freqs < expected + 15)
        naive = (freqs > 2 * f0 - 15) & (freqs < 2 * f0 + 15)
        assert spec[window].max() > 3.0 * spec[naive].max()

    def test_brand_tilt_orders_high_band_energy(self):
        """Brighter brands put more energy above 2 kHz at the same note."""
        energies = []
        for label in ("PearlRiver", "Hsinghai", "Kawai-G"):
            note = synth_note(label, 30, np.random.default_rng(3))
            spec = np.abs(np.fft.rfft(note.clip.samples)) ** 2
            freqs = np.fft.rfftfreq(len(note.clip.samples), 1.0 / WORKING_RATE_HZ)
            frac = spec[freqs > 2000].sum() / spec.sum()
            energies.append(frac)
        assert energies[0] > energies[1] > energies[2]

    def test_unknown_label_raises(self):
        with pytest.raises(KeyError):
            synth_note("Bechstein", 10, np.random.default_rng(4))


class TestCorpus:
    def test_size_and_coverage(self):
        notes = corpus0()
        assert len(notes) == N_CLASSES * NOTES_PER_BRAND
        labels = {n.label for n in notes}
        assert labels == set(PIANO_LABELS)
        ids = {n.clip.source_id for n in notes}
        assert len(ids) == len(notes)

    def test_deterministic_given_seed(self):
        a = corpus0()
        b = synth_corpus(seed=0)
        np.testing.assert_array_equal(a[100].clip.samples, b[100].clip.samples)
        # a different seed must change the noise realization
        c = synth_note("PearlRiver", 0, np.random.default_rng(99))
        assert not np.array_equal(a[0].clip.samples, c.clip.samples)

    def test_index_splits_cover_all_sources(self):
        index = index0()
        n_sources = N_CLASSES * NOTES_PER_BRAND
        assert len(index.split) == n_sources
        sizes = {name: len(index.subset(name)) for name in ("train", "val", "test")}
        total = sum(sizes.values())
        assert total == len(index.entries)
        assert sizes["train"] > 4 * sizes["val"]

    def test_no_source_straddles_splits(self):
        index = index0()
        placement = {}
        for name in ("train", "val", "test"):
            for _, _, sid in index.subset(name):
                assert placement.setdefault(sid, name) == name


class TestWriteCorpus:
    def test_manifest_and_wavs_round_trip(self, tmp_path):
        out = tmp_path / "corpus"
        manifest = write_corpus(out, seed=0)
        rows = read_manifest(manifest)
        assert len(rows) == N_CLASSES * NOTES_PER_BRAND
        path, label, source_id = rows[0]
        clip = load_wav(out / path)
        assert clip.sample_rate_hz == WORKING_RATE_HZ
        assert label in PIANO_LABELS
        # 16-bit quantization error only
        fresh = synth_note(label, int(source_id.split("_")[1]), np.random.default_rng(0))
        assert abs(len(clip.samples) - len(fresh.clip.samples)) == 0
