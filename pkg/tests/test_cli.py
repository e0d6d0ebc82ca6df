"""End-to-end tests of the command-line interface.

Each test drives main() with real files in a temp directory and checks
exit codes, artifacts, and stdout.
"""

import csv
import json

import numpy as np
import pytest

from pianoq.audio import WORKING_RATE_HZ, AudioClip, save_wav
from pianoq.checkpoint import save_model
from pianoq.cli import main, resolve_port
from pianoq.cnn import MicroCnn
from pianoq.errors import InputError
from pianoq.labels import PIANO_LABELS


def write_tone(path, duration_s, freq_hz=440.0, seed=0, rate=WORKING_RATE_HZ):
    rng = np.random.default_rng(seed)
    t = np.arange(int(duration_s * rate)) / rate
    x = 0.4 * np.sin(2 * np.pi * freq_hz * t)
    x += 0.2 * np.sin(2 * np.pi * 2 * freq_hz * t)
    x += 0.005 * rng.normal(size=t.size)
    clip = AudioClip(samples=np.clip(x, -1, 1), sample_rate_hz=rate, source_id=path.stem)
    save_wav(path, clip)
    return path


@pytest.fixture(scope="module")
def model_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "random.pqm"
    save_model(path, MicroCnn.initialize(np.random.default_rng(5)))
    return path


@pytest.fixture(scope="module")
def onehot_model_path(tmp_path_factory):
    """A model whose output is one-hot Steinway regardless of input."""
    model = MicroCnn.initialize(np.random.default_rng(6))
    model.fc_w = np.zeros_like(model.fc_w)
    bias = np.zeros_like(model.fc_b)
    bias[PIANO_LABELS.index("Steinway")] = 50.0
    model.fc_b = bias
    path = tmp_path_factory.mktemp("model") / "steinway.pqm"
    save_model(path, model)
    return path


class TestSlice:
    def test_three_second_fixture_yields_fifteen_files(self, tmp_path, capsys):
        wav = write_tone(tmp_path / "in.wav", 3.0)
        out = tmp_path / "slices"
        assert main(["slice", str(wav), "--out", str(out)]) == 0
        names = sorted(p.name for p in out.glob("*.wav"))
        assert names == [f"slice_{i:03d}.wav" for i in range(15)]
        assert "15 slices" in capsys.readouterr().out

    def test_short_clip_fails_with_input_code(self, tmp_path, capsys):
        wav = write_tone(tmp_path / "in.wav", 0.1)
        assert main(["slice", str(wav), "--out", str(tmp_path / "s")]) == 2
        assert capsys.readouterr().err.strip()

    def test_missing_file_fails_with_input_code(self, tmp_path):
        assert main(["slice", str(tmp_path / "nope.wav"), "--out", str(tmp_path / "s")]) == 2


class TestMelspec:
    def test_csv_export_has_frame_rows(self, tmp_path):
        wav = write_tone(tmp_path / "in.wav", 0.5)
        out = tmp_path / "mel.csv"
        assert main(["melspec", str(wav), "--out", str(out)]) == 0
        rows = [r for r in out.read_text().splitlines() if r]
        assert len(rows) == 1 + 22050 // 256
        assert all(len(r.split(",")) == 128 for r in rows)

    def test_pgm_export_has_image_header(self, tmp_path):
        wav = write_tone(tmp_path / "in.wav", 0.5)
        out = tmp_path / "mel.pgm"
        assert main(["melspec", str(wav), "--out", str(out)]) == 0
        data = out.read_bytes()
        assert data.startswith(b"P5\n")
        assert b"87 128\n255\n" in data[:20]

    def test_unknown_suffix_is_a_usage_error(self, tmp_path):
        wav = write_tone(tmp_path / "in.wav", 0.5)
        assert main(["melspec", str(wav), "--out", str(tmp_path / "mel.png")]) == 1


@pytest.fixture()
def erb_dir(tmp_path):
    d = tmp_path / "wavs"
    d.mkdir()
    write_tone(d / "Steinway_10.wav", 0.3, freq_hz=262.0, seed=1)
    write_tone(d / "Steinway_22.wav", 0.3, freq_hz=524.0, seed=2)
    write_tone(d / "Kawai_10.wav", 0.3, freq_hz=262.0, seed=3)
    write_tone(d / "misc.wav", 0.3, freq_hz=330.0, seed=4)
    return d


class TestErb:
    def test_writes_clip_rows_and_brand_averages(self, erb_dir, tmp_path):
        out = tmp_path / "erb.csv"
        assert main(["erb", str(erb_dir), "--duration", "1.0", "--out", str(out)]) == 0
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        header, data = rows[0], rows[1:]
        assert header[:4] == ["kind", "name", "brand", "pitch"]
        assert len(header) == 4 + 77
        kinds = [r[0] for r in data]
        assert kinds.count("clip") == 4
        assert kinds.count("brand_average") == 2
        averages = {r[1] for r in data if r[0] == "brand_average"}
        assert averages == {"Steinway", "Kawai"}
        misc = next(r for r in data if r[1] == "misc")
        assert misc[2] == "" and misc[3] == ""

    def test_empty_directory_fails_with_input_code(self, tmp_path):
        d = tmp_path / "empty"
        d.mkdir()
        assert main(["erb", str(d), "--out", str(tmp_path / "e.csv")]) == 2


class TestEmbed:
    def test_pca_on_erb_output_carries_text_columns(self, erb_dir, tmp_path):
        erb_csv = tmp_path / "erb.csv"
        assert main(["erb", str(erb_dir), "--duration", "1.0", "--out", str(erb_csv)]) == 0
        out = tmp_path / "pca.csv"
        assert main(["embed", str(erb_csv), "--method", "pca", "--out", str(out)]) == 0
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["kind", "name", "brand", "pitch", "x", "y"]
        assert len(rows) == 1 + 6
        for r in rows[1:]:
            float(r[4]), float(r[5])

    def test_tsne_on_plain_numeric_csv_is_deterministic(self, tmp_path):
        rng = np.random.default_rng(9)
        src = tmp_path / "points.csv"
        with open(src, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["v0", "v1", "v2"])
            writer.writerows(rng.normal(size=(8, 3)).tolist())
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["embed", str(src), "--method", "tsne", "--seed", "1", "--out", str(a)]) == 0
        assert main(["embed", str(src), "--method", "tsne", "--seed", "1", "--out", str(b)]) == 0
        assert a.read_text() == b.read_text()
        assert len(a.read_text().splitlines()) == 1 + 8

    def test_too_few_points_fails_with_input_code(self, tmp_path):
        src = tmp_path / "one.csv"
        src.write_text("v0,v1\n1.0,2.0\n")
        assert main(["embed", str(src), "--method", "pca", "--out", str(tmp_path / "o.csv")]) == 2


@pytest.fixture(scope="module")
def small_manifest(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    rows = []
    for i in range(21):
        label = PIANO_LABELS[i % 7]
        name = f"s{i:02d}.wav"
        write_tone(d / name, 0.65, freq_hz=220.0 * 2 ** (i / 12.0), seed=100 + i)
        rows.append([name, label, f"s{i:02d}"])
    manifest = d / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "label", "source_id"])
        writer.writerows(rows)
    return manifest


class TestTrainEval:
    def test_train_then_eval_round_trip(self, small_manifest, tmp_path, capsys):
        model_out = tmp_path / "tiny.pqm"
        rc = main(
            [
                "train",
                str(small_manifest),
                "--gamma",
                "0",
                "--seed",
                "0",
                "--epochs",
                "2",
                "--out",
                str(model_out),
            ]
        )
        assert rc == 0
        assert model_out.exists()
        history = (tmp_path / "tiny.history.csv").read_text().splitlines()
        assert history[0] == "epoch,train_loss,train_accuracy,val_loss,val_accuracy"
        assert len(history) == 3
        assert "best val accuracy" in capsys.readouterr().out

        metrics_out = tmp_path / "metrics.json"
        rc = main(["eval", str(model_out), str(small_manifest), "--out", str(metrics_out)])
        assert rc == 0
        payload = json.loads(metrics_out.read_text())
        assert 0.0 <= payload["accuracy"] <= 1.0
        assert 0.0 <= payload["weighted_f1"] <= 1.0
        assert payload["labels"] == list(PIANO_LABELS)
        confusion = np.asarray(payload["confusion"])
        assert confusion.shape == (7, 7)
        assert confusion.sum() == 21 * 3

    def test_eval_missing_model_fails_with_input_code(self, small_manifest, tmp_path):
        rc = main(["eval", str(tmp_path / "no.pqm"), str(small_manifest), "--out", str(tmp_path / "m.json")])
        assert rc == 2


class TestScore:
    def test_onehot_steinway_scores_the_published_rating(self, onehot_model_path, tmp_path, capsys):
        wav = write_tone(tmp_path / "clip.wav", 1.0)
        from pianoq.scoring import default_profile_path

        rc = main(
            ["score", str(onehot_model_path), str(wav), "--profile", str(default_profile_path())]
        )
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["expected_score"] == 3.93
        assert list(payload["probabilities"]) == list(PIANO_LABELS)
        assert payload["slices_used"] == 5
        assert payload["model_id"].startswith("sha256:")
        assert payload["profile_id"].startswith("sha256:")

    def test_short_clip_fails_with_input_code(self, model_path, tmp_path):
        wav = write_tone(tmp_path / "clip.wav", 0.1)
        from pianoq.scoring import default_profile_path

        rc = main(["score", str(model_path), str(wav), "--profile", str(default_profile_path())])
        assert rc == 2


def write_survey(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["participant", "piano", "low", "middle", "high", "overall"])
        writer.writerows(rows)


class TestSurvey:
    def test_two_participant_fixture_means(self, tmp_path, capsys):
        rng = np.random.default_rng(13)
        rows = []
        for person in ("p1", "p2"):
            for label in PIANO_LABELS:
                if label == "PearlRiver":
                    v = 2 if person == "p1" else 4
                    rows.append([person, label, v, v, v, v])
                else:
                    rows.append([person, label] + list(rng.integers(1, 6, size=4)))
        ratings = tmp_path / "ratings.csv"
        write_survey(ratings, rows)
        out = tmp_path / "stats.json"
        assert main(["survey", str(ratings), "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["participants"] == 2
        assert payload["overall_mean"][PIANO_LABELS.index("PearlRiver")] == 3.0
        corr = np.asarray(payload["correlation"])
        assert corr.shape == (4, 4)
        np.testing.assert_array_equal(np.diag(corr), np.ones(4))

    def test_constant_ratings_fail_with_numeric_code(self, tmp_path, capsys):
        rows = [["p1", label, 3, 3, 3, 3] for label in PIANO_LABELS]
        ratings = tmp_path / "ratings.csv"
        write_survey(ratings, rows)
        assert main(["survey", str(ratings), "--out", str(tmp_path / "s.json")]) == 3
        assert capsys.readouterr().err.strip()


class TestUsage:
    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 1
        assert capsys.readouterr().err.strip()

    def test_missing_required_flag(self, tmp_path):
        assert main(["slice", str(tmp_path / "x.wav")]) == 1

    def test_no_subcommand(self):
        assert main([]) == 1


class TestPortResolution:
    def test_default_when_unset(self):
        assert resolve_port(None, env={}) == 8000

    def test_env_variable_applies(self):
        assert resolve_port(None, env={"PIANOQ_PORT": "7001"}) == 7001

    def test_flag_overrides_env(self):
        assert resolve_port(9000, env={"PIANOQ_PORT": "7001"}) == 9000

    def test_bad_env_value_is_input_error(self):
        with pytest.raises(InputError):
            resolve_port(None, env={"PIANOQ_PORT": "not-a-port"})
