"""Command-line front door for every pipeline stage.

Each subcommand wraps one module: slicing, mel export, ERB analysis,
2-D embedding, training, evaluation, clip scoring, survey statistics,
and the HTTP service.  Exit codes: 0 success, 1 usage error, 2 input or
file-format error, 3 numeric or internal error; failures print a
one-line diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
from pathlib import Path

import numpy as np

from .audio import WORKING_RATE_HZ, load_wav, resample, save_wav, slice_clip
from .checkpoint import load_model, model_id, save_model
from .dataset import index_from_manifest
from .embedding import pca_2d, tsne_2d
from .erb import DURATION_MODES, build_filterbank, erb_representation, summarize_brand
from .errors import InputError, NumericError, TooShort
from .labels import PIANO_LABELS
from .predict import score_clip
from .scoring import (
    REGISTERS,
    aggregate_survey,
    correlation_matrix,
    load_profile,
    read_survey_csv,
    score_response_json,
)
from .spectral import mel_spectrogram, mel_to_csv, mel_to_pgm_bytes
from .training import TrainConfig, evaluate, history_to_csv, train

DEFAULT_PORT = 8000


class UsageError(Exception):
    """Bad command line (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _ingest(path):
    clip = load_wav(path)
    if clip.sample_rate_hz != WORKING_RATE_HZ:
        clip = resample(clip, WORKING_RATE_HZ)
    return clip


def _cmd_slice(args) -> int:
    clip = _ingest(args.wav)
    pieces = slice_clip(clip)
    if len(pieces) == 0:
        raise TooShort(f"{args.wav} is shorter than one slice window")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, piece in enumerate(pieces):
        save_wav(out / f"slice_{i:03d}.wav", piece)
    print(f"wrote {len(pieces)} slices to {out}")
    return 0


def _cmd_melspec(args) -> int:
    out = Path(args.out)
    if out.suffix not in (".csv", ".pgm"):
        raise UsageError("--out must end in .csv or .pgm")
    clip = _ingest(args.wav)
    mel = mel_spectrogram(clip.samples, WORKING_RATE_HZ)
    if out.suffix == ".csv":
        out.write_text(mel_to_csv(mel))
    else:
        out.write_bytes(mel_to_pgm_bytes(mel))
    print(f"wrote {mel.values.shape[0]} frames x {mel.values.shape[1]} bands to {out}")
    return 0


def _parse_corpus_stem(stem: str):
    """Split 'Brand_07' style names; returns (brand, pitch) or (None, None)."""
    brand, _, tail = stem.rpartition("_")
    if brand in PIANO_LABELS and tail.isdigit():
        return brand, int(tail)
    return None, None


def _cmd_erb(args) -> int:
    wav_dir = Path(args.wav_dir)
    paths = sorted(wav_dir.glob("*.wav"))
    if not paths:
        raise InputError(f"no .wav files in {wav_dir}")
    bank = build_filterbank(WORKING_RATE_HZ)
    header = ["kind", "name", "brand", "pitch"] + [f"c{i:02d}" for i in range(len(bank.center_freqs_hz))]
    rows = []
    by_brand: dict[str, dict[int, object]] = {}
    for path in paths:
        clip = _ingest(path)
        rep = erb_representation(clip.samples, bank, duration_mode=args.duration)
        brand, pitch = _parse_corpus_stem(path.stem)
        if brand is not None:
            by_brand.setdefault(brand, {})[pitch] = rep
        rows.append(
            ["clip", path.stem, brand or "", "" if pitch is None else str(pitch)]
            + [f"{v:.8g}" for v in rep.time_mean]
        )
    for brand in PIANO_LABELS:
        if brand in by_brand:
            summary = summarize_brand(by_brand[brand], brand)
            rows.append(
                ["brand_average", brand, brand, ""] + [f"{v:.8g}" for v in summary.brand_average]
            )
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {len(rows)} ERB rows to {args.out}")
    return 0


def _load_feature_csv(path):
    """Feature matrix plus pass-through columns from a headed CSV.

    Columns named c<digits> are the features; if none exist, every column
    whose cells all parse as numbers is used instead.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        data = [row for row in reader if row]
    if header is None or not data:
        raise InputError(f"{path} has no data rows")
    if any(len(row) != len(header) for row in data):
        raise InputError(f"{path} has ragged rows")

    def numeric(col):
        try:
            for row in data:
                float(row[col])
        except ValueError:
            return False
        return True

    feature_cols = [i for i, h in enumerate(header) if re.fullmatch(r"c\d+", h)]
    if not feature_cols:
        feature_cols = [i for i in range(len(header)) if numeric(i)]
    if not feature_cols:
        raise InputError(f"{path} has no numeric feature columns")
    carry_cols = [i for i in range(len(header)) if i not in feature_cols]
    points = np.array([[float(row[i]) for i in feature_cols] for row in data])
    carried = [[row[i] for i in carry_cols] for row in data]
    return points, [header[i] for i in carry_cols], carried


def _cmd_embed(args) -> int:
    points, carry_header, carried = _load_feature_csv(args.csv)
    if args.method == "pca":
        emb = pca_2d(points)
    else:
        emb = tsne_2d(points, seed=args.seed)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(carry_header + ["x", "y"])
        for extra, (x, y) in zip(carried, emb.points):
            writer.writerow(extra + [f"{x:.8g}", f"{y:.8g}"])
    print(f"wrote {emb.method} embedding of {len(emb.points)} points to {args.out}")
    return 0


def _cmd_train(args) -> int:
    index = index_from_manifest(args.manifest, seed=args.seed)
    config = TrainConfig(gamma=args.gamma, seed=args.seed, epochs=args.epochs)
    model, history = train(index, config)
    save_model(args.out, model)
    history_path = Path(args.out).with_suffix(".history.csv")
    history_path.write_text(history_to_csv(history))
    best_val = max(h.val_accuracy for h in history)
    print(
        f"trained {model_id(model)}: best val accuracy {best_val:.4f}; "
        f"model {args.out}, history {history_path}"
    )
    return 0


def _cmd_eval(args) -> int:
    model = load_model(args.model)
    index = index_from_manifest(args.manifest, seed=0)
    index.split = {source: "test" for source in index.split}
    metrics = evaluate(model, index, split="test")
    payload = {
        "accuracy": metrics.accuracy,
        "weighted_f1": metrics.weighted_f1,
        "labels": list(PIANO_LABELS),
        "confusion": metrics.confusion.tolist(),
        "support": metrics.support.tolist(),
    }
    Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    print(
        f"accuracy {metrics.accuracy:.4f}, weighted F1 {metrics.weighted_f1:.4f}; "
        f"metrics {args.out}"
    )
    return 0


def _cmd_score(args) -> int:
    model = load_model(args.model)
    profile = load_profile(args.profile)
    clip = _ingest(args.wav)
    report = score_clip(model, clip, profile)
    print(score_response_json(report, model_id(model)))
    return 0


def _cmd_survey(args) -> int:
    table = read_survey_csv(args.ratings)
    profile = aggregate_survey(table)
    corr = correlation_matrix(table)
    payload = {
        "participants": table.participant_count,
        "labels": list(table.piano_labels),
        "registers": list(REGISTERS),
        "overall_mean": profile.overall_q.tolist(),
        "register_means": profile.register_q.tolist(),
        "correlation": corr.tolist(),
    }
    Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    print(f"aggregated {table.participant_count} participants; stats {args.out}")
    return 0


def resolve_port(cli_port, env=os.environ) -> int:
    """--port wins; else PIANOQ_PORT; else the default."""
    if cli_port is not None:
        return cli_port
    raw = env.get("PIANOQ_PORT")
    if raw is None:
        return DEFAULT_PORT
    try:
        return int(raw)
    except ValueError as exc:
        raise InputError(f"PIANOQ_PORT must be an integer, got {raw!r}") from exc


def _cmd_serve(args) -> int:
    from .service import create_app

    import uvicorn

    app = create_app(args.model, args.profile, dev_cors=args.dev_cors)
    uvicorn.run(app, host=args.host, port=resolve_port(args.port))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="pianoq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("slice", help="cut a WAV into 0.2 s slice files")
    p.add_argument("wav")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_slice)

    p = sub.add_parser("melspec", help="export a mel spectrogram as CSV or PGM")
    p.add_argument("wav")
    p.add_argument("--out", required=True, help="output file (.csv or .pgm)")
    p.set_defaults(func=_cmd_melspec)

    p = sub.add_parser("erb", help="ERB representations and brand summaries for a WAV directory")
    p.add_argument("wav_dir")
    p.add_argument("--duration", choices=DURATION_MODES, default="full")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=_cmd_erb)

    p = sub.add_parser("embed", help="2-D embedding of a feature CSV")
    p.add_argument("csv")
    p.add_argument("--method", choices=("pca", "tsne"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("train", help="train the classifier from a manifest CSV")
    p.add_argument("manifest")
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--out", required=True, help="output model (.pqm)")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a model over every manifest row")
    p.add_argument("model")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="output metrics JSON")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("score", help="score one WAV against a quality profile")
    p.add_argument("model")
    p.add_argument("wav")
    p.add_argument("--profile", required=True, help="profile JSON")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("survey", help="aggregate a ratings CSV into statistics")
    p.add_argument("ratings")
    p.add_argument("--out", required=True, help="output stats JSON")
    p.set_defaults(func=_cmd_survey)

    p = sub.add_parser("serve", help="start the HTTP scoring service")
    p.add_argument("--model", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--dev-cors", action="store_true")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            raise UsageError("a subcommand is required (see --help)")
        return args.func(args)
    except UsageError as exc:
        print(f"pianoq: {exc}", file=sys.stderr)
        return 1
    except (InputError, OSError) as exc:
        print(f"pianoq: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"pianoq: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # internal failure; keep the diagnostic to one line
        print(f"pianoq: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
