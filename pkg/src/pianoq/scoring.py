"""Quality profiles, expected scores, and survey statistics.

A QualityProfile maps each of the seven brands to a subjective quality
rating; the expected score of a clip is the probability-weighted mean of
those ratings.  Profiles are always loaded from JSON config, never
hard-coded, so the rating source can be swapped without touching code.
Survey ingestion reproduces the rating statistics the profile derives
from: per-piano means and Pearson correlations between registers.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    EmptySurvey,
    InputError,
    LabelOrderMismatch,
    LengthMismatch,
    UnsupportedFormat,
    ZeroVariance,
)
from .cnn import ProbabilityVector
from .labels import N_CLASSES, PIANO_LABELS

PROFILE_VERSION = 1
#: Rating columns of a survey, in storage order.
REGISTERS = ("low", "middle", "high", "overall")
SURVEY_HEADER = ["participant", "piano", "low", "middle", "high", "overall"]


@dataclass
class QualityProfile:
    """Per-brand subjective quality ratings on the 1..5 survey scale."""

    brand_labels: list[str]
    overall_q: np.ndarray  # (7,)
    register_q: np.ndarray | None  # (7, 3) low/middle/high, optional
    provenance: dict
    profile_id: str

    def __post_init__(self):
        if sorted(self.brand_labels) != sorted(PIANO_LABELS):
            raise InputError(f"profile must cover exactly the labels {PIANO_LABELS}")
        q = np.asarray(self.overall_q, dtype=np.float64)
        if q.shape != (N_CLASSES,):
            raise InputError(f"overall_q must have {N_CLASSES} entries, got shape {q.shape}")
        if np.any(q < 1.0) or np.any(q > 5.0):
            raise InputError("overall_q values must lie in [1, 5]")
        self.overall_q = q
        if self.register_q is not None:
            r = np.asarray(self.register_q, dtype=np.float64)
            if r.shape != (N_CLASSES, 3):
                raise InputError(f"register_q must be {N_CLASSES}x3, got shape {r.shape}")
            if np.any(r < 1.0) or np.any(r > 5.0):
                raise InputError("register_q values must lie in [1, 5]")
            self.register_q = r

    def to_json_dict(self) -> dict:
        d = {
            "version": PROFILE_VERSION,
            "labels": list(self.brand_labels),
            "overall_q": [float(v) for v in self.overall_q],
        }
        if self.register_q is not None:
            d["register_q"] = [[float(v) for v in row] for row in self.register_q]
        d["provenance"] = self.provenance
        return d


def _profile_digest(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canonical.encode()).hexdigest()[:16]


def load_profile(path: str | Path) -> QualityProfile:
    """Parse and validate a profile JSON file."""
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read profile {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise InputError("profile JSON must be an object")
    version = payload.get("version")
    if version != PROFILE_VERSION:
        raise UnsupportedFormat(f"profile version {version!r} not supported")
    labels = payload.get("labels")
    if not isinstance(labels, list) or len(labels) != N_CLASSES:
        raise InputError(f"profile labels must list the {N_CLASSES} brands")
    overall = payload.get("overall_q")
    if not isinstance(overall, list):
        raise InputError("profile overall_q must be a list")
    register = payload.get("register_q")
    return QualityProfile(
        brand_labels=list(labels),
        overall_q=np.asarray(overall, dtype=np.float64),
        register_q=None if register is None else np.asarray(register, dtype=np.float64),
        provenance=payload.get("provenance", {}),
        profile_id=_profile_digest(payload),
    )


def default_profile_path() -> Path:
    """The example profile shipped inside the package."""
    return Path(__file__).parent / "data" / "example_profile.json"


def expected_score(probs: ProbabilityVector, profile: QualityProfile) -> float:
    """Probability-weighted mean rating: sum of P_i * Q_i over brands.

    The probability vector is defined in the canonical brand order, so
    the profile must declare the same order.
    """
    if list(profile.brand_labels) != list(PIANO_LABELS):
        raise LabelOrderMismatch(
            f"profile order {profile.brand_labels} does not match {PIANO_LABELS}"
        )
    return float(np.dot(probs.probs, profile.overall_q))


@dataclass
class ScoreReport:
    """One scored clip: distribution, expectation, and provenance ids."""

    probabilities: ProbabilityVector
    expected_score: float
    per_slice_count: int
    profile_id: str


def make_score_report(probs: ProbabilityVector, slice_count: int, profile: QualityProfile) -> ScoreReport:
    return ScoreReport(
        probabilities=probs,
        expected_score=expected_score(probs, profile),
        per_slice_count=slice_count,
        profile_id=profile.profile_id,
    )


def score_response_dict(report: ScoreReport, model_id: str) -> dict:
    """The wire form shared by the CLI score output and the HTTP service."""
    return {
        "probabilities": {
            label: float(p) for label, p in zip(PIANO_LABELS, report.probabilities.probs)
        },
        "expected_score": float(report.expected_score),
        "slices_used": int(report.per_slice_count),
        "model_id": model_id,
        "profile_id": report.profile_id,
    }


def score_response_json(report: ScoreReport, model_id: str) -> str:
    """Compact JSON; the CLI and the service emit this byte-for-byte."""
    return json.dumps(score_response_dict(report, model_id), separators=(",", ":"))


@dataclass
class SurveyTable:
    """Dense ratings array: participant x piano x (low, middle, high, overall)."""

    ratings: np.ndarray  # (P, 7, 4) integers in 1..5
    participants: list[str]
    piano_labels: list[str]

    def __post_init__(self):
        r = np.asarray(self.ratings)
        if r.ndim != 3 or r.shape[1:] != (N_CLASSES, len(REGISTERS)):
            raise InputError(f"ratings must be (P, {N_CLASSES}, {len(REGISTERS)}), got {r.shape}")
        if r.shape[0] != len(self.participants):
            raise InputError("participant list does not match ratings rows")
        if np.any((r < 1) | (r > 5)):
            raise InputError("ratings must be integers in 1..5")
        self.ratings = r.astype(np.int64)

    @property
    def participant_count(self) -> int:
        return int(self.ratings.shape[0])


def read_survey_csv(path: str | Path) -> SurveyTable:
    """Load `participant,piano,low,middle,high,overall` rows into a table.

    Every participant must rate every piano exactly once.
    """
    import csv

    by_participant: dict[str, dict[str, list[int]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SURVEY_HEADER:
            raise InputError(f"survey header must be {','.join(SURVEY_HEADER)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise InputError(f"survey line {lineno}: expected 6 columns, got {len(row)}")
            participant, piano = row[0], row[1]
            if piano not in PIANO_LABELS:
                raise InputError(f"survey line {lineno}: unknown piano {piano!r}")
            try:
                values = [int(v) for v in row[2:]]
            except ValueError as exc:
                raise InputError(f"survey line {lineno}: ratings must be integers") from exc
            if any(v < 1 or v > 5 for v in values):
                raise InputError(f"survey line {lineno}: ratings must be in 1..5")
            pianos = by_participant.setdefault(participant, {})
            if piano in pianos:
                raise InputError(f"survey line {lineno}: duplicate rating for {participant}/{piano}")
            pianos[piano] = values
    if not by_participant:
        raise EmptySurvey(f"survey {path} has no ratings")
    participants = list(by_participant)
    ratings = np.zeros((len(participants), N_CLASSES, len(REGISTERS)), dtype=np.int64)
    for i, name in enumerate(participants):
        pianos = by_participant[name]
        missing = set(PIANO_LABELS) - set(pianos)
        if missing:
            raise InputError(f"participant {name!r} is missing ratings for {sorted(missing)}")
        for j, label in enumerate(PIANO_LABELS):
            ratings[i, j] = pianos[label]
    return SurveyTable(ratings=ratings, participants=participants, piano_labels=list(PIANO_LABELS))


def aggregate_survey(table: SurveyTable) -> QualityProfile:
    """Mean rating over participants per piano, overall and per register."""
    if table.participant_count < 1:
        raise EmptySurvey("survey has no participants")
    means = table.ratings.mean(axis=0)  # (7, 4)
    payload = {
        "version": PROFILE_VERSION,
        "labels": list(table.piano_labels),
        "overall_q": [float(v) for v in means[:, 3]],
        "register_q": [[float(v) for v in row] for row in means[:, :3]],
        "provenance": {"source": "survey aggregation", "participants": table.participant_count},
    }
    return QualityProfile(
        brand_labels=list(table.piano_labels),
        overall_q=means[:, 3],
        register_q=means[:, :3],
        provenance=payload["provenance"],
        profile_id=_profile_digest(payload),
    )


def pearson_corr(x, y) -> float:
    """Pearson correlation: centered dot product over deviation norms."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.ndim != 1 or ya.ndim != 1:
        raise InputError("inputs must be one-dimensional sequences")
    if xa.size != ya.size:
        raise LengthMismatch(f"length {xa.size} vs {ya.size}")
    if xa.size < 2:
        raise InputError("need at least 2 points")
    if np.ptp(xa) == 0.0 or np.ptp(ya) == 0.0:
        raise ZeroVariance("correlation undefined for a constant sequence")
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    return float(np.dot(dx, dy) / np.sqrt(np.dot(dx, dx) * np.dot(dy, dy)))


def correlation_matrix(table: SurveyTable) -> np.ndarray:
    """4x4 Pearson matrix over the per-piano mean ratings of each register.

    Order follows REGISTERS; symmetric with an exact unit diagonal.
    """
    means = table.ratings.mean(axis=0)  # (7, 4)
    k = len(REGISTERS)
    out = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            r = pearson_corr(means[:, i], means[:, j])
            out[i, j] = r
            out[j, i] = r
    return out
