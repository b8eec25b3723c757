"""Listening-experiment harness for mission-critical voice systems.

Generates spelling-alphabet plate recordings, impairs them through a
burst-error channel pipeline, serves listening sessions over HTTP to humans
and machine subjects, and scores the answers with edit-distance metrics.
"""

from .model import (
    DEFAULT_LEAD,
    AnswerRecord,
    ExperimentManifest,
    ImpairmentSpec,
    LicensePlate,
    NatoLexicon,
    RecordingEntry,
    Session,
    generate_plate,
    plate_to_nato,
    validate_manifest,
)
from .scoring import (
    ScoreReport,
    experiment_score,
    lev_score,
    levenshtein,
    score_with_truth,
    score_without_truth,
    truncated_distance,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_LEAD",
    "AnswerRecord",
    "ExperimentManifest",
    "ImpairmentSpec",
    "LicensePlate",
    "NatoLexicon",
    "RecordingEntry",
    "ScoreReport",
    "Session",
    "experiment_score",
    "generate_plate",
    "lev_score",
    "levenshtein",
    "plate_to_nato",
    "score_with_truth",
    "score_without_truth",
    "truncated_distance",
    "validate_manifest",
]
