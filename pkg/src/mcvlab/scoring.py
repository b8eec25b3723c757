"""Edit-distance primitives and transcription accuracy metrics.

All scores live in [0, 1]; 1.0 means a perfect answer. Per-recording scores
come in two flavors: against a known ground truth (normalized Levenshtein
similarity) and without one (how NATO-like the transcribed tokens were).
"""

from __future__ import annotations

from dataclasses import dataclass, field


def levenshtein(a: str, b: str) -> int:
    """Minimum number of insertions, deletions, and substitutions turning a into b."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    # Two-row DP over the standard recurrence.
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[-1]


def lev_score(x: str, token: str) -> float:
    """Similarity score 1 - lev(x, token) / max(len(x), len(token)).

    Both strings empty is defined as 1.0 (identical).
    """
    longest = max(len(x), len(token))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(x, token) / longest


def score_with_truth(number: str, correct: str) -> float:
    """Per-recording score when the ground truth is known.

    Case differences are not forgiven here; callers normalize answers first.
    """
    if not correct:
        raise ValueError("ground truth must be nonempty")
    return lev_score(number, correct)


def score_without_truth(scores: list[float], *, use_sum: bool = False) -> float:
    """Per-recording score from per-token best match scores when no truth exists.

    Default is the arithmetic mean, which keeps the experiment score inside
    [0, 1]. use_sum=True gives the literal sum of token scores instead
    (compatibility behavior; may exceed 1). Empty input scores 0.0.
    """
    if not scores:
        return 0.0
    total = float(sum(scores))
    return total if use_sum else total / len(scores)


def experiment_score(per_recording: list[float]) -> float:
    """Mean per-recording score over an experiment run."""
    if not per_recording:
        raise ValueError("experiment has no recordings to score")
    return sum(per_recording) / len(per_recording)


def truncated_distance(answer: str, correct: str, cap: int = 6) -> int:
    """Levenshtein distance truncated at cap (default 6, the plate length)."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    return min(levenshtein(answer, correct), cap)


@dataclass
class RecordingScore:
    recording_id: str
    s_n: float
    levenshtein_raw: int | None = None
    levenshtein_truncated: int | None = None

    def to_dict(self) -> dict:
        return {
            "recording_id": self.recording_id,
            "s_n": self.s_n,
            "levenshtein_raw": self.levenshtein_raw,
            "levenshtein_truncated": self.levenshtein_truncated,
        }


@dataclass
class ScoreReport:
    """Per-recording scores plus their mean over the experiment run."""

    mode: str  # "with_ground_truth" | "without_ground_truth"
    per_recording: list[RecordingScore] = field(default_factory=list)

    @property
    def experiment_score(self) -> float:
        return experiment_score([r.s_n for r in self.per_recording])

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "per_recording": [r.to_dict() for r in self.per_recording],
            "experiment_score": self.experiment_score,
        }


def report_with_truth(answers: list[tuple[str, str, str]], cap: int = 6) -> ScoreReport:
    """Score (recording_id, answer, ground_truth) triples against their truths."""
    report = ScoreReport(mode="with_ground_truth")
    for recording_id, answer, correct in answers:
        raw = levenshtein(answer, correct)
        report.per_recording.append(
            RecordingScore(
                recording_id=recording_id,
                s_n=score_with_truth(answer, correct),
                levenshtein_raw=raw,
                levenshtein_truncated=min(raw, cap),
            )
        )
    return report


def report_without_truth(
    token_scores: list[tuple[str, list[float]]], *, use_sum: bool = False
) -> ScoreReport:
    """Score (recording_id, per-token best scores) pairs with no ground truth."""
    report = ScoreReport(mode="without_ground_truth")
    for recording_id, scores in token_scores:
        report.per_recording.append(
            RecordingScore(recording_id=recording_id, s_n=score_without_truth(scores, use_sum=use_sum))
        )
    return report
