"""Descriptive analysis of exported results and multiple-comparison control.

Produces per-condition accuracy cells and a tidy one-row-per-trial table
sized for external statistics software; inferential modeling stays out of
this tool. Distances are truncated at the plate length (6) and normalized
by the same cap for graphing.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .scoring import truncated_distance

DISTANCE_CAP = 6

TRIAL_COLUMNS = ["session_id", "subject_type", "codec", "burst_k", "frame_drop_p", "truncated_distance"]
CELL_COLUMNS = [
    "codec", "burst_k", "subject_type", "n_trials",
    "mean_truncated_distance", "mean_normalized_distance", "mean_correctness",
]


class ResultsFormatError(Exception):
    """The results document is not an export this tool understands."""


@dataclass
class ConditionCell:
    codec: str
    burst_k: int
    subject_type: str
    n_trials: int
    mean_truncated_distance: float
    mean_normalized_distance: float
    mean_correctness: float

    def to_row(self) -> dict:
        return {
            "codec": self.codec,
            "burst_k": self.burst_k,
            "subject_type": self.subject_type,
            "n_trials": self.n_trials,
            "mean_truncated_distance": self.mean_truncated_distance,
            "mean_normalized_distance": self.mean_normalized_distance,
            "mean_correctness": self.mean_correctness,
        }


def trial_rows(results: dict) -> list[dict]:
    """One row per answered trial with a known ground truth."""
    try:
        sessions = results["sessions"]
    except (TypeError, KeyError) as exc:
        raise ResultsFormatError("results document has no 'sessions' list") from exc
    rows = []
    for session in sessions:
        try:
            session_id = session["session_id"]
            answers = session["answers"]
        except (TypeError, KeyError) as exc:
            raise ResultsFormatError("session entry missing session_id/answers") from exc
        for row in answers:
            truth = row.get("ground_truth")
            if not truth:
                continue
            try:
                rows.append({
                    "session_id": session_id,
                    "subject_type": row["subject_type"],
                    "codec": row["codec"],
                    "burst_k": int(row["burst_k"]),
                    "frame_drop_p": float(row["frame_drop_p"]),
                    "truncated_distance": truncated_distance(
                        row["normalized_plate"], truth, DISTANCE_CAP
                    ),
                    "correct": row["normalized_plate"] == truth,
                })
            except (TypeError, KeyError, ValueError) as exc:
                raise ResultsFormatError(f"malformed answer row: {exc}") from exc
    return rows


def tabulate(results: dict) -> list[ConditionCell]:
    """Aggregate trials into one cell per (codec, burst_k, subject_type)."""
    groups: dict[tuple, list[dict]] = {}
    for row in trial_rows(results):
        key = (row["codec"], row["burst_k"], row["subject_type"])
        groups.setdefault(key, []).append(row)
    cells = []
    for (codec, burst_k, subject_type) in sorted(groups):
        rows = groups[(codec, burst_k, subject_type)]
        n = len(rows)
        mean_trunc = sum(r["truncated_distance"] for r in rows) / n
        cells.append(ConditionCell(
            codec=codec,
            burst_k=burst_k,
            subject_type=subject_type,
            n_trials=n,
            mean_truncated_distance=mean_trunc,
            mean_normalized_distance=mean_trunc / DISTANCE_CAP,
            mean_correctness=sum(1 for r in rows if r["correct"]) / n,
        ))
    return cells


def cells_csv(cells: list[ConditionCell]) -> str:
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=CELL_COLUMNS)
    writer.writeheader()
    for cell in cells:
        writer.writerow(cell.to_row())
    return out.getvalue()


def trials_csv(results: dict) -> str:
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=TRIAL_COLUMNS, extrasaction="ignore")
    writer.writeheader()
    for row in trial_rows(results):
        writer.writerow(row)
    return out.getvalue()


def bh_adjust(p_values: list[float], alpha: float = 0.05) -> tuple[list[bool], list[float]]:
    """Benjamini-Hochberg step-up: rejection flags and adjusted p-values,
    both in the original input order."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    for p in p_values:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p-value out of [0, 1]: {p}")
    m = len(p_values)
    if m == 0:
        return [], []
    order = sorted(range(m), key=lambda i: p_values[i])

    last_pass = 0  # largest 1-based rank i with p_(i) <= (i/m) * alpha
    for rank, idx in enumerate(order, start=1):
        if p_values[idx] <= rank / m * alpha:
            last_pass = rank
    rejected = [False] * m
    for rank, idx in enumerate(order, start=1):
        if rank <= last_pass:
            rejected[idx] = True

    adjusted = [0.0] * m
    running_min = 1.0
    for rank in range(m, 0, -1):
        idx = order[rank - 1]
        running_min = min(running_min, min(1.0, m / rank * p_values[idx]))
        adjusted[idx] = running_min
    return rejected, adjusted
