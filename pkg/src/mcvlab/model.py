"""Domain types shared by the whole harness.

License plates follow the NJ format: one letter, two digits, three letters.
A plate is spoken as a lead sentence plus one spelling-alphabet word per
character; the manifest ties impaired recordings to their conditions and
(optionally) ground-truth plates.
"""

from __future__ import annotations

import json
import random
import re
import string
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

PLATE_RE = re.compile(r"^[A-Z][0-9]{2}[A-Z]{3}$")
DEFAULT_LEAD = "reporting license plate"

# Burst sizes exercised by the replica experiment design.
REPLICA_BURST_SIZES = (1, 2, 4, 6, 8, 10)
REPLICA_P_GB = 0.01
REPLICA_RECORDING_COUNT = 60


@dataclass(frozen=True)
class LicensePlate:
    """A six-character NJ-format plate, canonically uppercase."""

    text: str

    def __post_init__(self):
        if not PLATE_RE.match(self.text):
            raise ValueError(f"not a valid plate: {self.text!r}")

    @classmethod
    def parse(cls, raw: str) -> "LicensePlate":
        """Build a plate from free-form input (case and separators forgiven)."""
        return cls(re.sub(r"[^A-Za-z0-9]", "", raw).upper())


class NatoLexicon:
    """Ordered word→symbol table: 26 letter words then 10 digit words."""

    def __init__(self, entries: list[tuple[str, str]]):
        cleaned = [(word.lower().replace("-", ""), symbol) for word, symbol in entries]
        words = [w for w, _ in cleaned]
        symbols = [s for _, s in cleaned]
        if len(set(words)) != len(words):
            raise ValueError("lexicon words must be unique")
        if len(set(symbols)) != len(symbols):
            raise ValueError("lexicon symbols must be unique")
        letters = [s for s in symbols if s in string.ascii_uppercase]
        digits = [s for s in symbols if s in string.digits]
        if len(letters) != 26 or len(digits) != 10:
            raise ValueError("lexicon must cover A-Z and 0-9 exactly")
        self.entries: list[tuple[str, str]] = cleaned
        self.word_to_symbol = dict(cleaned)
        self.symbol_to_word = {s: w for w, s in cleaned}

    @property
    def words(self) -> list[str]:
        return [w for w, _ in self.entries]

    @classmethod
    def default(cls) -> "NatoLexicon":
        raw = resources.files("mcvlab.data").joinpath("nato_lexicon.json").read_text()
        return cls([tuple(e) for e in json.loads(raw)["entries"]])


_LETTERS = string.ascii_uppercase
_DIGITS = string.digits

# One symbol class per plate position: letter, digit, digit, letter x3.
PLATE_SLOTS: tuple[str, ...] = (_LETTERS, _DIGITS, _DIGITS, _LETTERS, _LETTERS, _LETTERS)


def draw_plate(rng: random.Random) -> LicensePlate:
    return LicensePlate("".join(rng.choice(slot) for slot in PLATE_SLOTS))


def generate_plate(rng_seed: int) -> LicensePlate:
    """Draw a plate uniformly from the NJ format space, deterministically per seed."""
    return draw_plate(random.Random(rng_seed))


def plate_to_nato(plate: LicensePlate, lexicon: NatoLexicon | None = None, lead: str = DEFAULT_LEAD) -> str:
    """Spell a plate as the lead sentence followed by one word per character."""
    lexicon = lexicon or NatoLexicon.default()
    words = [lexicon.symbol_to_word[c] for c in plate.text]
    parts = ([lead.strip()] if lead.strip() else []) + words
    return " ".join(parts).lower()


@dataclass(frozen=True)
class ImpairmentSpec:
    """Channel conditions for one recording; seed makes it a reproducible artifact."""

    codec: str = "passthrough"
    p_gb: float = REPLICA_P_GB
    p_bg: float | None = None  # defaults to the complement 1 - p_gb
    burst_k: int = 1
    frame_drop_p: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.p_bg is None:
            object.__setattr__(self, "p_bg", 1.0 - self.p_gb)
        for name in ("p_gb", "p_bg", "frame_drop_p"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.burst_k < 1:
            raise ValueError("burst_k must be a positive integer")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    def to_dict(self) -> dict:
        return {
            "codec": self.codec,
            "p_gb": self.p_gb,
            "p_bg": self.p_bg,
            "burst_k": self.burst_k,
            "frame_drop_p": self.frame_drop_p,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ImpairmentSpec":
        return cls(**d)


@dataclass
class RecordingEntry:
    id: str
    audio_path: str  # relative to the experiment directory
    impairment: ImpairmentSpec
    ground_truth: LicensePlate | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "audio_path": self.audio_path,
            "impairment": self.impairment.to_dict(),
            "ground_truth": self.ground_truth.text if self.ground_truth else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RecordingEntry":
        truth = d.get("ground_truth")
        return cls(
            id=d["id"],
            audio_path=d["audio_path"],
            impairment=ImpairmentSpec.from_dict(d["impairment"]),
            ground_truth=LicensePlate(truth) if truth else None,
        )


@dataclass
class ExperimentManifest:
    id: str
    lead_sentence: str
    recordings: list[RecordingEntry]
    created_at: datetime

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "lead_sentence": self.lead_sentence,
            "created_at": self.created_at.astimezone(timezone.utc).isoformat(),
            "recordings": [r.to_dict() for r in self.recordings],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentManifest":
        return cls(
            id=d["id"],
            lead_sentence=d["lead_sentence"],
            created_at=datetime.fromisoformat(d["created_at"]),
            recordings=[RecordingEntry.from_dict(r) for r in d["recordings"]],
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def loads(cls, raw: str) -> "ExperimentManifest":
        return cls.from_dict(json.loads(raw))


def validate_manifest(manifest: ExperimentManifest, base_dir: str | Path | None = None) -> list[str]:
    """Collect invariant violations; an empty list means the manifest is sound.

    base_dir anchors the relative audio paths; omit it to skip file checks.
    """
    violations: list[str] = []
    seen: set[str] = set()
    for rec in manifest.recordings:
        if rec.id in seen:
            violations.append(f"duplicate recording id: {rec.id}")
        seen.add(rec.id)
        spec = rec.impairment
        for name in ("p_gb", "p_bg", "frame_drop_p"):
            v = getattr(spec, name)
            if not 0.0 <= v <= 1.0:
                violations.append(f"recording {rec.id}: {name} out of range: {v}")
        if spec.burst_k < 1:
            violations.append(f"recording {rec.id}: burst_k must be positive")
        if base_dir is not None:
            path = Path(base_dir) / rec.audio_path
            if not path.is_file():
                violations.append(f"recording {rec.id}: missing audio file: {rec.audio_path}")
            else:
                problem = _check_wav_header(path)
                if problem:
                    violations.append(f"recording {rec.id}: {rec.audio_path}: {problem}")
    return violations


def _check_wav_header(path: Path) -> str | None:
    from . import audio

    try:
        audio.wave_read(path)
    except audio.AudioFormatError as exc:
        return str(exc)
    return None


SUBJECT_TYPE_RE = re.compile(r"^(human|robot:[\w.:-]+)$")


@dataclass
class AnswerRecord:
    recording_id: str
    submitted_text: str
    normalized_plate: str
    submitted_at: datetime
    subject_type: str = "human"

    def __post_init__(self):
        if not re.match(r"^[A-Z0-9]*$", self.normalized_plate):
            raise ValueError("normalized plate may only contain A-Z and 0-9")
        if not SUBJECT_TYPE_RE.match(self.subject_type):
            raise ValueError(f"bad subject type: {self.subject_type!r}")

    @classmethod
    def from_text(cls, recording_id: str, text: str, subject_type: str = "human",
                  submitted_at: datetime | None = None) -> "AnswerRecord":
        return cls(
            recording_id=recording_id,
            submitted_text=text,
            normalized_plate=normalize_answer(text),
            submitted_at=submitted_at or datetime.now(timezone.utc),
            subject_type=subject_type,
        )

    def to_dict(self) -> dict:
        return {
            "recording_id": self.recording_id,
            "submitted_text": self.submitted_text,
            "normalized_plate": self.normalized_plate,
            "submitted_at": self.submitted_at.astimezone(timezone.utc).isoformat(),
            "subject_type": self.subject_type,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnswerRecord":
        return cls(
            recording_id=d["recording_id"],
            submitted_text=d["submitted_text"],
            normalized_plate=d["normalized_plate"],
            submitted_at=datetime.fromisoformat(d["submitted_at"]),
            subject_type=d["subject_type"],
        )


def normalize_answer(text: str) -> str:
    """Uppercase and strip everything that is not A-Z or 0-9."""
    return re.sub(r"[^A-Za-z0-9]", "", text).upper()


PLAY_UNPLAYED = "unplayed"
PLAY_PLAYED = "played"


@dataclass
class Session:
    """One participant's randomized pass through an experiment."""

    id: str
    experiment_id: str
    order: list[int]  # position -> recording index in the manifest
    consent_given: bool = False
    demographics: dict[str, str] = field(default_factory=dict)
    demographics_submitted: bool = False
    subject_type: str = "human"
    answers: dict[str, AnswerRecord] = field(default_factory=dict)
    play_state: dict[str, str] = field(default_factory=dict)
    created_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))

    def __post_init__(self):
        if sorted(self.order) != list(range(len(self.order))):
            raise ValueError("order must be a permutation of recording indices")
        for rid, answer in self.answers.items():
            if self.play_state.get(rid) != PLAY_PLAYED:
                raise ValueError(f"answer for unplayed recording: {rid}")
            if answer.recording_id != rid:
                raise ValueError("answer keyed under the wrong recording id")

    @property
    def total(self) -> int:
        return len(self.order)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "experiment_id": self.experiment_id,
            "order": self.order,
            "consent_given": self.consent_given,
            "demographics": self.demographics,
            "demographics_submitted": self.demographics_submitted,
            "subject_type": self.subject_type,
            "answers": {rid: a.to_dict() for rid, a in self.answers.items()},
            "play_state": self.play_state,
            "created_at": self.created_at.astimezone(timezone.utc).isoformat(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Session":
        return cls(
            id=d["id"],
            experiment_id=d["experiment_id"],
            order=list(d["order"]),
            consent_given=d["consent_given"],
            demographics=dict(d["demographics"]),
            demographics_submitted=d.get("demographics_submitted", False),
            subject_type=d.get("subject_type", "human"),
            answers={rid: AnswerRecord.from_dict(a) for rid, a in d["answers"].items()},
            play_state=dict(d["play_state"]),
            created_at=datetime.fromisoformat(d["created_at"]),
        )
