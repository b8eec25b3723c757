"""Experiment construction: pick plates, assign conditions, impair audio.

Condition cells are the cross product codecs x burst_sizes x frame_drops;
recordings are spread over the cells evenly (cell counts differ by at most
one) and the whole build, audio bytes included, is a pure function of the
config seed.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .. import audio
from ..channel import PipelineError, get_codec, impair_samples
from ..model import (
    DEFAULT_LEAD,
    ExperimentManifest,
    ImpairmentSpec,
    LicensePlate,
    RecordingEntry,
    draw_plate,
)
from .store import Store


@dataclass
class ExperimentConfig:
    n_recordings: int = 60
    codecs: list[str] = field(default_factory=lambda: ["passthrough"])
    burst_sizes: list[int] = field(default_factory=lambda: [1, 2, 4, 6, 8, 10])
    p_gb: float = 0.01
    frame_drops: list[float] = field(default_factory=lambda: [0.0])
    lead_sentence: str = DEFAULT_LEAD
    seed: int = 0
    source_audio_dir: str | None = None  # clean recordings keyed by plate: <PLATE>.wav
    synth_missing: bool = True  # tone-pattern stub for plates without source audio
    sample_rate: int = 8000

    def __post_init__(self):
        if self.n_recordings < 1:
            raise ValueError("n_recordings must be >= 1")
        if not self.codecs or not self.burst_sizes or not self.frame_drops:
            raise ValueError("condition lists must be nonempty")
        if any(k < 1 for k in self.burst_sizes):
            raise ValueError("burst sizes must be positive")

    def to_dict(self) -> dict:
        return {
            "n_recordings": self.n_recordings,
            "codecs": self.codecs,
            "burst_sizes": self.burst_sizes,
            "p_gb": self.p_gb,
            "frame_drops": self.frame_drops,
            "lead_sentence": self.lead_sentence,
            "seed": self.seed,
            "source_audio_dir": self.source_audio_dir,
            "synth_missing": self.synth_missing,
            "sample_rate": self.sample_rate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in known})


def build_experiment(config: ExperimentConfig, store: Store, experiment_id: str | None = None,
                     created_at: datetime | None = None) -> ExperimentManifest:
    """Build and persist an experiment; on pipeline failure the partial
    directory is removed and the error re-raised."""
    rng = random.Random(config.seed)
    experiment_id = experiment_id or f"exp-{rng.getrandbits(48):012x}"
    if store.experiment_exists(experiment_id):
        raise ValueError(f"experiment already exists: {experiment_id}")

    plates = _draw_unique_plates(rng, config.n_recordings)
    assignment = _assign_conditions(rng, config)

    exp_dir = store.experiment_dir(experiment_id)
    try:
        (exp_dir / "audio").mkdir(parents=True)
        recordings = []
        for i, (plate, (codec_id, burst_k, drop_p)) in enumerate(zip(plates, assignment)):
            spec = ImpairmentSpec(
                codec=codec_id,
                p_gb=config.p_gb,
                burst_k=burst_k,
                frame_drop_p=drop_p,
                seed=rng.getrandbits(63),
            )
            rec_id = f"r{i:03d}"
            rel_path = f"audio/{rec_id}.wav"
            clean, rate = _clean_audio(plate, config)
            impaired = impair_samples(clean, spec, get_codec(codec_id))
            audio.wave_write(exp_dir / rel_path, impaired, rate)
            recordings.append(RecordingEntry(
                id=rec_id, audio_path=rel_path, impairment=spec, ground_truth=plate,
            ))
        manifest = ExperimentManifest(
            id=experiment_id,
            lead_sentence=config.lead_sentence,
            recordings=recordings,
            created_at=created_at or datetime.now(timezone.utc),
        )
        store.write_manifest(manifest)
        return manifest
    except (PipelineError, OSError):
        store.remove_experiment(experiment_id)
        raise


def _draw_unique_plates(rng: random.Random, n: int) -> list[LicensePlate]:
    plates: list[LicensePlate] = []
    seen: set[str] = set()
    while len(plates) < n:
        plate = draw_plate(rng)
        if plate.text not in seen:
            seen.add(plate.text)
            plates.append(plate)
    return plates


def _assign_conditions(rng: random.Random, config: ExperimentConfig) -> list[tuple[str, int, float]]:
    cells = [
        (codec, k, drop)
        for codec in config.codecs
        for k in config.burst_sizes
        for drop in config.frame_drops
    ]
    base, extra = divmod(config.n_recordings, len(cells))
    assignment = cells * base + rng.sample(cells, extra)
    rng.shuffle(assignment)
    return assignment


def _clean_audio(plate: LicensePlate, config: ExperimentConfig) -> tuple[np.ndarray, int]:
    if config.source_audio_dir:
        path = Path(config.source_audio_dir) / f"{plate.text}.wav"
        if path.is_file():
            return audio.wave_read(path)
        if not config.synth_missing:
            raise PipelineError(f"source: no clean audio for plate {plate.text}: {path}")
    elif not config.synth_missing:
        raise PipelineError("source: no source_audio_dir and synthesis stub disabled")
    return synth_clean_audio(plate, config.lead_sentence, config.sample_rate), config.sample_rate


_SYMBOLS = string.ascii_uppercase + string.digits


def synth_clean_audio(plate: LicensePlate, lead: str = DEFAULT_LEAD,
                      sample_rate: int = 8000) -> np.ndarray:
    """Deterministic tone-pattern placeholder for a clean plate recording.

    One tone per spoken word (lead words at 250 Hz, each plate symbol at its
    own frequency) separated by short silences. A stand-in fixture, not
    speech; real experiments ingest recorded audio instead.
    """
    gap = np.zeros(int(0.03 * sample_rate), dtype="<i2")
    parts: list[np.ndarray] = []
    for _ in lead.split():
        parts += [audio.tone(250.0, 0.1, sample_rate), gap]
    for ch in plate.text:
        freq = 400.0 + 35.0 * _SYMBOLS.index(ch)
        parts += [audio.tone(freq, 0.12, sample_rate), gap]
    return np.concatenate(parts)
