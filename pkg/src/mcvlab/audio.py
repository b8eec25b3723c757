"""WAVE file I/O for the impairment pipeline.

Only RIFF/WAVE, PCM, mono, 16-bit little-endian is accepted; anything else is
an AudioFormatError, never a crash. Samples travel as int16 numpy arrays.
"""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np


class AudioFormatError(Exception):
    """Raised for malformed or unsupported audio files."""


def wave_read(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a WAVE file into (int16 samples, sample_rate)."""
    try:
        with wave.open(str(path), "rb") as w:
            channels = w.getnchannels()
            width = w.getsampwidth()
            comptype = w.getcomptype()
            rate = w.getframerate()
            nframes = w.getnframes()
            raw = w.readframes(nframes)
    except (wave.Error, EOFError) as exc:
        raise AudioFormatError(f"{path}: not a readable WAVE file: {exc}") from exc
    if comptype != "NONE":
        raise AudioFormatError(f"{path}: compressed WAVE ({comptype}) is not supported")
    if channels != 1:
        raise AudioFormatError(f"{path}: expected mono audio, got {channels} channels")
    if width != 2:
        raise AudioFormatError(f"{path}: expected 16-bit samples, got {8 * width}-bit")
    if len(raw) != 2 * nframes:
        raise AudioFormatError(f"{path}: truncated sample data")
    samples = np.frombuffer(raw, dtype="<i2")
    return samples, rate


def wave_write(path: str | Path, samples: np.ndarray, sample_rate: int) -> None:
    """Write int16 samples as mono 16-bit PCM WAVE."""
    data = np.asarray(samples, dtype="<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(sample_rate)
        w.writeframes(data.tobytes())


def tone(freq_hz: float, duration_s: float, sample_rate: int = 8000, amplitude: float = 0.5) -> np.ndarray:
    """A sine burst as int16 samples; handy for fixtures."""
    t = np.arange(int(round(duration_s * sample_rate))) / sample_rate
    return np.round(amplitude * 32767.0 * np.sin(2.0 * np.pi * freq_hz * t)).astype("<i2")
