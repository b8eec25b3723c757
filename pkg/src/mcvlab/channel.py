"""Bitstream impairment: burst errors, frame drops, and the codec pipeline.

The error model is a two-state (Good/Bad) chain advanced per bit: in Good the
bit passes and the chain moves to Bad with probability p_gb; each visit to Bad
flips exactly burst_k consecutive bits, then returns to Good with probability
p_bg or immediately starts another k-bit burst. Mean dwell times are 1/p_gb
good bits and burst_k/p_bg flipped bits, so the long-run flipped fraction is

    (k / p_bg) / (1 / p_gb + k / p_bg)

The implementation jumps between state changes (geometric sojourns sampled by
inverse transform) instead of stepping every bit; the process law is the same
and the output is deterministic for a given seed. Bits are numbered MSB-first
within each byte.
"""

from __future__ import annotations

import math
import random
import subprocess
from pathlib import Path

import numpy as np

from .audio import wave_read, wave_write
from .model import ImpairmentSpec

# Mixed into the impairment seed so frame drops draw from a stream independent
# of the bit-error stream (splitmix64 golden-ratio increment).
_DROP_SEED_SALT = 0x9E3779B97F4A7C15


class CodecError(Exception):
    """A codec adapter failed (bad data or nonzero external exit)."""


class PipelineError(Exception):
    """An impairment pipeline stage failed; message names the stage."""


def ge_corrupt(bits: bytes, spec: ImpairmentSpec) -> bytes:
    """Flip bit-error bursts into a bitstream according to the two-state model."""
    if not 0.0 <= spec.p_gb <= 1.0 or not 0.0 <= spec.p_bg <= 1.0:
        raise ValueError("transition probabilities must be in [0, 1]")
    if spec.p_gb == 0.0 or not bits:
        return bytes(bits)
    rng = random.Random(spec.seed)
    buf = bytearray(bits)
    n = len(buf) * 8
    k = spec.burst_k
    pos = 0
    log_stay = math.log(1.0 - spec.p_gb) if spec.p_gb < 1.0 else None
    while pos < n:
        if log_stay is None:
            good_dwell = 1
        else:
            # Geometric(p_gb) on {1, 2, ...}: bits passed before the burst.
            good_dwell = 1 + int(math.log(1.0 - rng.random()) / log_stay)
        pos += good_dwell
        while pos < n:
            for j in range(pos, min(pos + k, n)):
                buf[j >> 3] ^= 0x80 >> (j & 7)
            pos += k
            if rng.random() < spec.p_bg:
                break
    return bytes(buf)


def drop_frames(frames: list[bytes], p: float, seed: int) -> tuple[list[bytes], list[bool]]:
    """Flag each frame independently dropped with probability p.

    Frames are returned unchanged (count included); concealment happens at
    decode time based on the flags.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("drop probability must be in [0, 1]")
    rng = random.Random(seed)
    flags = [rng.random() < p for _ in frames]
    return list(frames), flags


def split_frames(data: bytes, frame_size: int) -> list[bytes]:
    """Chunk a bitstream into codec frames; the final frame may be short."""
    return [data[i:i + frame_size] for i in range(0, len(data), frame_size)]


class CodecAdapter:
    """Encode PCM to a bitstream and back, concealing dropped frames."""

    name: str
    frame_size_bytes: int

    def encode(self, pcm: bytes) -> bytes:
        raise NotImplementedError

    def decode(self, bitstream: bytes, drop_flags: list[bool]) -> bytes:
        raise NotImplementedError


class PassthroughCodec(CodecAdapter):
    """Reference codec: the bitstream is the raw PCM; dropped frames zero-fill.

    Default frame size is 320 bytes (160 samples, 20 ms at 8 kHz).
    """

    def __init__(self, frame_size_bytes: int = 320):
        if frame_size_bytes < 1:
            raise ValueError("frame size must be positive")
        self.name = "passthrough"
        self.frame_size_bytes = frame_size_bytes

    def encode(self, pcm: bytes) -> bytes:
        return bytes(pcm)

    def decode(self, bitstream: bytes, drop_flags: list[bool]) -> bytes:
        frames = split_frames(bitstream, self.frame_size_bytes)
        if len(drop_flags) != len(frames):
            raise CodecError(f"expected {len(frames)} drop flags, got {len(drop_flags)}")
        out = bytearray()
        for frame, dropped in zip(frames, drop_flags):
            out += b"\x00" * len(frame) if dropped else frame
        return bytes(out)


class ExternalCodec(CodecAdapter):
    """Codec behind an external command.

    Protocol: `<cmd> encode --frame-size N` reads PCM on stdin and writes the
    bitstream to stdout; `<cmd> decode --frame-size N [--dropped i,j,k]` does
    the inverse, concealing the listed dropped frame indices. Nonzero exit is
    a failure.
    """

    def __init__(self, command: list[str], frame_size_bytes: int, name: str | None = None,
                 timeout_s: float = 120.0):
        if frame_size_bytes < 1:
            raise ValueError("frame size must be positive")
        self.command = list(command)
        self.frame_size_bytes = frame_size_bytes
        self.name = name or f"external:{command[0]}"
        self.timeout_s = timeout_s

    def _run(self, args: list[str], data: bytes) -> bytes:
        proc = subprocess.run(
            self.command + args,
            input=data,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            timeout=self.timeout_s,
        )
        if proc.returncode != 0:
            detail = proc.stderr.decode(errors="replace").strip()
            raise CodecError(f"{self.name} exited {proc.returncode}: {detail}")
        return proc.stdout

    def encode(self, pcm: bytes) -> bytes:
        return self._run(["encode", "--frame-size", str(self.frame_size_bytes)], pcm)

    def decode(self, bitstream: bytes, drop_flags: list[bool]) -> bytes:
        dropped = ",".join(str(i) for i, f in enumerate(drop_flags) if f)
        args = ["decode", "--frame-size", str(self.frame_size_bytes)]
        if dropped:
            args += ["--dropped", dropped]
        return self._run(args, bitstream)


def get_codec(codec_id: str, frame_size_bytes: int = 320) -> CodecAdapter:
    """Resolve a codec id: 'passthrough' or 'external:<command line>'."""
    if codec_id == "passthrough":
        return PassthroughCodec(frame_size_bytes)
    if codec_id.startswith("external:"):
        command = codec_id[len("external:"):].split()
        if not command:
            raise ValueError("external codec needs a command")
        return ExternalCodec(command, frame_size_bytes, name=codec_id)
    raise ValueError(f"unknown codec: {codec_id!r}")


def impair_samples(samples: np.ndarray, spec: ImpairmentSpec, codec: CodecAdapter) -> np.ndarray:
    """Run encode -> burst errors -> frame drops -> decode over PCM samples."""
    pcm = np.asarray(samples, dtype="<i2").tobytes()
    try:
        bitstream = codec.encode(pcm)
    except (CodecError, subprocess.TimeoutExpired) as exc:
        raise PipelineError(f"encode: {exc}") from exc

    corrupted = ge_corrupt(bitstream, spec)

    frames = split_frames(corrupted, codec.frame_size_bytes)
    frames, flags = drop_frames(frames, spec.frame_drop_p, seed=spec.seed ^ _DROP_SEED_SALT)

    try:
        pcm_out = codec.decode(b"".join(frames), flags)
    except (CodecError, subprocess.TimeoutExpired) as exc:
        raise PipelineError(f"decode: {exc}") from exc

    out = np.frombuffer(_fit_length(pcm_out, len(pcm)), dtype="<i2")
    return out


def _fit_length(pcm: bytes, target: int) -> bytes:
    # Duration must survive the pipeline regardless of codec behavior.
    if len(pcm) == target:
        return pcm
    if len(pcm) > target:
        return pcm[:target]
    return pcm + b"\x00" * (target - len(pcm))


def impair_file(wav_in: str | Path, wav_out: str | Path, spec: ImpairmentSpec,
                codec: CodecAdapter | None = None) -> None:
    """File-level wrapper around impair_samples; sample rate is preserved."""
    codec = codec or get_codec(spec.codec)
    samples, rate = wave_read(wav_in)
    wave_write(wav_out, impair_samples(samples, spec, codec), rate)
