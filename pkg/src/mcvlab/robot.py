"""Machine test subject: walks a session through the public participant API.

The robot consents, submits demographics tagged robot:<engine>, then for each
position fetches the audio once, transcribes it through a pluggable engine,
parses the transcript into a plate, and submits it. Engine failures degrade
to empty answers (a subject who heard nothing submits nothing); progress is
persisted so an interrupted run resumes where it left off.
"""

from __future__ import annotations

import json
import random
import string
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from .model import DEFAULT_LEAD
from .parser import METRIC_LEVSCORE, parse_transcript
from .scoring import ScoreReport, report_with_truth, report_without_truth


class EngineError(Exception):
    """A transcription engine failed on one recording."""


class EngineAdapter:
    """Audio bytes in, transcript out; must fail loudly, never hang."""

    label: str = "engine"

    def transcribe(self, audio: bytes, recording_id: str | None = None) -> str:
        raise NotImplementedError


class MockEngine(EngineAdapter):
    """Table-driven test double keyed by recording id.

    With a noise seed, exactly one payload word per transcript gets a single
    random character edit (the lead words are left alone); determinisic per
    seed. Missing table entries are engine failures.
    """

    def __init__(self, table: dict[str, str], noise_seed: int | None = None,
                 lead: str = DEFAULT_LEAD, label: str = "mock"):
        self.label = label
        self.table = dict(table)
        self.lead_len = len(lead.split())
        self.rng = random.Random(noise_seed) if noise_seed is not None else None

    def transcribe(self, audio: bytes, recording_id: str | None = None) -> str:
        if recording_id is None or recording_id not in self.table:
            raise EngineError(f"no transcript for recording {recording_id!r}")
        text = self.table[recording_id]
        if self.rng is None:
            return text
        return self._corrupt_one_word(text)

    def _corrupt_one_word(self, text: str) -> str:
        words = text.split()
        payload = list(range(self.lead_len, len(words)))
        if not payload:
            return text
        i = self.rng.choice(payload)
        words[i] = _single_edit(words[i], self.rng)
        return " ".join(words)


def _single_edit(word: str, rng: random.Random) -> str:
    letters = string.ascii_lowercase
    ops = ["substitute", "insert"] + (["delete"] if len(word) > 1 else [])
    op = rng.choice(ops)
    if op == "delete":
        i = rng.randrange(len(word))
        return word[:i] + word[i + 1:]
    if op == "insert":
        i = rng.randrange(len(word) + 1)
        return word[:i] + rng.choice(letters) + word[i:]
    i = rng.randrange(len(word))
    c = rng.choice([x for x in letters if x != word[i]])
    return word[:i] + c + word[i + 1:]


def mock_engine(table: dict[str, str], noise_seed: int | None = None,
                lead: str = DEFAULT_LEAD) -> MockEngine:
    return MockEngine(table, noise_seed=noise_seed, lead=lead)


class ExternalEngine(EngineAdapter):
    """Run `<cmd> <wav-path>`; stdout is the transcript; nonzero exit fails."""

    def __init__(self, command: list[str], timeout_s: float = 120.0, label: str | None = None):
        self.command = list(command)
        self.timeout_s = timeout_s
        self.label = label or f"external:{command[0]}"

    def transcribe(self, audio: bytes, recording_id: str | None = None) -> str:
        with tempfile.NamedTemporaryFile(suffix=".wav", delete=False) as f:
            f.write(audio)
            path = f.name
        try:
            proc = subprocess.run(
                self.command + [path],
                stdout=subprocess.PIPE, stderr=subprocess.PIPE, timeout=self.timeout_s,
            )
        except subprocess.TimeoutExpired as exc:
            raise EngineError(f"{self.label} timed out after {self.timeout_s}s") from exc
        finally:
            Path(path).unlink(missing_ok=True)
        if proc.returncode != 0:
            raise EngineError(f"{self.label} exited {proc.returncode}")
        return proc.stdout.decode(errors="replace").strip()


class HttpEngine(EngineAdapter):
    """POST audio/wav to a transcription endpoint; response is JSON {text}."""

    def __init__(self, url: str, timeout_s: float = 120.0):
        self.url = url
        self.timeout_s = timeout_s
        self.label = f"http:{url}"

    def transcribe(self, audio: bytes, recording_id: str | None = None) -> str:
        try:
            resp = httpx.post(self.url, content=audio,
                              headers={"Content-Type": "audio/wav"}, timeout=self.timeout_s)
            resp.raise_for_status()
            return str(resp.json()["text"])
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            raise EngineError(f"{self.label}: {exc}") from exc


def make_engine(spec: str, timeout_s: float = 120.0) -> EngineAdapter:
    """Parse an engine spec: mock:table.json | external:CMD | http:URL."""
    kind, _, rest = spec.partition(":")
    if kind == "mock":
        table = json.loads(Path(rest).read_text()) if rest else {}
        return MockEngine(table)
    if kind == "external":
        if not rest:
            raise ValueError("external engine needs a command")
        return ExternalEngine(rest.split(), timeout_s=timeout_s)
    if kind == "http":
        return HttpEngine(rest, timeout_s=timeout_s)
    raise ValueError(f"unknown engine spec: {spec!r}")


@dataclass
class TrialResult:
    position: int
    recording_id: str | None
    transcript: str
    plate: str
    token_scores: list[float]
    engine_failed: bool = False

    def to_dict(self) -> dict:
        return {
            "position": self.position,
            "recording_id": self.recording_id,
            "transcript": self.transcript,
            "plate": self.plate,
            "token_scores": self.token_scores,
            "engine_failed": self.engine_failed,
        }


@dataclass
class RobotRunReport:
    session_id: str
    experiment_id: str
    engine_label: str
    metric: str
    trials: list[TrialResult] = field(default_factory=list)
    without_truth: ScoreReport | None = None
    with_truth: ScoreReport | None = None

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "experiment_id": self.experiment_id,
            "engine_label": self.engine_label,
            "metric": self.metric,
            "trials": [t.to_dict() for t in self.trials],
            "without_truth": self.without_truth.to_dict() if self.without_truth else None,
            "with_truth": self.with_truth.to_dict() if self.with_truth else None,
        }


def run_session(base_url: str, experiment_link: str, engine: EngineAdapter,
                metric: str = METRIC_LEVSCORE, admin_token: str | None = None,
                state_path: str | Path | None = None,
                client: httpx.Client | None = None) -> RobotRunReport:
    """Complete one session end to end and score it.

    experiment_link may be a bare experiment id or any URL containing
    /experiments/<id>. state_path enables resuming after an interruption.
    """
    owns_client = client is None
    client = client or httpx.Client(base_url=base_url, timeout=60.0)
    try:
        experiment_id = _experiment_id_from_link(experiment_link)
        meta = _json(client.get(f"/api/experiments/{experiment_id}"))
        lead = meta["lead_sentence"]

        state = _load_state(state_path)
        session_id = state.get("session_id")
        if session_id:
            probe = client.get(f"/api/sessions/{session_id}")
            if probe.status_code != 200:
                session_id = None
        if not session_id:
            created = _json(client.post(f"/api/experiments/{experiment_id}/sessions"))
            session_id = created["session_id"]
            state = {"session_id": session_id, "transcripts": {}}
            _save_state(state_path, state)

        progress = _json(client.get(f"/api/sessions/{session_id}"))
        if not progress["consent_given"]:
            _json(client.post(f"/api/sessions/{session_id}/consent"))
        if not progress["demographics_submitted"]:
            _json(client.post(
                f"/api/sessions/{session_id}/demographics",
                json={"subject_type": f"robot:{engine.label}"},
            ))
        progress = _json(client.get(f"/api/sessions/{session_id}"))

        report = RobotRunReport(
            session_id=session_id, experiment_id=experiment_id,
            engine_label=engine.label, metric=metric,
        )
        answered = set(progress["answered_positions"])
        next_position = progress["next_position"]
        total = progress["total"]

        for position in range(total):
            if position in answered:
                continue
            transcript, recording_id, failed = "", None, False
            if position < next_position:
                # Played before an interruption; reuse the saved transcript if any.
                saved = state.get("transcripts", {}).get(str(position))
                if saved:
                    transcript, recording_id = saved["text"], saved.get("recording_id")
                else:
                    failed = True
            else:
                resp = client.get(f"/api/sessions/{session_id}/recordings/{position}/audio")
                if resp.status_code != 200:
                    failed = True
                    next_position = _json(client.get(f"/api/sessions/{session_id}"))["next_position"]
                else:
                    next_position = position + 1
                    recording_id = resp.headers.get("x-recording-id")
                    try:
                        transcript = engine.transcribe(resp.content, recording_id)
                    except EngineError:
                        transcript, failed = "", True
                    state.setdefault("transcripts", {})[str(position)] = {
                        "text": transcript, "recording_id": recording_id,
                    }
                    _save_state(state_path, state)

            plate, matches = parse_transcript(transcript, lead=lead, metric=metric)
            submit = client.post(
                f"/api/sessions/{session_id}/recordings/{position}/answer",
                json={"text": plate},
            )
            if submit.status_code not in (201, 409):  # 409: answered before a crash
                raise RuntimeError(f"answer for position {position} rejected: {submit.text}")
            report.trials.append(TrialResult(
                position=position, recording_id=recording_id, transcript=transcript,
                plate=plate, token_scores=[m.score for m in matches], engine_failed=failed,
            ))

        report.without_truth = report_without_truth(
            [(t.recording_id or f"position-{t.position}", t.token_scores) for t in report.trials]
        )
        if admin_token:
            report.with_truth = _score_against_export(client, experiment_id, session_id, admin_token)
        return report
    finally:
        if owns_client:
            client.close()


def _score_against_export(client: httpx.Client, experiment_id: str, session_id: str,
                          admin_token: str) -> ScoreReport | None:
    results = _json(client.get(
        f"/api/experiments/{experiment_id}/results",
        headers={"X-Admin-Token": admin_token},
    ))
    for session in results["sessions"]:
        if session["session_id"] == session_id:
            triples = [
                (row["recording_id"], row["normalized_plate"], row["ground_truth"])
                for row in session["answers"] if row["ground_truth"]
            ]
            return report_with_truth(triples) if triples else None
    return None


def _experiment_id_from_link(link: str) -> str:
    if "/" not in link:
        return link
    parts = [p for p in link.split("/") if p]
    for i, part in enumerate(parts):
        if part == "experiments" and i + 1 < len(parts):
            return parts[i + 1].split("?")[0]
    return parts[-1].split("?")[0]


def _json(resp: httpx.Response) -> dict:
    if resp.status_code >= 400:
        raise RuntimeError(f"{resp.request.method} {resp.request.url} -> {resp.status_code}: {resp.text}")
    return resp.json()


def _load_state(path: str | Path | None) -> dict:
    if path and Path(path).is_file():
        return json.loads(Path(path).read_text())
    return {}


def _save_state(path: str | Path | None, state: dict) -> None:
    if path:
        Path(path).write_text(json.dumps(state, indent=2))
