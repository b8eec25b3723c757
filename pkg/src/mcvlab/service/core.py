"""Session flow and answer collection, independent of the HTTP layer.

Per-session mutations are serialized behind a per-session lock; manifests are
immutable once built and cached. Every state change is persisted atomically
before the call returns, so a killed process never leaves an answer for an
unplayed recording.
"""

from __future__ import annotations

import secrets
import threading
from collections import defaultdict

from ..model import (
    PLAY_PLAYED,
    PLAY_UNPLAYED,
    AnswerRecord,
    ExperimentManifest,
    Session,
    SUBJECT_TYPE_RE,
)
from ..scoring import report_with_truth
from .store import Store


class ApiError(Exception):
    """Error with a wire shape: {code, message} plus an HTTP status."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def not_found(message: str) -> ApiError:
    return ApiError(404, "not_found", message)


def conflict(message: str) -> ApiError:
    return ApiError(409, "conflict", message)


def precondition(message: str) -> ApiError:
    return ApiError(412, "precondition_failed", message)


def unauthorized(message: str) -> ApiError:
    return ApiError(401, "unauthorized", message)


class ExperimentService:
    def __init__(self, store: Store, admin_token: str):
        self.store = store
        self.admin_token = admin_token
        self._manifests: dict[str, ExperimentManifest] = {}
        self._locks: defaultdict[str, threading.Lock] = defaultdict(threading.Lock)
        self._locks_guard = threading.Lock()

    def _lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks[session_id]

    def check_admin(self, token: str | None) -> None:
        if not token or not secrets.compare_digest(token, self.admin_token):
            raise unauthorized("missing or invalid admin token")

    def manifest(self, experiment_id: str) -> ExperimentManifest:
        cached = self._manifests.get(experiment_id)
        if cached is not None:
            return cached
        if not self.store.experiment_exists(experiment_id):
            raise not_found(f"unknown experiment: {experiment_id}")
        manifest = self.store.read_manifest(experiment_id)
        self._manifests[experiment_id] = manifest
        return manifest

    def experiment_meta(self, experiment_id: str) -> dict:
        """Participant-visible metadata only; no conditions, no ground truth."""
        manifest = self.manifest(experiment_id)
        return {
            "id": manifest.id,
            "lead_sentence": manifest.lead_sentence,
            "total": len(manifest.recordings),
        }

    # -- session lifecycle ---------------------------------------------------

    def create_session(self, experiment_id: str) -> Session:
        manifest = self.manifest(experiment_id)
        order = list(range(len(manifest.recordings)))
        secrets.SystemRandom().shuffle(order)
        session = Session(
            id=secrets.token_urlsafe(16),
            experiment_id=experiment_id,
            order=order,
            play_state={r.id: PLAY_UNPLAYED for r in manifest.recordings},
        )
        self.store.write_session(session)
        return session

    def _session(self, session_id: str) -> Session:
        session = self.store.read_session(session_id)
        if session is None:
            raise not_found(f"unknown session: {session_id}")
        return session

    def progress(self, session_id: str) -> dict:
        with self._lock(session_id):
            session = self._session(session_id)
            manifest = self.manifest(session.experiment_id)
            return _progress_view(session, manifest)

    def give_consent(self, session_id: str) -> dict:
        with self._lock(session_id):
            session = self._session(session_id)
            session.consent_given = True
            self.store.write_session(session)
            return _progress_view(session, self.manifest(session.experiment_id))

    def submit_demographics(self, session_id: str, demographics: dict[str, str]) -> dict:
        with self._lock(session_id):
            session = self._session(session_id)
            if not session.consent_given:
                raise precondition("consent required before demographics")
            clean = {str(k): str(v) for k, v in demographics.items()}
            subject_type = clean.pop("subject_type", session.subject_type)
            if not SUBJECT_TYPE_RE.match(subject_type):
                raise ApiError(400, "bad_request", f"bad subject_type: {subject_type!r}")
            session.demographics = clean
            session.subject_type = subject_type
            session.demographics_submitted = True
            self.store.write_session(session)
            return _progress_view(session, self.manifest(session.experiment_id))

    # -- trials ---------------------------------------------------------------

    def fetch_audio(self, session_id: str, position: int) -> tuple[bytes, str]:
        """Deliver one recording exactly once; returns (wav bytes, recording id).

        The played mark is persisted before any byte leaves the service.
        """
        with self._lock(session_id):
            session = self._session(session_id)
            manifest = self.manifest(session.experiment_id)
            recording = _recording_at(session, manifest, position)
            if not session.consent_given:
                raise precondition("consent required before trials")
            if not session.demographics_submitted:
                raise precondition("demographics required before trials")
            if session.play_state.get(recording.id) == PLAY_PLAYED:
                raise conflict(f"recording at position {position} was already played")
            next_position = _next_position(session, manifest)
            if position != next_position:
                raise precondition(
                    f"recordings play in order; next position is {next_position}"
                )
            audio_file = self.store.audio_path(session.experiment_id, recording.audio_path)
            data = audio_file.read_bytes()
            session.play_state[recording.id] = PLAY_PLAYED
            self.store.write_session(session)
        return data, recording.id

    def submit_answer(self, session_id: str, position: int, text: str) -> AnswerRecord:
        with self._lock(session_id):
            session = self._session(session_id)
            manifest = self.manifest(session.experiment_id)
            recording = _recording_at(session, manifest, position)
            if session.play_state.get(recording.id) != PLAY_PLAYED:
                raise precondition(f"recording at position {position} has not been played")
            if recording.id in session.answers:
                raise conflict(f"recording at position {position} already has an answer")
            record = AnswerRecord.from_text(recording.id, text, subject_type=session.subject_type)
            session.answers[recording.id] = record
            self.store.write_session(session)
            return record

    # -- export ----------------------------------------------------------------

    def export_results(self, experiment_id: str, admin_token: str | None) -> dict:
        self.check_admin(admin_token)
        manifest = self.manifest(experiment_id)
        by_id = {r.id: r for r in manifest.recordings}
        sessions_out = []
        for session in self.store.list_sessions(experiment_id):
            rows = []
            scored = []
            for position, rec_index in enumerate(session.order):
                recording = manifest.recordings[rec_index]
                answer = session.answers.get(recording.id)
                if answer is None:
                    continue
                truth = recording.ground_truth.text if recording.ground_truth else None
                rows.append({
                    "position": position,
                    "recording_id": recording.id,
                    "submitted_text": answer.submitted_text,
                    "normalized_plate": answer.normalized_plate,
                    "submitted_at": answer.to_dict()["submitted_at"],
                    "subject_type": answer.subject_type,
                    "codec": recording.impairment.codec,
                    "burst_k": recording.impairment.burst_k,
                    "p_gb": recording.impairment.p_gb,
                    "frame_drop_p": recording.impairment.frame_drop_p,
                    "ground_truth": truth,
                })
                if truth:
                    scored.append((recording.id, answer.normalized_plate, truth))
            report = report_with_truth(scored).to_dict() if scored else None
            sessions_out.append({
                "session_id": session.id,
                "subject_type": session.subject_type,
                "demographics": session.demographics,
                "answers": rows,
                "score_report": report,
            })
        return {
            "experiment_id": experiment_id,
            "lead_sentence": manifest.lead_sentence,
            "n_recordings": len(manifest.recordings),
            "sessions": sessions_out,
        }


def _recording_at(session: Session, manifest: ExperimentManifest, position: int):
    if not 0 <= position < len(session.order):
        raise not_found(f"no recording at position {position}")
    return manifest.recordings[session.order[position]]


def _next_position(session: Session, manifest: ExperimentManifest) -> int:
    played = 0
    for rec_index in session.order:
        if session.play_state.get(manifest.recordings[rec_index].id) == PLAY_PLAYED:
            played += 1
        else:
            break
    return played


def _progress_view(session: Session, manifest: ExperimentManifest) -> dict:
    next_position = _next_position(session, manifest)
    answered = sorted(
        position
        for position, rec_index in enumerate(session.order)
        if manifest.recordings[rec_index].id in session.answers
    )
    return {
        "session_id": session.id,
        "experiment_id": session.experiment_id,
        "total": session.total,
        "next_position": next_position,
        "consent_given": session.consent_given,
        "demographics_submitted": session.demographics_submitted,
        "answered_positions": answered,
        "done": len(answered) == session.total,
    }
