"""Filesystem persistence: a directory per experiment, JSON documents, WAVE files.

Layout under the data directory:

    experiments/<experiment_id>/
        manifest.json
        audio/<recording_id>.wav
        sessions/<session_id>.json

Every document write goes through a temp file and an atomic rename, so a
crash at any point leaves either the old or the new state, never a torn one.
"""

from __future__ import annotations

import json
import os
import shutil
import uuid
from pathlib import Path

from ..model import ExperimentManifest, Session


class Store:
    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir)
        (self.root / "experiments").mkdir(parents=True, exist_ok=True)
        self._session_index: dict[str, str] = {}  # session id -> experiment id

    # -- experiments -------------------------------------------------------

    def experiment_dir(self, experiment_id: str) -> Path:
        return self.root / "experiments" / experiment_id

    def list_experiments(self) -> list[str]:
        base = self.root / "experiments"
        return sorted(p.name for p in base.iterdir() if (p / "manifest.json").is_file())

    def experiment_exists(self, experiment_id: str) -> bool:
        return (self.experiment_dir(experiment_id) / "manifest.json").is_file()

    def write_manifest(self, manifest: ExperimentManifest) -> None:
        exp_dir = self.experiment_dir(manifest.id)
        exp_dir.mkdir(parents=True, exist_ok=True)
        _atomic_write(exp_dir / "manifest.json", manifest.dumps())

    def read_manifest(self, experiment_id: str) -> ExperimentManifest:
        path = self.experiment_dir(experiment_id) / "manifest.json"
        return ExperimentManifest.loads(path.read_text())

    def remove_experiment(self, experiment_id: str) -> None:
        shutil.rmtree(self.experiment_dir(experiment_id), ignore_errors=True)

    def audio_path(self, experiment_id: str, relative: str) -> Path:
        return self.experiment_dir(experiment_id) / relative

    # -- sessions ----------------------------------------------------------

    def _session_path(self, experiment_id: str, session_id: str) -> Path:
        return self.experiment_dir(experiment_id) / "sessions" / f"{session_id}.json"

    def write_session(self, session: Session) -> None:
        path = self._session_path(session.experiment_id, session.id)
        path.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write(path, json.dumps(session.to_dict(), indent=2) + "\n")
        self._session_index[session.id] = session.experiment_id

    def read_session(self, session_id: str) -> Session | None:
        experiment_id = self._session_index.get(session_id)
        if experiment_id is None:
            hits = list((self.root / "experiments").glob(f"*/sessions/{session_id}.json"))
            if not hits:
                return None
            experiment_id = hits[0].parent.parent.name
            self._session_index[session_id] = experiment_id
        path = self._session_path(experiment_id, session_id)
        if not path.is_file():
            return None
        return Session.from_dict(json.loads(path.read_text()))

    def list_sessions(self, experiment_id: str) -> list[Session]:
        sessions_dir = self.experiment_dir(experiment_id) / "sessions"
        if not sessions_dir.is_dir():
            return []
        out = []
        for path in sorted(sessions_dir.glob("*.json")):
            out.append(Session.from_dict(json.loads(path.read_text())))
        return out


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(f".{path.name}.{uuid.uuid4().hex}.tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
