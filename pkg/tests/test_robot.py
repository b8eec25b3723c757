import json
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from mcvlab.model import plate_to_nato
from mcvlab.robot import (
    EngineError,
    ExternalEngine,
    HttpEngine,
    MockEngine,
    _experiment_id_from_link,
    make_engine,
    mock_engine,
    run_session,
)
from mcvlab.service.builder import ExperimentConfig, build_experiment
from mcvlab.service.store import Store

from conftest import ADMIN_TOKEN

CLEAN = "reporting license plate alfa one two bravo charlie delta"


class TestMockEngine:
    def test_verbatim(self):
        engine = mock_engine({"r000": CLEAN})
        assert engine.transcribe(b"", "r000") == CLEAN

    def test_missing_id_fails(self):
        engine = mock_engine({"r000": CLEAN})
        with pytest.raises(EngineError):
            engine.transcribe(b"", "r999")
        with pytest.raises(EngineError):
            engine.transcribe(b"", None)

    def test_noise_is_deterministic(self):
        a = mock_engine({"r000": CLEAN}, noise_seed=5).transcribe(b"", "r000")
        b = mock_engine({"r000": CLEAN}, noise_seed=5).transcribe(b"", "r000")
        assert a == b
        assert a != CLEAN

    def test_noise_corrupts_exactly_one_payload_word(self):
        for seed in range(30):
            engine = mock_engine({"r000": CLEAN}, noise_seed=seed)
            noisy = engine.transcribe(b"", "r000").split()
            clean = CLEAN.split()
            assert len(noisy) == len(clean)
            assert noisy[:3] == clean[:3]  # lead untouched
            changed = [i for i, (a, b) in enumerate(zip(clean, noisy)) if a != b]
            assert len(changed) == 1


class TestEngineAdapters:
    def test_external_engine(self, tmp_path):
        script = tmp_path / "engine.py"
        script.write_text(f"print({CLEAN!r})\n")
        engine = ExternalEngine([sys.executable, str(script)])
        assert engine.transcribe(b"\x00\x01") == CLEAN

    def test_external_engine_failure(self, tmp_path):
        engine = ExternalEngine([sys.executable, "-c", "import sys; sys.exit(2)"])
        with pytest.raises(EngineError, match="exited 2"):
            engine.transcribe(b"")

    def test_external_engine_timeout(self, tmp_path):
        engine = ExternalEngine(
            [sys.executable, "-c", "import time; time.sleep(5)"], timeout_s=0.5,
        )
        with pytest.raises(EngineError, match="timed out"):
            engine.transcribe(b"")

    def test_http_engine(self):
        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                self.rfile.read(int(self.headers.get("Content-Length", 0)))
                body = json.dumps({"text": CLEAN}).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        thread = threading.Thread(target=httpd.serve_forever, daemon=True)
        thread.start()
        try:
            engine = HttpEngine(f"http://127.0.0.1:{httpd.server_port}/stt")
            assert engine.transcribe(b"RIFFxxxx") == CLEAN
        finally:
            httpd.shutdown()

    def test_make_engine_specs(self, tmp_path):
        table = tmp_path / "table.json"
        table.write_text(json.dumps({"r000": CLEAN}))
        assert isinstance(make_engine(f"mock:{table}"), MockEngine)
        assert make_engine("external:whisper-cli --model tiny").command[0] == "whisper-cli"
        assert make_engine("http:http://localhost/stt").url == "http://localhost/stt"
        with pytest.raises(ValueError):
            make_engine("quantum:nope")


def test_experiment_id_from_link():
    assert _experiment_id_from_link("exp-abc") == "exp-abc"
    assert _experiment_id_from_link("http://h:80/api/experiments/exp-abc") == "exp-abc"
    assert _experiment_id_from_link("http://h/ui/experiments/exp-abc?x=1") == "exp-abc"


def build_clean_experiment(data_dir, experiment_id, n=4, seed=99):
    config = ExperimentConfig(
        n_recordings=n, codecs=["passthrough"], burst_sizes=[1],
        p_gb=0.0, frame_drops=[0.0], seed=seed,
    )
    store = Store(data_dir)
    manifest = build_experiment(config, store, experiment_id=experiment_id)
    table = {
        r.id: plate_to_nato(r.ground_truth, lead=manifest.lead_sentence)
        for r in manifest.recordings
    }
    return manifest, table


class TestRunSession:
    def test_perfect_mock_scores_one(self, live_server, tmp_path):
        _, table = build_clean_experiment(tmp_path / "data", "exp-robot")
        report = run_session(
            live_server.url, "exp-robot", mock_engine(table),
            admin_token=ADMIN_TOKEN,
        )
        assert report.without_truth.experiment_score == pytest.approx(1.0)
        assert report.with_truth.experiment_score == 1.0
        assert len(report.trials) == 4
        assert report.engine_label == "mock"

    def test_empty_engine_scores_zero(self, live_server, tmp_path):
        build_clean_experiment(tmp_path / "data", "exp-empty")

        class SilentEngine(MockEngine):
            def transcribe(self, audio, recording_id=None):
                return ""

        report = run_session(
            live_server.url, "exp-empty", SilentEngine({}), admin_token=ADMIN_TOKEN,
        )
        assert report.with_truth.experiment_score == 0.0

    def test_engine_failure_degrades_to_empty_answer(self, live_server, tmp_path):
        _, table = build_clean_experiment(tmp_path / "data", "exp-flaky")
        broken_id = sorted(table)[1]

        class FlakyEngine(MockEngine):
            def transcribe(self, audio, recording_id=None):
                if recording_id == broken_id:
                    raise EngineError("synthetic failure")
                return super().transcribe(audio, recording_id)

        report = run_session(
            live_server.url, "exp-flaky", FlakyEngine(table), admin_token=ADMIN_TOKEN,
        )
        assert len(report.trials) == 4
        failed = [t for t in report.trials if t.engine_failed]
        assert len(failed) == 1
        assert failed[0].plate == ""
        # 3 perfect answers and one empty: (3*1 + 0) / 4
        assert report.with_truth.experiment_score == pytest.approx(0.75)

    def test_resume_after_interruption(self, live_server, tmp_path):
        _, table = build_clean_experiment(tmp_path / "data", "exp-resume")
        state_path = tmp_path / "robot-state.json"

        class CrashingEngine(MockEngine):
            calls = 0

            def transcribe(self, audio, recording_id=None):
                CrashingEngine.calls += 1
                if CrashingEngine.calls == 2:
                    raise RuntimeError("process killed")
                return super().transcribe(audio, recording_id)

        with pytest.raises(RuntimeError):
            run_session(live_server.url, "exp-resume", CrashingEngine(table),
                        state_path=state_path)

        # Second run resumes the same session and finishes the remaining trials.
        report = run_session(live_server.url, "exp-resume", mock_engine(table),
                             admin_token=ADMIN_TOKEN, state_path=state_path)
        state = json.loads(state_path.read_text())
        assert report.session_id == state["session_id"]
        positions = [t.position for t in report.trials]
        assert positions == [1, 2, 3]  # position 0 answered before the crash
        # The crashed trial lost its audio (play-once) so its answer is empty.
        assert report.with_truth.experiment_score == pytest.approx(3 / 4)

    def test_full_60_recording_run_under_30s(self, live_server, tmp_path):
        import time

        _, table = build_clean_experiment(tmp_path / "data", "exp-sixty", n=60, seed=60)
        start = time.monotonic()
        report = run_session(live_server.url, "exp-sixty", mock_engine(table),
                             admin_token=ADMIN_TOKEN)
        elapsed = time.monotonic() - start
        assert len(report.trials) == 60
        assert report.with_truth.experiment_score == 1.0
        assert elapsed < 30.0, f"took {elapsed:.1f}s"

    def test_robot_marked_in_export(self, live_server, tmp_path):
        import httpx

        _, table = build_clean_experiment(tmp_path / "data", "exp-marked")
        run_session(live_server.url, "exp-marked", mock_engine(table))
        results = httpx.get(
            f"{live_server.url}/api/experiments/exp-marked/results",
            headers={"X-Admin-Token": ADMIN_TOKEN},
        ).json()
        assert results["sessions"][0]["subject_type"] == "robot:mock"
        assert all(r["subject_type"] == "robot:mock" for r in results["sessions"][0]["answers"])
