import socket
import threading
import time

import httpx
import pytest
import uvicorn

from mcvlab.model import NatoLexicon
from mcvlab.service.app import create_app

ADMIN_TOKEN = "test-admin-token"


@pytest.fixture(scope="session")
def lexicon():
    return NatoLexicon.default()


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class LiveServer:
    """uvicorn in a background thread, for clients that need a real URL."""

    def __init__(self, data_dir, admin_token=ADMIN_TOKEN):
        self.port = free_port()
        self.url = f"http://127.0.0.1:{self.port}"
        self.admin_token = admin_token
        config = uvicorn.Config(
            create_app(data_dir, admin_token),
            host="127.0.0.1", port=self.port, log_level="warning",
        )
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    def start(self):
        self.thread.start()
        deadline = time.time() + 15
        while time.time() < deadline:
            try:
                if httpx.get(f"{self.url}/api/health", timeout=1).status_code == 200:
                    return self
            except httpx.HTTPError:
                time.sleep(0.05)
        raise RuntimeError("server did not come up")

    def stop(self):
        self.server.should_exit = True
        self.thread.join(timeout=10)


@pytest.fixture
def live_server(tmp_path):
    server = LiveServer(tmp_path / "data").start()
    yield server
    server.stop()
