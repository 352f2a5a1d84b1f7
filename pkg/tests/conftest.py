"""Shared fixtures: bundle corpus, engine services, counting backend."""

from __future__ import annotations

import contextlib
import shutil
import threading
import time
from pathlib import Path

import pytest
import uvicorn

from core import (
    EngineService,
    OracleBackend,
    TranscriptBackend,
    build_corpus,
    create_app,
    load_procedure,
)

FIXTURES = Path(__file__).parent / "fixtures"
BUNDLES = FIXTURES / "bundles"
TRANSCRIPTS = FIXTURES / "transcripts"
PROMPTS = FIXTURES / "prompts"

CPR_QUERY = (
    "Hi, I have a person that is not breathing. I have already requested PMC. "
    "What was the fourth step of the ISS CPR procedure?"
)
OFF_TOPIC_QUERY = "What's your favorite movie?"
METADATA_QUERY = "When was the procedure last updated?"
METADATA_REPLY = "The CPR procedure on the ISS was last updated on 09 April 2015."

CPR_STEP4_REPLY = """<<STEP 4>> - DEPLOY AED:
Connect AED electrodes to patient's chest. (See Figure 1)
AED ON (green) → Press
Follow verbal prompts.
If verbal prompts inaudible, read prompts on screen.
Continue with "Step 5" <<SHOW FIGURE 1>>"""


class CountingBackend:
    """Wraps a backend and counts completions; used to assert short-circuits."""

    def __init__(self, inner):
        self._inner = inner
        self.call_count = 0

    def complete(self, messages):
        self.call_count += 1
        return self._inner.complete(messages)


class ScriptedBackend:
    """Returns fixed replies in order regardless of the prompt."""

    def __init__(self, *replies: str):
        self._replies = list(replies)
        self.call_count = 0

    def complete(self, messages):
        self.call_count += 1
        return self._replies.pop(0)


def bundle_path(procedure_id: str) -> Path:
    return BUNDLES / f"{procedure_id}.json"


def all_bundle_paths() -> list[Path]:
    return sorted(BUNDLES.glob("*.json"))


@pytest.fixture(scope="session")
def procedures():
    return [load_procedure(p) for p in all_bundle_paths()]


@pytest.fixture(scope="session")
def cpr(procedures):
    return next(p for p in procedures if p.procedure_id == "iss-cpr")


@pytest.fixture(scope="session")
def corpus(procedures):
    return build_corpus(procedures)


@pytest.fixture
def oracle_service(tmp_path):
    """Engine over all ten bundles with a counting oracle backend."""
    backend = CountingBackend(OracleBackend())
    service = EngineService(tmp_path / "data", backend=backend)
    for path in all_bundle_paths():
        service.ingest_path(path)
    return service


@pytest.fixture
def cpr_service(tmp_path):
    """Engine over the CPR bundle only, counting oracle backend."""
    backend = CountingBackend(OracleBackend())
    service = EngineService(tmp_path / "data", backend=backend)
    service.ingest_path(bundle_path("iss-cpr"))
    return service


@pytest.fixture
def transcript_service(tmp_path):
    """CPR-only engine answering from the recorded transcript."""
    backend = CountingBackend(TranscriptBackend(TRANSCRIPTS / "cpr-metadata.json"))
    service = EngineService(tmp_path / "data", backend=backend)
    service.ingest_path(bundle_path("iss-cpr"))
    return service


@pytest.fixture
def scratch_bundles(tmp_path):
    """A writable copy of the bundle fixtures for mutation tests."""
    target = tmp_path / "bundles"
    shutil.copytree(BUNDLES, target)
    return target


@contextlib.contextmanager
def live_server(service):
    """A real uvicorn server on an ephemeral port; needed to test streaming,
    which the in-process test client cannot do (it buffers whole bodies)."""
    config = uvicorn.Config(
        create_app(service), host="127.0.0.1", port=0, log_level="warning"
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10.0
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("test server did not start")
        time.sleep(0.01)
    port = server.servers[0].sockets[0].getsockname()[1]
    try:
        yield f"http://127.0.0.1:{port}"
    finally:
        server.should_exit = True
        thread.join(timeout=5.0)


@pytest.fixture
def live_cpr_server(cpr_service):
    with live_server(cpr_service) as base_url:
        yield base_url
