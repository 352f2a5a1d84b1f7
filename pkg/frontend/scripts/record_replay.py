"""Record the resuscitation walkthrough's event stream as a UI test fixture.

Runs the real engine against the checked-in bundle and writes the events
exactly as the SSE stream would deliver them, so the UI fold is tested
against genuine wire data.  Regenerate with:

    python3 scripts/record_replay.py
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(REPO_ROOT / "src"))

from core.backends import OracleBackend  # noqa: E402
from core.procedure import render_step_text  # noqa: E402
from core.service import EngineService  # noqa: E402

BUNDLE = REPO_ROOT / "tests" / "fixtures" / "bundles" / "iss-cpr.json"
QUERY = (
    "Hi, I have a person that is not breathing. I have already requested PMC. "
    "What was the fourth step of the ISS CPR procedure?"
)
OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "cpr-replay.json"


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        service = EngineService(data_dir=Path(tmp), backend=OracleBackend())
        service.ingest_path(BUNDLE)
        session = service.create_session()
        result = service.handle_query(session.session_id, QUERY)

    step = service.procedure("iss-cpr").lookup_step(4)
    fixture = {
        "query": QUERY,
        "expected_step_number": 4,
        "expected_step_text": render_step_text(step),
        "expected_figure_number": 1,
        "expected_media_url": "/api/figures/iss-cpr/1",
        "events": [
            {"kind": e.kind.value, "seq": e.seq, "payload": e.payload}
            for e in result.events
        ],
    }
    OUT.write_text(json.dumps(fixture, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {OUT} ({len(fixture['events'])} events)")


if __name__ == "__main__":
    main()
