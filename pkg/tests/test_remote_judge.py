"""Wire-protocol tests for RemoteJudge against a local stub service."""

from __future__ import annotations

import json
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from comparena.judges import (
    ComparisonRequest,
    JudgeUnavailableError,
    ProtocolViolationError,
    RemoteJudge,
    check_remote_conformance,
)


class _StubHandler(BaseHTTPRequestHandler):
    """Deterministic length-based judge speaking the wire protocol."""

    # silence per-request logging
    def log_message(self, fmt, *args):  # noqa: D102
        pass

    def _read_json(self):
        length = int(self.headers.get("Content-Length", 0))
        return json.loads(self.rfile.read(length))

    def _send(self, status, payload):
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    @staticmethod
    def _verdict(item):
        diff = len(item["first"]) - len(item["second"])
        if diff == 0:
            label, probs = "tie", {"better": 0.25, "worse": 0.25, "tie": 0.5}
        elif diff > 0:
            label, probs = "better", {"better": 0.8, "worse": 0.15, "tie": 0.05}
        else:
            label, probs = "worse", {"better": 0.15, "worse": 0.8, "tie": 0.05}
        if not item.get("allow_tie", True):
            mass = probs["better"] + probs["worse"]
            probs = {
                "better": probs["better"] / mass,
                "worse": probs["worse"] / mass,
                "tie": 0.0,
            }
            label = "better" if probs["better"] >= probs["worse"] else "worse"
        return {"label": label, "probs": probs}

    def do_GET(self):
        if self.path == "/health":
            self._send(200, {"status": "ok"})
        else:
            self._send(404, {"error": "not found"})

    def do_POST(self):
        mode = os.environ.get("STUB_JUDGE_MODE", "ok")
        if mode == "bad_sum":
            self._send(200, {"label": "better", "probs": {"better": 0.5, "worse": 0.2, "tie": 0.1}})
            return
        if mode == "http_500":
            self._send(500, {"error": "boom"})
            return
        body = self._read_json()
        if self.path == "/compare":
            self._send(200, self._verdict(body))
        elif self.path == "/compare_batch":
            self._send(200, {"results": [self._verdict(item) for item in body["items"]]})
        else:
            self._send(404, {"error": "not found"})


@pytest.fixture(scope="module")
def stub_endpoint():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    thread.join(timeout=5)


@pytest.fixture(autouse=True)
def _reset_mode():
    os.environ["STUB_JUDGE_MODE"] = "ok"
    yield
    os.environ.pop("STUB_JUDGE_MODE", None)


def test_round_trip_parses_verdict(stub_endpoint):
    judge = RemoteJudge(stub_endpoint)
    v = judge.compare(ComparisonRequest(context="c", first="a longer text", second="short"))
    assert v.label == "better"
    assert v.probs == (0.8, 0.15, 0.05)


def test_health(stub_endpoint):
    assert RemoteJudge(stub_endpoint).health() is True


def test_batch_preserves_order(stub_endpoint):
    judge = RemoteJudge(stub_endpoint)
    items = [
        ComparisonRequest(context="", first="aaaa", second="b"),
        ComparisonRequest(context="", first="b", second="aaaa"),
        ComparisonRequest(context="", first="xy", second="xy"),
    ]
    verdicts = judge.compare_batch(items)
    assert [v.label for v in verdicts] == ["better", "worse", "tie"]


def test_invalid_probability_sum_is_protocol_violation(stub_endpoint):
    os.environ["STUB_JUDGE_MODE"] = "bad_sum"
    judge = RemoteJudge(stub_endpoint)
    with pytest.raises(ProtocolViolationError, match="sum"):
        judge.compare(ComparisonRequest(context="", first="a", second="b"))


def test_http_error_is_protocol_violation(stub_endpoint):
    os.environ["STUB_JUDGE_MODE"] = "http_500"
    judge = RemoteJudge(stub_endpoint)
    with pytest.raises(ProtocolViolationError, match="500"):
        judge.compare(ComparisonRequest(context="", first="a", second="b"))


def test_unreachable_endpoint_raises_unavailable_after_retries():
    judge = RemoteJudge("http://127.0.0.1:1", timeout=0.2, retries=1, backoff=0.0)
    with pytest.raises(JudgeUnavailableError, match="2 attempts"):
        judge.compare(ComparisonRequest(context="", first="a", second="b"))


def test_allow_tie_false_enforced_on_response(stub_endpoint):
    judge = RemoteJudge(stub_endpoint)
    v = judge.compare(
        ComparisonRequest(context="", first="aaaa", second="bb", allow_tie=False)
    )
    assert v.p_tie == 0.0


def test_conformance_checker_passes_on_good_stub(stub_endpoint):
    assert check_remote_conformance(stub_endpoint) == []


def test_conformance_checker_flags_broken_service(stub_endpoint):
    os.environ["STUB_JUDGE_MODE"] = "bad_sum"
    failures = check_remote_conformance(stub_endpoint)
    assert failures, "broken stub must produce conformance failures"
