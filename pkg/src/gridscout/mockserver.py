"""In-process mock of an OpenAI-compatible chat-completions server.

Used by the test suite and runnable standalone.  Every request is parsed
and appended to a log (model, image count, token cap, logprob fields), and
scripted behaviors can inject delays, error statuses, or arbitrary token
candidates to exercise the client's retry and error paths.
"""

from __future__ import annotations

import json
import math
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

DEFAULT_TOP_LOGPROBS = {
    "A": math.log(0.30),
    "B": math.log(0.25),
    "C": math.log(0.20),
    "D": math.log(0.25),
}


def ok(top_logprobs: dict[str, float], delay_s: float = 0.0) -> dict:
    return {"kind": "ok", "top_logprobs": dict(top_logprobs), "delay_s": delay_s}


def delay(seconds: float, top_logprobs: dict[str, float] | None = None) -> dict:
    return ok(top_logprobs or DEFAULT_TOP_LOGPROBS, delay_s=seconds)


def status(code: int, body: str = "injected failure") -> dict:
    return {"kind": "status", "status": code, "body": body}


def raw(body: dict) -> dict:
    return {"kind": "raw", "body": body}


class _Handler(BaseHTTPRequestHandler):
    server_version = "MockInference/0.1"

    def log_message(self, fmt, *args):  # silence default stderr chatter
        pass

    def do_POST(self):
        length = int(self.headers.get("Content-Length", "0"))
        try:
            payload = json.loads(self.rfile.read(length) or b"{}")
        except json.JSONDecodeError:
            payload = {}
        owner: MockInferenceServer = self.server.owner  # type: ignore[attr-defined]
        owner._log_request(self.path, self.headers, payload)
        behavior = owner._next_behavior()

        if behavior.get("delay_s"):
            time.sleep(behavior["delay_s"])
        try:
            if behavior["kind"] == "status":
                body = behavior["body"].encode()
                self.send_response(behavior["status"])
                self.send_header("Content-Type", "text/plain")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)
                return
            if behavior["kind"] == "raw":
                doc = behavior["body"]
            else:
                doc = _completion_doc(payload.get("model", "mock"), behavior["top_logprobs"])
            body = json.dumps(doc).encode()
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
        except (BrokenPipeError, ConnectionResetError):
            pass  # client gave up (timeout test); nothing to do


def _completion_doc(model: str, top_logprobs: dict[str, float]) -> dict:
    ranked = sorted(top_logprobs.items(), key=lambda kv: (-kv[1], kv[0]))
    best_token, best_lp = ranked[0]
    return {
        "id": "mock-completion",
        "object": "chat.completion",
        "model": model,
        "choices": [
            {
                "index": 0,
                "message": {"role": "assistant", "content": best_token},
                "finish_reason": "length",
                "logprobs": {
                    "content": [
                        {
                            "token": best_token,
                            "logprob": best_lp,
                            "top_logprobs": [{"token": t, "logprob": lp} for t, lp in ranked],
                        }
                    ]
                },
            }
        ],
        "usage": {"completion_tokens": 1},
    }


def _count_images(payload: dict) -> int:
    n = 0
    for message in payload.get("messages", []):
        content = message.get("content")
        if isinstance(content, list):
            n += sum(1 for part in content if isinstance(part, dict) and part.get("type") == "image_url")
    return n


class MockInferenceServer:
    def __init__(self, default_top_logprobs: dict[str, float] | None = None):
        self.default_top_logprobs = dict(default_top_logprobs or DEFAULT_TOP_LOGPROBS)
        self.request_log: list[dict] = []
        self._script: list[dict] = []
        self._lock = threading.Lock()
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    # -- lifecycle ------------------------------------------------------------

    def start(self) -> "MockInferenceServer":
        self._server = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
        self._server.daemon_threads = True
        self._server.owner = self  # type: ignore[attr-defined]
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self):
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    def __enter__(self) -> "MockInferenceServer":
        return self.start()

    def __exit__(self, *exc):
        self.stop()

    @property
    def url(self) -> str:
        assert self._server is not None, "server not started"
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    # -- scripting ------------------------------------------------------------

    def enqueue(self, *behaviors: dict):
        """Queue behaviors consumed one per request, then back to default."""
        with self._lock:
            self._script.extend(behaviors)

    def reset(self):
        with self._lock:
            self._script.clear()
            self.request_log.clear()

    def _next_behavior(self) -> dict:
        with self._lock:
            if self._script:
                return self._script.pop(0)
        return ok(self.default_top_logprobs)

    def _log_request(self, path: str, headers, payload: dict):
        entry = {
            "path": path,
            "model": payload.get("model"),
            "n_images": _count_images(payload),
            "max_tokens": payload.get("max_tokens"),
            "logprobs": payload.get("logprobs"),
            "top_logprobs": payload.get("top_logprobs"),
            "has_auth": "Authorization" in headers,
        }
        with self._lock:
            self.request_log.append(entry)


def main():  # pragma: no cover - manual utility
    import argparse

    parser = argparse.ArgumentParser(description="Run the mock inference server until interrupted")
    parser.add_argument("--port", type=int, default=8731)
    args = parser.parse_args()
    server = MockInferenceServer()
    server._server = ThreadingHTTPServer(("127.0.0.1", args.port), _Handler)
    server._server.daemon_threads = True
    server._server.owner = server  # type: ignore[attr-defined]
    print(f"mock inference server on http://127.0.0.1:{args.port}", flush=True)
    server._server.serve_forever()


if __name__ == "__main__":
    main()
