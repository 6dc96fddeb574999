"""Chat-completions client that reads answer posteriors from logprobs.

One request per probe: frames as inline base64 images, the question, a
single-letter instruction, a 1-token generation cap, and per-token
log-probabilities with enough alternatives to cover the answer space.
Transient transport failures retry with exponential backoff.
"""

from __future__ import annotations

import base64
import io
import os
import threading
import time
from dataclasses import dataclass

import requests

from gridscout import selection
from gridscout.errors import BackendError
from gridscout.posterior import Posterior, ProbeRequest, letter_posterior_from_logprobs


class TransportError(BackendError):
    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class ServerStatusError(BackendError):
    def __init__(self, status: int, body_excerpt: str):
        super().__init__(f"server returned HTTP {status}: {body_excerpt}")
        self.status = status
        self.body_excerpt = body_excerpt


class ProtocolError(BackendError):
    """Response was 200 but not in the expected chat-completions shape."""


@dataclass(frozen=True)
class ServerEndpoint:
    base_url: str
    model: str = "default"
    path: str = "/v1/chat/completions"
    api_key_env: str = "GRIDSCOUT_API_KEY"
    timeout_s: float = 60.0
    max_retries: int = 2
    backoff_base_s: float = 0.5

    @property
    def url(self) -> str:
        return self.base_url.rstrip("/") + self.path


class RemoteBackend:
    """Probe backend talking to an OpenAI-compatible inference server.

    Tolerates concurrent in-flight requests; the session and image cache
    are the only shared state.
    """

    def __init__(self, endpoint: ServerEndpoint, session: requests.Session | None = None):
        self.endpoint = endpoint
        self.session = session or requests.Session()
        self._image_cache: dict[str, object] = {}
        self._cache_lock = threading.Lock()

    def describe(self) -> str:
        return f"remote:{self.endpoint.model}@{self.endpoint.base_url}"

    def posterior(self, request: ProbeRequest, item=None) -> tuple[Posterior, int]:
        payload = self._build_payload(request)
        body, retries = self._post_with_retries(payload)
        return _posterior_from_response(body, request.answer_space), retries

    # -- request construction ------------------------------------------------

    def _load_image(self, path: str):
        from PIL import Image

        with self._cache_lock:
            cached = self._image_cache.get(path)
        if cached is not None:
            return cached
        img = Image.open(path).convert("RGB")
        img.load()
        with self._cache_lock:
            self._image_cache[path] = img
        return img

    def _encode(self, img, size: tuple[int, int]) -> str:
        buf = io.BytesIO()
        img.resize(size).save(buf, format="PNG")
        return "data:image/png;base64," + base64.b64encode(buf.getvalue()).decode("ascii")

    def _image_parts(self, request: ProbeRequest) -> list[dict]:
        images = [self._load_image(f.source) for f in request.frames]
        if request.input_mode == "tiled-collage":
            plan = selection.collate_layout(len(images), request.resolution)
            uris = [self._encode(selection.render_collage(images, plan), request.resolution)]
        else:
            uris = [self._encode(img, request.resolution) for img in images]
        return [{"type": "image_url", "image_url": {"url": u}} for u in uris]

    def _build_payload(self, request: ProbeRequest) -> dict:
        labels = ", ".join(request.answer_space.labels)
        text = f"{request.question}\nAnswer with a single letter from: {labels}."
        content = self._image_parts(request) + [{"type": "text", "text": text}]
        return {
            "model": self.endpoint.model,
            "messages": [{"role": "user", "content": content}],
            "max_tokens": 1,
            "logprobs": True,
            "top_logprobs": len(request.answer_space),
        }

    # -- transport -----------------------------------------------------------

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.endpoint.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _post_with_retries(self, payload: dict) -> tuple[dict, int]:
        ep = self.endpoint
        failures = 0
        while True:
            try:
                resp = self.session.post(ep.url, json=payload, headers=self._headers(), timeout=ep.timeout_s)
            except (requests.Timeout, requests.ConnectionError) as exc:
                failures += 1
                if failures > ep.max_retries:
                    raise TransportError(
                        f"transport failure after {failures} attempts: {exc}", attempts=failures
                    ) from exc
                time.sleep(ep.backoff_base_s * 2 ** (failures - 1))
                continue
            if resp.status_code >= 500:
                failures += 1
                if failures > ep.max_retries:
                    raise ServerStatusError(resp.status_code, resp.text[:200])
                time.sleep(ep.backoff_base_s * 2 ** (failures - 1))
                continue
            if resp.status_code != 200:
                raise ServerStatusError(resp.status_code, resp.text[:200])
            try:
                return resp.json(), failures
            except ValueError as exc:
                raise ProtocolError(f"response is not JSON: {resp.text[:200]}") from exc


def _posterior_from_response(body: dict, answer_space) -> Posterior:
    try:
        first = body["choices"][0]["logprobs"]["content"][0]
    except (KeyError, IndexError, TypeError) as exc:
        raise ProtocolError(f"missing logprobs in response: {str(body)[:200]}") from exc
    candidates: dict[str, float] = {}
    for alt in first.get("top_logprobs", []):
        tok, lp = alt.get("token"), alt.get("logprob")
        if tok is not None and lp is not None and (tok not in candidates or lp > candidates[tok]):
            candidates[tok] = lp
    tok, lp = first.get("token"), first.get("logprob")
    if tok is not None and lp is not None and (tok not in candidates or lp > candidates[tok]):
        candidates[tok] = lp
    return letter_posterior_from_logprobs(candidates, answer_space)


def remote_posterior(request: ProbeRequest, endpoint: ServerEndpoint) -> Posterior:
    """One-shot convenience wrapper around RemoteBackend."""
    posterior, _ = RemoteBackend(endpoint).posterior(request)
    return posterior
