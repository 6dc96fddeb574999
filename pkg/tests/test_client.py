"""Wire-client conformance against the bundled mock server."""

import math

import pytest
from helpers import make_frame_dir

from gridscout import mockserver
from gridscout.client import RemoteBackend, ServerEndpoint, ServerStatusError, TransportError
from gridscout.grid import FrameRef
from gridscout.posterior import AnswerSpace, ProbeRequest, UnscorableResponseError, letter_posterior_from_logprobs

FIXTURE = {"B": math.log(0.9), "A": math.log(0.05), "C": math.log(0.03), "D": math.log(0.02)}


def frame_refs(frame_dir, n):
    files = sorted(str(p) for p in frame_dir.iterdir())
    return tuple(FrameRef(i, i, files[i]) for i in range(n))


def request_for(frames, space, resolution=(32, 32), mode="per-frame-sequence"):
    return ProbeRequest(
        frames=frames, question="what?", answer_space=space, resolution=resolution, input_mode=mode
    )


@pytest.fixture
def frames2(tmp_path):
    return frame_refs(make_frame_dir(tmp_path, 2), 2)


def endpoint_for(server, **kw):
    defaults = dict(base_url=server.url, model="mock-model", timeout_s=5.0, max_retries=2, backoff_base_s=0.01)
    defaults.update(kw)
    return ServerEndpoint(**defaults)


class TestHappyPath:
    def test_fixture_posterior_reproduced_exactly(self, mock_server, frames2):
        space = AnswerSpace.letters(4)
        mock_server.enqueue(mockserver.ok(FIXTURE))
        backend = RemoteBackend(endpoint_for(mock_server))
        posterior, retries = backend.posterior(request_for(frames2, space))
        assert posterior == letter_posterior_from_logprobs(FIXTURE, space)
        assert posterior.probabilities[1] == max(posterior.probabilities)
        assert posterior.probabilities[1] == pytest.approx(0.9, abs=1e-12)
        assert retries == 0

    def test_request_fields(self, mock_server, frames2):
        space = AnswerSpace.letters(6)
        backend = RemoteBackend(endpoint_for(mock_server))
        backend.posterior(request_for(frames2, space))
        entry = mock_server.request_log[0]
        assert entry["path"] == "/v1/chat/completions"
        assert entry["model"] == "mock-model"
        assert entry["max_tokens"] == 1
        assert entry["logprobs"] is True
        assert entry["top_logprobs"] >= 6
        assert entry["n_images"] == 2

    def test_collage_mode_sends_one_image(self, mock_server, tmp_path):
        frames = frame_refs(make_frame_dir(tmp_path, 4), 4)
        space = AnswerSpace.letters(4)
        backend = RemoteBackend(endpoint_for(mock_server))
        backend.posterior(request_for(frames, space, resolution=(64, 64), mode="tiled-collage"))
        assert mock_server.request_log[0]["n_images"] == 1

    def test_bearer_token_from_env(self, mock_server, frames2, monkeypatch):
        monkeypatch.setenv("GRIDSCOUT_API_KEY", "sk-test")
        backend = RemoteBackend(endpoint_for(mock_server))
        backend.posterior(request_for(frames2, AnswerSpace.letters(4)))
        assert mock_server.request_log[0]["has_auth"] is True

    def test_no_auth_header_without_env(self, mock_server, frames2, monkeypatch):
        monkeypatch.delenv("GRIDSCOUT_API_KEY", raising=False)
        backend = RemoteBackend(endpoint_for(mock_server))
        backend.posterior(request_for(frames2, AnswerSpace.letters(4)))
        assert mock_server.request_log[0]["has_auth"] is False


class TestRetries:
    def test_timeouts_then_success(self, mock_server, frames2):
        space = AnswerSpace.letters(4)
        mock_server.enqueue(mockserver.delay(2.0, FIXTURE), mockserver.delay(2.0, FIXTURE), mockserver.ok(FIXTURE))
        backend = RemoteBackend(endpoint_for(mock_server, timeout_s=0.3, max_retries=2))
        posterior, retries = backend.posterior(request_for(frames2, space))
        assert retries == 2
        assert posterior.argmax_label(space) == "B"

    def test_retries_exhausted_surfaces_transport_error(self, mock_server, frames2):
        mock_server.enqueue(*[mockserver.delay(2.0, FIXTURE)] * 3)
        backend = RemoteBackend(endpoint_for(mock_server, timeout_s=0.2, max_retries=2))
        with pytest.raises(TransportError) as err:
            backend.posterior(request_for(frames2, AnswerSpace.letters(4)))
        assert err.value.attempts == 3

    def test_5xx_retried_then_success(self, mock_server, frames2):
        mock_server.enqueue(mockserver.status(503, "busy"), mockserver.ok(FIXTURE))
        backend = RemoteBackend(endpoint_for(mock_server))
        posterior, retries = backend.posterior(request_for(frames2, AnswerSpace.letters(4)))
        assert retries == 1

    def test_4xx_not_retried(self, mock_server, frames2):
        mock_server.enqueue(mockserver.status(401, "bad key"), mockserver.ok(FIXTURE))
        backend = RemoteBackend(endpoint_for(mock_server))
        with pytest.raises(ServerStatusError) as err:
            backend.posterior(request_for(frames2, AnswerSpace.letters(4)))
        assert err.value.status == 401
        assert "bad key" in err.value.body_excerpt
        assert len(mock_server.request_log) == 1


class TestErrorPaths:
    def test_unscorable_response(self, mock_server, frames2):
        mock_server.enqueue(mockserver.ok({"7": math.log(0.8), "no": math.log(0.2)}))
        backend = RemoteBackend(endpoint_for(mock_server))
        with pytest.raises(UnscorableResponseError) as err:
            backend.posterior(request_for(frames2, AnswerSpace.letters(4)))
        assert "7" in err.value.raw_tokens

    def test_malformed_response(self, mock_server, frames2):
        from gridscout.client import ProtocolError

        mock_server.enqueue(mockserver.raw({"choices": []}))
        backend = RemoteBackend(endpoint_for(mock_server))
        with pytest.raises(ProtocolError):
            backend.posterior(request_for(frames2, AnswerSpace.letters(4)))

    def test_connection_error_spent_retries(self, frames2):
        ep = ServerEndpoint(base_url="http://127.0.0.1:1", timeout_s=0.2, max_retries=1, backoff_base_s=0.01)
        with pytest.raises(TransportError):
            RemoteBackend(ep).posterior(request_for(frames2, AnswerSpace.letters(4)))


def test_remote_posterior_wrapper(mock_server, tmp_path):
    from gridscout.client import remote_posterior

    frames = frame_refs(make_frame_dir(tmp_path, 1), 1)
    mock_server.enqueue(mockserver.ok(FIXTURE))
    space = AnswerSpace.letters(4)
    p = remote_posterior(request_for(frames, space), endpoint_for(mock_server))
    assert p.argmax_label(space) == "B"
