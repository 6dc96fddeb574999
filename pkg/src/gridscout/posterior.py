"""Answer spaces, posteriors over them, and letter-token scoring."""

from __future__ import annotations

import math
from dataclasses import dataclass

from gridscout.errors import BackendError

SUM_TOLERANCE = 1e-9


class UnscorableResponseError(BackendError):
    """The served response contained no answer-label token to score."""

    def __init__(self, message: str, raw_tokens: dict[str, float] | None = None):
        super().__init__(message)
        self.raw_tokens = dict(raw_tokens or {})


@dataclass(frozen=True)
class AnswerSpace:
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) < 2:
            raise ValueError("answer space needs at least 2 labels")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"answer labels must be distinct, got {self.labels}")

    @classmethod
    def letters(cls, n: int) -> "AnswerSpace":
        """First n uppercase letters (A.. for multiple-choice)."""
        if not 2 <= n <= 26:
            raise ValueError(f"letter answer space supports 2..26 labels, got {n}")
        return cls(tuple(chr(ord("A") + i) for i in range(n)))

    def __len__(self) -> int:
        return len(self.labels)

    def index_of(self, label: str) -> int:
        return self.labels.index(label)


@dataclass(frozen=True)
class Posterior:
    """Normalized probability vector aligned with an AnswerSpace."""

    probabilities: tuple[float, ...]

    def __post_init__(self):
        for p in self.probabilities:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"posterior entry {p} outside [0, 1]")
        total = math.fsum(self.probabilities)
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"posterior sums to {total}, expected 1 within {SUM_TOLERANCE}")

    def argmax_label(self, space: AnswerSpace) -> str:
        # Strict > keeps ties on the first label, so flat posteriors
        # resolve deterministically.
        best = 0
        for i in range(1, len(self.probabilities)):
            if self.probabilities[i] > self.probabilities[best]:
                best = i
        return space.labels[best]


@dataclass(frozen=True)
class ProbeRequest:
    """One backend call: a frame subset plus the question to score it by."""

    frames: tuple  # FrameRef sequence
    question: str
    answer_space: AnswerSpace
    resolution: tuple[int, int]
    input_mode: str = "per-frame-sequence"  # or "tiled-collage"

    def __post_init__(self):
        if len(self.frames) < 1:
            raise ValueError("probe request needs at least one frame")
        w, h = self.resolution
        if w < 1 or h < 1:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        if self.input_mode not in ("per-frame-sequence", "tiled-collage"):
            raise ValueError(f"unknown probe input mode {self.input_mode!r}")


def probe_confidence(posterior: Posterior) -> float:
    """Peak of the answer posterior: how confidently the model commits."""
    return max(posterior.probabilities)


def letter_posterior_from_logprobs(token_logprobs: dict[str, float], space: AnswerSpace) -> Posterior:
    """Posterior from generated-token log-probabilities.

    Tokens are matched to labels case-sensitively after trimming surrounding
    whitespace; decorated variants like "(A" stay unmatched.  Matched labels
    are exponentiated and renormalized; absent labels get probability 0.
    Raises UnscorableResponseError when no label matches.
    """
    by_label: dict[str, float] = {}
    for token, logprob in token_logprobs.items():
        label = token.strip()
        if label in space.labels:
            # Duplicate surface forms (" A" and "A") keep the likelier one.
            if label not in by_label or logprob > by_label[label]:
                by_label[label] = logprob
    if not by_label:
        raise UnscorableResponseError(
            f"no answer label among {len(token_logprobs)} candidate tokens",
            raw_tokens=token_logprobs,
        )
    peak = max(by_label.values())
    weights = [math.exp(by_label[lab] - peak) if lab in by_label else 0.0 for lab in space.labels]
    total = math.fsum(weights)
    return Posterior(tuple(w / total for w in weights))
