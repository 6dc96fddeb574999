"""Deterministic synthetic evidence oracle.

An episode plants weighted "evidence atoms" in grid frames.  The posterior
for a frame subset depends only on the fraction of total atom weight the
subset covers, so every pipeline claim is testable without model weights.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass, field

from gridscout.kernels import coverage_weight
from gridscout.posterior import AnswerSpace, Posterior

SCHEMA_VERSION = 1


@dataclass
class SyntheticEpisode:
    k: int
    frames: list[list[tuple[int, float]]]  # per frame: (atom_id, weight) references
    atoms: dict[int, float]  # atom_id -> total weight
    truth_label: str
    question: str
    regime: str
    eta: float = 0.0
    seed: int = 0
    _csr: tuple[array, array, array, float] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if len(self.frames) != self.k * self.k:
            raise ValueError(f"episode needs {self.k * self.k} frame entries, got {len(self.frames)}")
        if not 0.0 <= self.eta < 1.0:
            raise ValueError(f"noise eta must be in [0, 1), got {self.eta}")
        referenced = {a for refs in self.frames for a, _ in refs}
        if referenced != set(self.atoms):
            raise ValueError("atom table and frame references disagree")
        if self.atoms and set(self.atoms) != set(range(len(self.atoms))):
            raise ValueError("atom ids must be dense integers 0..n-1")

    def csr(self) -> tuple[array, array, array, float]:
        """CSR layout of frame -> atom references, for the coverage kernel."""
        if self._csr is None:
            offsets = array("i", [0] * (len(self.frames) + 1))
            ids: list[int] = []
            for i, refs in enumerate(self.frames):
                ids.extend(a for a, _ in refs)
                offsets[i + 1] = len(ids)
            weights = array("d", [self.atoms[a] for a in range(len(self.atoms))])
            total = 0.0
            for w in weights:
                total += w
            self._csr = (offsets, array("i", ids), weights, total)
        return self._csr

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "k": self.k,
            "frames": [[[a, w] for a, w in refs] for refs in self.frames],
            "atoms": {str(a): w for a, w in self.atoms.items()},
            "truth_label": self.truth_label,
            "question": self.question,
            "regime": self.regime,
            "eta": self.eta,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticEpisode":
        return cls(
            k=d["k"],
            frames=[[(int(a), float(w)) for a, w in refs] for refs in d["frames"]],
            atoms={int(a): float(w) for a, w in d["atoms"].items()},
            truth_label=d["truth_label"],
            question=d["question"],
            regime=d["regime"],
            eta=d.get("eta", 0.0),
            seed=d.get("seed", 0),
        )


def sufficiency(episode: SyntheticEpisode, subset) -> float:
    """Covered fraction of total atom weight, counting each atom once."""
    n = episode.k * episode.k
    idx = sorted(set(subset))
    for i in idx:
        if not 0 <= i < n:
            raise ValueError(f"pool index {i} out of range [0, {n})")
    offsets, ids, weights, total = episode.csr()
    if total <= 0.0:
        return 0.0
    covered = coverage_weight(offsets, ids, weights, array("i", idx))
    s = covered / total
    if s < 0.0:
        return 0.0
    if s > 1.0:
        return 1.0
    return s


def synthetic_posterior(episode: SyntheticEpisode, subset, space: AnswerSpace) -> Posterior:
    """Posterior peaked on the truth label in proportion to evidence coverage.

    With sufficiency s the truth gets 1/|Y| + (1 - 1/|Y|) * s * (1 - eta) and
    the remainder splits uniformly, so an empty subset is exactly flat and
    full coverage (eta=0) is one-hot.
    """
    if episode.truth_label not in space.labels:
        raise ValueError(f"episode truth {episode.truth_label!r} not in answer space {space.labels}")
    s = sufficiency(episode, subset)
    n = len(space)
    floor = 1.0 / n
    p_truth = floor + (1.0 - floor) * s * (1.0 - episode.eta)
    p_other = (1.0 - p_truth) / (n - 1)
    truth_idx = space.index_of(episode.truth_label)
    return Posterior(tuple(p_truth if i == truth_idx else p_other for i in range(n)))


class SyntheticBackend:
    """Probe backend answering from a planted episode instead of a model.

    Pure computation; safe under any probe concurrency.
    """

    def __init__(self, tag: str = "oracle"):
        self.tag = tag

    def describe(self) -> str:
        return f"synthetic:{self.tag}"

    def posterior(self, request, item) -> tuple[Posterior, int]:
        episode = getattr(item, "episode", None)
        if episode is None:
            raise ValueError("synthetic backend needs an item with an episode")
        subset = [f.source_index for f in request.frames]
        return synthetic_posterior(episode, subset, request.answer_space), 0
