import random

import pytest

from gridscout.posterior import AnswerSpace, probe_confidence
from gridscout.synthetic import SyntheticEpisode, sufficiency, synthetic_posterior


def episode(k=2, frames=None, atoms=None, truth="A", eta=0.0):
    n = k * k
    frames = frames if frames is not None else [[] for _ in range(n)]
    return SyntheticEpisode(
        k=k,
        frames=frames,
        atoms=atoms or {},
        truth_label=truth,
        question="q?",
        regime="localized" if atoms else "uniform-noise",
        eta=eta,
    )


class TestSufficiency:
    def test_no_evidence_flat(self, letters8):
        ep = episode()
        p = synthetic_posterior(ep, set(), letters8)
        assert probe_confidence(p) == 0.125
        assert p.probabilities == tuple([0.125] * 8)

    def test_full_evidence_one_hot(self, letters8):
        ep = episode(frames=[[(0, 1.0)], [], [], []], atoms={0: 1.0})
        p = synthetic_posterior(ep, {0, 1, 2, 3}, letters8)
        assert p.probabilities[0] == 1.0

    def test_half_weight(self):
        space = AnswerSpace.letters(4)
        ep = episode(frames=[[(0, 1.0)], [(1, 1.0)], [], []], atoms={0: 1.0, 1: 1.0})
        p = synthetic_posterior(ep, {0}, space)
        assert p.probabilities[0] == pytest.approx(0.25 + 0.75 * 0.5, abs=1e-12)

    def test_out_of_range_index(self, letters8):
        ep = episode()
        with pytest.raises(ValueError, match="out of range"):
            synthetic_posterior(ep, {4}, letters8)

    def test_monotone_in_subset(self, letters8):
        rng = random.Random(3)
        k = 4
        n = k * k
        frames = [[] for _ in range(n)]
        atoms = {}
        for atom in range(6):
            w = rng.uniform(0.2, 2.0)
            atoms[atom] = w
            for f in rng.sample(range(n), rng.randint(1, 3)):
                frames[f].append((atom, w))
        ep = episode(k=k, frames=frames, atoms=atoms)
        for _ in range(200):
            small = set(rng.sample(range(n), rng.randint(0, n - 1)))
            extra = set(rng.sample(range(n), rng.randint(0, n)))
            s_small = sufficiency(ep, small)
            s_big = sufficiency(ep, small | extra)
            assert s_small <= s_big + 1e-15
            p_small = synthetic_posterior(ep, small, letters8)
            p_big = synthetic_posterior(ep, small | extra, letters8)
            assert p_small.probabilities[0] <= p_big.probabilities[0] + 1e-15

    def test_atom_counted_once(self, letters8):
        # one atom duplicated in many frames: any single carrier gives s=1
        k = 4
        frames = [[] for _ in range(16)]
        for f in range(0, 16, 2):
            frames[f].append((0, 1.0))
        ep = episode(k=k, frames=frames, atoms={0: 1.0})
        for f in range(0, 16, 2):
            assert sufficiency(ep, {f}) == 1.0
        assert sufficiency(ep, set(range(0, 16, 2))) == 1.0

    def test_noise_attenuates_deterministically(self, letters8):
        ep = episode(frames=[[(0, 1.0)], [], [], []], atoms={0: 1.0}, eta=0.2)
        p1 = synthetic_posterior(ep, {0}, letters8)
        p2 = synthetic_posterior(ep, {0}, letters8)
        assert p1 == p2
        assert p1.probabilities[0] == pytest.approx(0.125 + 0.875 * 0.8, abs=1e-12)


class TestEpisodeValidation:
    def test_frame_count(self):
        with pytest.raises(ValueError, match="frame entries"):
            SyntheticEpisode(k=2, frames=[[]], atoms={}, truth_label="A", question="q", regime="holistic")

    def test_atom_table_consistency(self):
        with pytest.raises(ValueError, match="disagree"):
            SyntheticEpisode(
                k=2,
                frames=[[(0, 1.0)], [], [], []],
                atoms={0: 1.0, 1: 2.0},
                truth_label="A",
                question="q",
                regime="localized",
            )

    def test_roundtrip(self):
        ep = episode(frames=[[(0, 1.5)], [], [], []], atoms={0: 1.5})
        again = SyntheticEpisode.from_dict(ep.to_dict())
        assert again.frames == ep.frames
        assert again.atoms == ep.atoms
        assert again.truth_label == ep.truth_label
