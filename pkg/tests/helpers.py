"""Independent oracles and small utilities shared by the test suite."""

from __future__ import annotations

import math
import random


def brute_skew_kurt(values):
    """Standardized moments straight from the definitions.

    Kept independent of the library kernels: plain Python sums over
    E[(x - mu)^3] / sd^3 and E[(x - mu)^4] / sd^4 - 3.
    """
    n = len(values)
    mu = sum(values) / n
    var = sum((x - mu) ** 2 for x in values) / n
    sd = math.sqrt(var)
    skew = sum((x - mu) ** 3 for x in values) / n / sd**3
    kurt_ex = sum((x - mu) ** 4 for x in values) / n / sd**4 - 3.0
    return skew, kurt_ex


def brute_sigma(values):
    skew, kurt_ex = brute_skew_kurt(values)
    return abs(skew) + 0.5 * max(0.0, kurt_ex)


def sign_test_p(wins: int, losses: int) -> float:
    """One-sided exact sign test: P(X >= wins) under Binomial(n, 1/2)."""
    n = wins + losses
    if n == 0:
        return 1.0
    return sum(math.comb(n, j) for j in range(wins, n + 1)) / 2.0**n


def fit_slope(xs, ys) -> float:
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    return sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sum((x - mx) ** 2 for x in xs)


def random_map_marginals(rng: random.Random, k: int, lo: float = 0.125, hi: float = 1.0):
    row = [rng.uniform(lo, hi) for _ in range(k)]
    col = [rng.uniform(lo, hi) for _ in range(k)]
    return row, col


def dyadic_map_values(rng: random.Random, k: int):
    """Rank-1 map values on a dyadic grid; exactly representable doubles.

    With k a power of two the float mean is exact too, which makes
    reflection about the mean bit-exact.
    """
    row = [rng.randint(512, 4096) / 4096 for _ in range(k)]
    col = [rng.randint(512, 4096) / 4096 for _ in range(k)]
    return [r * c for r in row for c in col]


def make_frame_dir(tmp_path, n: int, size=(8, 8)):
    """Directory of n tiny distinct PNG frames with ordered names."""
    from PIL import Image

    d = tmp_path / "frames"
    d.mkdir(exist_ok=True)
    for i in range(n):
        img = Image.new("RGB", size, ((i * 7) % 256, (i * 13) % 256, (i * 29) % 256))
        img.save(d / f"frame_{i:05d}.png")
    return d
