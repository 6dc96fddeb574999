"""Pure-Python kernels, used when the compiled extension is unavailable.

Operation order is mirrored exactly in ``_native.pyx`` so both backends
produce bit-identical doubles.
"""

from __future__ import annotations

import math
from array import array

BACKEND = "python"


def shape_moments(values, variance_threshold):
    """Population standardized moments of a value multiset.

    Returns (skew, kurt_ex, degenerate).  When the population variance is
    below ``variance_threshold`` the distribution is treated as degenerate
    and both moments are reported as 0.
    """
    n = len(values)
    s = 0.0
    for v in values:
        s += v
    mean = s / n
    m2 = 0.0
    m3 = 0.0
    m4 = 0.0
    for v in values:
        d = v - mean
        d2 = d * d
        m2 += d2
        m3 += d2 * d
        m4 += d2 * d2
    m2 /= n
    m3 /= n
    m4 /= n
    if m2 < variance_threshold:
        return 0.0, 0.0, True
    sd = math.sqrt(m2)
    skew = m3 / (m2 * sd)
    kurt_ex = m4 / (m2 * m2) - 3.0
    return skew, kurt_ex, False


def outer_product(row_conf, col_conf):
    """Flat row-major outer product row_conf[r] * col_conf[c]."""
    k = len(row_conf)
    out = array("d", bytes(8 * k * len(col_conf)))
    i = 0
    for r in range(k):
        rv = row_conf[r]
        for c in range(len(col_conf)):
            out[i] = rv * col_conf[c]
            i += 1
    return out


def coverage_weight(offsets, atom_ids, atom_weights, subset):
    """Total weight of distinct atoms referenced by the frames in ``subset``.

    ``offsets``/``atom_ids`` are a CSR layout of per-frame atom references;
    each atom counts once no matter how many selected frames carry it.
    """
    seen = bytearray(len(atom_weights))
    acc = 0.0
    for f in subset:
        for j in range(offsets[f], offsets[f + 1]):
            a = atom_ids[j]
            if not seen[a]:
                seen[a] = 1
                acc += atom_weights[a]
    return acc
