"""Counter-based SplitMix64 uniform streams.

Output ``i`` (0-based) of the stream with key ``k`` is ``mix(k + (i+1)*G)``
with ``G = 0x9E3779B97F4A7C15`` and ``mix`` the SplitMix64 finaliser::

    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

all modulo 2**64. This is exactly the sequence produced by a SplitMix64
generator seeded with ``k``. Because every value depends only on its
counter, blocks of a stream can be generated independently and in any
order. Sub-streams are keyed by :func:`derive_key`.

Uniform doubles use the top 53 bits: ``(z >> 11) * 2**-53`` lies in
``[0, 1)``; :func:`uniform_open` shifts by half an ulp-step to ``(0, 1)``.
"""

from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


def mix64(z: int) -> int:
    """SplitMix64 finaliser on a Python int."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def derive_key(seed: int, *labels: int) -> int:
    """Key of the sub-stream named by ``labels`` under ``seed``."""
    key = mix64(int(seed) & _MASK)
    for label in labels:
        key = mix64((key + (int(label) + 1) * GOLDEN) & _MASK)
    return key


def raw(key: int, count: int, start: int = 0) -> np.ndarray:
    """Outputs ``start .. start+count-1`` of stream ``key`` as uint64."""
    counters = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key & _MASK) + counters * np.uint64(GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def uniform(key: int, count: int, start: int = 0) -> np.ndarray:
    """Doubles in ``[0, 1)``."""
    return (raw(key, count, start) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def uniform_open(key: int, count: int, start: int = 0) -> np.ndarray:
    """Doubles in ``(0, 1)``, safe for ``log``."""
    return ((raw(key, count, start) >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def standard_normal(key: int, count: int) -> np.ndarray:
    """Box–Muller normals: pair ``(u1, u2)`` gives ``r cos t`` then ``r sin t``."""
    pairs = (count + 1) // 2
    u = uniform_open(key, 2 * pairs)
    r = np.sqrt(-2.0 * np.log(u[0::2]))
    t = 2.0 * np.pi * u[1::2]
    out = np.empty(2 * pairs)
    out[0::2] = r * np.cos(t)
    out[1::2] = r * np.sin(t)
    return out[:count]


def permutation(key: int, n: int) -> np.ndarray:
    """Fisher–Yates shuffle of ``0..n-1`` driven by stream ``key``.

    Step ``i`` (from ``n-1`` down to 1) swaps position ``i`` with
    ``floor(u * (i+1))`` where ``u`` is the next uniform in ``[0, 1)``.
    """
    perm = np.arange(n)
    if n < 2:
        return perm
    u = uniform(key, n - 1)
    for step, i in enumerate(range(n - 1, 0, -1)):
        j = int(u[step] * (i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm
