"""Reproducible standard-normal stream (xorshift64* + Box-Muller).

The generator is fully specified so noise fixtures are bit-identical across
platforms and implementations:

* state = seed XOR 0x9E3779B97F4A7C15, with a zero state replaced by 1
* xorshift64*: ``x ^= x >> 12; x ^= x << 25; x ^= x >> 27``,
  output ``x * 0x2545F4914F6CDD1D mod 2**64``
* uniform on (0, 1): ``(u >> 11) / 2**53``, 0 replaced by ``2**-53``
* Box-Muller on consecutive uniform pairs (u1, u2):
  ``r = sqrt(-2 ln u1)``, emit ``r cos(2 pi u2)`` then the cached
  ``r sin(2 pi u2)``
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MULTIPLIER = 0x2545F4914F6CDD1D
_MASK64 = (1 << 64) - 1


def initial_state(seed: int) -> int:
    state = (int(seed) & _MASK64) ^ GOLDEN_GAMMA
    return state or 1


@njit(cache=True)
def _normals_kernel(state, out):
    mult = np.uint64(MULTIPLIER)
    s12 = np.uint64(12)
    s25 = np.uint64(25)
    s27 = np.uint64(27)
    s11 = np.uint64(11)
    scale = 1.0 / 9007199254740992.0  # 2**-53
    x = state
    n = out.shape[0]
    i = 0
    while i < n:
        x ^= x >> s12
        x ^= x << s25
        x ^= x >> s27
        u1 = float((x * mult) >> s11) * scale
        if u1 == 0.0:
            u1 = scale
        x ^= x >> s12
        x ^= x << s25
        x ^= x >> s27
        u2 = float((x * mult) >> s11) * scale
        if u2 == 0.0:
            u2 = scale
        r = math.sqrt(-2.0 * math.log(u1))
        out[i] = r * math.cos(2.0 * math.pi * u2)
        if i + 1 < n:
            out[i + 1] = r * math.sin(2.0 * math.pi * u2)
        i += 2
    return x


def standard_normals(n: int, seed: int) -> np.ndarray:
    """First ``n`` draws of the normal stream for ``seed`` (float64)."""
    out = np.empty(int(n), dtype=np.float64)
    _normals_kernel(np.uint64(initial_state(seed)), out)
    return out


class XorShift64Star:
    """Pure-Python reference generator; slow, used to cross-check the kernel."""

    def __init__(self, seed: int):
        self.state = initial_state(seed)
        self._cached = None

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x = (x ^ (x << 25)) & _MASK64
        x ^= x >> 27
        self.state = x
        return (x * MULTIPLIER) & _MASK64

    def uniform(self) -> float:
        u = (self.next_u64() >> 11) / 2.0**53
        return u if u != 0.0 else 2.0**-53

    def normal(self) -> float:
        if self._cached is not None:
            z, self._cached = self._cached, None
            return z
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        self._cached = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)
