"""Orthonormal DCT-II and Haar transforms and their separable 4-D composition.

A group stack has shape ``(m, bx, by, bt)``: ``m`` matched blocks along the
grouping axis. The separable transform applies a DCT along x, y and t of
every block and a multi-level Haar along the grouping axis.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import ParamError

INV_SQRT2 = 1.0 / math.sqrt(2.0)


@lru_cache(maxsize=None)
def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II matrix ``C`` with ``X = C @ x``."""
    if n < 1:
        raise ParamError("DCT length must be at least 1")
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    c = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * math.sqrt(2.0 / n)
    c[0, :] = math.sqrt(1.0 / n)
    c.flags.writeable = False
    return c


def dct_1d_forward(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] == 0:
        raise ParamError("DCT length must be at least 1")
    return dct_matrix(x.shape[-1]) @ x


def dct_1d_inverse(coeffs) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape[-1] == 0:
        raise ParamError("DCT length must be at least 1")
    return dct_matrix(coeffs.shape[-1]).T @ coeffs


def is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def haar_1d_forward(x) -> np.ndarray:
    """Full-depth orthonormal Haar.

    Output order: final approximation, then details from coarsest to finest.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if not is_power_of_two(n):
        raise ParamError(f"Haar length must be a power of two, got {n}")
    out = x.copy()
    length = n
    while length > 1:
        a = out[0:length:2].copy()
        b = out[1:length:2].copy()
        half = length // 2
        out[:half] = (a + b) * INV_SQRT2
        out[half:length] = (a - b) * INV_SQRT2
        length = half
    return out


def haar_1d_inverse(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=np.float64)
    n = c.shape[0]
    if not is_power_of_two(n):
        raise ParamError(f"Haar length must be a power of two, got {n}")
    out = c.copy()
    length = 1
    while length < n:
        s = out[:length].copy()
        d = out[length : 2 * length].copy()
        out[0 : 2 * length : 2] = (s + d) * INV_SQRT2
        out[1 : 2 * length : 2] = (s - d) * INV_SQRT2
        length *= 2
    return out


@lru_cache(maxsize=None)
def haar_matrix(n: int) -> np.ndarray:
    """Matrix ``H`` with ``haar_1d_forward(x) == H @ x``."""
    h = haar_1d_forward(np.eye(n))
    h.flags.writeable = False
    return h


def forward_4d(stack: np.ndarray) -> np.ndarray:
    """DCT along axes 1-3 of an ``(m, bx, by, bt)`` stack, then Haar along axis 0."""
    m, bx, by, bt = stack.shape
    out = np.einsum("ia,majk->mijk", dct_matrix(bx), stack)
    out = np.einsum("jb,mibk->mijk", dct_matrix(by), out)
    out = np.einsum("kc,mijc->mijk", dct_matrix(bt), out)
    return haar_1d_forward(out)


def inverse_4d(coeffs: np.ndarray) -> np.ndarray:
    m, bx, by, bt = coeffs.shape
    out = haar_1d_inverse(coeffs)
    out = np.einsum("kc,mijk->mijc", dct_matrix(bt), out)
    out = np.einsum("jb,mijk->mibk", dct_matrix(by), out)
    return np.einsum("ia,mijk->majk", dct_matrix(bx), out)
