"""Two-stage block-matching collaborative denoising of scan volumes.

3-D blocks (x, y, t) similar to a reference block are stacked along a
fourth, grouping axis. Each group is transformed with a separable
orthonormal transform (DCT per block axis, Haar across the group), shrunk,
inverted, and every filtered block is accumulated back at its origin with
a per-group weight.

Stage 1 hard-thresholds groups matched on the noisy volume and yields the
basic estimate. Stage 2 re-matches on the basic estimate and applies an
empirical Wiener shrinkage to the noisy groups, using the basic estimate as
pilot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ParamError
from .transforms import dct_matrix, forward_4d, inverse_4d
from .volume import ScanVolume

#: Distance scale standing in for sigma**2 when sigma == 0, so only exact
#: replicas are grouped.
EXACT_MATCH_EPS = 1e-12

_CHUNK = 2048


@dataclass(frozen=True)
class BMParams:
    """Block-matching parameters; ``match_tau`` is in units of sigma**2."""

    block: tuple[int, int, int] = (4, 4, 8)
    step: tuple[int, int, int] = (2, 2, 4)
    search_radius: tuple[int, int, int] = (5, 5, 8)
    max_group: int = 16
    match_tau: float = 2.5
    lambda_hard: float = 2.7
    sigma: float = 0.0
    wiener_tau_factor: float = 0.4

    def __post_init__(self):
        for name in ("block", "step", "search_radius"):
            value = tuple(int(v) for v in getattr(self, name))
            if len(value) != 3:
                raise ParamError(f"{name} needs three values (x, y, t)")
            object.__setattr__(self, name, value)
        if min(self.block) < 1 or min(self.step) < 1:
            raise ParamError("block and step sizes must be >= 1")
        if min(self.search_radius) < 0:
            raise ParamError("search radius must be nonnegative")
        if self.max_group not in (1, 2, 4, 8, 16, 32):
            raise ParamError("max_group must be one of 1, 2, 4, 8, 16, 32")
        if not self.match_tau > 0 or not self.lambda_hard > 0:
            raise ParamError("match_tau and lambda_hard must be positive")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise ParamError(f"sigma must be finite and nonnegative, got {self.sigma!r}")
        if not self.wiener_tau_factor > 0:
            raise ParamError("wiener_tau_factor must be positive")

    def match_threshold(self, tau: float | None = None) -> float:
        tau = self.match_tau if tau is None else tau
        scale = self.sigma**2 if self.sigma > 0 else EXACT_MATCH_EPS
        return tau * scale

    def check_volume(self, shape) -> None:
        if any(b > n for b, n in zip(self.block, shape)):
            raise ParamError(f"block {self.block} does not fit in volume {tuple(shape)}")


@dataclass
class Group:
    ref_coord: tuple[int, int, int]
    members: list[tuple[int, int, int]]
    data: np.ndarray
    distances: list[float] = field(default_factory=list)


def block_distance(a, b) -> float:
    """Mean squared difference per voxel."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ParamError(f"block shapes differ: {a.shape} vs {b.shape}")
    return float(((a - b) ** 2).sum() / a.size)


def _as_array(vol) -> np.ndarray:
    if isinstance(vol, ScanVolume):
        return vol.samples.astype(np.float64)
    return np.ascontiguousarray(vol, dtype=np.float64)


def extract_block(vol, origin, block) -> np.ndarray:
    arr = vol.samples if isinstance(vol, ScanVolume) else vol
    x, y, t = origin
    bx, by, bt = block
    return np.asarray(arr[x : x + bx, y : y + by, t : t + bt], dtype=np.float64)


def match_blocks(vol, ref_coord, params: BMParams, tau: float | None = None, data_from=None) -> Group:
    """Group the blocks within the search window that resemble the reference.

    Acceptance is ``block_distance <= tau * sigma**2`` (``tau`` defaults to
    ``params.match_tau``). The reference comes first, the rest follow by
    ascending distance with lexicographic origin order breaking ties, and
    the group is cut to the largest power of two not above
    ``min(matches, max_group)``. Stacked data is read from ``data_from``
    (default: ``vol`` itself).
    """
    guide = _as_array(vol)
    params.check_volume(guide.shape)
    x0, y0, t0 = (int(c) for c in ref_coord)
    bx, by, bt = params.block
    if not all(0 <= c <= n - b for c, n, b in zip((x0, y0, t0), guide.shape, params.block)):
        raise ParamError(f"reference block at {ref_coord} does not fit inside the volume")
    coords = np.empty((params.max_group, 3), dtype=np.int64)
    dists = np.empty(params.max_group, dtype=np.float64)
    rx, ry, rt = params.search_radius
    m = _kernels.match_into(guide, x0, y0, t0, bx, by, bt, rx, ry, rt,
                            params.match_threshold(tau), params.max_group, coords, dists)
    members = [tuple(int(v) for v in coords[g]) for g in range(m)]
    source = guide if data_from is None else data_from
    data = np.stack([extract_block(source, c, params.block) for c in members])
    return Group(ref_coord=(x0, y0, t0), members=members, data=data, distances=[float(d) for d in dists[:m]])


def hard_threshold_group(group: Group, params: BMParams):
    """Hard-threshold the 4-D spectrum of a group at ``lambda_hard * sigma``.

    The global DC coefficient is never zeroed. Returns the filtered stack
    and the number of retained coefficients (DC included).
    """
    stack = np.asarray(group.data, dtype=np.float64)
    if params.sigma == 0:
        return stack.copy(), stack.size
    coeffs = forward_4d(stack)
    keep = np.abs(coeffs) >= params.lambda_hard * params.sigma
    keep.flat[0] = True
    coeffs = np.where(keep, coeffs, 0.0)
    return inverse_4d(coeffs), int(keep.sum())


def wiener_shrink_group(noisy_group: Group, pilot_group: Group, sigma: float):
    """Empirical Wiener shrinkage of the noisy spectrum with gains B²/(B² + σ²).

    ``B`` is the pilot coefficient. The global DC gain is fixed at 1 so
    constant groups pass through unchanged. Returns the filtered stack and
    the sum of squared gains.
    """
    noisy = np.asarray(noisy_group.data, dtype=np.float64)
    pilot = np.asarray(pilot_group.data, dtype=np.float64)
    if noisy.shape != pilot.shape:
        raise ParamError("noisy and pilot groups must share their geometry")
    if sigma == 0:
        return noisy.copy(), float(noisy.size)
    b2 = forward_4d(pilot) ** 2
    gains = b2 / (b2 + sigma * sigma)
    gains.flat[0] = 1.0
    return inverse_4d(forward_4d(noisy) * gains), float((gains**2).sum())


def reference_grid(n: int, block: int, step: int) -> np.ndarray:
    """Origins ``0, step, 2 step, ...`` plus the last position ``n - block``."""
    last = n - block
    origins = list(range(0, last + 1, step))
    if origins[-1] != last:
        origins.append(last)
    return np.asarray(origins, dtype=np.int64)


def reference_origins(shape, params: BMParams) -> np.ndarray:
    """All reference block origins, lexicographic (x outer, t inner)."""
    axes = [reference_grid(n, b, s) for n, b, s in zip(shape, params.block, params.step)]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)


def _dct_tables(block):
    """(Cx, Cy, Ct, Cx.T, Cy.T, Ct.T) as C-contiguous arrays."""
    mats = [np.ascontiguousarray(dct_matrix(b)) for b in block]
    return tuple(mats) + tuple(np.ascontiguousarray(c.T) for c in mats)


def accumulate_stage(mode: int, noisy, guide, params: BMParams, refs, tau: float | None = None):
    """Run one stage over ``refs`` and return the (numerator, denominator) buffers.

    Buffers from disjoint subsets of references can be summed; the division
    is left to the caller.
    """
    noisy = _as_array(noisy)
    guide = _as_array(guide)
    refs = np.ascontiguousarray(refs, dtype=np.int64).reshape(-1, 3)
    bx, by, bt = params.block
    rx, ry, rt = params.search_radius
    n = bx * by * bt
    mats = _dct_tables(params.block)
    num = np.zeros(noisy.shape)
    den = np.zeros(noisy.shape)
    chunk = min(_CHUNK, max(len(refs), 1))
    out_blocks = np.empty((chunk, params.max_group * n))
    out_coords = np.empty((chunk, params.max_group, 3), dtype=np.int64)
    out_m = np.empty(chunk, dtype=np.int64)
    out_w = np.empty(chunk)
    thr = params.match_threshold(tau)
    for r0 in range(0, len(refs), chunk):
        r1 = min(r0 + chunk, len(refs))
        _kernels.filter_chunk(mode, noisy, guide, refs, r0, r1, bx, by, bt, rx, ry, rt, thr,
                              params.max_group, float(params.sigma), float(params.lambda_hard),
                              *mats, out_blocks, out_coords, out_m, out_w)
        _kernels.aggregate_chunk(num, den, out_blocks, out_coords, out_m, out_w, r1 - r0, bx, by, bt)
    return num, den


def _finish(num, den) -> np.ndarray:
    # every voxel lies in some reference block because the grid includes the last origin
    assert (den > 0).all(), "aggregation left voxels uncovered"
    return num / den


def _basic_estimate(vol: ScanVolume, params: BMParams) -> np.ndarray:
    params.check_volume(vol.shape)
    noisy = _as_array(vol)
    refs = reference_origins(vol.shape, params)
    return _finish(*accumulate_stage(_kernels.HARD, noisy, noisy, params, refs))


def denoise_hard(vol: ScanVolume, params: BMParams) -> ScanVolume:
    """Stage 1: hard-thresholding collaborative filter (the basic estimate)."""
    return vol.with_samples(_basic_estimate(vol, params))


def denoise_bm4d(vol: ScanVolume, params: BMParams, return_basic: bool = False):
    """Full two-stage filter. With ``return_basic`` also returns the stage-1 volume."""
    basic = _basic_estimate(vol, params)
    noisy = _as_array(vol)
    refs = reference_origins(vol.shape, params)
    tau2 = params.wiener_tau_factor * params.match_tau
    final = vol.with_samples(_finish(*accumulate_stage(_kernels.WIENER, noisy, basic, params, refs, tau=tau2)))
    if return_basic:
        return final, vol.with_samples(basic)
    return final


def estimate_sigma_mad(vol) -> float:
    """Robust noise std from the finest Haar details along t.

    ``d = (x[2i] - x[2i+1]) / sqrt(2)`` over every A-scan; the estimate is
    ``median(|d|) / 0.6745`` with the lower middle element taken for an even
    count.
    """
    arr = vol.samples if isinstance(vol, ScanVolume) else np.asarray(vol)
    arr = np.asarray(arr, dtype=np.float64)
    nt = arr.shape[-1]
    if nt < 2:
        raise ParamError("need at least two time samples")
    pairs = nt - nt % 2
    d = np.abs(arr[..., 0:pairs:2] - arr[..., 1:pairs:2]).ravel() / math.sqrt(2.0)
    k = (d.size - 1) // 2
    return float(np.partition(d, k)[k] / 0.6745)
