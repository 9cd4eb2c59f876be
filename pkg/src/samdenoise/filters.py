"""Baseline denoisers applied independently to every A-scan along t.

Boundaries are handled by edge replication throughout. All arithmetic is in
float64; results are stored back as float32 volumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from numba import njit
from scipy.ndimage import correlate1d

from .errors import ParamError
from .volume import ScanVolume


@dataclass
class FilterParams1D:
    """Baseline parameters. ``wiener_noise_var=None`` means Auto;
    ``tv_lambda=None`` means 0.1 times the input max-abs."""

    gaussian_sigma_samples: float = 2.0
    median_window: int = 5
    wiener_window: int = 7
    wiener_noise_var: float | None = None
    tv_lambda: float | None = None
    tv_max_iter: int = 500
    tv_tol: float = 1e-6


def _ascans(vol: ScanVolume) -> np.ndarray:
    return vol.samples.reshape(-1, vol.nt).astype(np.float64)


def _check_window(window, nt: int) -> int:
    if int(window) != window or window < 1 or window % 2 == 0:
        raise ParamError(f"window must be an odd positive integer, got {window!r}")
    if window > nt:
        raise ParamError(f"window {window} exceeds A-scan length {nt}")
    return int(window)


def _clamped_windows(x: np.ndarray, window: int) -> np.ndarray:
    half = window // 2
    padded = np.pad(x, ((0, 0), (half, half)), mode="edge")
    return sliding_window_view(padded, window, axis=1)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Sampled Gaussian on ``[-ceil(4 sigma), ceil(4 sigma)]``, renormalised to unit sum."""
    radius = math.ceil(4.0 * sigma)
    j = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(j * j) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_1d(vol: ScanVolume, sigma_samples: float) -> ScanVolume:
    if not sigma_samples > 0:
        raise ParamError(f"sigma must be positive, got {sigma_samples!r}")
    k = gaussian_kernel(sigma_samples)
    # symmetric kernel, so correlation == convolution; 'nearest' is edge replication
    out = correlate1d(_ascans(vol), k, axis=1, mode="nearest")
    return vol.with_samples(out.reshape(vol.shape))


def median_1d(vol: ScanVolume, window: int) -> ScanVolume:
    window = _check_window(window, vol.nt)
    out = np.median(_clamped_windows(_ascans(vol), window), axis=2)
    return vol.with_samples(out.reshape(vol.shape))


def _local_moments(x: np.ndarray, window: int):
    w = _clamped_windows(x, window)
    mu = w.mean(axis=2)
    var = ((w - mu[..., None]) ** 2).mean(axis=2)
    return mu, var


def wiener_adaptive_1d(vol: ScanVolume, window: int, noise_var: float | None = None) -> ScanVolume:
    """Local-statistics Wiener filter.

    out = mu + max(v - nv, 0) / max(v, nv) * (x - mu), with mu and v the
    windowed mean and (1/n) variance. ``noise_var=None`` uses the mean of
    all local variances in the volume.
    """
    window = _check_window(window, vol.nt)
    if noise_var is not None and not noise_var >= 0:
        raise ParamError(f"noise_var must be nonnegative, got {noise_var!r}")
    x = _ascans(vol)
    mu, var = _local_moments(x, window)
    nv = float(var.mean()) if noise_var is None else float(noise_var)
    denom = np.maximum(var, nv)
    gain = np.divide(np.maximum(var - nv, 0.0), denom, out=np.zeros_like(var), where=denom > 0)
    out = mu + gain * (x - mu)
    return vol.with_samples(out.reshape(vol.shape))


def tv_objective(u: np.ndarray, f: np.ndarray, lam: float) -> np.ndarray:
    """0.5 ||u - f||^2 + lam * sum |u[i+1] - u[i]| along the last axis."""
    return 0.5 * ((u - f) ** 2).sum(axis=-1) + lam * np.abs(np.diff(u, axis=-1)).sum(axis=-1)


@njit(cache=True)
def _rof_row(f, lam, max_iter, tol, u, hist):
    """Dual projected gradient for one signal; returns the iteration count.

    ``v = f - D^T p`` is the dual-generated primal candidate; ``u`` keeps the
    best candidate by primal objective. ``hist[k]`` receives the objective of
    ``u`` after iteration k (``hist[0]`` is the start).
    """
    n = f.shape[0]
    p = np.zeros(n - 1)
    v = f.copy()
    vn = np.empty(n)
    u[:] = f
    best = lam * np.abs(np.diff(f)).sum()
    if hist.shape[0] > 0:
        hist[0] = best
    it = 0
    while it < max_iter:
        it += 1
        for i in range(n - 1):
            q = p[i] + 0.25 * (v[i + 1] - v[i])
            p[i] = min(max(q, -lam), lam)
        change = 0.0
        for i in range(n):
            dtp = 0.0
            if i < n - 1:
                dtp -= p[i]
            if i > 0:
                dtp += p[i - 1]
            vn[i] = f[i] - dtp
            change = max(change, abs(vn[i] - v[i]))
        v[:] = vn
        fid = 0.0
        tv = 0.0
        for i in range(n):
            fid += (v[i] - f[i]) ** 2
            if i > 0:
                tv += abs(v[i] - v[i - 1])
        obj = 0.5 * fid + lam * tv
        if obj <= best:
            best = obj
            u[:] = v
        if hist.shape[0] > it:
            hist[it] = best
        if change < tol:
            break
    return it


def rof_1d(f, lam: float, max_iter: int = 500, tol: float = 1e-6, history=None) -> np.ndarray:
    """1-D ROF denoising of each row of ``f`` by dual projected gradient.

    The dual variable ``p`` (one entry per forward difference, ``|p| <= lam``)
    takes steps of 1/4 along ``D v`` with ``v = f - D^T p``. The dual iterates
    alone do not decrease the primal objective monotonically, so each row
    keeps the best primal candidate ``v`` seen so far and returns that one.
    Rows stop individually once ``max |v_k - v_{k-1}| < tol``.

    If ``history`` is a list, one array per row is appended holding the
    primal objective of the returned iterate at the start and after every
    iteration.
    """
    if not lam >= 0:
        raise ParamError(f"lambda must be nonnegative, got {lam!r}")
    if max_iter < 1:
        raise ParamError("max_iter must be positive")
    if not tol > 0:
        raise ParamError("tol must be positive")
    f = np.atleast_2d(np.asarray(f, dtype=np.float64))
    u = f.copy()
    if f.shape[-1] < 2 or lam == 0:
        return u
    no_hist = np.empty(0)
    for r in range(f.shape[0]):
        hist = np.empty(max_iter + 1) if history is not None else no_hist
        done = _rof_row(np.ascontiguousarray(f[r]), float(lam), int(max_iter), float(tol), u[r], hist)
        if history is not None:
            history.append(hist[: done + 1])
    return u


def tv_denoise_1d(vol: ScanVolume, lam: float | None = None, max_iter: int = 500, tol: float = 1e-6) -> ScanVolume:
    """Total-variation (ROF) denoising of every A-scan.

    ``lam=None`` selects 0.1 times the volume's max-abs amplitude.
    """
    if lam is None:
        lam = 0.1 * float(np.abs(vol.samples).max())
    out = rof_1d(_ascans(vol), lam, max_iter, tol)
    return vol.with_samples(out.reshape(vol.shape))
