"""Full-reference quality metrics against synthetic ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .collaborative import estimate_sigma_mad
from .errors import ParamError, ShapeError
from .volume import CScanImage, ScanVolume, extract_cscan

SSIM_WINDOW = 8

METRICS_HEADER = "filter,psnr_db,mse,ssim,sigma_est_v,runtime_ms"


def _values(x) -> np.ndarray:
    if isinstance(x, ScanVolume):
        return x.samples.astype(np.float64)
    if isinstance(x, CScanImage):
        return np.asarray(x.pixels, dtype=np.float64)
    return np.asarray(x, dtype=np.float64)


def _pair(a, b):
    a, b = _values(a), _values(b)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def mse(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.mean((a - b) ** 2))


def psnr_db(reference, test, peak: float | None = None) -> float:
    """10 log10(peak² / mse); +inf for identical inputs.

    ``peak`` defaults to the max absolute value of ``reference``.
    """
    ref, tst = _pair(reference, test)
    if peak is None:
        peak = float(np.abs(ref).max())
    if not peak > 0:
        raise ParamError(f"peak must be positive, got {peak!r}")
    err = float(np.mean((ref - tst) ** 2))
    if err == 0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


def ssim_2d(a, b) -> float:
    """Mean SSIM over all 8x8 windows at stride 1, uniform weights.

    Constants use the dynamic range L = max(max|a|, max|b|); two all-zero
    images score 1.
    """
    a, b = _pair(a, b)
    if a.ndim != 2:
        raise ParamError("ssim_2d expects 2-D images")
    if min(a.shape) < SSIM_WINDOW:
        raise ParamError(f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW}")
    dyn = max(float(np.abs(a).max()), float(np.abs(b).max()))
    if dyn == 0:
        return 1.0
    c1 = (0.01 * dyn) ** 2
    c2 = (0.03 * dyn) ** 2
    wa = sliding_window_view(a, (SSIM_WINDOW, SSIM_WINDOW))
    wb = sliding_window_view(b, (SSIM_WINDOW, SSIM_WINDOW))
    mu_a = wa.mean(axis=(-2, -1))
    mu_b = wb.mean(axis=(-2, -1))
    da = wa - mu_a[..., None, None]
    db = wb - mu_b[..., None, None]
    var_a = (da * da).mean(axis=(-2, -1))
    var_b = (db * db).mean(axis=(-2, -1))
    cov = (da * db).mean(axis=(-2, -1))
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


@dataclass(frozen=True)
class MetricsReport:
    mse: float
    psnr_db: float
    ssim: float
    sigma_est_v: float

    def csv_fields(self) -> list[str]:
        return [format_number(self.psnr_db), format_number(self.mse),
                format_number(self.ssim), format_number(self.sigma_est_v)]


def format_number(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def evaluate(reference: ScanVolume, test: ScanVolume, gate=None, peak: float | None = None) -> MetricsReport:
    """Volume-level MSE/PSNR, SSIM on the gated C-scans, MAD noise estimate of ``test``."""
    err = mse(reference, test)
    return MetricsReport(
        mse=err,
        psnr_db=psnr_db(reference, test, peak),
        ssim=ssim_2d(extract_cscan(reference, gate), extract_cscan(test, gate)),
        sigma_est_v=estimate_sigma_mad(test),
    )
