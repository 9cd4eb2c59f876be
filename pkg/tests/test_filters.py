import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from samdenoise.errors import ParamError
from samdenoise.filters import (
    gaussian_1d,
    gaussian_kernel,
    median_1d,
    rof_1d,
    tv_denoise_1d,
    tv_objective,
    wiener_adaptive_1d,
)
from samdenoise.volume import ScanVolume


def _vol1(values):
    return ScanVolume(np.asarray(values, dtype=np.float64).reshape(1, 1, -1))


def _out1(vol):
    return vol.samples.astype(np.float64).ravel()


def _brute_median(x, window):
    h = window // 2
    n = len(x)
    return [sorted(x[min(max(i + k, 0), n - 1)] for k in range(-h, h + 1))[h] for i in range(n)]


def test_gaussian_kernel_oracle():
    k = gaussian_kernel(1.0)
    assert len(k) == 9
    raw = [math.exp(-j * j / 2) for j in range(-4, 5)]
    assert k.tolist() == pytest.approx([r / sum(raw) for r in raw], abs=1e-15)
    assert k[4] == pytest.approx(0.39894346935609776, abs=1e-12)
    assert abs(k.sum() - 1.0) <= 1e-15


@pytest.mark.parametrize("sigma", [0.3, 1.0, 2.5, 7.0])
def test_gaussian_kernel_normalised(sigma):
    k = gaussian_kernel(sigma)
    assert len(k) == 2 * math.ceil(4 * sigma) + 1
    assert abs(k.sum() - 1.0) <= 1e-15
    assert np.array_equal(k, k[::-1])


def test_gaussian_impulse_returns_kernel():
    x = np.zeros(41)
    x[20] = 1.0
    out = _out1(gaussian_1d(_vol1(x), 1.0))
    assert out[20] == pytest.approx(0.398943, abs=1e-6)
    assert out[16:25] == pytest.approx(gaussian_kernel(1.0).tolist(), abs=1e-7)
    assert not out[:16].any() and not out[25:].any()


def test_gaussian_short_signal_uses_full_kernel():
    out = _out1(gaussian_1d(_vol1([0, 0, 1, 0, 0]), 1.0))
    # clamp padding leaves the centre weight unchanged
    assert out[2] == pytest.approx(0.398943, abs=1e-6)


def test_gaussian_clamp_boundary():
    x = np.array([3.0, 1.0, 2.0])
    k = gaussian_kernel(0.5)
    h = len(k) // 2
    expected = [sum(k[j + h] * x[min(max(i + j, 0), 2)] for j in range(-h, h + 1)) for i in range(3)]
    assert _out1(gaussian_1d(_vol1(x), 0.5)) == pytest.approx(expected, abs=1e-6)


def test_gaussian_rejects_bad_sigma():
    with pytest.raises(ParamError):
        gaussian_1d(_vol1([1, 2]), 0.0)


def test_median_examples():
    assert _out1(median_1d(_vol1([1, 9, 1]), 3)).tolist() == [1, 1, 1]
    x = np.random.default_rng(0).standard_normal(20)
    assert np.array_equal(_out1(median_1d(_vol1(x), 1)), np.float32(x))


@pytest.mark.parametrize("window", [1, 3, 5, 7])
def test_median_matches_brute_force(window):
    rng = np.random.default_rng(window)
    arr = rng.standard_normal((3, 2, 16)).astype(np.float32)
    out = median_1d(ScanVolume(arr), window).samples
    for ix in range(3):
        for iy in range(2):
            assert out[ix, iy].tolist() == _brute_median(arr[ix, iy].tolist(), window)


def test_median_exhaustive_small():
    # every 0/1/2 signal of length 5
    import itertools

    for x in itertools.product([0.0, 1.0, 2.0], repeat=5):
        assert _out1(median_1d(_vol1(x), 3)).tolist() == _brute_median(list(x), 3)


def test_median_window3_idempotent_on_monotone():
    x = np.sort(np.random.default_rng(8).standard_normal(25))
    once = median_1d(_vol1(x), 3)
    assert median_1d(once, 3) == once


def test_median_idempotent_on_monotone():
    x = np.sort(np.random.default_rng(2).standard_normal(30))
    assert np.array_equal(_out1(median_1d(_vol1(x), 5)), np.float32(x))


@pytest.mark.parametrize("window", [0, 2, 4, 9])
def test_median_bad_window(window):
    with pytest.raises(ParamError):
        median_1d(_vol1(np.zeros(8)), window)


def test_wiener_centre_example():
    assert _out1(wiener_adaptive_1d(_vol1([0.0, 3.0, 0.0]), 3, 1.0))[1] == pytest.approx(2.0, abs=1e-6)


def test_wiener_zero_noise_var_identity():
    x = np.random.default_rng(5).standard_normal((2, 2, 20)).astype(np.float32)
    out = wiener_adaptive_1d(ScanVolume(x), 5, noise_var=0.0)
    assert np.array_equal(out.samples, x)


def test_wiener_oracle():
    x = np.array([0.0, 1.0, 4.0, 2.0, 2.0, -1.0])
    nv = 0.5
    xp = np.pad(x, 1, mode="edge")
    expected = []
    for i in range(6):
        w = xp[i : i + 3]
        mu, var = w.mean(), w.var()
        g = max(var - nv, 0.0) / max(var, nv)
        expected.append(mu + g * (x[i] - mu))
    assert _out1(wiener_adaptive_1d(_vol1(x), 3, nv)) == pytest.approx(expected, abs=1e-6)


def test_wiener_auto_noise_var_is_mean_local_variance():
    x = np.random.default_rng(7).standard_normal(50)
    xp = np.pad(x, 2, mode="edge")
    local = [xp[i : i + 5].var() for i in range(50)]
    auto = _out1(wiener_adaptive_1d(_vol1(x), 5))
    explicit = _out1(wiener_adaptive_1d(_vol1(x), 5, float(np.mean(local))))
    assert auto == pytest.approx(explicit, abs=1e-6)


def test_tv_two_point_example():
    u = rof_1d([0.0, 1.0], 0.25, max_iter=5000, tol=1e-12)
    assert u[0] == pytest.approx([0.25, 0.75], abs=1e-6)


def test_tv_zero_lambda_identity():
    x = np.random.default_rng(0).standard_normal((2, 3, 10)).astype(np.float32)
    assert np.array_equal(tv_denoise_1d(ScanVolume(x), 0.0).samples, x)


def test_tv_large_lambda_gives_mean():
    x = np.array([1.0, -2.0, 4.0, 0.5, 3.0])
    u = rof_1d(x, 100.0, max_iter=5000, tol=1e-12)[0]
    assert u == pytest.approx([x.mean()] * 5, abs=1e-6)


def test_tv_huge_lambda_example():
    f = np.random.default_rng(4).uniform(-1, 1, 12)
    lam = 12 * (f.max() - f.min())
    u = _out1(tv_denoise_1d(_vol1(f), lam, max_iter=20000, tol=1e-10))
    assert u == pytest.approx([f.mean()] * 12, abs=1e-4)


def test_tv_matches_exact_minimiser():
    # two-level step: the left plateau rises by lam/2, the right one drops by lam
    f = np.array([0.0, 0.0, 3.0])
    lam = 0.4
    u = rof_1d(f, lam, max_iter=20000, tol=1e-14)[0]
    assert u == pytest.approx([lam / 2, lam / 2, 3 - lam], abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=40), st.floats(0.01, 3.0))
def test_tv_objective_non_increasing(values, lam):
    f = np.array(values)
    hist = []
    u = rof_1d(f, lam, max_iter=300, tol=1e-9, history=hist)
    h = hist[0]
    assert np.all(np.diff(h) <= 0)
    assert tv_objective(u[0], f, lam) == pytest.approx(h[-1], rel=1e-12, abs=1e-12)
    assert tv_objective(u[0], f, lam) <= tv_objective(f, f, lam) + 1e-12


def test_tv_negative_lambda():
    with pytest.raises(ParamError):
        tv_denoise_1d(_vol1([1.0, 2.0]), -1.0)


def test_tv_default_lambda():
    x = np.random.default_rng(3).standard_normal((1, 2, 30)).astype(np.float32)
    lam = 0.1 * float(np.abs(x).max())
    assert tv_denoise_1d(ScanVolume(x)) == tv_denoise_1d(ScanVolume(x), lam)


_FILTERS = [
    lambda v: gaussian_1d(v, 1.3),
    lambda v: median_1d(v, 5),
    lambda v: wiener_adaptive_1d(v, 5, 0.2),
    lambda v: tv_denoise_1d(v, 0.3),
]


@pytest.mark.parametrize("f", _FILTERS + [lambda v: wiener_adaptive_1d(v, 5)])
@pytest.mark.parametrize("c", [0.0, -0.37, 2.5])
def test_constant_fixed_point(f, c):
    vol = ScanVolume(np.full((2, 3, 17), c))
    assert np.abs(f(vol).samples.astype(np.float64) - np.float32(c)).max() <= 1e-12


@pytest.mark.parametrize("f", _FILTERS)
def test_ascans_filtered_independently(f):
    rng = np.random.default_rng(9)
    arr = rng.standard_normal((3, 2, 24)).astype(np.float32)
    full = f(ScanVolume(arr)).samples
    alone = f(ScanVolume(arr[1:2, 1:2])).samples
    assert np.array_equal(full[1, 1], alone[0, 0])


@pytest.mark.parametrize("f", _FILTERS[:3])
def test_shift_equivariance_in_interior(f):
    rng = np.random.default_rng(11)
    x = rng.standard_normal(80)
    a = _out1(f(_vol1(x)))
    b = _out1(f(_vol1(np.roll(x, 3))))
    assert b[20:60] == pytest.approx(a[17:57], abs=1e-6)
