import math

import numpy as np
import pytest

from samdenoise.errors import ParamError, SpecError
from samdenoise.phantom import (
    PhantomSpec,
    PulseSpec,
    Reflector,
    add_awgn,
    coin64,
    gabor_pulse,
    render_phantom,
)
from samdenoise.rng import XorShift64Star, standard_normals
from samdenoise.volume import ScanVolume


def _oracle_normals(n, seed):
    # straight transcription of the generator definition, no shared code
    mask = (1 << 64) - 1
    x = (seed ^ 0x9E3779B97F4A7C15) & mask or 1
    out = []
    while len(out) < n:
        us = []
        for _ in range(2):
            x ^= x >> 12
            x ^= (x << 25) & mask
            x ^= x >> 27
            u = (((x * 0x2545F4914F6CDD1D) & mask) >> 11) * 2.0**-53
            us.append(u if u > 0 else 2.0**-53)
        r = math.sqrt(-2 * math.log(us[0]))
        out += [r * math.cos(2 * math.pi * us[1]), r * math.sin(2 * math.pi * us[1])]
    return out[:n]


@pytest.mark.parametrize("seed", [0, 1, 42, 0x9E3779B97F4A7C15, 2**64 - 1])
def test_normal_stream_matches_oracle(seed):
    got = standard_normals(9, seed)
    assert got.tolist() == _oracle_normals(9, seed)
    gen = XorShift64Star(seed)
    assert [gen.normal() for _ in range(9)] == got.tolist()


def test_gabor_at_centre():
    p = PulseSpec()
    assert gabor_pulse(1e-7, 1e-7, 0.7, p) == 0.7
    q = PulseSpec(phase_rad=math.pi / 2)
    assert abs(gabor_pulse(1e-7, 1e-7, 0.7, q)) <= 1e-15 * 0.7


def test_gabor_closed_form():
    p = PulseSpec(center_freq_hz=50e6, envelope_sigma_s=20e-9)
    val = gabor_pulse(10e-9, 0.0, 1.0, p)
    assert val == pytest.approx(math.exp(-0.125) * math.cos(math.pi), abs=1e-12)
    assert val == pytest.approx(-0.882497, abs=5e-7)


def test_empty_phantom_is_zero():
    vol = render_phantom(PhantomSpec(3, 4, 16))
    assert vol.shape == (3, 4, 16)
    assert not vol.samples.any()


def test_full_field_disk_gives_identical_ascans():
    spec = PhantomSpec(4, 4, 64, reflectors=[Reflector("disk", 1.5, 1.5, 10.0, 0.8, 80e-9)])
    arr = render_phantom(spec).samples
    assert (arr == arr[0, 0]).all()
    assert arr[0, 0].any()


def test_render_point_value():
    pulse = PulseSpec()
    spec = PhantomSpec(2, 2, 128, pulse=pulse, reflectors=[Reflector("disk", 0, 0, 0.5, 0.6, 200e-9)])
    vol = render_phantom(spec)
    t = 60 / 250e6
    assert vol.sample(0, 0, 60) == pytest.approx(gabor_pulse(t, 200e-9, 0.6, pulse), abs=1e-7)
    assert vol.sample(1, 1, 60) == 0.0
    assert vol.sample(0, 0, 50) == pytest.approx(0.6, abs=1e-7)


def test_coin64_layout():
    spec = coin64()
    vol = render_phantom(spec)
    assert vol.shape == (64, 64, 256)
    peak_t = 100  # 400 ns at 250 MHz
    assert vol.sample(31, 31, peak_t) == pytest.approx(0.2, abs=1e-6)   # centre disk
    assert vol.sample(31 + 21, 31, peak_t) == pytest.approx(0.9, abs=1e-6)  # ring
    assert vol.sample(31 + 13, 31, peak_t) == pytest.approx(0.5, abs=1e-6)  # outer disk
    assert vol.sample(0, 0, peak_t) == 0.0  # outside


def test_spec_errors():
    with pytest.raises(SpecError):
        PhantomSpec(4, 4, 16, reflectors=[Reflector("disk", 0, 0, 1, 0.5, 1e-6)])
    with pytest.raises(SpecError):
        Reflector("square", 0, 0, 1, 0.5, 0)
    with pytest.raises(SpecError):
        Reflector("ring", 0, 0, 1, 0.5, 0, inner_radius=2)
    with pytest.raises(SpecError):
        PhantomSpec(0, 4, 16)
    with pytest.raises(SpecError):
        PulseSpec(center_freq_hz=0)


def test_spec_json_round_trip():
    spec = coin64()
    assert PhantomSpec.from_json(spec.to_json()) == spec
    with pytest.raises(SpecError):
        PhantomSpec.from_dict({"nx": 2, "ny": 2, "nt": 4, "bogus": 1})


def test_awgn_zero_sigma_is_identity():
    vol = render_phantom(coin64())
    assert add_awgn(vol, 0.0, 7) == vol


def test_awgn_deterministic():
    vol = ScanVolume(np.zeros((4, 4, 16)))
    assert add_awgn(vol, 0.3, 5) == add_awgn(vol, 0.3, 5)
    assert add_awgn(vol, 0.3, 5) != add_awgn(vol, 0.3, 6)


def test_awgn_statistics():
    noisy = add_awgn(ScanVolume(np.zeros((32, 32, 128))), 0.1, 42)
    s = noisy.samples.astype(np.float64)
    assert 0.0985 <= s.std(ddof=1) <= 0.1015
    assert abs(s.mean()) < 5 * 0.1 / math.sqrt(s.size)


def test_awgn_output_is_rounded_sum():
    rng = np.random.default_rng(0)
    vol = ScanVolume(rng.uniform(-1, 1, (3, 5, 7)))
    g = standard_normals(vol.samples.size, 11).reshape(vol.shape)
    expected = (vol.samples.astype(np.float64) + 0.25 * g).astype(np.float32)
    assert np.array_equal(add_awgn(vol, 0.25, 11).samples, expected)


def test_awgn_noise_field_independent_of_data():
    # same seed, same size: the noise field is the same on any volume
    zero = ScanVolume(np.zeros((2, 3, 8)))
    other = ScanVolume(np.full((2, 3, 8), 0.5))
    n0 = add_awgn(zero, 0.2, 3).samples.astype(np.float64)
    n1 = add_awgn(other, 0.2, 3).samples.astype(np.float64) - 0.5
    assert np.allclose(n0, n1, rtol=0, atol=1e-7)


def test_awgn_rejects_negative_sigma():
    with pytest.raises(ParamError):
        add_awgn(ScanVolume(np.zeros((1, 1, 2))), -0.1, 0)
