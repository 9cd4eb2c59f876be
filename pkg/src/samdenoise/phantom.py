"""Synthetic ground-truth volumes: reflector maps convolved into Gabor echoes."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ParamError, SpecError
from .rng import standard_normals
from .volume import ScanMetadata, ScanVolume


@dataclass(frozen=True)
class PulseSpec:
    center_freq_hz: float = 50e6
    envelope_sigma_s: float = 30e-9
    phase_rad: float = 0.0

    def __post_init__(self):
        if not self.center_freq_hz > 0:
            raise SpecError("center_freq_hz must be positive")
        if not self.envelope_sigma_s > 0:
            raise SpecError("envelope_sigma_s must be positive")


@dataclass(frozen=True)
class Reflector:
    """Disk or ring footprint in grid units.

    A grid point at distance ``d`` from the centre is covered by a disk when
    ``d <= radius`` and by a ring when ``inner_radius <= d <= radius``.
    """

    shape: str
    center_x: float
    center_y: float
    radius: float
    reflectivity: float
    delay_s: float
    inner_radius: float = 0.0

    def __post_init__(self):
        if self.shape not in ("disk", "ring"):
            raise SpecError(f"unknown reflector shape {self.shape!r}")
        if not self.radius > 0:
            raise SpecError("radius must be positive")
        if self.shape == "ring" and not 0 < self.inner_radius < self.radius:
            raise SpecError("ring needs 0 < inner_radius < radius")
        if not 0.0 <= self.reflectivity <= 1.0:
            raise SpecError("reflectivity must lie in [0, 1]")
        if not self.delay_s >= 0:
            raise SpecError("delay_s must be nonnegative")

    def mask(self, nx: int, ny: int) -> np.ndarray:
        ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        d2 = (ix - self.center_x) ** 2 + (iy - self.center_y) ** 2
        inside = d2 <= self.radius**2
        if self.shape == "ring":
            inside &= d2 >= self.inner_radius**2
        return inside


@dataclass(frozen=True)
class PhantomSpec:
    nx: int
    ny: int
    nt: int
    sample_rate_hz: float = 250e6
    pulse: PulseSpec = field(default_factory=PulseSpec)
    reflectors: tuple[Reflector, ...] = ()
    background_reflectivity: float = 0.0
    background_delay_s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "reflectors", tuple(self.reflectors))
        for name in ("nx", "ny", "nt"):
            if int(getattr(self, name)) < 1:
                raise SpecError(f"{name} must be a positive integer")
        if not self.sample_rate_hz > 0:
            raise SpecError("sample_rate_hz must be positive")
        if not 0.0 <= self.background_reflectivity <= 1.0:
            raise SpecError("background_reflectivity must lie in [0, 1]")
        window = self.nt / self.sample_rate_hz
        for delay in [self.background_delay_s] + [r.delay_s for r in self.reflectors]:
            if not 0.0 <= delay < window:
                raise SpecError(f"delay {delay!r} s outside the time window [0, {window!r})")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_dict(cls, doc: dict) -> "PhantomSpec":
        doc = dict(doc)
        try:
            pulse = PulseSpec(**doc.pop("pulse", {}))
            reflectors = tuple(Reflector(**r) for r in doc.pop("reflectors", []))
            return cls(pulse=pulse, reflectors=reflectors, **doc)
        except TypeError as exc:
            raise SpecError(f"malformed phantom document: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "PhantomSpec":
        return cls.from_dict(json.loads(text))


def coin_phantom(nx: int = 64, ny: int = 64, nt: int = 256, sample_rate_hz: float = 250e6,
                 pulse: PulseSpec | None = None, delay_s: float = 400e-9) -> PhantomSpec:
    """Coin-like target centred on the grid.

    On a 64 x 64 grid: disk r=30 at reflectivity 0.5, ring with radii 18-24
    at 0.9, centre disk r=8 at 0.2, all echoing at ``delay_s``. Radii scale
    with ``min(nx, ny) / 64`` on other grids.
    """
    cx = (nx - 1) / 2.0
    cy = (ny - 1) / 2.0
    s = min(nx, ny) / 64.0
    return PhantomSpec(
        nx=nx,
        ny=ny,
        nt=nt,
        sample_rate_hz=sample_rate_hz,
        pulse=pulse or PulseSpec(),
        reflectors=(
            Reflector("disk", cx, cy, 30.0 * s, 0.5, delay_s),
            Reflector("ring", cx, cy, 24.0 * s, 0.9, delay_s, inner_radius=18.0 * s),
            Reflector("disk", cx, cy, 8.0 * s, 0.2, delay_s),
        ),
    )


def coin64() -> PhantomSpec:
    """The 64 x 64 x 256 coin preset at the default pulse and sampling."""
    return coin_phantom(64, 64, 256)


PRESETS = {"coin64": coin64}


def gabor_pulse(t, tau, amp, pulse: PulseSpec):
    """Gaussian-enveloped cosine echo centred at ``tau``. Works on arrays."""
    dt = np.subtract(t, tau)
    envelope = np.exp(-(dt * dt) / (2.0 * pulse.envelope_sigma_s**2))
    return amp * envelope * np.cos(2.0 * math.pi * pulse.center_freq_hz * dt + pulse.phase_rad)


def render_phantom(spec: PhantomSpec) -> ScanVolume:
    """Clean volume for ``spec``; the last listed reflector covering a point wins."""
    reflectivity = np.full((spec.nx, spec.ny), spec.background_reflectivity, dtype=np.float64)
    delay = np.full((spec.nx, spec.ny), spec.background_delay_s, dtype=np.float64)
    for refl in spec.reflectors:
        m = refl.mask(spec.nx, spec.ny)
        reflectivity[m] = refl.reflectivity
        delay[m] = refl.delay_s
    t = np.arange(spec.nt, dtype=np.float64) / spec.sample_rate_hz
    samples = gabor_pulse(t[None, None, :], delay[:, :, None], reflectivity[:, :, None], spec.pulse)
    meta = ScanMetadata(
        sample_rate_hz=spec.sample_rate_hz,
        transducer_center_freq_hz=spec.pulse.center_freq_hz,
    )
    return ScanVolume(samples, meta)


def add_awgn(vol: ScanVolume, sigma_v: float, seed: int) -> ScanVolume:
    """Add ``sigma_v`` times the seeded normal stream, consumed in payload order.

    The noise draws do not depend on the data, so the same seed yields the
    same noise field on any volume of the same size.
    """
    if not sigma_v >= 0 or not math.isfinite(sigma_v):
        raise ParamError(f"sigma must be a finite nonnegative value, got {sigma_v!r}")
    if sigma_v == 0:
        return vol.with_samples(vol.samples)
    noise = standard_normals(vol.samples.size, seed).reshape(vol.shape)
    return vol.with_samples(vol.samples.astype(np.float64) + sigma_v * noise)
