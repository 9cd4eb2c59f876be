"""Scan volume data model, ASV persistence, and C-scan / line-profile export.

Samples are stored as float32 in an ``(nx, ny, nt)`` C-ordered array, so
each A-scan ``samples[ix, iy, :]`` is contiguous. The ASV payload uses the
same order.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, fields

import numpy as np

from .errors import FormatError, GateError, InvalidHeaderError, ParamError, TruncatedError

ASV_MAGIC = b"ASV1"
_DIMS = struct.Struct("<3I")
_META = struct.Struct("<7d")
HEADER_SIZE = len(ASV_MAGIC) + _DIMS.size + _META.size  # 72


@dataclass(frozen=True)
class ScanMetadata:
    """Acquisition parameters carried alongside the samples.

    Defaults describe the instrument used for the coin scans: a 50 MHz
    focused transducer (6.35 mm aperture, 12 mm focal length) driven at
    0.21 V, digitised at 250 MHz on a 10 um raster.
    """

    sample_rate_hz: float = 250e6
    pitch_x_m: float = 1e-5
    pitch_y_m: float = 1e-5
    transducer_center_freq_hz: float = 50e6
    excitation_amplitude_v: float = 0.21
    aperture_m: float = 6.35e-3
    focal_length_m: float = 12e-3

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise ParamError(f"{f.name} must be finite, got {value!r}")
        for name in ("sample_rate_hz", "pitch_x_m", "pitch_y_m", "transducer_center_freq_hz"):
            if getattr(self, name) <= 0:
                raise ParamError(f"{name} must be positive")
        for name in ("excitation_amplitude_v", "aperture_m", "focal_length_m"):
            if getattr(self, name) < 0:
                raise ParamError(f"{name} must be nonnegative")

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, f.name) for f in fields(self))


class ScanVolume:
    """Immutable nx x ny x nt amplitude volume in volts."""

    __slots__ = ("_samples", "meta")

    def __init__(self, samples, meta: ScanMetadata | None = None):
        arr = np.array(samples, dtype=np.float32, order="C", copy=True)
        if arr.ndim != 3:
            raise ParamError(f"samples must be 3-D (nx, ny, nt), got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise ParamError(f"all dimensions must be positive, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise ParamError("samples must be finite")
        arr.flags.writeable = False
        self._samples = arr
        self.meta = meta if meta is not None else ScanMetadata()

    @property
    def samples(self) -> np.ndarray:
        """Read-only float32 view, shape ``(nx, ny, nt)``."""
        return self._samples

    @property
    def shape(self) -> tuple[int, int, int]:
        return self._samples.shape

    @property
    def nx(self) -> int:
        return self._samples.shape[0]

    @property
    def ny(self) -> int:
        return self._samples.shape[1]

    @property
    def nt(self) -> int:
        return self._samples.shape[2]

    def sample(self, ix: int, iy: int, it: int) -> float:
        return float(self._samples[ix, iy, it])

    def with_samples(self, samples) -> "ScanVolume":
        """New volume with the same metadata; ``samples`` is cast to float32."""
        return ScanVolume(samples, self.meta)

    def __eq__(self, other):
        if not isinstance(other, ScanVolume):
            return NotImplemented
        return (
            self.meta == other.meta
            and self.shape == other.shape
            and self._samples.tobytes() == other._samples.tobytes()
        )

    __hash__ = None

    def __repr__(self):
        return f"ScanVolume(nx={self.nx}, ny={self.ny}, nt={self.nt})"


@dataclass(frozen=True)
class CScanImage:
    """Max-abs projection of a volume over a time gate ``[t0, t1)``.

    ``pixels`` has shape ``(nx, ny)`` and is indexed ``pixels[ix, iy]``.
    """

    pixels: np.ndarray
    gate: tuple[int, int]

    @property
    def nx(self) -> int:
        return self.pixels.shape[0]

    @property
    def ny(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class LineProfile:
    row: int
    values: np.ndarray


def write_asv(vol: ScanVolume) -> bytes:
    """Serialise ``vol`` to the little-endian ASV layout."""
    payload = vol.samples.astype("<f4", copy=False).tobytes(order="C")
    return b"".join(
        (ASV_MAGIC, _DIMS.pack(vol.nx, vol.ny, vol.nt), _META.pack(*vol.meta.as_tuple()), payload)
    )


def read_asv(data: bytes) -> ScanVolume:
    """Decode an ASV byte stream.

    Raises FormatError on a bad magic, TruncatedError when the header or
    payload is short, and InvalidHeaderError for zero dimensions or
    nonfinite / out-of-range metadata.
    """
    data = memoryview(data).cast("B")
    if len(data) < len(ASV_MAGIC):
        raise TruncatedError("stream shorter than the ASV magic")
    if bytes(data[:4]) != ASV_MAGIC:
        raise FormatError(f"bad magic {bytes(data[:4])!r}, expected {ASV_MAGIC!r}")
    if len(data) < HEADER_SIZE:
        raise TruncatedError(f"header needs {HEADER_SIZE} bytes, got {len(data)}")
    nx, ny, nt = _DIMS.unpack_from(data, 4)
    if 0 in (nx, ny, nt):
        raise InvalidHeaderError(f"zero dimension in header: {nx}x{ny}x{nt}")
    meta_values = _META.unpack_from(data, 4 + _DIMS.size)
    try:
        meta = ScanMetadata(*meta_values)
    except ParamError as exc:
        raise InvalidHeaderError(str(exc)) from exc
    count = nx * ny * nt
    available = (len(data) - HEADER_SIZE) // 4
    if available < count:
        raise TruncatedError(f"payload needs {count} float32 values, stream holds {available}")
    arr = np.frombuffer(data, dtype="<f4", count=count, offset=HEADER_SIZE).reshape(nx, ny, nt)
    if not np.isfinite(arr).all():
        raise InvalidHeaderError("payload contains nonfinite samples")
    return ScanVolume(arr, meta)


def load_asv(path) -> ScanVolume:
    with open(path, "rb") as fh:
        return read_asv(fh.read())


def save_asv(vol: ScanVolume, path) -> None:
    with open(path, "wb") as fh:
        fh.write(write_asv(vol))


def _check_gate(gate, nt: int) -> tuple[int, int]:
    t0, t1 = (int(g) for g in gate)
    if not (0 <= t0 < t1 <= nt):
        raise GateError(f"gate [{t0}, {t1}) must satisfy 0 <= t0 < t1 <= {nt}")
    return t0, t1


def extract_cscan(vol: ScanVolume, gate=None) -> CScanImage:
    """Max of ``|sample|`` over the half-open gate for every (ix, iy).

    ``gate=None`` means the full record ``[0, nt)``.
    """
    t0, t1 = _check_gate((0, vol.nt) if gate is None else gate, vol.nt)
    pixels = np.abs(vol.samples[:, :, t0:t1]).max(axis=2).astype(np.float64)
    return CScanImage(pixels=pixels, gate=(t0, t1))


def extract_line_profile(img: CScanImage, row: int | None = None) -> LineProfile:
    """Row ``iy = row`` of the image; ``None`` picks the centre row ``ny // 2``."""
    if row is None:
        row = img.ny // 2
    if not 0 <= row < img.ny:
        raise IndexError(f"row {row} outside [0, {img.ny})")
    return LineProfile(row=int(row), values=img.pixels[:, row].copy())


def quantize_u8(pixels: np.ndarray) -> np.ndarray:
    """Per-image min-max scaling to 0..255, rounding half away from zero."""
    p = np.asarray(pixels, dtype=np.float64)
    lo, hi = p.min(), p.max()
    if hi == lo:
        return np.zeros(p.shape, dtype=np.uint8)
    scaled = 255.0 * (p - lo) / (hi - lo)
    # scaled is nonnegative, so floor(x + 0.5) is round-half-away-from-zero
    return np.floor(scaled + 0.5).astype(np.uint8)


def write_pgm(img: CScanImage) -> bytes:
    """Binary P5 graymap, one row per iy (top row iy = 0)."""
    body = quantize_u8(img.pixels).T.tobytes(order="C")
    header = f"P5\n{img.nx} {img.ny}\n255\n".encode("ascii")
    return header + body


def write_profile_csv(profile: LineProfile) -> str:
    lines = ["ix,amplitude_v"]
    lines.extend(f"{ix},{float(v)!r}" for ix, v in enumerate(profile.values))
    return "\n".join(lines) + "\n"
