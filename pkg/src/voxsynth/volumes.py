"""Core data model: label/scalar volumes, the .svol binary format, resampling, windowing.

Volumes are immutable containers of axial slices. ``data`` is indexed
``data[z, y, x]`` and ``dims`` is ``(nx, ny, nz)``; spacing is mm per voxel.

.svol layout (64-byte header, little-endian, then raw payload), frozen:

    offset  size  field
    0       4     magic b"SGMV"
    4       2     version (u16) == 1
    6       1     dtype code: 0=u8, 1=u16, 2=f32
    7       12    dims nx, ny, nz (3 x u32)
    19      12    spacing sx, sy, sz (3 x f32)
    31      1     modality code: 0=LABEL, 1=CT_HU, 2=MR_SIGNAL, 3=NORMALIZED
    32      8     value_range lo, hi (2 x f32; zeros for label volumes)
    40      24    subject_id (UTF-8, NUL-padded; zeros for scalar volumes)
    64      -     payload, x fastest then y then z, little-endian

dtype u8/u16 stores a LabelVolume (modality must be LABEL); f32 stores a
ScalarVolume (modality must not be LABEL). Payload length must equal
nx*ny*nz*itemsize exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError, ParseError, TruncationError, ValidationError

MAGIC = b"SGMV"
FORMAT_VERSION = 1
HEADER_SIZE = 64
_HEADER = struct.Struct("<4sHB3I3fB2f24s")
assert _HEADER.size == HEADER_SIZE

_SUBJECT_ID_BYTES = 24


class Modality(Enum):
    LABEL = 0
    CT_HU = 1
    MR_SIGNAL = 2
    NORMALIZED = 3


_DTYPE_CODES = {np.dtype(np.uint8): 0, np.dtype(np.uint16): 1, np.dtype(np.float32): 2}
_CODE_DTYPES = {v: k for k, v in _DTYPE_CODES.items()}


def _check_grid(dims, spacing):
    if len(dims) != 3 or any(int(d) < 1 for d in dims):
        raise ValidationError(f"dims must be three counts >= 1, got {dims!r}")
    if len(spacing) != 3 or any(not (float(s) > 0) for s in spacing):
        raise ValidationError(f"spacing must be three positive floats, got {spacing!r}")


def _as_f32_tuple(values):
    # Header fields are stored as f32; quantizing at construction keeps
    # read(write(v)) == v exact for every constructible volume.
    return tuple(float(np.float32(x)) for x in values)


@dataclass(frozen=True)
class LabelVolume:
    """3D grid of organ-class identifiers (0 = background air)."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    data: np.ndarray  # (nz, ny, nx), uint8 or uint16
    subject_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "spacing", _as_f32_tuple(self.spacing))
        _check_grid(self.dims, self.spacing)
        if self.data.dtype not in (np.uint8, np.uint16):
            raise ValidationError(f"label data must be uint8/uint16, got {self.data.dtype}")
        nx, ny, nz = self.dims
        if self.data.shape != (nz, ny, nx):
            raise ValidationError(
                f"data shape {self.data.shape} != (nz, ny, nx) = {(nz, ny, nx)}"
            )
        self.data.setflags(write=False)

    @property
    def n_slices(self) -> int:
        return self.dims[2]

    def slice_at(self, z: int) -> np.ndarray:
        return self.data[z]

    def __eq__(self, other):
        if not isinstance(other, LabelVolume):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.spacing == other.spacing
            and self.subject_id == other.subject_id
            and self.data.dtype == other.data.dtype
            and self.data.tobytes() == other.data.tobytes()
        )


@dataclass(frozen=True)
class ScalarVolume:
    """3D grid of finite real intensities with declared bounds."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    data: np.ndarray  # (nz, ny, nx), float32
    modality: Modality
    value_range: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "spacing", _as_f32_tuple(self.spacing))
        object.__setattr__(self, "value_range", _as_f32_tuple(self.value_range))
        _check_grid(self.dims, self.spacing)
        if self.data.dtype != np.float32:
            raise ValidationError(f"scalar data must be float32, got {self.data.dtype}")
        nx, ny, nz = self.dims
        if self.data.shape != (nz, ny, nx):
            raise ValidationError(
                f"data shape {self.data.shape} != (nz, ny, nx) = {(nz, ny, nx)}"
            )
        if self.modality == Modality.LABEL:
            raise ValidationError("scalar volumes cannot carry the LABEL modality")
        if not np.all(np.isfinite(self.data)):
            raise ValidationError("scalar volume contains NaN/Inf values")
        lo, hi = self.value_range
        if self.modality == Modality.NORMALIZED and (lo, hi) != (-1.0, 1.0):
            raise ValidationError(f"NORMALIZED requires value_range (-1, 1), got {(lo, hi)}")
        dmin, dmax = float(self.data.min()), float(self.data.max())
        if dmin < lo or dmax > hi:
            raise ValidationError(
                f"data range [{dmin}, {dmax}] exceeds declared value_range [{lo}, {hi}]"
            )
        self.data.setflags(write=False)

    @property
    def n_slices(self) -> int:
        return self.dims[2]

    def slice_at(self, z: int) -> np.ndarray:
        return self.data[z]

    def __eq__(self, other):
        if not isinstance(other, ScalarVolume):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.spacing == other.spacing
            and self.modality == other.modality
            and self.value_range == other.value_range
            and self.data.tobytes() == other.data.tobytes()
        )


Volume = LabelVolume | ScalarVolume


def label_volume(data, spacing, subject_id="") -> LabelVolume:
    """Build a LabelVolume from a (nz, ny, nx) array of non-negative class ids."""
    arr = np.asarray(data)
    if arr.ndim == 2:
        arr = arr[None]
    dtype = np.uint8 if (arr.size == 0 or arr.max() <= 255) else np.uint16
    arr = np.ascontiguousarray(arr, dtype=dtype)
    nz, ny, nx = arr.shape
    return LabelVolume((nx, ny, nz), tuple(float(s) for s in spacing), arr, subject_id)


def scalar_volume(data, spacing, modality, value_range) -> ScalarVolume:
    """Build a ScalarVolume from a (nz, ny, nx) array."""
    arr = np.asarray(data)
    if arr.ndim == 2:
        arr = arr[None]
    arr = np.ascontiguousarray(arr, dtype=np.float32)
    nz, ny, nx = arr.shape
    return ScalarVolume(
        (nx, ny, nz),
        tuple(float(s) for s in spacing),
        arr,
        modality,
        (float(value_range[0]), float(value_range[1])),
    )


# --------------------------------------------------------------------------
# file I/O


def write_volume(path, v: Volume) -> int:
    """Write a volume as .svol. Returns the number of bytes written."""
    nx, ny, nz = v.dims
    if isinstance(v, LabelVolume):
        dtype_code = _DTYPE_CODES[v.data.dtype]
        modality_code = Modality.LABEL.value
        lo = hi = 0.0
        sid = v.subject_id.encode("utf-8")
        if len(sid) > _SUBJECT_ID_BYTES:
            raise ValidationError(
                f"subject_id {v.subject_id!r} exceeds {_SUBJECT_ID_BYTES} encoded bytes"
            )
    else:
        dtype_code = _DTYPE_CODES[np.dtype(np.float32)]
        modality_code = v.modality.value
        lo, hi = v.value_range
        sid = b""
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        dtype_code,
        nx,
        ny,
        nz,
        *(float(s) for s in v.spacing),
        modality_code,
        lo,
        hi,
        sid,
    )
    payload = np.ascontiguousarray(v.data).astype(v.data.dtype.newbyteorder("<")).tobytes()
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload)
    return HEADER_SIZE + len(payload)


def read_volume(path) -> Volume:
    """Read an .svol file back into a LabelVolume or ScalarVolume."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < HEADER_SIZE:
        raise ParseError(f"file too short for a {HEADER_SIZE}-byte header", len(raw))
    (magic, version, dtype_code, nx, ny, nz, sx, sy, sz, modality_code, lo, hi, sid) = (
        _HEADER.unpack(raw[:HEADER_SIZE])
    )
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}, expected {MAGIC!r}", 0)
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported version {version}", 4)
    if dtype_code not in _CODE_DTYPES:
        raise ParseError(f"unknown dtype code {dtype_code}", 6)
    if min(nx, ny, nz) < 1:
        raise ParseError(f"dims must be >= 1, got {(nx, ny, nz)}", 7)
    if min(sx, sy, sz) <= 0:
        raise ParseError(f"spacing must be > 0, got {(sx, sy, sz)}", 19)
    try:
        modality = Modality(modality_code)
    except ValueError:
        raise ParseError(f"unknown modality code {modality_code}", 31) from None
    dtype = _CODE_DTYPES[dtype_code]
    is_label = dtype != np.dtype(np.float32)
    if is_label != (modality == Modality.LABEL):
        raise ParseError(
            f"dtype {dtype} inconsistent with modality {modality.name}", 31
        )

    expected = nx * ny * nz * dtype.itemsize
    payload = raw[HEADER_SIZE:]
    if len(payload) != expected:
        raise TruncationError(
            f"payload is {len(payload)} bytes, header implies {expected}"
        )
    arr = np.frombuffer(payload, dtype=dtype.newbyteorder("<")).astype(dtype)
    arr = arr.reshape(nz, ny, nx)
    spacing = (float(sx), float(sy), float(sz))
    if is_label:
        return LabelVolume((nx, ny, nz), spacing, arr, sid.rstrip(b"\x00").decode("utf-8"))
    if not np.all(np.isfinite(arr)):
        raise ValidationError("payload contains NaN/Inf values")
    return ScalarVolume((nx, ny, nz), spacing, arr, modality, (float(lo), float(hi)))


# --------------------------------------------------------------------------
# resampling


def _axis_coords(n: int, src: float, dst: float) -> np.ndarray:
    # Output pixel centers share the input's first pixel center; count keeps
    # the physical extent between first and last centers: floor((n-1)*s/t)+1.
    n_out = int(np.floor((n - 1) * src / dst + 1e-9)) + 1
    n_out = max(n_out, 1)
    return np.arange(n_out) * (dst / src)


def resample_axial(v: Volume, target_spacing: tuple[float, float]) -> Volume:
    """Resample in-plane to ``target_spacing`` (mm). Slice spacing is untouched.

    Labels use nearest-neighbor (no invented classes), scalars bilinear.
    """
    tx, ty = float(target_spacing[0]), float(target_spacing[1])
    if tx <= 0 or ty <= 0:
        raise DomainError(f"target spacing must be positive, got {(tx, ty)}")
    nx, ny, nz = v.dims
    sx, sy, sz = v.spacing
    ux = _axis_coords(nx, sx, tx)
    uy = _axis_coords(ny, sy, ty)

    if isinstance(v, LabelVolume):
        # np.rint rounds half to even; exact integer coords are unaffected
        ix = np.clip(np.rint(ux).astype(np.intp), 0, nx - 1)
        iy = np.clip(np.rint(uy).astype(np.intp), 0, ny - 1)
        out = v.data[:, iy[:, None], ix[None, :]]
        return LabelVolume(
            (len(ix), len(iy), nz), (tx, ty, sz), np.ascontiguousarray(out), v.subject_id
        )

    x0 = np.clip(np.floor(ux).astype(np.intp), 0, nx - 1)
    x1 = np.minimum(x0 + 1, nx - 1)
    fx = np.clip(ux - x0, 0.0, 1.0)
    y0 = np.clip(np.floor(uy).astype(np.intp), 0, ny - 1)
    y1 = np.minimum(y0 + 1, ny - 1)
    fy = np.clip(uy - y0, 0.0, 1.0)

    d = v.data.astype(np.float64)
    wx0, wx1 = (1.0 - fx)[None, None, :], fx[None, None, :]
    wy0, wy1 = (1.0 - fy)[None, :, None], fy[None, :, None]
    out = (
        d[:, y0[:, None], x0[None, :]] * wy0 * wx0
        + d[:, y0[:, None], x1[None, :]] * wy0 * wx1
        + d[:, y1[:, None], x0[None, :]] * wy1 * wx0
        + d[:, y1[:, None], x1[None, :]] * wy1 * wx1
    )
    return ScalarVolume(
        (len(ux), len(uy), nz),
        (tx, ty, sz),
        np.ascontiguousarray(out, dtype=np.float32),
        v.modality,
        v.value_range,
    )


# --------------------------------------------------------------------------
# intensity windowing


def normalize(v: ScalarVolume, window: tuple[float, float]) -> ScalarVolume:
    """Affine map window -> [-1, 1], clamping values outside the window."""
    lo, hi = float(window[0]), float(window[1])
    if hi <= lo:
        raise DomainError(f"window hi must exceed lo, got {(lo, hi)}")
    x = np.clip(v.data.astype(np.float64), lo, hi)
    out = (x - lo) / (hi - lo) * 2.0 - 1.0
    out = np.clip(out, -1.0, 1.0)
    return ScalarVolume(
        v.dims, v.spacing, out.astype(np.float32), Modality.NORMALIZED, (-1.0, 1.0)
    )


def denormalize(v: ScalarVolume, window: tuple[float, float], modality=Modality.CT_HU) -> ScalarVolume:
    """Inverse of :func:`normalize`: [-1, 1] back to the window's units."""
    lo, hi = float(window[0]), float(window[1])
    if hi <= lo:
        raise DomainError(f"window hi must exceed lo, got {(lo, hi)}")
    x = (v.data.astype(np.float64) + 1.0) / 2.0 * (hi - lo) + lo
    x = np.clip(x, lo, hi)
    return ScalarVolume(v.dims, v.spacing, x.astype(np.float32), modality, (lo, hi))


def normalize_array(a: np.ndarray, window: tuple[float, float]) -> np.ndarray:
    """Array-level normalize for 2D slices; same mapping as :func:`normalize`."""
    lo, hi = float(window[0]), float(window[1])
    if hi <= lo:
        raise DomainError(f"window hi must exceed lo, got {(lo, hi)}")
    x = np.clip(np.asarray(a, dtype=np.float64), lo, hi)
    return np.clip((x - lo) / (hi - lo) * 2.0 - 1.0, -1.0, 1.0)


def denormalize_array(a: np.ndarray, window: tuple[float, float]) -> np.ndarray:
    lo, hi = float(window[0]), float(window[1])
    if hi <= lo:
        raise DomainError(f"window hi must exceed lo, got {(lo, hi)}")
    x = (np.asarray(a, dtype=np.float64) + 1.0) / 2.0 * (hi - lo) + lo
    return np.clip(x, lo, hi)
