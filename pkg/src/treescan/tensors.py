"""Dense grid tensors and their on-disk formats.

A feature map is an H x W x C float64 grid, row-major with the channel
axis fastest, so each node's channel vector is contiguous. A depth map is
a nonnegative H x W grid. Non-finite values are rejected at construction;
instances are immutable and safe to share.

Tensor file format: magic bytes "TSR1", then height, width, channels as
little-endian uint32, then the payload as little-endian float32 in
row-major channel-fastest order. Depth maps render to binary PGM (P5,
maxval 65535, big-endian samples), min-max normalized to [0, 65535];
constant maps render as all zeros.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import DataError, DimensionError, FormatError

TENSOR_MAGIC = b"TSR1"
_HEADER = struct.Struct("<4sIII")
PGM_MAXVAL = 65535


def node_id(row: int, col: int, width: int) -> int:
    """Grid cell (row, col) -> flat node index."""
    return row * width + col


def node_rc(index: int, width: int) -> tuple[int, int]:
    """Flat node index -> grid cell (row, col)."""
    return index // width, index % width


class FeatureMap:
    """Immutable H x W x C feature grid."""

    __slots__ = ("data",)

    def __init__(self, data: np.ndarray):
        arr = np.array(data, dtype=np.float64, order="C", copy=True)
        if arr.ndim != 3:
            raise DimensionError(f"feature map must be H x W x C, got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise DimensionError(f"feature map dims must be positive, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DataError("feature map contains non-finite values")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):
        raise AttributeError("FeatureMap is immutable")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def node_count(self) -> int:
        return self.data.shape[0] * self.data.shape[1]

    @property
    def nodes(self) -> np.ndarray:
        """(H*W, C) view: one contiguous channel vector per node."""
        return self.data.reshape(self.node_count, self.channels)

    def __repr__(self) -> str:
        return f"FeatureMap({self.height}x{self.width}x{self.channels})"


class DepthMap:
    """Immutable nonnegative H x W depth grid."""

    __slots__ = ("data",)

    def __init__(self, data: np.ndarray):
        arr = np.array(data, dtype=np.float64, order="C", copy=True)
        if arr.ndim != 2:
            raise DimensionError(f"depth map must be H x W, got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise DimensionError(f"depth map dims must be positive, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DataError("depth map contains non-finite values")
        if np.any(arr < 0):
            raise DataError("depth map contains negative values")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):
        raise AttributeError("DepthMap is immutable")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def __repr__(self) -> str:
        return f"DepthMap({self.height}x{self.width})"


def save_tensor(fmap: FeatureMap, path) -> None:
    """Write a feature map in the TSR1 format (float32 payload)."""
    header = _HEADER.pack(TENSOR_MAGIC, fmap.height, fmap.width, fmap.channels)
    payload = fmap.data.astype("<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def load_tensor(path) -> FeatureMap:
    """Read a TSR1 file; inverse of save_tensor."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, height, width, channels = _HEADER.unpack_from(blob)
    if magic != TENSOR_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if height < 1 or width < 1 or channels < 1:
        raise FormatError(f"{path}: non-positive dims {height}x{width}x{channels}")
    expected = _HEADER.size + 4 * height * width * channels
    if len(blob) != expected:
        raise FormatError(f"{path}: payload is {len(blob) - _HEADER.size} bytes, expected {expected - _HEADER.size}")
    payload = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size)
    if not np.all(np.isfinite(payload)):
        raise DataError(f"{path}: payload contains non-finite values")
    return FeatureMap(payload.astype(np.float64).reshape(height, width, channels))


def save_pgm(depth: DepthMap, path) -> None:
    """Write a 16-bit binary PGM, min-max normalized; constant maps go to 0."""
    d = depth.data
    lo = float(d.min())
    hi = float(d.max())
    if hi > lo:
        t = (d - lo) / (hi - lo)
        pixels = np.rint(t * PGM_MAXVAL).astype(">u2")
    else:
        pixels = np.zeros(d.shape, dtype=">u2")
    header = f"P5\n{depth.width} {depth.height}\n{PGM_MAXVAL}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(pixels.tobytes())


def load_pgm(path) -> DepthMap:
    """Read a binary PGM (8- or 16-bit) as raw sample values."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:2] != b"P5":
        raise FormatError(f"{path}: not a binary PGM")
    # Header is the magic plus three whitespace-separated ints; '#' starts a comment.
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if pos < len(blob) and blob[pos : pos + 1] == b"#":
            while pos < len(blob) and blob[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        if pos == start:
            raise FormatError(f"{path}: truncated PGM header")
        try:
            fields.append(int(blob[start:pos]))
        except ValueError as exc:
            raise FormatError(f"{path}: bad PGM header token {blob[start:pos]!r}") from exc
    pos += 1  # single whitespace byte after maxval
    width, height, maxval = fields
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise FormatError(f"{path}: bad PGM dims/maxval {fields}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = height * width * dtype.itemsize
    body = blob[pos:]
    if len(body) != expected:
        raise FormatError(f"{path}: payload is {len(body)} bytes, expected {expected}")
    samples = np.frombuffer(body, dtype=dtype).reshape(height, width)
    return DepthMap(samples.astype(np.float64))
