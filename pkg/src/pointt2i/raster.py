"""Minimal deterministic RGB rasterizer with an in-package PNG codec.

Everything is computed from the input numbers alone (no platform drawing
libraries, fonts, or anti-aliasing), so identical inputs produce identical
PNG bytes on every platform. The codec handles exactly what we emit: 8-bit
RGB, filter type 0 rows.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .errors import DecodeError

RGB = tuple[int, int, int]

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_ZLIB_LEVEL = 6


class Canvas:
    def __init__(self, width: int, height: int, background: RGB = (0, 0, 0)):
        if width <= 0 or height <= 0:
            raise ValueError("canvas dimensions must be positive")
        self.width = width
        self.height = height
        self.pixels = np.empty((height, width, 3), dtype=np.uint8)
        self.pixels[:] = background

    def fill_disc(self, cx: float, cy: float, radius: float, color: RGB) -> None:
        self._fill_capsule(cx, cy, cx, cy, radius, color)

    def fill_capsule(self, x0: float, y0: float, x1: float, y1: float, radius: float, color: RGB) -> None:
        """Solid thick segment: all pixels within `radius` of the segment."""
        self._fill_capsule(x0, y0, x1, y1, radius, color)

    def _fill_capsule(self, x0, y0, x1, y1, radius, color) -> None:
        lo_x = max(0, int(np.floor(min(x0, x1) - radius)))
        hi_x = min(self.width - 1, int(np.ceil(max(x0, x1) + radius)))
        lo_y = max(0, int(np.floor(min(y0, y1) - radius)))
        hi_y = min(self.height - 1, int(np.ceil(max(y0, y1) + radius)))
        if lo_x > hi_x or lo_y > hi_y:
            return
        ys, xs = np.mgrid[lo_y : hi_y + 1, lo_x : hi_x + 1]
        px = xs.astype(np.float64) - x0
        py = ys.astype(np.float64) - y0
        dx, dy = x1 - x0, y1 - y0
        seg_len_sq = dx * dx + dy * dy
        if seg_len_sq > 0:
            t = np.clip((px * dx + py * dy) / seg_len_sq, 0.0, 1.0)
        else:
            t = 0.0
        qx = px - t * dx
        qy = py - t * dy
        mask = qx * qx + qy * qy <= radius * radius
        region = self.pixels[lo_y : hi_y + 1, lo_x : hi_x + 1]
        region[mask] = color

    def to_png(self) -> bytes:
        return encode_png(self.pixels)


def _chunk(tag: bytes, data: bytes) -> bytes:
    return (
        struct.pack(">I", len(data))
        + tag
        + data
        + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF)
    )


def encode_png(pixels: np.ndarray) -> bytes:
    if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
        raise ValueError("expected HxWx3 uint8 array")
    height, width = pixels.shape[:2]
    ihdr = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    raw = b"".join(b"\x00" + pixels[row].tobytes() for row in range(height))
    idat = zlib.compress(raw, _ZLIB_LEVEL)
    return _PNG_SIGNATURE + _chunk(b"IHDR", ihdr) + _chunk(b"IDAT", idat) + _chunk(b"IEND", b"")


def png_size(data: bytes) -> tuple[int, int]:
    """(width, height) from the IHDR without a full decode."""
    if len(data) < 24 or not data.startswith(_PNG_SIGNATURE) or data[12:16] != b"IHDR":
        raise DecodeError("not a PNG")
    width, height = struct.unpack(">II", data[16:24])
    return width, height


def decode_png(data: bytes) -> np.ndarray:
    """Decode the subset this package emits (8-bit RGB, filter 0)."""
    if not data.startswith(_PNG_SIGNATURE):
        raise DecodeError("missing PNG signature")
    pos = len(_PNG_SIGNATURE)
    width = height = None
    idat = b""
    while pos + 8 <= len(data):
        (length,) = struct.unpack(">I", data[pos : pos + 4])
        tag = data[pos + 4 : pos + 8]
        body = data[pos + 8 : pos + 8 + length]
        if len(body) != length:
            raise DecodeError("truncated chunk")
        if tag == b"IHDR":
            width, height, depth, color = struct.unpack(">IIBB", body[:10])
            if depth != 8 or color != 2:
                raise DecodeError(f"unsupported PNG format: depth={depth} color={color}")
        elif tag == b"IDAT":
            idat += body
        elif tag == b"IEND":
            break
        pos += 12 + length
    if width is None or height is None or not idat:
        raise DecodeError("incomplete PNG")
    try:
        raw = zlib.decompress(idat)
    except zlib.error as exc:
        raise DecodeError(f"bad IDAT stream: {exc}") from exc
    stride = 1 + width * 3
    if len(raw) != stride * height:
        raise DecodeError("unexpected decompressed size")
    rows = np.frombuffer(raw, dtype=np.uint8).reshape(height, stride)
    if np.any(rows[:, 0] != 0):
        raise DecodeError("unsupported PNG row filter")
    return rows[:, 1:].reshape(height, width, 3).copy()
