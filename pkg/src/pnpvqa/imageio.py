"""Binary PPM (P6) input and PGM (P5) output."""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np


class ImageFormatError(ValueError):
    pass


def _header_tokens(buf: bytes, n: int):
    """First ``n`` whitespace-separated header fields (comments skipped) and the data offset."""
    tokens = []
    pos = 0
    while len(tokens) < n:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated header")
        tokens.append(buf[start:pos])
    return tokens, pos + 1  # exactly one whitespace byte before the raster


def read_ppm(path) -> np.ndarray:
    """8-bit binary PPM as an (H, W, 3) uint8 array."""
    buf = Path(path).read_bytes()
    if buf[:2] != b"P6":
        raise ImageFormatError(f"{path}: only binary PPM (P6) is supported")
    (magic, w, h, maxval), off = _header_tokens(buf, 4)
    w, h, maxval = int(w), int(h), int(maxval)
    if maxval != 255:
        raise ImageFormatError(f"{path}: only 8-bit PPM is supported (maxval {maxval})")
    if len(buf) < off + w * h * 3:
        raise ImageFormatError(f"{path}: raster shorter than {w}x{h}x3")
    return np.frombuffer(buf, dtype=np.uint8, count=w * h * 3, offset=off).reshape(h, w, 3)


def load_image(path, grid=None) -> np.ndarray:
    """Pixels scaled to [0, 1]; optionally checks divisibility by a patch grid."""
    img = read_ppm(path).astype(np.float64) / 255.0
    if grid is not None:
        rows, cols = grid
        if img.shape[0] % rows or img.shape[1] % cols:
            raise ImageFormatError(
                f"{path}: {img.shape[0]}x{img.shape[1]} not divisible by patch grid {rows}x{cols}")
    return img


def write_ppm(path, pixels: np.ndarray) -> None:
    pixels = np.asarray(pixels, dtype=np.uint8)
    h, w, _ = pixels.shape
    with open(os.fspath(path), "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (w, h))
        f.write(pixels.tobytes())


def write_pgm(path, pixels: np.ndarray) -> None:
    pixels = np.asarray(pixels, dtype=np.uint8)
    h, w = pixels.shape
    with open(os.fspath(path), "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write(pixels.tobytes())


def read_pgm(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    if buf[:2] != b"P5":
        raise ImageFormatError(f"{path}: not a binary PGM")
    (_, w, h, _), off = _header_tokens(buf, 4)
    return np.frombuffer(buf, dtype=np.uint8, count=int(w) * int(h), offset=off).reshape(int(h), int(w))
