"""Raster and point types shared by every module, plus image file I/O.

Conventions: integer coordinates name pixel centers, pixel (0, 0) is the
top-left one, and ``y`` grows downwards.  Rasters are stored as numpy arrays
of shape ``(height, width, channels)``.
"""
from __future__ import annotations

import os
import re
from pathlib import Path
from typing import NamedTuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    CorruptImageError,
    DimensionMismatchError,
    InvalidImageError,
    MissingFileError,
    UnsupportedFormatError,
    UnwritablePathError,
)

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


class Point2(NamedTuple):
    x: float
    y: float

    def as_array(self):
        return np.array([self.x, self.y], dtype=float)


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _restore(cls, name, value):
    """Unpickle an immutable single-slot object without re-validating it."""
    obj = object.__new__(cls)
    if isinstance(value, np.ndarray):
        value = _frozen(value)
    object.__setattr__(obj, name, value)
    return obj


class ImageBuffer:
    """Immutable float raster with values in [0, 1].

    ``pixels`` may be given as ``(h, w)`` (single channel) or ``(h, w, c)``
    with ``c`` in {1, 3}.
    """

    __slots__ = ("pixels",)

    def __init__(self, pixels):
        a = np.asarray(pixels, dtype=np.float64)
        if a.ndim == 2:
            a = a[:, :, None]
        if a.ndim != 3 or a.shape[2] not in (1, 3):
            raise InvalidImageError(f"expected (h, w[, 1|3]) array, got shape {a.shape}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise InvalidImageError("image must have positive width and height")
        if not np.all(np.isfinite(a)):
            raise InvalidImageError("image contains non-finite values")
        if a.min() < 0.0 or a.max() > 1.0:
            raise InvalidImageError("image values must lie in [0, 1]")
        object.__setattr__(self, "pixels", _frozen(a))

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __reduce__(self):
        return _restore, (type(self), "pixels", self.pixels)

    @classmethod
    def from_flat(cls, width, height, channels, data):
        data = np.asarray(data, dtype=np.float64)
        if data.size != width * height * channels:
            raise InvalidImageError(
                f"data length {data.size} != {width}x{height}x{channels}"
            )
        return cls(data.reshape(height, width, channels))

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def channels(self):
        return self.pixels.shape[2]

    @property
    def shape(self):
        return self.pixels.shape

    @property
    def data(self):
        """Flat row-major, channel-interleaved view."""
        return self.pixels.reshape(-1)

    def channel(self, ch):
        return self.pixels[:, :, ch]

    def __eq__(self, other):
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    __hash__ = None

    def __repr__(self):
        return f"{type(self).__name__}({self.width}x{self.height}x{self.channels})"


class ScoreMap(ImageBuffer):
    """Single-channel probability raster."""

    __slots__ = ()

    def __init__(self, pixels):
        if isinstance(pixels, ImageBuffer):
            pixels = pixels.pixels
        a = np.asarray(pixels, dtype=np.float64)
        if a.ndim == 3 and a.shape[2] != 1:
            raise InvalidImageError(f"score map needs 1 channel, got {a.shape[2]}")
        super().__init__(a)

    @property
    def values(self):
        """The ``(h, w)`` array of scores."""
        return self.pixels[:, :, 0]

    @classmethod
    def from_mask(cls, mask):
        return cls(mask.bits.astype(np.float64))


class BinaryMask:
    """Immutable boolean raster, ``bits`` has shape ``(h, w)``."""

    __slots__ = ("bits",)

    def __init__(self, bits):
        b = np.asarray(bits)
        if b.ndim != 2:
            raise InvalidImageError(f"mask must be 2-D, got shape {b.shape}")
        object.__setattr__(self, "bits", _frozen(b.astype(bool)))

    def __setattr__(self, name, value):
        raise AttributeError("BinaryMask is immutable")

    def __reduce__(self):
        return _restore, (type(self), "bits", self.bits)

    @property
    def width(self):
        return self.bits.shape[1]

    @property
    def height(self):
        return self.bits.shape[0]

    def count(self):
        return int(self.bits.sum())

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(np.array_equal(self.bits, other.bits))

    __hash__ = None

    def __repr__(self):
        return f"BinaryMask({self.width}x{self.height}, set={self.count()})"


def check_same_shape(a, b):
    sa, sb = np.shape(a), np.shape(b)
    if sa != sb:
        raise DimensionMismatchError(f"shape mismatch: {sa} vs {sb}")


# ---------------------------------------------------------------------------
# image I/O

def quantize(values):
    """Map [0, 1] floats to bytes, rounding half to even."""
    return np.rint(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8)


_NETPBM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _read_netpbm(raw):
    magic = raw[:2]
    channels = 1 if magic in (b"P2", b"P5") else 3
    pos = 2
    header = []
    for _ in range(3):
        m = _NETPBM_TOKEN.match(raw, pos)
        if m is None:
            raise CorruptImageError("truncated NetPBM header")
        header.append(m.group(1))
        pos = m.end()
    try:
        width, height, maxval = (int(t) for t in header)
    except ValueError:
        raise CorruptImageError("non-integer NetPBM header field") from None
    if width < 1 or height < 1 or maxval < 1:
        raise CorruptImageError("invalid NetPBM dimensions")
    if maxval > 255:
        raise UnsupportedFormatError("16-bit NetPBM is not supported")
    n = width * height * channels
    if magic in (b"P5", b"P6"):
        body = raw[pos + 1 : pos + 1 + n]  # exactly one whitespace byte after maxval
        if len(body) != n:
            raise CorruptImageError(f"expected {n} sample bytes, found {len(body)}")
        samples = np.frombuffer(body, dtype=np.uint8).astype(np.float64)
    else:
        text = re.sub(rb"#[^\n]*", b"", raw[pos:])
        try:
            samples = np.array([int(t) for t in text.split()], dtype=np.float64)
        except ValueError:
            raise CorruptImageError("non-integer sample in plain NetPBM") from None
        if samples.size != n:
            raise CorruptImageError(f"expected {n} samples, found {samples.size}")
    if samples.max(initial=0) > maxval:
        raise CorruptImageError("sample exceeds maxval")
    return (samples / maxval).reshape(height, width, channels)


def _read_png(path):
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("1", "L", "LA", "P", "RGB", "RGBA"):
                if mode in ("1", "LA"):
                    im = im.convert("L")
                elif mode in ("P", "RGBA"):
                    im = im.convert("RGB")
                a = np.asarray(im, dtype=np.float64)
            else:
                raise UnsupportedFormatError(f"unsupported PNG mode {mode}")
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise CorruptImageError(f"cannot decode PNG {path}: {exc}") from None
    return a / 255.0


def load_image(path):
    """Read a PNG or NetPBM (P2/P3/P5/P6) file into an :class:`ImageBuffer`."""
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"no such file: {path}")
    raw = path.read_bytes()
    if raw.startswith(PNG_SIGNATURE):
        return ImageBuffer(_read_png(path))
    if raw[:2] in (b"P2", b"P3", b"P5", b"P6"):
        return ImageBuffer(_read_netpbm(raw))
    raise UnsupportedFormatError(f"unrecognised image format: {path}")


def _netpbm_bytes(img, plain):
    q = quantize(img.pixels)
    h, w, c = q.shape
    magic = {(1, True): "P2", (3, True): "P3", (1, False): "P5", (3, False): "P6"}[(c, plain)]
    head = f"{magic}\n{w} {h}\n255\n".encode("ascii")
    if not plain:
        return head + q.tobytes()
    rows = [" ".join(str(v) for v in row) for row in q.reshape(h, w * c)]
    return head + ("\n".join(rows) + "\n").encode("ascii")


def save_image(img, path, plain=False):
    """Write ``img`` as PNG or NetPBM, chosen by the file extension.

    ``.pgm``/``.ppm``/``.pnm`` produce binary NetPBM (P5/P6) unless ``plain``
    is set, in which case the ASCII variants P2/P3 are written.
    """
    path = Path(path)
    ext = path.suffix.lower()
    if ext == ".png":
        q = quantize(img.pixels)
        pil = Image.fromarray(q[:, :, 0] if img.channels == 1 else q, "L" if img.channels == 1 else "RGB")
        writer = lambda f: pil.save(f, format="PNG")
    elif ext in (".pgm", ".ppm", ".pnm"):
        if (ext == ".pgm" and img.channels != 1) or (ext == ".ppm" and img.channels != 3):
            raise UnsupportedFormatError(f"{ext} cannot hold {img.channels} channel(s)")
        payload = _netpbm_bytes(img, plain)
        writer = lambda f: f.write(payload)
    else:
        raise UnsupportedFormatError(f"unsupported extension {ext!r}")
    try:
        with open(path, "wb") as f:
            writer(f)
    except (PermissionError, IsADirectoryError, NotADirectoryError, FileNotFoundError) as exc:
        raise UnwritablePathError(f"cannot write {path}: {exc}") from None
    except OSError as exc:
        if not os.access(path.parent, os.W_OK):
            raise UnwritablePathError(f"cannot write {path}: {exc}") from None
        raise
