"""Loading, cropping, grayscale conversion and resizing of raster images.

Every downstream stage works on GrayImage: a row-major float64 grid of
intensities in [0, 255]. Supported inputs are PGM (P2 ASCII / P5 binary,
maxval <= 255) and 8-bit PNG in grayscale or RGB. RGB collapses to gray
with ITU-R BT.601 luminance weights, rounded to nearest.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


class ImageIOError(Exception):
    """Base class for image loading failures."""


class UnreadableFileError(ImageIOError):
    """File missing or not readable."""


class UnsupportedFormatError(ImageIOError):
    """Not a PGM/PNG file, or a PNG mode outside 8-bit gray/RGB."""


class UnsupportedBitDepthError(ImageIOError):
    """Sample depth other than 8 bits per channel."""


class CorruptHeaderError(ImageIOError):
    """Header malformed, or payload inconsistent with the header."""


class CropBoundsError(ValueError):
    """Crop rectangle extends outside the source image."""


@dataclass(frozen=True)
class GrayImage:
    """Grayscale raster, pixels shaped (height, width), values in [0, 255]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.size == 0:
            raise ValueError("GrayImage needs a non-empty 2-D pixel grid")
        if not np.isfinite(px).all():
            raise ValueError("GrayImage intensities must be finite")
        if px.min() < 0.0 or px.max() > 255.0:
            raise ValueError("GrayImage intensities must lie in [0, 255]")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class CropRect:
    """Axis-aligned crop window; must lie fully inside the source image."""

    x0: int
    y0: int
    width: int
    height: int


def _rgb_to_gray(rgb: np.ndarray) -> np.ndarray:
    r, g, b = LUMA_WEIGHTS
    lum = r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]
    return np.rint(lum)


def _parse_pgm(data: bytes, path: Path) -> GrayImage:
    magic = data[:2]
    pos = 2

    def next_token() -> tuple[bytes, int]:
        i = pos
        while i < len(data):
            ch = data[i : i + 1]
            if ch == b"#":  # comment runs to end of line
                while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                    i += 1
            elif ch.isspace():
                i += 1
            else:
                break
        start = i
        while i < len(data) and not data[i : i + 1].isspace():
            i += 1
        if start == i:
            raise CorruptHeaderError(f"{path}: truncated PGM header")
        return data[start:i], i

    fields = []
    for _ in range(3):
        token, pos = next_token()
        try:
            fields.append(int(token))
        except ValueError:
            raise CorruptHeaderError(f"{path}: non-numeric PGM header field {token!r}") from None
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise CorruptHeaderError(f"{path}: bad PGM dimensions {width}x{height}")
    if maxval < 1 or maxval > 65535:
        raise CorruptHeaderError(f"{path}: bad PGM maxval {maxval}")
    if maxval > 255:
        raise UnsupportedBitDepthError(f"{path}: PGM maxval {maxval} exceeds 8-bit range")

    n = width * height
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        raw = data[pos : pos + n]
        if len(raw) < n:
            raise CorruptHeaderError(f"{path}: PGM payload shorter than header promises")
        values = np.frombuffer(raw, dtype=np.uint8).astype(np.float64)
    else:
        tokens = data[pos:].split()
        if len(tokens) < n:
            raise CorruptHeaderError(f"{path}: PGM payload shorter than header promises")
        try:
            values = np.array([int(t) for t in tokens[:n]], dtype=np.float64)
        except ValueError:
            raise CorruptHeaderError(f"{path}: non-numeric PGM sample") from None
    if values.max(initial=0.0) > maxval:
        raise CorruptHeaderError(f"{path}: PGM sample exceeds declared maxval")
    return GrayImage(values.reshape(height, width))


def _load_png(path: Path) -> GrayImage:
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "L":
                return GrayImage(np.asarray(im, dtype=np.float64))
            if mode == "RGB":
                return GrayImage(_rgb_to_gray(np.asarray(im, dtype=np.float64)))
            if mode in ("I", "I;16", "I;16B", "I;16L", "F", "1"):
                raise UnsupportedBitDepthError(f"{path}: PNG mode {mode} is not 8-bit gray/RGB")
            raise UnsupportedFormatError(f"{path}: PNG mode {mode} not supported (need L or RGB)")
    except UnidentifiedImageError:
        raise CorruptHeaderError(f"{path}: corrupt PNG stream") from None
    except (OSError, SyntaxError) as exc:
        raise CorruptHeaderError(f"{path}: broken PNG ({exc})") from None


def load_image(path) -> GrayImage:
    """Load a PGM or PNG file into a GrayImage. Conversion is deterministic."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise UnreadableFileError(f"cannot read {path}: {exc}") from None
    if data[:2] in (b"P2", b"P5"):
        return _parse_pgm(data, path)
    if data[:8] == _PNG_SIGNATURE:
        return _load_png(path)
    raise UnsupportedFormatError(f"{path}: not a PGM (P2/P5) or PNG file")


def crop(img: GrayImage, rect: CropRect) -> GrayImage:
    """Cut rect out of img; output pixel (i, j) equals input (y0+i, x0+j)."""
    if rect.width < 1 or rect.height < 1:
        raise CropBoundsError(f"crop size {rect.width}x{rect.height} is empty")
    if rect.x0 < 0 or rect.y0 < 0 or rect.x0 + rect.width > img.width or rect.y0 + rect.height > img.height:
        raise CropBoundsError(
            f"crop ({rect.x0},{rect.y0},{rect.width},{rect.height}) exceeds "
            f"{img.width}x{img.height} image"
        )
    block = img.pixels[rect.y0 : rect.y0 + rect.height, rect.x0 : rect.x0 + rect.width]
    return GrayImage(block.copy())


def _sample_axis(n_src: int, n_dst: int) -> np.ndarray:
    # corner-aligned: first/last output samples sit on first/last input samples
    if n_dst == 1:
        return np.zeros(1)
    return np.linspace(0.0, n_src - 1.0, n_dst)


def resize(img: GrayImage, w: int, h: int) -> GrayImage:
    """Bilinear, corner-aligned resize to w x h pixels."""
    if w < 1 or h < 1:
        raise ValueError(f"resize target {w}x{h} must be at least 1x1")
    if w == img.width and h == img.height:
        return GrayImage(img.pixels.copy())
    src = img.pixels
    xs = _sample_axis(img.width, w)
    ys = _sample_axis(img.height, h)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, img.width - 1)
    y1 = np.minimum(y0 + 1, img.height - 1)
    fx = xs - x0
    fy = (ys - y0)[:, None]
    top = (1.0 - fx) * src[np.ix_(y0, x0)] + fx * src[np.ix_(y0, x1)]
    bottom = (1.0 - fx) * src[np.ix_(y1, x0)] + fx * src[np.ix_(y1, x1)]
    out = (1.0 - fy) * top + fy * bottom
    return GrayImage(np.clip(out, 0.0, 255.0))


def write_pgm(img: GrayImage, path) -> None:
    """Debug dump as binary P5, intensities rounded to nearest integer."""
    path = Path(path)
    values = np.clip(np.rint(img.pixels), 0, 255).astype(np.uint8)
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    path.write_bytes(header + values.tobytes())
