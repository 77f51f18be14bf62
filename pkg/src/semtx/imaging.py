"""Raster primitives: 8-bit RGB images, binary masks, PSNR, resizing, compositing.

Pixel data is interchange-format 8-bit RGB; all internal arithmetic runs in
float64. Masks use the global convention 0 = foreground, 1 = background.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import ParameterError, ShapeError


@dataclass(frozen=True)
class ImageBuf:
    """8-bit RGB raster; `pixels` is a read-only (height, width, 3) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = self.pixels
        if not isinstance(px, np.ndarray) or px.ndim != 3 or px.shape[2] != 3:
            raise ShapeError(f"image must be (h, w, 3), got {getattr(px, 'shape', None)}")
        if px.dtype != np.uint8:
            raise ShapeError(f"image samples must be uint8, got {px.dtype}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ShapeError("image dimensions must be at least 1x1")
        px.setflags(write=False)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def channels(self) -> int:
        return 3

    @staticmethod
    def from_array(arr) -> "ImageBuf":
        """Copy an array-like into a fresh ImageBuf (values clipped to [0, 255])."""
        a = np.asarray(arr)
        if a.dtype != np.uint8:
            a = np.clip(np.rint(a.astype(np.float64)), 0, 255).astype(np.uint8)
        return ImageBuf(np.ascontiguousarray(a.copy()))

    @staticmethod
    def filled(width: int, height: int, color=(0, 0, 0)) -> "ImageBuf":
        px = np.empty((height, width, 3), dtype=np.uint8)
        px[:, :] = np.asarray(color, dtype=np.uint8)
        return ImageBuf(px)


@dataclass(frozen=True)
class MaskBuf:
    """Binary per-pixel mask; `values` is (height, width) uint8 in {0, 1}, 0 = foreground."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if not isinstance(v, np.ndarray) or v.ndim != 2:
            raise ShapeError(f"mask must be (h, w), got {getattr(v, 'shape', None)}")
        if v.dtype != np.uint8:
            raise ShapeError(f"mask values must be uint8, got {v.dtype}")
        if v.size and int(v.max()) > 1:
            raise ShapeError("mask values must be 0 or 1")
        v.setflags(write=False)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def foreground_count(self) -> int:
        return int(np.count_nonzero(self.values == 0))

    @staticmethod
    def from_array(arr) -> "MaskBuf":
        a = np.ascontiguousarray(np.asarray(arr, dtype=np.uint8).copy())
        return MaskBuf(a)

    @staticmethod
    def full_background(width: int, height: int) -> "MaskBuf":
        return MaskBuf(np.ones((height, width), dtype=np.uint8))

    @staticmethod
    def full_foreground(width: int, height: int) -> "MaskBuf":
        return MaskBuf(np.zeros((height, width), dtype=np.uint8))


@dataclass(frozen=True)
class BoundingRect:
    """Half-open pixel rectangle: (x1, y1) inclusive top-left, (x2, y2) exclusive."""

    x1: int
    y1: int
    x2: int
    y2: int

    def __post_init__(self):
        if not (0 <= self.x1 < self.x2 and 0 <= self.y1 < self.y2):
            raise ShapeError(f"degenerate rect {self}")

    @property
    def width(self) -> int:
        return self.x2 - self.x1

    @property
    def height(self) -> int:
        return self.y2 - self.y1

    def validate_within(self, width: int, height: int) -> None:
        if self.x2 > width or self.y2 > height:
            raise ShapeError(f"rect {self} exceeds {width}x{height} frame")

    def padded(self, margin: int, width: int, height: int) -> "BoundingRect":
        """Grow by `margin` on every side, clamped to the frame."""
        return BoundingRect(
            max(0, self.x1 - margin),
            max(0, self.y1 - margin),
            min(width, self.x2 + margin),
            min(height, self.y2 + margin),
        )


def _require_same_shape(a, b) -> None:
    if (a.width, a.height) != (b.width, b.height):
        raise ShapeError(f"shape mismatch: {a.width}x{a.height} vs {b.width}x{b.height}")


def psnr(a: ImageBuf, b: ImageBuf) -> float:
    """Peak signal-to-noise ratio in dB over all samples; math.inf when images are equal."""
    _require_same_shape(a, b)
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)


def _resize_bilinear(px: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resample of a (h, w, c) uint8 array using pixel-area coordinates."""
    h, w = px.shape[:2]
    if (out_w, out_h) == (w, h):
        return px.copy()
    xs = np.clip((np.arange(out_w) + 0.5) * (w / out_w) - 0.5, 0.0, w - 1.0)
    ys = np.clip((np.arange(out_h) + 0.5) * (h / out_h) - 0.5, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    wx = (xs - x0)[None, :, None]
    wy = (ys - y0)[:, None, None]
    p = px.astype(np.float64)
    top = p[y0][:, x0] * (1.0 - wx) + p[y0][:, x1] * wx
    bot = p[y1][:, x0] * (1.0 - wx) + p[y1][:, x1] * wx
    out = top * (1.0 - wy) + bot * wy
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def resize_to(img: ImageBuf, width: int, height: int) -> ImageBuf:
    """Bilinear resize to exact target dimensions."""
    if width < 1 or height < 1:
        raise ParameterError("target dimensions must be at least 1")
    return ImageBuf(_resize_bilinear(img.pixels, width, height))


def resize_proportional(img: ImageBuf, max_pixels: int) -> tuple[ImageBuf, float]:
    """Downscale so the output area fits under `max_pixels`, preserving aspect ratio.

    Returns the (possibly unchanged) image and the applied scale factor.
    Images already at or under the threshold pass through with scale 1.
    """
    if max_pixels < 1:
        raise ParameterError("max_pixels must be at least 1")
    area = img.width * img.height
    if area <= max_pixels:
        return img, 1.0
    s = math.sqrt(max_pixels / area)
    ow = math.floor(img.width * s)
    oh = math.floor(img.height * s)
    # extreme aspect ratios: the 1-pixel clamp on one axis must not push the
    # area back over the threshold
    if ow < 1:
        ow, oh = 1, min(max(1, oh), max_pixels)
    elif oh < 1:
        oh, ow = 1, min(max(1, ow), max_pixels)
    return ImageBuf(_resize_bilinear(img.pixels, ow, oh)), s


def apply_mask(img: ImageBuf, mask: MaskBuf, keep: int) -> ImageBuf:
    """Zero out every pixel whose mask value differs from `keep`."""
    _require_same_shape(img, mask)
    if keep not in (0, 1):
        raise ParameterError("keep must be 0 or 1")
    out = np.where((mask.values == keep)[:, :, None], img.pixels, np.uint8(0))
    return ImageBuf(np.ascontiguousarray(out))


def composite(
    background: ImageBuf,
    patch: ImageBuf,
    rect: BoundingRect,
    patch_mask: MaskBuf | None = None,
) -> ImageBuf:
    """Paste `patch` into `rect` of a copy of `background`.

    With `patch_mask`, only foreground pixels (mask value 0) overwrite the
    background; without it the full rectangle is written.
    """
    rect.validate_within(background.width, background.height)
    if (patch.width, patch.height) != (rect.width, rect.height):
        raise ShapeError(
            f"patch {patch.width}x{patch.height} does not fill rect {rect.width}x{rect.height}"
        )
    if patch_mask is not None:
        _require_same_shape(patch, patch_mask)
    out = background.pixels.copy()
    region = out[rect.y1:rect.y2, rect.x1:rect.x2]
    if patch_mask is None:
        region[:] = patch.pixels
    else:
        fg = patch_mask.values == 0
        region[fg] = patch.pixels[fg]
    return ImageBuf(out)


def foreground_bbox(mask: MaskBuf) -> BoundingRect:
    """Tight bounding box of all foreground (value 0) pixels."""
    ys, xs = np.nonzero(mask.values == 0)
    if ys.size == 0:
        raise ShapeError("mask has no foreground pixels")
    return BoundingRect(int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)


def load_image(path) -> ImageBuf:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return ImageBuf(np.ascontiguousarray(arr))


def save_image(img: ImageBuf, path) -> None:
    Image.fromarray(img.pixels, mode="RGB").save(path, format="PNG")


def load_mask(path) -> MaskBuf:
    """Read a single-channel PNG mask: sample < 128 means foreground (0)."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return MaskBuf(np.ascontiguousarray((arr >= 128).astype(np.uint8)))


def save_mask(mask: MaskBuf, path) -> None:
    arr = np.where(mask.values == 1, 255, 0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path, format="PNG")


def to_grayscale(img: ImageBuf) -> np.ndarray:
    """Luma conversion (BT.601 weights) to a float64 (h, w) array."""
    p = img.pixels.astype(np.float64)
    return 0.299 * p[:, :, 0] + 0.587 * p[:, :, 1] + 0.114 * p[:, :, 2]
