"""Foreground isolation: convex hulls from body landmarks and pluggable segmenters.

Two deterministic segmenter implementations are provided in place of neural
person-matting models: one that reads an externally supplied mask, and one
that thresholds per-channel differences against a known background image.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateInputError, NoForegroundError, ShapeError
from .imaging import BoundingRect, ImageBuf, MaskBuf, foreground_bbox

DEFAULT_DIFF_THRESHOLD = 30


@dataclass(frozen=True)
class LandmarkSet:
    """Body landmark coordinates in pixel space."""

    points: tuple[tuple[float, float], ...]

    @staticmethod
    def from_json(path) -> "LandmarkSet":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        try:
            pts = tuple((float(x), float(y)) for x, y in payload["points"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"landmark file {path} must hold {{'points': [[x, y], ...]}}") from exc
        return LandmarkSet(pts)


@dataclass(frozen=True)
class HullPolygon:
    """Strictly convex polygon, counter-clockwise vertex order."""

    vertices: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class SegmentationResult:
    mask: MaskBuf
    bbox: BoundingRect


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(landmarks: LandmarkSet) -> HullPolygon:
    """Monotone-chain convex hull; collinear boundary points are dropped."""
    pts = sorted(set((float(x), float(y)) for x, y in landmarks.points))
    if len(pts) < 3:
        raise DegenerateInputError("convex hull needs at least 3 distinct points")
    lower: list[tuple[float, float]] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[float, float]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    verts = lower[:-1] + upper[:-1]
    if len(verts) < 3:
        raise DegenerateInputError("landmark points are collinear")
    return HullPolygon(tuple(verts))


def hull_to_mask(hull: HullPolygon, width: int, height: int) -> MaskBuf:
    """Rasterize: pixel centers inside or on the hull become foreground (0)."""
    for x, y in hull.vertices:
        if not (0 <= x <= width - 1 and 0 <= y <= height - 1):
            raise ShapeError(f"hull vertex ({x}, {y}) outside {width}x{height} frame")
    xs, ys = np.meshgrid(np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64))
    inside = np.ones((height, width), dtype=bool)
    verts = hull.vertices
    for i in range(len(verts)):
        ax, ay = verts[i]
        bx, by = verts[(i + 1) % len(verts)]
        # CCW: interior points sit on the left of every directed edge
        inside &= (bx - ax) * (ys - ay) - (by - ay) * (xs - ax) >= -1e-9
    return MaskBuf(np.where(inside, 0, 1).astype(np.uint8))


class Segmenter:
    """Produces a foreground mask plus a tight bounding box for one image."""

    def segment(self, img: ImageBuf) -> SegmentationResult:
        raise NotImplementedError


class ProvidedMaskSegmenter(Segmenter):
    """Wraps a mask supplied out of band (file sidecar, dataset ground truth)."""

    def __init__(self, mask: MaskBuf):
        if mask is None:
            raise ConfigError("ProvidedMaskSegmenter requires a mask")
        self._mask = mask

    def segment(self, img: ImageBuf) -> SegmentationResult:
        if (self._mask.width, self._mask.height) != (img.width, img.height):
            raise ShapeError("provided mask does not match image dimensions")
        if self._mask.foreground_count() == 0:
            raise NoForegroundError("provided mask marks no foreground")
        return SegmentationResult(self._mask, foreground_bbox(self._mask))


class BackgroundDiffSegmenter(Segmenter):
    """Marks pixels foreground where they differ from a known background image.

    A pixel is foreground when its per-channel max absolute difference
    exceeds `threshold`; one 3x3 majority vote pass then removes speckle.
    """

    def __init__(self, background: ImageBuf, threshold: int = DEFAULT_DIFF_THRESHOLD):
        if background is None:
            raise ConfigError("BackgroundDiffSegmenter requires a background image")
        self._background = background
        self._threshold = threshold

    def segment(self, img: ImageBuf) -> SegmentationResult:
        bg = self._background
        if (bg.width, bg.height) != (img.width, img.height):
            raise ShapeError("background does not match image dimensions")
        diff = np.abs(img.pixels.astype(np.int16) - bg.pixels.astype(np.int16)).max(axis=2)
        fg = diff > self._threshold
        fg = _majority3x3(fg)
        if not fg.any():
            raise NoForegroundError("no pixels differ from the background")
        mask = MaskBuf(np.where(fg, 0, 1).astype(np.uint8))
        return SegmentationResult(mask, foreground_bbox(mask))


def _majority3x3(fg: np.ndarray) -> np.ndarray:
    """One pass of 3x3 majority voting; outside the frame counts as background."""
    padded = np.pad(fg.astype(np.uint8), 1, mode="constant")
    counts = sum(
        padded[1 + dy:1 + dy + fg.shape[0], 1 + dx:1 + dx + fg.shape[1]]
        for dy in (-1, 0, 1)
        for dx in (-1, 0, 1)
    )
    return counts >= 5


def segmentation_from_mask(mask: MaskBuf) -> SegmentationResult:
    """Build a SegmentationResult from an existing mask (raises when empty)."""
    if mask.foreground_count() == 0:
        raise NoForegroundError("mask marks no foreground")
    return SegmentationResult(mask, foreground_bbox(mask))


def segment_foreground(img: ImageBuf, segmenter: Segmenter) -> SegmentationResult:
    """Run a segmenter; result bbox is the tight box of its foreground pixels."""
    if segmenter is None:
        raise ConfigError("no segmenter configured")
    return segmenter.segment(img)
