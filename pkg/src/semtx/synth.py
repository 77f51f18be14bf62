"""Deterministic synthetic scenes for experiments and regression tests.

Everything here is seeded: the same arguments always produce the same
pixels, which keeps feature-matching and channel experiments reproducible.
"""

from __future__ import annotations

import numpy as np

from .dynbg import FrameSequence
from .imaging import BoundingRect, ImageBuf, MaskBuf, _resize_bilinear


def rect_texture(
    width: int, height: int, seed: int, n_rects: int = 60, speckle: int = 24
) -> ImageBuf:
    """Feature-rich background: random filled rectangles plus per-pixel speckle.

    The speckle makes every patch unique to its seed, so descriptors from
    different textures stay far apart in Hamming distance.
    """
    rng = np.random.default_rng(seed)
    px = np.empty((height, width, 3), dtype=np.int16)
    px[:, :] = rng.integers(60, 196, size=3)
    for _ in range(n_rects):
        w = int(rng.integers(6, max(7, width // 4)))
        h = int(rng.integers(6, max(7, height // 4)))
        x = int(rng.integers(0, max(1, width - w)))
        y = int(rng.integers(0, max(1, height - h)))
        px[y:y + h, x:x + w] = rng.integers(0, 256, size=3)
    if speckle > 0:
        px += rng.integers(-speckle, speckle + 1, size=px.shape)
    return ImageBuf(np.clip(px, 0, 255).astype(np.uint8))


def field_texture(width: int, height: int, seed: int, cells=(4, 9)) -> ImageBuf:
    """Smooth random field: seeded noise upscaled from coarse grids.

    Unlike repeated geometric primitives, two seeds share no structure at
    all, which keeps binary descriptors from different backgrounds far
    apart. The features also sit in low frequencies, so they survive the
    channel's coefficient truncation.
    """
    rng = np.random.default_rng(seed)
    acc = np.zeros((height, width, 3), dtype=np.float64)
    for cell in cells:
        small = rng.integers(
            0, 256, size=(max(2, height // cell), max(2, width // cell), 3)
        ).astype(np.uint8)
        acc += _resize_bilinear(small, width, height).astype(np.float64)
    return ImageBuf.from_array(acc / len(cells))


def checkerboard(
    width: int,
    height: int,
    cell: int = 8,
    dark=(40, 44, 60),
    light=(210, 205, 190),
) -> ImageBuf:
    ys, xs = np.mgrid[0:height, 0:width]
    pattern = ((ys // cell) + (xs // cell)) % 2
    out = np.empty((height, width, 3), dtype=np.uint8)
    out[pattern == 0] = np.asarray(dark, dtype=np.uint8)
    out[pattern == 1] = np.asarray(light, dtype=np.uint8)
    return ImageBuf(out)


def gradient(width: int, height: int) -> ImageBuf:
    xs = np.linspace(0, 255, width)
    ys = np.linspace(0, 255, height)
    r = np.tile(xs, (height, 1))
    g = np.tile(ys[:, None], (1, width))
    b = (r + g) / 2.0
    return ImageBuf.from_array(np.stack([r, g, b], axis=2))


def sprite(width: int, height: int, seed: int) -> ImageBuf:
    """Small textured foreground object, visually distinct from backgrounds.

    Built from a coarse random field pulled toward a strong seed color, so
    its energy stays in low frequencies the channel codec can carry.
    """
    rng = np.random.default_rng(seed)
    base = rng.integers(0, 256, size=3).astype(np.float64)
    cell = max(2, min(width, height) // 3)
    small = rng.integers(0, 256, size=(max(2, height // cell), max(2, width // cell), 3))
    detail = _resize_bilinear(small.astype(np.uint8), width, height).astype(np.float64)
    return ImageBuf.from_array(0.55 * base[None, None, :] + 0.45 * detail)


def paste_sprite(
    background: ImageBuf, fg: ImageBuf, x: int, y: int
) -> tuple[ImageBuf, MaskBuf, BoundingRect]:
    """Scene = background with `fg` pasted at (x, y); mask marks it foreground."""
    rect = BoundingRect(x, y, x + fg.width, y + fg.height)
    rect.validate_within(background.width, background.height)
    px = background.pixels.copy()
    px[rect.y1:rect.y2, rect.x1:rect.x2] = fg.pixels
    mask = np.ones((background.height, background.width), dtype=np.uint8)
    mask[rect.y1:rect.y2, rect.x1:rect.x2] = 0
    return ImageBuf(px), MaskBuf(mask), rect


def occluder_video(
    background: ImageBuf,
    occluder_color=(250, 30, 30),
    occluder_size: int = 16,
    n_frames: int = 20,
) -> tuple[FrameSequence, np.ndarray]:
    """Static background behind a wandering square that always hides one corner.

    The occluder cycles through four anchor positions around the top-left
    corner, so the fixed `occluder_size/2` square at (0, 0) is foreground in
    every frame while every other pixel is background in at least one frame.
    Returns the sequence and a bool array marking the never-visible region.
    """
    s = occluder_size
    half = s // 2
    anchors = [(0, 0), (0, -half), (-half, 0), (-half, -half)]
    frames = []
    masks = []
    color = np.asarray(occluder_color, dtype=np.uint8)
    for k in range(n_frames):
        ty, tx = anchors[k % len(anchors)]
        px = background.pixels.copy()
        mask = np.ones((background.height, background.width), dtype=np.uint8)
        y1, y2 = max(0, ty), min(background.height, ty + s)
        x1, x2 = max(0, tx), min(background.width, tx + s)
        px[y1:y2, x1:x2] = color
        mask[y1:y2, x1:x2] = 0
        frames.append(ImageBuf(px))
        masks.append(MaskBuf(mask))
    never_visible = np.zeros((background.height, background.width), dtype=bool)
    never_visible[:half, :half] = True
    return FrameSequence(tuple(frames), tuple(masks)), never_visible


def two_scene_video(
    width: int = 96,
    height: int = 80,
    frames_per_scene: int = 6,
    seed_a: int = 11,
    seed_b: int = 77,
) -> tuple[FrameSequence, int]:
    """Two unrelated backgrounds back to back; returns the ground-truth cut index."""
    fg = sprite(14, 14, seed=5)
    frames = []
    masks = []
    for seed in (seed_a, seed_b):
        bg = field_texture(width, height, seed=seed)
        for k in range(frames_per_scene):
            x = 18 + (7 * k) % max(1, width - fg.width - 20)
            y = 16 + 5 * (k % 3)
            scene, mask, _ = paste_sprite(bg, fg, x, y)
            frames.append(scene)
            masks.append(mask)
    return FrameSequence(tuple(frames), tuple(masks)), frames_per_scene


def corpus_images(width: int = 64, height: int = 64) -> dict[str, ImageBuf]:
    """Small fixed set of test images with varied spectral content."""
    return {
        "rects": rect_texture(width, height, seed=3),
        "checker": checkerboard(width, height, cell=8),
        "gradient": gradient(width, height),
        "mixed": rect_texture(width, height, seed=9, n_rects=20),
    }
