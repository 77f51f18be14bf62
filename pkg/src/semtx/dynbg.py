"""Dynamic background construction from video frames and their foreground masks.

Stitching aggregates background-labeled pixels across frames: a pixel is
recoverable when at least one frame saw it as background (`valid`), and it is
`always_background` when every frame did. Never-visible pixels stay black.
Scene splitting segments a video greedily by descriptor similarity against
each segment's first frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError
from .features import describe, detect_keypoints, match_descriptors
from .imaging import ImageBuf, MaskBuf, apply_mask


@dataclass(frozen=True)
class FrameSequence:
    frames: tuple[ImageBuf, ...]
    masks: tuple[MaskBuf, ...]

    def __post_init__(self):
        if not self.frames:
            raise ShapeError("frame sequence is empty")
        if len(self.frames) != len(self.masks):
            raise ShapeError("frame and mask counts differ")
        w, h = self.frames[0].width, self.frames[0].height
        for f, m in zip(self.frames, self.masks):
            if (f.width, f.height) != (w, h) or (m.width, m.height) != (w, h):
                raise ShapeError("all frames and masks must share dimensions")

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class StitchedBackground:
    image: ImageBuf
    valid: MaskBuf             # 1 = recovered from at least one frame
    always_background: MaskBuf  # 1 = background in every frame


@dataclass(frozen=True)
class SceneSegment:
    start: int  # inclusive
    end: int    # exclusive
    reference_frame: int


def stitch(seq: FrameSequence, aggregator: str = "mean") -> StitchedBackground:
    """Fill each pixel from the frames that saw it as background.

    aggregator "first" takes the earliest background observation; "mean"
    averages all of them, which denoises channel-degraded frames.
    """
    if aggregator not in ("first", "mean"):
        raise ParameterError(f"unknown aggregator {aggregator!r}")
    masks = np.stack([m.values for m in seq.masks])          # (n, h, w)
    frames = np.stack([f.pixels for f in seq.frames])        # (n, h, w, 3)
    is_bg = masks == 1
    valid = is_bg.any(axis=0)
    always = is_bg.all(axis=0)
    if aggregator == "first":
        first_idx = is_bg.argmax(axis=0)  # first True; 0 where none, masked below
        gathered = np.take_along_axis(frames, first_idx[None, :, :, None], axis=0)[0]
        image = np.where(valid[:, :, None], gathered, 0).astype(np.uint8)
    else:
        weights = is_bg[:, :, :, None].astype(np.float64)
        sums = (frames.astype(np.float64) * weights).sum(axis=0)
        counts = weights.sum(axis=0)
        mean = np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)
        image = np.where(
            valid[:, :, None], np.clip(np.rint(mean), 0, 255), 0
        ).astype(np.uint8)
    return StitchedBackground(
        ImageBuf(image),
        MaskBuf(valid.astype(np.uint8)),
        MaskBuf(always.astype(np.uint8)),
    )


def split_scenes(
    frames: list[ImageBuf],
    masks: list[MaskBuf],
    sim_threshold: int,
    t: int,
    fast_threshold: int = 20,
    max_keypoints: int = 500,
    masked: bool = True,
) -> list[SceneSegment]:
    """Greedy segmentation by descriptor match count against the segment reference.

    Frame i extends the current segment when at least `sim_threshold` of its
    descriptors match the reference frame's within `t` bits; otherwise it
    starts a new segment with itself as reference. With `masked`, foreground
    regions are zeroed out before feature extraction.
    """
    if not frames:
        raise ShapeError("no frames to split")
    if len(frames) != len(masks):
        raise ShapeError("frame and mask counts differ")
    n = len(frames)
    if sim_threshold <= 0:
        return [SceneSegment(0, n, 0)]

    def descriptors(i: int) -> list[bytes]:
        img = apply_mask(frames[i], masks[i], keep=1) if masked else frames[i]
        kps = detect_keypoints(img, fast_threshold, max_keypoints)
        return describe(img, kps)

    segments: list[SceneSegment] = []
    start = 0
    ref_desc = descriptors(0)
    for i in range(1, n):
        cur = descriptors(i)
        count = len(match_descriptors(cur, ref_desc, t))
        if count < sim_threshold:
            segments.append(SceneSegment(start, i, start))
            start = i
            ref_desc = cur
    segments.append(SceneSegment(start, n, start))
    return segments
