"""Key-information crops: extraction, bookkeeping, and exact restoration."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ShapeError
from .imaging import BoundingRect, ImageBuf, MaskBuf, composite, resize_to

CROP_PADDING = 2  # pixels added around the foreground box before extraction


@dataclass(frozen=True)
class CropRecord:
    """Everything the receiver needs to place a crop back into the frame."""

    rect: BoundingRect
    original_width: int
    original_height: int
    scale: float
    background_id: int | None = None

    def __post_init__(self):
        self.rect.validate_within(self.original_width, self.original_height)
        if not 0.0 < self.scale <= 1.0:
            raise ShapeError(f"scale {self.scale} outside (0, 1]")


def extract(img: ImageBuf, rect: BoundingRect) -> ImageBuf:
    """Copy the sub-image covered by `rect` without resampling."""
    rect.validate_within(img.width, img.height)
    return ImageBuf(img.pixels[rect.y1:rect.y2, rect.x1:rect.x2].copy())


def restore(
    received_crop: ImageBuf,
    record: CropRecord,
    background: ImageBuf,
    crop_mask: MaskBuf | None = None,
) -> ImageBuf:
    """Upscale a received crop to its recorded rectangle and composite it.

    The background is resized to the recorded original dimensions when it
    does not already match them; pixels outside the rectangle are then
    untouched background pixels.
    """
    rect = record.rect
    if (background.width, background.height) != (record.original_width, record.original_height):
        background = resize_to(background, record.original_width, record.original_height)
    crop = received_crop
    if (crop.width, crop.height) != (rect.width, rect.height):
        if record.scale >= 1.0:
            raise ShapeError("crop dimensions disagree with record at scale 1")
        crop = resize_to(crop, rect.width, rect.height)
    return composite(background, crop, rect, crop_mask)
