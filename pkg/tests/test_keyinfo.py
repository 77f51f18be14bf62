import numpy as np
import pytest

from semtx.errors import ShapeError
from semtx.imaging import BoundingRect, ImageBuf, MaskBuf, composite, resize_to
from semtx.keyinfo import CropRecord, extract, restore
from semtx.synth import field_texture


class TestExtract:
    def test_full_frame(self):
        img = field_texture(30, 20, seed=1)
        out = extract(img, BoundingRect(0, 0, 30, 20))
        assert (out.pixels == img.pixels).all()

    def test_single_pixel(self):
        img = field_texture(30, 20, seed=1)
        out = extract(img, BoundingRect(0, 0, 1, 1))
        assert out.pixels.shape == (1, 1, 3)
        assert (out.pixels[0, 0] == img.pixels[0, 0]).all()

    def test_extract_composite_inverse(self):
        img = field_texture(40, 30, seed=2)
        rect = BoundingRect(7, 5, 25, 21)
        assert (composite(img, extract(img, rect), rect).pixels == img.pixels).all()

    def test_invalid_rect(self):
        img = field_texture(10, 10, seed=1)
        with pytest.raises(ShapeError):
            extract(img, BoundingRect(5, 5, 12, 8))


class TestRestore:
    def test_scale_one_region_equals_crop(self):
        bg = field_texture(50, 40, seed=3)
        crop = field_texture(12, 10, seed=4)
        rect = BoundingRect(20, 15, 32, 25)
        record = CropRecord(rect, 50, 40, 1.0, background_id=0)
        out = restore(crop, record, bg)
        assert (out.pixels[15:25, 20:32] == crop.pixels).all()

    def test_half_scale_constant_round_trip(self):
        bg = field_texture(50, 40, seed=3)
        rect = BoundingRect(10, 10, 26, 22)  # 16x12
        constant = ImageBuf.from_array(np.full((6, 8, 3), 77))
        record = CropRecord(rect, 50, 40, 0.5, background_id=0)
        out = restore(constant, record, bg)
        assert (out.pixels[10:22, 10:26] == 77).all()

    def test_pixels_outside_rect_untouched(self):
        bg = field_texture(50, 40, seed=5)
        crop = field_texture(12, 10, seed=6)
        rect = BoundingRect(20, 15, 32, 25)
        out = restore(crop, CropRecord(rect, 50, 40, 1.0), bg)
        expected = bg.pixels.copy()
        expected[15:25, 20:32] = crop.pixels
        assert (out.pixels == expected).all()

    def test_background_resized_when_needed(self):
        bg = field_texture(25, 20, seed=7)
        crop = field_texture(10, 8, seed=8)
        rect = BoundingRect(5, 5, 15, 13)
        out = restore(crop, CropRecord(rect, 50, 40, 1.0), bg)
        assert (out.width, out.height) == (50, 40)
        resized = resize_to(bg, 50, 40)
        assert (out.pixels[13:40] == resized.pixels[13:40]).all()

    def test_mask_gated_composition(self):
        bg = field_texture(50, 40, seed=9)
        crop = ImageBuf.from_array(np.full((10, 12, 3), 200))
        rect = BoundingRect(20, 15, 32, 25)
        values = np.ones((10, 12), dtype=np.uint8)
        values[:, :6] = 0
        out = restore(crop, CropRecord(rect, 50, 40, 1.0), bg, MaskBuf(values))
        assert (out.pixels[15:25, 20:26] == 200).all()
        assert (out.pixels[15:25, 26:32] == bg.pixels[15:25, 26:32]).all()

    def test_dimension_disagreement_at_scale_one(self):
        bg = field_texture(50, 40, seed=9)
        crop = field_texture(9, 9, seed=1)
        rect = BoundingRect(20, 15, 32, 25)
        with pytest.raises(ShapeError):
            restore(crop, CropRecord(rect, 50, 40, 1.0), bg)

    def test_record_validation(self):
        with pytest.raises(ShapeError):
            CropRecord(BoundingRect(0, 0, 60, 10), 50, 40, 1.0)
        with pytest.raises(ShapeError):
            CropRecord(BoundingRect(0, 0, 10, 10), 50, 40, 1.5)

    def test_padded_rect_clamps_to_frame(self):
        rect = BoundingRect(0, 1, 10, 12)
        padded = rect.padded(2, 40, 30)
        assert (padded.x1, padded.y1, padded.x2, padded.y2) == (0, 0, 12, 14)
