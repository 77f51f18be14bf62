import math

import numpy as np
import pytest

from semtx import bglib
from semtx.channel import ChannelConfig, symbol_budget
from semtx.errors import FormatError
from semtx.pipeline import (
    PipelineKnobs,
    WireFrame,
    build_wire_frame,
    eval_sweep,
    frame_decode,
    frame_encode,
    transmit_image,
    transmit_video,
    write_csv,
    _transmit_direct,
)
from semtx.segmentation import LandmarkSet, ProvidedMaskSegmenter
from semtx.synth import field_texture, paste_sprite, sprite, two_scene_video

KNOBS = PipelineKnobs()


def make_scene(library_images, index=2, size=(52, 40), at=(60, 50)):
    bg = library_images[index]
    scene, mask, rect = paste_sprite(bg, sprite(*size, seed=33), *at)
    return scene, mask, rect


class TestTransmitImage:
    def test_empty_library_goes_direct(self, library_images):
        scene, mask, _ = make_scene(library_images)
        cfg = ChannelConfig(snr_db=10.0, seed=1)
        report = transmit_image(scene, bglib.BackgroundLibrary([]), cfg, KNOBS,
                                segmenter=ProvidedMaskSegmenter(mask))
        assert report.mode == "direct"
        assert report.background_id is None

    def test_match_produces_keyinfo_with_exact_background(self):
        # foreground ~4% of the frame so edge-truncation loss dilutes away
        backgrounds = [field_texture(288, 216, seed=500 + k) for k in range(2)]
        library = bglib.BackgroundLibrary(
            [bglib.build_entry(k, img) for k, img in enumerate(backgrounds)]
        )
        scene, mask, sprite_rect = paste_sprite(backgrounds[1], sprite(52, 40, seed=33), 60, 50)
        cfg = ChannelConfig(snr_db=300.0, seed=1)
        report = transmit_image(scene, library, cfg, KNOBS,
                                segmenter=ProvidedMaskSegmenter(mask))
        assert report.mode == "keyinfo"
        assert report.background_id == 1
        rect = report.rect
        # pixels outside the transmitted rect equal the library background bit for bit
        expected = backgrounds[1].pixels
        out = report.reconstructed.pixels
        assert (out[: rect.y1] == expected[: rect.y1]).all()
        assert (out[rect.y2:] == expected[rect.y2:]).all()
        assert (out[:, : rect.x1] == expected[:, : rect.x1]).all()
        assert (out[:, rect.x2:] == expected[:, rect.x2:]).all()
        assert report.psnr_vs_original >= 45.0
        # rect is the padded foreground box
        assert (rect.x1, rect.y1) == (sprite_rect.x1 - 2, sprite_rect.y1 - 2)
        assert (rect.x2, rect.y2) == (sprite_rect.x2 + 2, sprite_rect.y2 + 2)

    def test_compression_factor_exceeds_twenty(self, library, library_images):
        scene, mask, _ = make_scene(library_images)
        cfg = ChannelConfig(snr_db=10.0, seed=2)
        report = transmit_image(scene, library, cfg, KNOBS,
                                segmenter=ProvidedMaskSegmenter(mask))
        assert report.mode == "keyinfo"
        assert report.compression_factor >= 20.0
        assert report.symbols_sent == symbol_budget(
            report.rect.width, report.rect.height, 3, cfg.mu
        )

    def test_landmark_hull_drives_matching_and_extraction(self, library, library_images):
        scene, mask, sprite_rect = make_scene(library_images, index=4)
        landmarks = LandmarkSet((
            (sprite_rect.x1, sprite_rect.y1),
            (sprite_rect.x2 - 1, sprite_rect.y1),
            (sprite_rect.x2 - 1, sprite_rect.y2 - 1),
            (sprite_rect.x1, sprite_rect.y2 - 1),
        ))
        cfg = ChannelConfig(snr_db=300.0, seed=3)
        report = transmit_image(scene, library, cfg, KNOBS, landmarks=landmarks)
        assert report.mode == "keyinfo"
        assert report.background_id == 4

    def test_no_foreground_falls_back_to_direct(self, library, library_images):
        img = library_images[1]
        cfg = ChannelConfig(snr_db=10.0, seed=4)
        report = transmit_image(img, library, cfg, KNOBS, segmenter=None)
        assert report.mode == "direct"
        assert report.compression_factor >= 1.0 / cfg.mu - 1e-9

    def test_direct_mode_dichotomy(self, library, library_images):
        scene, mask, _ = make_scene(library_images)
        for snr in (1.0, 19.0):
            cfg = ChannelConfig(snr_db=snr, seed=5)
            report = transmit_image(scene, library, cfg, KNOBS,
                                    segmenter=ProvidedMaskSegmenter(mask))
            assert report.mode in ("direct", "keyinfo")
            if report.mode == "keyinfo":
                assert any(e.id == report.background_id for e in library.entries)

    def test_mask_composite_gates_pixels(self, library, library_images):
        scene, mask, _ = make_scene(library_images)
        cfg = ChannelConfig(snr_db=300.0, seed=6)
        knobs = PipelineKnobs(mask_composite=True)
        report = transmit_image(scene, library, cfg, knobs,
                                segmenter=ProvidedMaskSegmenter(mask))
        assert report.mode == "keyinfo"
        rect = report.rect
        bg = library_images[2].pixels
        out = report.reconstructed.pixels
        ring = mask.values[rect.y1:rect.y2, rect.x1:rect.x2] == 1
        assert (out[rect.y1:rect.y2, rect.x1:rect.x2][ring]
                == bg[rect.y1:rect.y2, rect.x1:rect.x2][ring]).all()

    def test_tiny_foreground_still_keyinfo(self, library, library_images):
        # a 3x3 subject produces a crop below the transform block; the rect
        # grows to the codec minimum instead of failing
        bg = library_images[5]
        scene, mask, _ = paste_sprite(bg, sprite(3, 3, seed=41), 100, 70)
        cfg = ChannelConfig(snr_db=300.0, seed=8)
        report = transmit_image(scene, library, cfg, KNOBS,
                                segmenter=ProvidedMaskSegmenter(mask))
        assert report.mode == "keyinfo"
        assert report.rect.width >= 8 and report.rect.height >= 8
        assert report.compression_factor > 100.0

    def test_resolution_gate_applies(self, library, library_images):
        scene, mask, _ = make_scene(library_images)
        knobs = PipelineKnobs(max_pixels=400)
        cfg = ChannelConfig(snr_db=20.0, seed=7)
        report = transmit_image(scene, library, cfg, knobs,
                                segmenter=ProvidedMaskSegmenter(mask))
        assert report.scale < 1.0
        assert (report.reconstructed.width, report.reconstructed.height) == (
            scene.width, scene.height
        )


class TestTransmitVideo:
    def test_static_background_video_goes_keyinfo_after_warmup(self):
        video, cut = two_scene_video(width=128, height=96, frames_per_scene=8)
        cfg = ChannelConfig(snr_db=300.0, seed=5)
        knobs = PipelineKnobs(t=24)
        reports, libraries = transmit_video(video, cfg, knobs, sim_threshold=10)
        assert len(libraries) == 2
        n_warm = math.ceil(0.25 * 8)
        for seg_start in (0, 8):
            for k in range(seg_start, seg_start + n_warm):
                assert reports[k].mode == "direct"
            for k in range(seg_start + n_warm, seg_start + 8):
                assert reports[k].mode == "keyinfo", k
                assert reports[k].background_id == seg_start // 8

    def test_two_scene_video_builds_two_libraries(self):
        video, cut = two_scene_video(width=128, height=96, frames_per_scene=6)
        cfg = ChannelConfig(snr_db=10.0, seed=9)
        reports, libraries = transmit_video(video, cfg, PipelineKnobs(t=24),
                                            sim_threshold=10)
        assert len(libraries) == 2
        assert all(len(lib.entries) == 1 for lib in libraries)
        assert len(reports) == len(video)

    def test_full_warmup_means_all_direct(self):
        video, _ = two_scene_video(width=128, height=96, frames_per_scene=4)
        cfg = ChannelConfig(snr_db=10.0, seed=2)
        reports, _ = transmit_video(video, cfg, PipelineKnobs(t=24),
                                    sim_threshold=10, warmup_fraction=1.0)
        assert all(r.mode == "direct" for r in reports)

    def test_video_determinism(self):
        video, _ = two_scene_video(width=96, height=80, frames_per_scene=3)
        cfg = ChannelConfig(snr_db=8.0, seed=3)
        a, _ = transmit_video(video, cfg, PipelineKnobs(t=24), sim_threshold=10)
        b, _ = transmit_video(video, cfg, PipelineKnobs(t=24), sim_threshold=10)
        for ra, rb in zip(a, b):
            assert ra.mode == rb.mode
            assert (ra.reconstructed.pixels == rb.reconstructed.pixels).all()


class TestEvalSweep:
    def test_row_count_contract(self, library, eval_scenes):
        rows = eval_sweep(eval_scenes[:1], library, [10.0], [1], knobs=KNOBS)
        assert len(rows) == 2 + 2  # one grid point x two methods + two averages
        data = [r for r in rows if r.seed != "avg"]
        avg = [r for r in rows if r.seed == "avg"]
        assert {r.method for r in data} == {"proposed", "direct"}
        assert {r.method for r in avg} == {"proposed", "direct"}

    def test_budget_fairness_and_method_gain(self, library, eval_scenes):
        rows = eval_sweep(eval_scenes, library, [4.0, 13.0], [1, 2], knobs=KNOBS)
        data = [r for r in rows if r.seed != "avg"]
        by_key = {}
        for r in data:
            by_key.setdefault((r.scene, r.snr_db, r.seed), {})[r.method] = r
        for pair in by_key.values():
            assert pair["direct"].symbols >= pair["proposed"].symbols
            assert pair["proposed"].psnr_db > pair["direct"].psnr_db

    def test_jobs_pool_matches_serial(self, library, eval_scenes):
        serial = eval_sweep(eval_scenes[:2], library, [7.0], [1], knobs=KNOBS)
        parallel = eval_sweep(eval_scenes[:2], library, [7.0], [1], knobs=KNOBS, jobs=2)
        assert serial == parallel

    def test_csv_serialization(self, tmp_path, library, eval_scenes):
        rows = eval_sweep(eval_scenes[:1], library, [300.0], [1], knobs=KNOBS)
        path = tmp_path / "out.csv"
        write_csv(rows, path)
        text = path.read_text(encoding="utf-8")
        lines = text.strip().splitlines()
        assert lines[0] == "scene,snr_db,seed,method,psnr_db,symbols,compression_factor"
        assert len(lines) == 1 + len(rows)
        # infinite PSNR serializes as inf
        if any(math.isinf(r.psnr_db) for r in rows):
            assert ",inf," in text


class TestWireFormat:
    def make_frame(self):
        return WireFrame(
            mode=1,
            background_id=3,
            rect=(4, 5, 52, 47),
            original_dims=(192, 144),
            scale=1.0,
            gain=812.75,
            snr_db=10.0,
            symbols=np.linspace(-2, 2, 300, dtype=np.float32),
        )

    def test_round_trip(self):
        frame = self.make_frame()
        assert frame_decode(frame_encode(frame)) == frame

    def test_crc_rejects_any_single_byte_corruption(self):
        blob = frame_encode(self.make_frame())
        for i in range(len(blob)):
            corrupted = bytearray(blob)
            corrupted[i] ^= 0x40
            with pytest.raises(FormatError):
                frame_decode(bytes(corrupted))

    def test_truncated_header(self):
        blob = frame_encode(self.make_frame())
        with pytest.raises(FormatError):
            frame_decode(blob[:10])

    def test_bad_magic(self):
        import struct
        import zlib

        blob = bytearray(frame_encode(self.make_frame()))
        blob[:4] = b"XXXX"
        blob[-4:] = struct.pack("<I", zlib.crc32(bytes(blob[:-4])))
        with pytest.raises(FormatError, match="magic"):
            frame_decode(bytes(blob))

    def test_bad_version(self):
        import struct
        import zlib

        blob = bytearray(frame_encode(self.make_frame()))
        blob[4] = 9
        blob[-4:] = struct.pack("<I", zlib.crc32(bytes(blob[:-4])))
        with pytest.raises(FormatError, match="version"):
            frame_decode(bytes(blob))

    def test_budget_validation(self, library, library_images):
        scene, mask, _ = make_scene(library_images)
        cfg = ChannelConfig(snr_db=10.0, seed=1)
        report = transmit_image(scene, library, cfg, KNOBS,
                                segmenter=ProvidedMaskSegmenter(mask))
        frame = build_wire_frame(report, cfg, scene)
        blob = frame_encode(frame)
        decoded = frame_decode(blob, mu=cfg.mu)
        assert decoded.symbols.shape[0] == report.symbols_sent
        with pytest.raises(FormatError, match="budget"):
            frame_decode(blob, mu=0.9)

    def test_direct_report_wire(self, library_images):
        img = library_images[0]
        cfg = ChannelConfig(snr_db=5.0, seed=2)
        report = _transmit_direct(img, cfg, KNOBS)
        frame = build_wire_frame(report, cfg, img)
        decoded = frame_decode(frame_encode(frame), mu=cfg.mu)
        assert decoded.mode == 0
        assert decoded.rect == (0, 0, img.width, img.height)
        assert decoded.original_dims == (img.width, img.height)
