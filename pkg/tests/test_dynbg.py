import numpy as np
import pytest

from semtx.dynbg import FrameSequence, split_scenes, stitch
from semtx.errors import ParameterError, ShapeError
from semtx.imaging import ImageBuf, MaskBuf
from semtx.synth import checkerboard, field_texture, occluder_video, two_scene_video


def constant_mask(width, height, value):
    return MaskBuf.from_array(np.full((height, width), value))


class TestStitch:
    def test_all_background_first_takes_first_frame(self):
        frames = tuple(field_texture(24, 16, seed=s) for s in (1, 2, 3))
        masks = tuple(constant_mask(24, 16, 1) for _ in range(3))
        st = stitch(FrameSequence(frames, masks), "first")
        assert (st.valid.values == 1).all()
        assert (st.always_background.values == 1).all()
        assert (st.image.pixels == frames[0].pixels).all()

    def test_all_background_mean_averages(self):
        a = ImageBuf.from_array(np.full((4, 4, 3), 10))
        b = ImageBuf.from_array(np.full((4, 4, 3), 20))
        masks = tuple(constant_mask(4, 4, 1) for _ in range(2))
        st = stitch(FrameSequence((a, b), masks), "mean")
        assert (st.image.pixels == 15).all()

    def test_single_frame_half_foreground(self):
        frame = field_texture(16, 10, seed=4)
        values = np.ones((10, 16), dtype=np.uint8)
        values[:, :8] = 0
        st = stitch(FrameSequence((frame,), (MaskBuf(values),)), "first")
        assert (st.valid.values == values).all()
        assert (st.image.pixels[:, :8] == 0).all()
        assert (st.image.pixels[:, 8:] == frame.pixels[:, 8:]).all()

    @pytest.mark.parametrize("aggregator", ["first", "mean"])
    def test_moving_occluder_recovers_checkerboard(self, aggregator):
        bg = checkerboard(64, 48, cell=8)
        seq, never_visible = occluder_video(bg)
        st = stitch(seq, aggregator)
        valid = st.valid.values.astype(bool)
        assert (valid == ~never_visible).all()
        assert (st.image.pixels[valid] == bg.pixels[valid]).all()
        assert (st.image.pixels[~valid] == 0).all()

    def test_masks_fold_oracle(self):
        # independent per-pixel fold over the mask stack
        seq, _ = occluder_video(checkerboard(32, 32, cell=8), n_frames=7)
        st = stitch(seq, "first")
        n = len(seq)
        for y in range(0, 32, 3):
            for x in range(0, 32, 3):
                bg_flags = [seq.masks[i].values[y, x] == 1 for i in range(n)]
                assert st.valid.values[y, x] == int(any(bg_flags))
                assert st.always_background.values[y, x] == int(all(bg_flags))

    def test_always_background_subset_of_valid(self):
        seq, _ = occluder_video(checkerboard(40, 40, cell=8), n_frames=9)
        st = stitch(seq, "mean")
        assert (st.always_background.values <= st.valid.values).all()

    def test_unknown_aggregator(self):
        seq, _ = occluder_video(checkerboard(32, 32, cell=8), n_frames=2)
        with pytest.raises(ParameterError):
            stitch(seq, "median")

    def test_empty_sequence_rejected(self):
        with pytest.raises(ShapeError):
            FrameSequence((), ())


class TestSplitScenes:
    def test_identical_frames_one_segment(self):
        frame = field_texture(64, 48, seed=5)
        frames = [frame] * 6
        masks = [constant_mask(64, 48, 1)] * 6
        segments = split_scenes(frames, masks, sim_threshold=5, t=24)
        assert [(s.start, s.end, s.reference_frame) for s in segments] == [(0, 6, 0)]

    def test_two_scene_video_recovers_cut(self):
        seq, cut = two_scene_video()
        segments = split_scenes(list(seq.frames), list(seq.masks), sim_threshold=10, t=24)
        assert [(s.start, s.end) for s in segments] == [(0, cut), (cut, len(seq))]
        assert segments[0].reference_frame == 0
        assert segments[1].reference_frame == cut

    def test_zero_threshold_single_segment(self):
        seq, _ = two_scene_video(frames_per_scene=3)
        segments = split_scenes(list(seq.frames), list(seq.masks), sim_threshold=0, t=24)
        assert [(s.start, s.end) for s in segments] == [(0, 6)]

    def test_segments_partition_frames(self):
        seq, _ = two_scene_video(frames_per_scene=5)
        for threshold in (0, 5, 15, 40, 10_000):
            segments = split_scenes(
                list(seq.frames), list(seq.masks), sim_threshold=threshold, t=24
            )
            covered = []
            for seg in segments:
                assert seg.start < seg.end
                assert seg.reference_frame == seg.start
                covered.extend(range(seg.start, seg.end))
            assert covered == list(range(len(seq)))

    def test_segment_count_monotone_in_threshold(self):
        seq, _ = two_scene_video(frames_per_scene=4)
        counts = [
            len(split_scenes(list(seq.frames), list(seq.masks), sim_threshold=th, t=24))
            for th in (0, 5, 10, 30, 80, 10_000)
        ]
        assert counts == sorted(counts)

    def test_mismatched_inputs(self):
        frame = field_texture(64, 48, seed=5)
        with pytest.raises(ShapeError):
            split_scenes([frame], [], sim_threshold=1, t=24)
        with pytest.raises(ShapeError):
            split_scenes([], [], sim_threshold=1, t=24)
