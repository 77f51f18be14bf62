import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semtx.channel import (
    ChannelConfig,
    SymbolPayload,
    awgn,
    decode,
    encode,
    symbol_budget,
    transmit,
    _dct_matrix,
    _zigzag_order,
)
from semtx.errors import FormatError, ParameterError, ShapeError
from semtx.imaging import ImageBuf, psnr
from semtx.synth import corpus_images, field_texture


def gray(value, width=16, height=16):
    return ImageBuf.from_array(np.full((height, width, 3), value))


class TestConfig:
    def test_mu_range(self):
        with pytest.raises(ParameterError):
            ChannelConfig(snr_db=10, mu=0.0)
        with pytest.raises(ParameterError):
            ChannelConfig(snr_db=10, mu=1.2)

    def test_snr_finite(self):
        with pytest.raises(ParameterError):
            ChannelConfig(snr_db=math.inf)


class TestTransform:
    def test_dct_is_orthonormal(self):
        m = _dct_matrix(8)
        assert np.allclose(m @ m.T, np.eye(8), atol=1e-12)

    def test_zigzag_is_permutation(self):
        for n in (2, 4, 8):
            order = _zigzag_order(n)
            assert sorted(order.tolist()) == list(range(n * n))
            # low frequencies first: DC leads, then the two nearest entries
            assert order[0] == 0
            assert set(order[1:3].tolist()) == {1, n}

    def test_energy_conservation_at_mu_one(self):
        img = field_texture(24, 16, seed=1)
        payload = encode(img, ChannelConfig(snr_db=0, mu=1.0))
        centered = img.pixels.astype(np.float64) - 128.0
        pixel_energy = float((centered ** 2).sum())
        coeff_energy = float(((payload.symbols * payload.gain) ** 2).sum())
        assert coeff_energy == pytest.approx(pixel_energy, rel=1e-6)


class TestEncode:
    def test_single_block_budget(self):
        img = field_texture(8, 8, seed=2)
        payload = encode(img, ChannelConfig(snr_db=0, mu=1.0))
        assert len(payload) == 192  # 64 symbols per channel

    def test_exact_budget_at_one_third(self):
        img = field_texture(32, 32, seed=3)
        payload = encode(img, ChannelConfig(snr_db=0, mu=1 / 3))
        assert len(payload) == 1024

    @given(
        w=st.integers(8, 40),
        h=st.integers(8, 40),
        mu=st.floats(0.05, 1.0),
    )
    @settings(max_examples=80, deadline=None)
    def test_budget_exactness_property(self, w, h, mu):
        img = gray(60, width=w, height=h)
        payload = encode(img, ChannelConfig(snr_db=0, mu=mu))
        assert len(payload) == symbol_budget(w, h, 3, mu) == math.ceil(mu * w * h * 3)

    def test_unit_power_normalization(self):
        for seed in (1, 5, 9):
            img = field_texture(40, 24, seed=seed)
            payload = encode(img, ChannelConfig(snr_db=0, mu=1 / 3))
            assert float(np.mean(payload.symbols ** 2)) == pytest.approx(1.0, abs=1e-6)

    def test_constant_image_concentrates_in_dc(self):
        payload = encode(gray(37), ChannelConfig(snr_db=0, mu=1.0))
        per_block = (payload.symbols * payload.gain).reshape(-1, 64)
        dc = np.abs(per_block[:, 0])
        rest = np.abs(per_block[:, 1:])
        assert (dc > 1.0).all()
        assert (rest < 1e-9).all()

    def test_mid_gray_has_zero_gain(self):
        payload = encode(gray(128), ChannelConfig(snr_db=0, mu=1.0))
        assert payload.gain == 0.0
        assert (payload.symbols == 0.0).all()

    def test_too_small_image(self):
        with pytest.raises(ShapeError):
            encode(gray(0, width=4, height=4), ChannelConfig(snr_db=0))


class TestAwgn:
    def test_same_seed_same_noise(self):
        payload = encode(field_texture(16, 16, seed=1), ChannelConfig(snr_db=5))
        a = awgn(payload, 5.0, seed=42)
        b = awgn(payload, 5.0, seed=42)
        assert (a.symbols == b.symbols).all()

    def test_high_snr_is_identity(self):
        payload = encode(field_texture(16, 16, seed=1), ChannelConfig(snr_db=300))
        noisy = awgn(payload, 300.0, seed=0)
        assert np.abs(noisy.symbols - payload.symbols).max() < 1e-12

    def test_empirical_variance(self):
        # oracle: sample variance of a large noise draw at 10 dB
        payload = SymbolPayload(np.zeros(10 ** 6), (0, 0, 3), 1.0)
        noisy = awgn(payload, 10.0, seed=7)
        assert float(np.var(noisy.symbols)) == pytest.approx(0.1, rel=0.01)


class TestDecode:
    def test_lossless_at_mu_one_high_snr(self):
        img = field_texture(40, 32, seed=4)
        out, n = transmit(img, ChannelConfig(snr_db=300, mu=1.0, seed=1))
        assert psnr(img, out) >= 50.0
        assert np.abs(out.pixels.astype(int) - img.pixels.astype(int)).max() <= 1

    def test_truncation_high_snr_beats_low_snr(self):
        img = corpus_images()["rects"]
        hi, _ = transmit(img, ChannelConfig(snr_db=300, mu=1 / 3, seed=1))
        lo, _ = transmit(img, ChannelConfig(snr_db=0, mu=1 / 3, seed=1))
        assert math.isfinite(psnr(img, hi))
        assert psnr(img, hi) > psnr(img, lo)

    def test_budget_mismatch_rejected(self):
        img = field_texture(16, 16, seed=1)
        cfg = ChannelConfig(snr_db=10, mu=1 / 3, seed=0)
        payload = encode(img, cfg)
        bad = SymbolPayload(payload.symbols[:-1], payload.source_dims, payload.gain)
        with pytest.raises(FormatError):
            decode(bad, cfg)

    def test_non_multiple_of_block_dims(self):
        # padding inflates the transform while the budget follows source dims,
        # so the stream tail is truncated; contract is dims + budget + quality
        img = field_texture(37, 29, seed=6)
        out, n = transmit(img, ChannelConfig(snr_db=300, mu=1.0, seed=2))
        assert (out.width, out.height) == (37, 29)
        assert n == math.ceil(37 * 29 * 3)
        assert psnr(img, out) > 20.0

    def test_black_image_noise_propagation_bound(self):
        # derived bound: tail blocks whose DC fell past the budget reconstruct
        # mid-gray, the rest suffer DC attenuation bias plus Gaussian noise
        # scaled by gain/(1 + sigma^2); 1.5x sd and rounding give headroom
        img = gray(0, width=64, height=64)
        w = h = 64
        budget = symbol_budget(w, h, 3, 1 / 3)
        k = math.ceil(64 / 3)
        total_blocks = (w // 8) * (h // 8) * 3
        base, rem = divmod(budget, total_blocks)
        zero_blocks = total_blocks - rem if base == 0 else 0
        truncation = 128.0 * (zero_blocks * 64) / (w * h * 3)
        for snr_db in (0.0, 6.0, 10.0, 20.0, 40.0):
            cfg = ChannelConfig(snr_db=snr_db, mu=1 / 3, seed=3)
            payload = encode(img, cfg)
            sigma2 = 10.0 ** (-snr_db / 10.0)
            bias = 128.0 * sigma2 / (1.0 + sigma2)
            sd = payload.gain * math.sqrt(sigma2 * k) / ((1.0 + sigma2) * 8.0)
            out, _ = transmit(img, cfg)
            mae = float(np.mean(np.abs(out.pixels.astype(np.float64))))
            assert mae <= truncation + bias + 1.5 * sd + 0.5, (snr_db, mae)


class TestTransmit:
    def test_deterministic(self):
        img = field_texture(24, 24, seed=8)
        cfg = ChannelConfig(snr_db=7.0, mu=1 / 3, seed=11)
        a, na = transmit(img, cfg)
        b, nb = transmit(img, cfg)
        assert na == nb
        assert (a.pixels == b.pixels).all()

    def test_symbol_count_reported(self):
        img = field_texture(32, 32, seed=8)
        _, n = transmit(img, ChannelConfig(snr_db=10, mu=1 / 3, seed=0))
        assert n == 1024

    def test_non_default_block_size(self):
        img = field_texture(24, 24, seed=9)
        for block in (2, 4, 16):
            cfg = ChannelConfig(snr_db=300.0, mu=1.0, block=block, seed=1)
            out, n = transmit(img, cfg)
            assert n == 24 * 24 * 3
            assert np.abs(out.pixels.astype(int) - img.pixels.astype(int)).max() <= 1

    def test_seed_averaged_monotonicity(self):
        img = corpus_images(48, 48)["mixed"]
        means = []
        for snr in (1.0, 10.0, 19.0):
            vals = [
                psnr(img, transmit(img, ChannelConfig(snr_db=snr, mu=1 / 3, seed=s))[0])
                for s in range(10)
            ]
            means.append(sum(vals) / len(vals))
        assert means[0] <= means[1] <= means[2]
