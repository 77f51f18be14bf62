"""Analog image transmission over AWGN: block-DCT coding at a fixed symbol budget.

This is a deterministic stand-in for a learned joint source-channel codec.
The encoder keeps the lowest zig-zag DCT coefficients of every 8x8 block up
to an exact global budget of ceil(mu * W * H * C) real symbols, normalizes
them to unit average power, and ships them as analog values. The receiver
applies the SNR-matched linear estimator 1/(1 + sigma^2), de-normalizes,
zero-fills the truncated coefficients, and inverts the transform.

Noise is drawn from numpy's PCG64 generator seeded explicitly, so a given
(image, config) pair transmits identically on every run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ParameterError, ShapeError
from .imaging import ImageBuf


@dataclass(frozen=True)
class ChannelConfig:
    snr_db: float
    mu: float = 1.0 / 3.0
    block: int = 8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.mu <= 1.0:
            raise ParameterError(f"mu must be in (0, 1], got {self.mu}")
        if self.block < 2:
            raise ParameterError("block size must be at least 2")
        if not math.isfinite(self.snr_db):
            raise ParameterError("snr_db must be finite")


@dataclass
class SymbolPayload:
    """Unit-power channel symbols plus the header needed to invert encoding."""

    symbols: np.ndarray  # float64, length ceil(mu * w * h * c)
    source_dims: tuple[int, int, int]  # (width, height, channels)
    gain: float  # sqrt of pre-normalization mean symbol power

    def __len__(self) -> int:
        return int(self.symbols.shape[0])


def symbol_budget(width: int, height: int, channels: int, mu: float) -> int:
    return math.ceil(mu * width * height * channels)


def _dct_matrix(n: int) -> np.ndarray:
    # orthonormal DCT-II basis: preserves energy exactly
    k = np.arange(n)[:, None].astype(np.float64)
    x = np.arange(n)[None, :].astype(np.float64)
    mat = np.cos(math.pi * (2.0 * x + 1.0) * k / (2.0 * n)) * math.sqrt(2.0 / n)
    mat[0, :] /= math.sqrt(2.0)
    return mat


def _zigzag_order(n: int) -> np.ndarray:
    """Flat indices of an n x n block in zig-zag (low to high frequency) order."""
    order = []
    for d in range(2 * n - 1):
        rng = range(d + 1)
        for i in (rng if d % 2 else reversed(rng)):
            r, c = i, d - i
            if r < n and c < n:
                order.append(r * n + c)
    return np.asarray(order, dtype=np.intp)


_BASIS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _basis(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _BASIS_CACHE:
        _BASIS_CACHE[n] = (_dct_matrix(n), _zigzag_order(n))
    return _BASIS_CACHE[n]


def _blockify(plane: np.ndarray, n: int) -> tuple[np.ndarray, int, int]:
    """(H, W) -> (blocks, n, n), padding by edge replication, raster block order."""
    h, w = plane.shape
    ph = (n - h % n) % n
    pw = (n - w % n) % n
    if ph or pw:
        plane = np.pad(plane, ((0, ph), (0, pw)), mode="edge")
    hh, ww = plane.shape
    return (
        plane.reshape(hh // n, n, ww // n, n).transpose(0, 2, 1, 3).reshape(-1, n, n),
        hh,
        ww,
    )


def _unblockify(blocks: np.ndarray, hh: int, ww: int, n: int) -> np.ndarray:
    return (
        blocks.reshape(hh // n, ww // n, n, n).transpose(0, 2, 1, 3).reshape(hh, ww)
    )


def _per_block_counts(total_blocks: int, block_area: int, budget: int) -> np.ndarray:
    """Symbols kept per block under the exact global budget.

    The budget is spread evenly: every block keeps the lowest zig-zag
    coefficients, with the first `budget % total_blocks` blocks keeping one
    extra. Spreading (rather than truncating whole trailing blocks) keeps
    the DC term everywhere the budget allows.
    """
    base, rem = divmod(budget, total_blocks)
    base = min(base, block_area)
    counts = np.full(total_blocks, base, dtype=np.int64)
    if base < block_area:
        counts[:rem] += 1
    return counts


def encode(img: ImageBuf, cfg: ChannelConfig) -> SymbolPayload:
    """Transform, truncate to the global symbol budget, and power-normalize."""
    n = cfg.block
    if img.width < n or img.height < n:
        raise ShapeError(f"image {img.width}x{img.height} smaller than {n}x{n} block")
    dct, zz = _basis(n)
    budget = symbol_budget(img.width, img.height, 3, cfg.mu)
    coeff_rows = []
    for c in range(3):
        plane = img.pixels[:, :, c].astype(np.float64) - 128.0
        blocks, _, _ = _blockify(plane, n)
        coeffs = dct @ blocks @ dct.T
        coeff_rows.append(coeffs.reshape(-1, n * n)[:, zz])
    zig = np.concatenate(coeff_rows, axis=0)  # (total_blocks, n*n), channel-major
    counts = _per_block_counts(zig.shape[0], n * n, budget)
    width = int(counts.max())
    mask = np.arange(width)[None, :] < counts[:, None]
    symbols = zig[:, :width][mask]
    power = float(np.mean(symbols * symbols)) if symbols.size else 0.0
    gain = math.sqrt(power)
    if gain > 0.0:
        symbols = symbols / gain
    return SymbolPayload(symbols, (img.width, img.height, 3), gain)


def awgn(payload: SymbolPayload, snr_db: float, seed: int) -> SymbolPayload:
    """Add zero-mean Gaussian noise at variance 10^(-snr_db/10) per symbol."""
    sigma = math.sqrt(10.0 ** (-snr_db / 10.0))
    rng = np.random.default_rng(seed)
    noisy = payload.symbols + sigma * rng.standard_normal(len(payload))
    return SymbolPayload(noisy, payload.source_dims, payload.gain)


def decode(payload: SymbolPayload, cfg: ChannelConfig) -> ImageBuf:
    """Linear-estimate received symbols and invert the block transform."""
    n = cfg.block
    w, h, ch = payload.source_dims
    if ch != 3:
        raise FormatError(f"payload declares {ch} channels, expected 3")
    budget = symbol_budget(w, h, ch, cfg.mu)
    if len(payload) != budget:
        raise FormatError(f"payload holds {len(payload)} symbols, budget is {budget}")
    dct, zz = _basis(n)
    sigma2 = 10.0 ** (-cfg.snr_db / 10.0)
    est = payload.symbols * (payload.gain / (1.0 + sigma2))

    ph = (n - h % n) % n
    pw = (n - w % n) % n
    hh, ww = h + ph, w + pw
    blocks_per_plane = (hh // n) * (ww // n)
    total_blocks = blocks_per_plane * 3
    counts = _per_block_counts(total_blocks, n * n, budget)
    width = int(counts.max())
    mask = np.arange(width)[None, :] < counts[:, None]
    zig = np.zeros((total_blocks, n * n), dtype=np.float64)
    head = np.zeros((total_blocks, width), dtype=np.float64)
    head[mask] = est
    zig[:, :width] = head

    coeffs = np.zeros_like(zig)
    coeffs[:, zz] = zig
    coeffs = coeffs.reshape(total_blocks, n, n)
    out = np.empty((h, w, 3), dtype=np.uint8)
    for c in range(3):
        plane_blocks = coeffs[c * blocks_per_plane:(c + 1) * blocks_per_plane]
        pixels = dct.T @ plane_blocks @ dct
        plane = _unblockify(pixels, hh, ww, n)[:h, :w] + 128.0
        out[:, :, c] = np.clip(np.rint(plane), 0, 255).astype(np.uint8)
    return ImageBuf(out)


def transmit(img: ImageBuf, cfg: ChannelConfig) -> tuple[ImageBuf, int]:
    """encode -> AWGN -> decode; returns the reconstruction and symbols sent."""
    payload = encode(img, cfg)
    received = awgn(payload, cfg.snr_db, cfg.seed)
    return decode(received, cfg), len(payload)
