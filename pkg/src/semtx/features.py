"""Oriented FAST keypoint detection and rotated BRIEF binary description.

The detector is a FAST-9 segment test on the grayscale image with a
sum-of-absolute-deviation corner response, 3x3 non-maximum suppression, and
an intensity-centroid orientation over a radius-15 disc. Descriptors are 256
smoothed pixel-pair comparisons inside a 31x31 patch whose sampling pattern
is rotated with the keypoint orientation, snapped to one of 30 discrete
angles. Everything is single scale and fully deterministic: the same image
yields bit-identical keypoints and descriptors on every run and machine.

Descriptors are plain 32-byte `bytes` values (256 bits, MSB-first per byte).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, ParameterError, ShapeError
from .imaging import ImageBuf, to_grayscale

PATCH_MARGIN = 15          # keypoints keep this distance from every border
ORIENTATION_RADIUS = 15
ROTATION_BINS = 30
DESCRIPTOR_BITS = 256
DESCRIPTOR_BYTES = 32

DEFAULT_FAST_THRESHOLD = 20
DEFAULT_MAX_KEYPOINTS = 500
DEFAULT_MATCH_THRESHOLD = 64

# Bresenham circle of radius 3, clockwise from 12 o'clock, as (dx, dy).
_FAST_RING = (
    (0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3),
)
_ARC_LENGTH = 9

# Fixed descriptor sampling pattern: 256 point pairs (x1, y1, x2, y2), drawn
# once from a zero-mean Gaussian (sigma = 31/5) rejection-clipped to a
# radius-13 disc and committed verbatim so descriptors match across machines.
_PAIR_TABLE = (
    (0, 2, -2, -6), (-3, -6, 0, 8), (-3, -4, 3, 2), (1, -6, 0, 4),
    (-8, -3, -11, -1), (-8, 2, 1, -1), (0, 1, -9, -3), (-6, -5, 7, -5),
    (0, 5, -4, -1), (1, 0, -8, 0), (8, -10, 5, 1), (5, -7, 0, 4),
    (-1, 4, 0, 4), (9, -4, 1, -3), (1, -7, -4, -1), (6, 7, -8, -5),
    (4, -12, -3, -1), (8, 4, -2, -2), (-2, 9, -3, -2), (2, -1, -1, -7),
    (0, -3, 7, 4), (0, 4, -2, 7), (0, 4, -8, 2), (-2, -6, -5, -4),
    (1, 3, -1, -1), (4, 3, -6, 0), (0, -7, 2, -5), (6, 1, 1, -4),
    (-1, -12, -7, 2), (-11, 5, -5, 5), (1, -10, 8, 9), (0, -2, -1, -6),
    (7, -3, 0, -5), (-4, -8, 8, -1), (6, 0, -4, -2), (-3, 0, -2, -2),
    (-9, -5, 10, -4), (-7, 2, 9, -9), (-1, -4, -11, 5), (0, 0, -5, 3),
    (-3, -1, -7, -8), (8, -3, 2, 0), (-3, -3, 4, -2), (-1, 0, 7, 4),
    (2, -3, -9, 6), (6, -1, 3, 5), (5, 6, -3, 9), (-8, 5, 3, 5),
    (-7, -10, 5, -6), (0, 5, 2, 0), (-2, 0, -5, -9), (-1, -6, -10, 3),
    (0, 3, -6, -4), (-6, -5, 1, -5), (2, 2, 6, -1), (0, -9, -3, 5),
    (-1, 1, -2, 7), (-4, -12, 8, 0), (-7, -6, 7, 1), (0, 0, 0, 5),
    (3, 1, -6, 3), (-4, 7, -8, -1), (0, -8, -3, 5), (2, 0, 1, -7),
    (-2, -1, 7, 2), (0, 9, -3, -2), (6, 6, 4, 1), (1, -2, -1, 0),
    (9, 3, 0, -4), (-4, 10, 3, 0), (-2, -7, 0, 5), (-2, -1, -1, 1),
    (-10, -1, -5, 5), (-5, 4, 9, -2), (-4, 1, 0, -6), (3, 12, -2, -1),
    (-6, 2, -8, -7), (8, -6, 7, 9), (2, 3, 12, -1), (-4, -8, 0, 9),
    (6, -6, -5, -3), (2, -1, 1, 2), (-2, 0, 1, -1), (3, 12, 4, 0),
    (-10, 2, 5, 4), (-1, -11, -2, -4), (1, -5, -7, 0), (-1, -7, 1, -7),
    (7, 7, 7, -3), (3, -1, -2, -2), (-8, -9, 5, -1), (1, 6, -11, -5),
    (1, 2, -2, 6), (1, -8, -6, 5), (3, -12, 8, 4), (8, -2, -2, -7),
    (10, -4, 1, -10), (-2, 6, -8, 7), (2, -6, -3, -3), (0, -3, -5, -2),
    (-6, -8, 0, 5), (-9, 0, -4, -6), (5, -3, 9, -5), (2, -1, -5, 4),
    (-1, 4, 0, -7), (-1, 0, 6, -6), (0, -11, 4, -7), (-11, 0, 7, -9),
    (-7, -5, -7, 2), (-5, -4, 4, -5), (3, -6, 12, -2), (2, 0, 1, 0),
    (-10, -6, -8, 5), (5, -6, -9, -2), (3, -7, 6, -7), (-2, -9, -6, 9),
    (5, -2, -5, -12), (-2, 0, -1, -1), (-7, 0, 0, 8), (12, -1, -5, 0),
    (-4, -5, 0, -6), (4, -1, 2, -1), (-5, -6, -1, -3), (1, 0, -8, 0),
    (-8, -4, -2, -13), (1, 1, -1, -3), (-2, -6, -2, -3), (1, -7, 1, 1),
    (-1, -3, 3, -10), (3, 2, 2, 2), (-4, -2, 4, 3), (1, -9, 3, 7),
    (6, 1, -10, 6), (2, -9, -8, -4), (8, -2, 2, 11), (10, -1, -1, -8),
    (-4, 3, 2, 1), (6, -5, 0, 5), (4, 7, 2, -2), (2, -6, -10, 4),
    (0, 2, -11, -2), (-4, -5, 6, 2), (-4, 0, -1, 3), (4, 11, 7, 2),
    (2, 5, -3, 0), (-1, 0, 1, 8), (0, 9, -6, -1), (-1, 5, 6, -9),
    (-6, 2, -4, -9), (6, 3, 3, -3), (6, -1, 7, -6), (-5, 1, -4, 4),
    (2, -6, 0, -2), (6, -4, -3, 8), (0, 1, 10, -1), (-6, 1, 3, -5),
    (4, -5, -1, 1), (4, -2, 3, -6), (-2, -6, 7, 0), (-5, -2, -1, 4),
    (-10, -6, 6, -1), (-1, -2, 8, 3), (4, -3, 4, 4), (-1, 3, 4, -2),
    (-10, 2, -5, -2), (-4, -2, 2, 7), (12, 0, -11, -6), (-7, -3, 0, -12),
    (2, -9, 2, -1), (-2, 0, -3, -4), (-10, 0, 8, 4), (-4, 9, 0, 0),
    (-2, 1, -3, -1), (-7, -2, -1, 3), (4, -7, -1, 6), (2, 1, 10, -4),
    (1, -3, -4, -3), (4, 4, 5, -2), (-4, 3, -2, -9), (-4, 2, 2, 10),
    (-1, -10, -5, -6), (-8, 3, -4, -12), (4, -1, 2, 1), (4, 0, 8, 3),
    (2, 3, -9, -1), (-2, 1, 1, -8), (-11, -2, -1, -4), (1, -4, 3, -4),
    (0, 6, -3, -5), (5, -7, -3, 0), (-6, -6, -9, -3), (1, -1, -11, -3),
    (5, 3, 0, -6), (4, -4, -7, -5), (9, 1, 7, -3), (6, -4, 5, -3),
    (-1, 2, 8, -3), (-11, -2, 0, 1), (8, 2, 5, -7), (5, 2, 1, 11),
    (-6, -1, 3, 5), (-3, 2, -2, 1), (-1, -7, 0, 5), (-6, -1, 4, -7),
    (1, -7, 13, -1), (5, 1, 1, 10), (-8, 7, 0, 9), (1, -4, 2, 5),
    (0, 3, 6, 4), (1, 0, 6, -3), (-4, -1, 7, -9), (7, -4, -7, 8),
    (-1, -8, -2, 6), (7, -3, 3, 4), (-4, 2, 0, -3), (-3, 0, 0, -4),
    (-3, 7, 1, 5), (7, 4, 5, -2), (4, 5, 5, 0), (3, 4, 0, 6),
    (-6, 6, -1, -6), (2, -6, -6, -10), (0, 3, 6, -1), (6, 0, -1, 4),
    (7, -2, -2, -1), (1, -6, 6, -2), (3, -5, 2, 2), (-3, 13, 2, 11),
    (6, -4, -2, 3), (0, 0, -2, -11), (2, -5, -4, -1), (2, -9, -11, -7),
    (10, -7, 4, -9), (2, -2, 0, 4), (11, 1, 1, -6), (4, -2, 5, 0),
    (-2, 5, -2, -5), (-2, -9, 7, -7), (-5, -3, 6, -5), (-4, 5, 5, -2),
    (-7, -10, 5, -4), (3, 12, 7, -7), (5, 7, -5, -6), (-1, -10, -7, -2),
    (-1, 1, 2, -1), (0, -4, 1, 1), (-6, -4, 5, 2), (5, 1, -1, -3),
    (-1, -3, 5, -2), (-3, -7, 0, -6), (-1, 6, 2, 3), (2, 0, -1, -2),
    (5, -7, 8, 0), (-5, -3, -4, 1), (-4, 7, 0, 7), (4, -8, -5, 11),
)


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    response: float
    orientation: float  # radians in [0, 2*pi)


@dataclass(frozen=True)
class MatchPair:
    index_a: int
    index_b: int
    distance: int


def _rotated_pair_tables() -> np.ndarray:
    """Per-angle integer offsets, shape (ROTATION_BINS, 256, 4) as (x1, y1, x2, y2)."""
    base = np.asarray(_PAIR_TABLE, dtype=np.float64)
    tables = np.empty((ROTATION_BINS, DESCRIPTOR_BITS, 4), dtype=np.int64)
    for a in range(ROTATION_BINS):
        theta = 2.0 * math.pi * a / ROTATION_BINS
        c, s = math.cos(theta), math.sin(theta)
        for (xi, yi), (xo, yo) in (((0, 1), (0, 1)), ((2, 3), (2, 3))):
            tables[a, :, xo] = np.rint(c * base[:, xi] - s * base[:, yi])
            tables[a, :, yo] = np.rint(s * base[:, xi] + c * base[:, yi])
    return tables


_ROTATED_PAIRS = _rotated_pair_tables()

_DISC_DX, _DISC_DY = (
    arr.ravel()
    for arr in np.meshgrid(
        np.arange(-ORIENTATION_RADIUS, ORIENTATION_RADIUS + 1),
        np.arange(-ORIENTATION_RADIUS, ORIENTATION_RADIUS + 1),
    )
)
_inside = _DISC_DX ** 2 + _DISC_DY ** 2 <= ORIENTATION_RADIUS ** 2
_DISC_DX = _DISC_DX[_inside].astype(np.intp)
_DISC_DY = _DISC_DY[_inside].astype(np.intp)

_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)


def _merge_plateaus(
    ys: np.ndarray, xs: np.ndarray, resp: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Collapse 8-connected runs of equal-response maxima to their first pixel."""
    n = ys.shape[0]
    if n == 0:
        return ys, xs, resp
    index = {(int(y), int(x)): i for i, (y, x) in enumerate(zip(ys, xs))}
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        y, x = int(ys[i]), int(xs[i])
        for dy, dx in ((0, 1), (1, -1), (1, 0), (1, 1)):
            j = index.get((y + dy, x + dx))
            if j is not None and resp[j] == resp[i]:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    # indices are in row-major order, so the component root is its first pixel
    roots = sorted({find(i) for i in range(n)})
    sel = np.asarray(roots, dtype=np.intp)
    return ys[sel], xs[sel], resp[sel]


def _gaussian_blur(gray: np.ndarray, sigma: float = 2.0) -> np.ndarray:
    """Separable Gaussian with reflect padding, truncated at 3 sigma."""
    radius = max(1, int(math.ceil(3.0 * sigma)))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (xs / sigma) ** 2)
    kernel /= kernel.sum()
    padded = np.pad(gray, ((0, 0), (radius, radius)), mode="reflect")
    out = np.empty_like(gray)
    for r in range(gray.shape[0]):
        out[r] = np.convolve(padded[r], kernel, mode="valid")
    padded = np.pad(out, ((radius, radius), (0, 0)), mode="reflect")
    final = np.empty_like(gray)
    for c in range(gray.shape[1]):
        final[:, c] = np.convolve(padded[:, c], kernel, mode="valid")
    return final


def detect_keypoints(
    img: ImageBuf,
    fast_threshold: int = DEFAULT_FAST_THRESHOLD,
    max_keypoints: int = DEFAULT_MAX_KEYPOINTS,
) -> list[Keypoint]:
    """FAST-9 corners with non-maximum suppression and centroid orientations.

    Corners require at least 9 contiguous ring pixels all brighter than
    center + threshold or all darker than center - threshold. The strongest
    `max_keypoints` survivors are returned, ordered by descending response
    (ties by row-major position).
    """
    if img.width < 32 or img.height < 32:
        raise ShapeError(f"image {img.width}x{img.height} too small for detection (min 32x32)")
    if fast_threshold < 1:
        raise ParameterError("fast_threshold must be at least 1")
    # fixed-point luma (1/1000 steps): integer ring sums are exact, so
    # responses are identical under any rotation or traversal order
    p = img.pixels.astype(np.int64)
    gray = 299 * p[:, :, 0] + 587 * p[:, :, 1] + 114 * p[:, :, 2]
    h, w = gray.shape
    m = PATCH_MARGIN
    center = gray[m:h - m, m:w - m]
    diffs = np.stack(
        [gray[m + dy:h - m + dy, m + dx:w - m + dx] - center for dx, dy in _FAST_RING]
    )
    t = int(fast_threshold) * 1000
    bright = diffs > t
    dark = diffs < -t
    corner = np.zeros(center.shape, dtype=bool)
    for flags in (bright, dark):
        for s in range(16):
            idx = [(s + i) % 16 for i in range(_ARC_LENGTH)]
            corner |= np.logical_and.reduce(flags[idx], axis=0)
    if not corner.any():
        return []
    v_bright = np.maximum(diffs - t, 0).sum(axis=0)
    v_dark = np.maximum(-diffs - t, 0).sum(axis=0)
    response = np.where(corner, np.maximum(v_bright, v_dark), 0)

    # 3x3 non-max suppression tolerating flat plateaus, then one keypoint per
    # connected equal-response plateau (its row-major-first pixel): counts are
    # invariant under image rotation and positions under integer translation
    padded = np.pad(response, 1, mode="constant")
    rh, rw = response.shape
    keep = response > 0
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy or dx:
                keep &= response >= padded[1 + dy:1 + dy + rh, 1 + dx:1 + dx + rw]
    ys, xs = np.nonzero(keep)
    resp = response[ys, xs]
    ys, xs, resp = _merge_plateaus(ys, xs, resp)
    ys = ys + m
    xs = xs + m

    # intensity-centroid orientation over the radius-15 disc, exact in ints
    rows = ys[:, None] + _DISC_DY[None, :]
    cols = xs[:, None] + _DISC_DX[None, :]
    patch = gray[rows, cols]
    m10 = (patch * _DISC_DX[None, :]).sum(axis=1)
    m01 = (patch * _DISC_DY[None, :]).sum(axis=1)
    theta = np.mod(np.arctan2(m01.astype(np.float64), m10.astype(np.float64)), 2.0 * math.pi)

    order = np.lexsort((xs, ys, -resp))[:max_keypoints]
    return [
        Keypoint(float(xs[i]), float(ys[i]), float(resp[i]) / 1000.0, float(theta[i]))
        for i in order
    ]


def describe(img: ImageBuf, kps: list[Keypoint], sigma: float = 2.0) -> list[bytes]:
    """Rotated-BRIEF descriptors: one 32-byte value per keypoint.

    Each bit is 1 iff the Gaussian-smoothed intensity at the pair's first
    point is strictly below the second point's, after rotating the pair
    offsets by the keypoint orientation snapped to 1/30th of a turn.
    """
    if not kps:
        return []
    gray = to_grayscale(img)
    h, w = gray.shape
    cx = np.array([int(round(k.x)) for k in kps], dtype=np.intp)
    cy = np.array([int(round(k.y)) for k in kps], dtype=np.intp)
    if (
        (cx < PATCH_MARGIN).any()
        or (cy < PATCH_MARGIN).any()
        or (cx > w - 1 - PATCH_MARGIN).any()
        or (cy > h - 1 - PATCH_MARGIN).any()
    ):
        raise BoundsError("keypoint too close to the border for a 31x31 patch")
    smooth = _gaussian_blur(gray, sigma)
    bin_width = 2.0 * math.pi / ROTATION_BINS
    bins = np.array([int(round(k.orientation / bin_width)) % ROTATION_BINS for k in kps])
    offs = _ROTATED_PAIRS[bins]  # (n, 256, 4)
    p = smooth[cy[:, None] + offs[:, :, 1], cx[:, None] + offs[:, :, 0]]
    q = smooth[cy[:, None] + offs[:, :, 3], cx[:, None] + offs[:, :, 2]]
    bits = p < q
    packed = np.packbits(bits, axis=1)
    return [row.tobytes() for row in packed]


def _check_descriptor(d: bytes) -> None:
    if len(d) != DESCRIPTOR_BYTES:
        raise ParameterError(f"descriptor must be {DESCRIPTOR_BYTES} bytes, got {len(d)}")


def hamming(a: bytes, b: bytes) -> int:
    """Number of differing bits between two 256-bit descriptors."""
    _check_descriptor(a)
    _check_descriptor(b)
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).bit_count()


def match_descriptors(
    da: list[bytes], db: list[bytes], t: int = DEFAULT_MATCH_THRESHOLD
) -> list[MatchPair]:
    """Nearest neighbor in `db` for every descriptor of `da`, kept when within `t` bits.

    One-directional: at most one pair per query descriptor, and several
    queries may share a library descriptor. Distance ties resolve to the
    lowest index in `db`.
    """
    if not 0 <= t <= DESCRIPTOR_BITS:
        raise ParameterError(f"match threshold must be in [0, {DESCRIPTOR_BITS}]")
    if not da or not db:
        return []
    for d in da:
        _check_descriptor(d)
    for d in db:
        _check_descriptor(d)
    a = np.frombuffer(b"".join(da), dtype=np.uint8).reshape(len(da), DESCRIPTOR_BYTES)
    b = np.frombuffer(b"".join(db), dtype=np.uint8).reshape(len(db), DESCRIPTOR_BYTES)
    pairs: list[MatchPair] = []
    chunk = max(1, (1 << 22) // (b.shape[0] * DESCRIPTOR_BYTES))  # ~4 MB per block
    for start in range(0, a.shape[0], chunk):
        block = a[start:start + chunk]
        dist = _POPCOUNT[block[:, None, :] ^ b[None, :, :]].sum(axis=2, dtype=np.uint16)
        nearest = dist.argmin(axis=1)
        best = dist[np.arange(dist.shape[0]), nearest]
        for i in np.nonzero(best <= t)[0]:
            pairs.append(MatchPair(start + int(i), int(nearest[i]), int(best[i])))
    return pairs
