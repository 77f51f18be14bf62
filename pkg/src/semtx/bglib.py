"""Persistent background library: descriptor precomputation, selection, storage.

Library files (`.bgl`) carry each background image as a PNG blob together
with its precomputed keypoints and descriptors, so the receiving side never
re-runs feature extraction. The file is little-endian throughout:

    magic "SBGL" | version u8 | entry count u32
    per entry: id u32 | png length u32 | png bytes | keypoint count u32
               | per keypoint: f32 x, y, response, orientation
               | 32 descriptor bytes per keypoint
    crc32 u32 over every preceding byte
"""

from __future__ import annotations

import io
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import FormatError
from .features import (
    DESCRIPTOR_BYTES,
    DEFAULT_FAST_THRESHOLD,
    DEFAULT_MAX_KEYPOINTS,
    Keypoint,
    describe,
    detect_keypoints,
    match_descriptors,
)
from .imaging import ImageBuf, MaskBuf, apply_mask

FORMAT_MAGIC = b"SBGL"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class BackgroundEntry:
    id: int
    image: ImageBuf
    keypoints: tuple[Keypoint, ...]
    descriptors: tuple[bytes, ...]


@dataclass
class BackgroundLibrary:
    entries: list[BackgroundEntry] = field(default_factory=list)
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        ids = [e.id for e in self.entries]
        if any(b <= a for a, b in zip(ids, ids[1:])):
            raise FormatError("entry ids must be strictly increasing")

    def get(self, entry_id: int) -> BackgroundEntry:
        for e in self.entries:
            if e.id == entry_id:
                return e
        raise KeyError(entry_id)


@dataclass(frozen=True)
class MatchOutcome:
    matched: bool
    background_id: int | None
    match_count: int


def build_entry(
    entry_id: int,
    image: ImageBuf,
    person_mask: MaskBuf | None = None,
    fast_threshold: int = DEFAULT_FAST_THRESHOLD,
    max_keypoints: int = DEFAULT_MAX_KEYPOINTS,
) -> BackgroundEntry:
    """Detect and describe features, shielding masked foreground when given."""
    source = image if person_mask is None else apply_mask(image, person_mask, keep=1)
    kps = detect_keypoints(source, fast_threshold, max_keypoints)
    descs = describe(source, kps)
    return BackgroundEntry(entry_id, image, tuple(kps), tuple(descs))


def best_match(
    query_descriptors: list[bytes],
    lib: BackgroundLibrary,
    t: int,
    n_min: int,
) -> MatchOutcome:
    """Entry with the most descriptor matches; unmatched below `n_min` pairs.

    Count ties resolve to the lowest entry id. An empty library or query is
    simply an unmatched outcome, never an error.
    """
    best_id = None
    best_count = -1
    for entry in lib.entries:
        n_k = len(match_descriptors(query_descriptors, list(entry.descriptors), t))
        if n_k > best_count:
            best_id, best_count = entry.id, n_k
    if best_id is None or best_count < n_min:
        return MatchOutcome(False, None, max(best_count, 0))
    return MatchOutcome(True, best_id, best_count)


def _encode_png(image: ImageBuf) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(image.pixels, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def _decode_png(blob: bytes) -> ImageBuf:
    try:
        with Image.open(io.BytesIO(blob)) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except Exception as exc:
        raise FormatError(f"embedded image block is not a valid PNG: {exc}") from exc
    return ImageBuf(np.ascontiguousarray(arr))


def save(lib: BackgroundLibrary, path) -> None:
    body = bytearray()
    body += FORMAT_MAGIC
    body += struct.pack("<B", FORMAT_VERSION)
    body += struct.pack("<I", len(lib.entries))
    for entry in lib.entries:
        png = _encode_png(entry.image)
        body += struct.pack("<I", entry.id)
        body += struct.pack("<I", len(png))
        body += png
        body += struct.pack("<I", len(entry.keypoints))
        for kp in entry.keypoints:
            body += struct.pack("<ffff", kp.x, kp.y, kp.response, kp.orientation)
        for d in entry.descriptors:
            body += d
    body += struct.pack("<I", zlib.crc32(bytes(body)))
    with open(path, "wb") as fh:
        fh.write(bytes(body))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError("library file truncated")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def load(path) -> BackgroundLibrary:
    with open(path, "rb") as fh:
        data = fh.read()
    return loads(data)


def loads(data: bytes) -> BackgroundLibrary:
    if len(data) < len(FORMAT_MAGIC) + 1 + 4 + 4:
        raise FormatError("library file too short")
    stored_crc = struct.unpack("<I", data[-4:])[0]
    if zlib.crc32(data[:-4]) != stored_crc:
        raise FormatError("library checksum mismatch")
    r = _Reader(data[:-4])
    if r.take(4) != FORMAT_MAGIC:
        raise FormatError("bad library magic")
    version = r.u8()
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported library version {version}")
    count = r.u32()
    entries = []
    for _ in range(count):
        entry_id = r.u32()
        png = r.take(r.u32())
        image = _decode_png(png)
        kp_count = r.u32()
        kps = []
        for _ in range(kp_count):
            x, y, resp, theta = struct.unpack("<ffff", r.take(16))
            kps.append(Keypoint(x, y, resp, theta))
        descs = [bytes(r.take(DESCRIPTOR_BYTES)) for _ in range(kp_count)]
        entries.append(BackgroundEntry(entry_id, image, tuple(kps), tuple(descs)))
    if r.pos != len(r.data):
        raise FormatError("trailing bytes after final entry")
    return BackgroundLibrary(entries, format_version=version)
