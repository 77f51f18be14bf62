#!/usr/bin/env python3
"""Regenerate the golden serialization fixtures under tests/golden/.

The committed fixture bytes are the source of truth for decode tests; this
script exists so they can be rebuilt deliberately, never implicitly.
"""

import hashlib
import struct
from pathlib import Path

import numpy as np

from semtx import bglib
from semtx.pipeline import WireFrame, frame_encode
from semtx.synth import field_texture

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"


def library_digest(lib: bglib.BackgroundLibrary) -> str:
    h = hashlib.sha256()
    h.update(struct.pack("<I", len(lib.entries)))
    for e in lib.entries:
        h.update(struct.pack("<I", e.id))
        h.update(e.image.pixels.tobytes())
        for kp in e.keypoints:
            h.update(struct.pack("<ffff", kp.x, kp.y, kp.response, kp.orientation))
        for d in e.descriptors:
            h.update(d)
    return h.hexdigest()


def frame_digest(frame: WireFrame) -> str:
    h = hashlib.sha256()
    h.update(struct.pack("<BBI", frame.version, frame.mode, frame.background_id))
    h.update(struct.pack("<IIII", *frame.rect))
    h.update(struct.pack("<II", *frame.original_dims))
    h.update(struct.pack("<fff", frame.scale, frame.gain, frame.snr_db))
    h.update(frame.symbols.astype("<f4").tobytes())
    return h.hexdigest()


def golden_library() -> bglib.BackgroundLibrary:
    return bglib.BackgroundLibrary(
        [bglib.build_entry(k, field_texture(48, 40, seed=600 + k)) for k in range(2)]
    )


def golden_frame() -> WireFrame:
    # analytic symbol pattern: no RNG, identical on every platform
    n = 240
    t = np.arange(n, dtype=np.float64)
    symbols = np.sin(t * 0.1) + 0.25 * np.cos(t * 0.037)
    return WireFrame(
        mode=1,
        background_id=7,
        rect=(12, 8, 52, 44),
        original_dims=(160, 120),
        scale=1.0,
        gain=97.5,
        snr_db=13.0,
        symbols=symbols.astype(np.float32),
    )


def main() -> None:
    GOLDEN.mkdir(parents=True, exist_ok=True)
    lib = golden_library()
    bglib.save(lib, GOLDEN / "sample.bgl")
    frame = golden_frame()
    (GOLDEN / "sample.sjsc").write_bytes(frame_encode(frame))
    print("library digest:", library_digest(lib))
    print("frame digest:  ", frame_digest(frame))
    print("wrote", GOLDEN / "sample.bgl", "and", GOLDEN / "sample.sjsc")


if __name__ == "__main__":
    main()
