"""Shared fixtures: the fixed synthetic corpus used across the suite."""

from __future__ import annotations

import numpy as np
import pytest

from semtx import bglib
from semtx.imaging import ImageBuf
from semtx.pipeline import EvalScene
from semtx.synth import field_texture, paste_sprite, sprite

LIB_WIDTH, LIB_HEIGHT = 192, 144
LIB_SEEDS = tuple(range(100, 108))


@pytest.fixture(scope="session")
def library_images() -> list[ImageBuf]:
    return [field_texture(LIB_WIDTH, LIB_HEIGHT, seed=s) for s in LIB_SEEDS]


@pytest.fixture(scope="session")
def library(library_images) -> bglib.BackgroundLibrary:
    entries = [bglib.build_entry(k, img) for k, img in enumerate(library_images)]
    return bglib.BackgroundLibrary(entries)


def make_query(library_images, q: int, rng: np.random.Generator):
    """Scene `q`: library background + random sprite occluder at most 25% of area."""
    true_id = q % len(library_images)
    bg = library_images[true_id]
    while True:
        sw = int(rng.integers(36, 92))
        sh = int(rng.integers(30, 70))
        if sw * sh <= 0.25 * bg.width * bg.height:
            break
    x = int(rng.integers(0, bg.width - sw))
    y = int(rng.integers(0, bg.height - sh))
    fg = sprite(sw, sh, seed=int(rng.integers(0, 10 ** 6)))
    scene, mask, rect = paste_sprite(bg, fg, x, y)
    return true_id, scene, mask, rect


@pytest.fixture(scope="session")
def eval_scenes(library_images) -> list[EvalScene]:
    """Four scenes over distinct library backgrounds, foreground under 15%."""
    rng = np.random.default_rng(21)
    scenes = []
    sizes = [(52, 40), (60, 44), (70, 48), (48, 36)]
    for i, (sw, sh) in enumerate(sizes):
        bg = library_images[i * 2]
        x = int(rng.integers(10, bg.width - sw - 10))
        y = int(rng.integers(10, bg.height - sh - 10))
        scene, mask, _ = paste_sprite(bg, sprite(sw, sh, seed=50 + i), x, y)
        scenes.append(EvalScene(f"scene{i}", scene, mask=mask))
    return scenes
