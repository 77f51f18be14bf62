"""Semantic-aware wireless image/video transmission simulator."""

from .bglib import BackgroundEntry, BackgroundLibrary, MatchOutcome, best_match, build_entry
from .channel import ChannelConfig, SymbolPayload, awgn, decode, encode, symbol_budget, transmit
from .dynbg import FrameSequence, SceneSegment, StitchedBackground, split_scenes, stitch
from .errors import (
    BoundsError,
    ConfigError,
    DegenerateInputError,
    FormatError,
    NoForegroundError,
    ParameterError,
    SemtxError,
    ShapeError,
    SizeError,
)
from .features import (
    Keypoint,
    MatchPair,
    describe,
    detect_keypoints,
    hamming,
    match_descriptors,
)
from .imaging import (
    BoundingRect,
    ImageBuf,
    MaskBuf,
    apply_mask,
    composite,
    load_image,
    load_mask,
    psnr,
    resize_proportional,
    resize_to,
    save_image,
    save_mask,
)
from .keyinfo import CropRecord, extract, restore
from .pipeline import (
    EvalRow,
    EvalScene,
    PipelineKnobs,
    TransmitReport,
    WireFrame,
    eval_sweep,
    frame_decode,
    frame_encode,
    transmit_image,
    transmit_video,
)
from .scheduler import (
    Decision,
    SchedulePlan,
    SchedulerParams,
    UserRequest,
    brute_force,
    optimize,
    required_power,
)
from .segmentation import (
    BackgroundDiffSegmenter,
    HullPolygon,
    LandmarkSet,
    ProvidedMaskSegmenter,
    SegmentationResult,
    Segmenter,
    convex_hull,
    hull_to_mask,
    segment_foreground,
)

__version__ = "0.1.0"
