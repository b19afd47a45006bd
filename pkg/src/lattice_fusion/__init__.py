"""Dynamic-programming lattice fusion for detection, tracking, and events.

One framework, four lattices: plain detection-based tracking, dense prism
tracking accelerated by a generalized distance transform, HMM event
recognition, and the fully joint combination of all three. Plus agreement
scoring for tracks, synthetic scenario generation, and a scaling benchmark.
"""

from .agreement import (
    AgreementReport,
    AnnotationSet,
    best_permutation,
    corpus_agreement,
    overlap,
)
from .bench import BenchReport, run_bench
from .core import (
    FrameDetections,
    MotionModel,
    ScoredBox,
    forward_project,
    otsu_offset,
    pool_detections,
    top_k,
)
from .events import (
    CoherencyCounter,
    HmmModel,
    JointResult,
    classify,
    emission_logprob,
    forward_log_likelihood,
    joint_multi_model,
    joint_track_event,
    map_states,
)
from .gdt import Grid1D, Grid3D, envelope_1d, transform_3d
from .pyramid import (
    DetectionPrism,
    PrismTrack,
    ScaleMap,
    prism_distance,
    resample_to_reference,
    track_prisms,
    track_prisms_quadratic,
)
from .synth import Scenario, fixture_models, gen_detections, gen_prisms
from .tracking import (
    CoherencyParams,
    EmptyFrameError,
    Track,
    coherency_score,
    greedy_track,
    viterbi_track,
    viterbi_track_augmented,
)
from .unified import UnifiedResult, detect_track_recognize, recognize_all

__version__ = "0.1.0"

__all__ = [
    "AgreementReport",
    "AnnotationSet",
    "BenchReport",
    "CoherencyCounter",
    "CoherencyParams",
    "DetectionPrism",
    "EmptyFrameError",
    "FrameDetections",
    "Grid1D",
    "Grid3D",
    "HmmModel",
    "JointResult",
    "MotionModel",
    "PrismTrack",
    "ScaleMap",
    "Scenario",
    "ScoredBox",
    "Track",
    "UnifiedResult",
    "best_permutation",
    "classify",
    "coherency_score",
    "corpus_agreement",
    "detect_track_recognize",
    "emission_logprob",
    "envelope_1d",
    "fixture_models",
    "forward_log_likelihood",
    "forward_project",
    "gen_detections",
    "gen_prisms",
    "greedy_track",
    "joint_multi_model",
    "joint_track_event",
    "map_states",
    "otsu_offset",
    "overlap",
    "pool_detections",
    "prism_distance",
    "recognize_all",
    "resample_to_reference",
    "run_bench",
    "top_k",
    "track_prisms",
    "track_prisms_quadratic",
    "transform_3d",
    "viterbi_track",
    "viterbi_track_augmented",
]
