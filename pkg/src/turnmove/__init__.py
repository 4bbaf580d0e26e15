"""Turning-movement counts from vehicle trajectories at a signalised approach."""

__version__ = "0.1.0"

from .clustering import ClusterAssignment, Linkage, agglomerate
from .evaluation import (
    ConfusionMatrix,
    UnknownPolicy,
    accuracy,
    balanced_accuracy,
    build_confusion,
    macro_f1,
)
from .pipeline import (
    MovementModel,
    PipelineConfig,
    Stopbar,
    assign_movement,
    classify_dataset,
    find_stopbar,
    train,
)
from .similarity import SimilarityConfig, composite_similarity, directed_hausdorff, distance_similarity
from .synth import SceneSpec, generate
from .trajectory import (
    LEFT,
    RIGHT,
    THROUGH,
    UNKNOWN,
    ApproachDataset,
    TrackPoint,
    Trajectory,
    load_trajectories,
    save_trajectories,
)

__all__ = [
    "ApproachDataset", "ClusterAssignment", "ConfusionMatrix", "LEFT", "Linkage", "MovementModel",
    "PipelineConfig", "RIGHT", "SceneSpec", "SimilarityConfig", "Stopbar", "THROUGH", "TrackPoint",
    "Trajectory", "UNKNOWN", "UnknownPolicy", "accuracy", "agglomerate", "assign_movement",
    "balanced_accuracy", "build_confusion", "classify_dataset", "composite_similarity",
    "directed_hausdorff", "distance_similarity", "find_stopbar", "generate", "load_trajectories",
    "macro_f1", "save_trajectories", "train",
]
