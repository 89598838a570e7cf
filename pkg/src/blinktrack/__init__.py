"""Tracking and identification of blinking optical markers in camera image streams."""

from .baseline import NNConfig, NNTracker, nn_process_frame
from .codebook import (
    BlinkDictionary,
    cyclic_distance,
    generate_dictionary,
    load_dictionary,
    match_sequence,
    save_dictionary,
)
from .errors import (
    BlinkTrackError,
    DegenerateFitError,
    DictionaryError,
    FrameOrderError,
    InputError,
    InvariantViolation,
)
from .harness import run_scenario, track_frames
from .metrics import MetricsReport, compare, compute_metrics
from .model import PARAMETER_SETS, Buffer, DetectionFrame, PState, TrackerConfig, TSeries, append_pstate
from .simulator import CameraModel, MarkerSpec, Scenario, TruthLog, blink_state, project, simulate
from .tracker import FrameResult, Identification, Tracker, max_displacement, process_frame

__version__ = "0.1.0"

__all__ = [
    "BlinkDictionary",
    "BlinkTrackError",
    "Buffer",
    "CameraModel",
    "DegenerateFitError",
    "DetectionFrame",
    "DictionaryError",
    "FrameOrderError",
    "FrameResult",
    "Identification",
    "InputError",
    "InvariantViolation",
    "MarkerSpec",
    "MetricsReport",
    "NNConfig",
    "NNTracker",
    "PState",
    "Scenario",
    "PARAMETER_SETS",
    "TSeries",
    "Tracker",
    "TrackerConfig",
    "TruthLog",
    "append_pstate",
    "blink_state",
    "compare",
    "compute_metrics",
    "cyclic_distance",
    "generate_dictionary",
    "load_dictionary",
    "match_sequence",
    "max_displacement",
    "nn_process_frame",
    "process_frame",
    "project",
    "run_scenario",
    "save_dictionary",
    "simulate",
    "track_frames",
]
