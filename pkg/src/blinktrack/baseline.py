"""Gated nearest-neighbour tracker used as the comparison baseline.

It keeps the same gap-free rows and decoding as the main tracker but drops
motion prediction entirely: a point is matched only if it lies within
``gate_radius`` of a track's newest p-state.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .codebook import BlinkDictionary
from .errors import InputError
from .model import Buffer, DetectionFrame, PState, TrackerConfig, append_pstate
from .tracker import FrameResult, _check_next_frame, _greedy_assign, _points_array, decode_rows

__all__ = ["NNConfig", "NNTracker", "nn_process_frame"]


@dataclass(frozen=True)
class NNConfig:
    gate_radius: float
    max_zero_run: int = 10
    L_D: int = 18

    def __post_init__(self) -> None:
        if not self.gate_radius > 0:
            raise InputError("gate_radius must be > 0")
        if self.max_zero_run < 0 or self.L_D < 2:
            raise InputError("max_zero_run must be >= 0 and L_D >= 2")

    @classmethod
    def from_tracker_config(cls, cfg: TrackerConfig) -> "NNConfig":
        """Circle circumscribing the local-search box, same zero budget."""
        return cls(math.hypot(*cfg.max_displacement), cfg.zero_budget, cfg.sequence_length)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "NNConfig":
        unknown = set(data) - {"gate_radius", "max_zero_run", "L_D"}
        if unknown:
            raise InputError(f"unknown NN config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise InputError(str(exc)) from exc


class _NNState:
    def __init__(self, config: NNConfig) -> None:
        self.config = config
        # rows are kept at 4 sequence lengths; only the newest L_D bits are decoded
        self.max_length = 4 * config.L_D
        self.buffer = Buffer(TrackerConfig(sequence_length=config.L_D))


def nn_process_frame(state: _NNState, frame: DetectionFrame, dictionary: BlinkDictionary) -> FrameResult:
    start = time.perf_counter()
    buffer = state.buffer
    _check_next_frame(buffer, frame)
    cfg = state.config
    t, k = frame.timestamp, frame.frame_index
    pts = _points_array(frame)
    result = FrameResult(frame_index=k, timestamp=t)

    pairs: list[tuple[int, int]] = []
    if buffer.series and len(pts):
        last = np.array([(s.states[-1].x, s.states[-1].y) for s in buffer.series])
        dist = np.hypot(pts[None, :, 0] - last[:, 0, None], pts[None, :, 1] - last[:, 1, None])
        rows, cols = np.nonzero(dist <= cfg.gate_radius)
        pairs = _greedy_assign(dist[rows, cols], rows, cols)
    matched = dict(pairs)
    taken = set(matched.values())

    for row, s in enumerate(buffer.series):
        if row in matched:
            x, y = pts[matched[row]]
            append_pstate(s, PState(t, k, float(x), float(y), 1))
            result.observations.append((s.id, float(x), float(y)))
        else:
            prev = s.states[-1]
            append_pstate(s, PState(t, k, prev.x, prev.y, 0))
    survivors = [s for s in buffer.series if s.zero_run <= cfg.max_zero_run]
    result.removed_series_count = len(buffer.series) - len(survivors)
    for s in survivors:
        s.trim(state.max_length)
    buffer.series = survivors
    for pi in range(len(pts)):
        if pi in taken:
            continue
        x, y = pts[pi]
        s = buffer.spawn(PState(t, k, float(x), float(y), 1))
        result.new_series_count += 1
        result.observations.append((s.id, float(x), float(y)))

    result.identifications = decode_rows(buffer.series, dictionary)
    buffer.last_frame = k
    result.local_matches = len(pairs)
    result.buffer_rows = len(buffer.series)
    result.stored_pstates = buffer.stored_pstates
    result.processing_time = time.perf_counter() - start
    return result


class NNTracker:
    """Stream wrapper with the same ``process`` interface as :class:`Tracker`."""

    name = "nn"

    def __init__(self, config: NNConfig, dictionary: BlinkDictionary) -> None:
        if dictionary.length != config.L_D:
            raise InputError(f"dictionary sequence length {dictionary.length} != L_D={config.L_D}")
        self.config = config
        self.dictionary = dictionary
        self.state = _NNState(config)

    @property
    def buffer(self) -> Buffer:
        return self.state.buffer

    def process(self, frame: DetectionFrame) -> FrameResult:
        return nn_process_frame(self.state, frame, self.dictionary)
