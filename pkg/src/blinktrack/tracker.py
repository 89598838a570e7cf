"""Per-frame association pipeline: Local Search, Extended Search, Verification.

Both searches assign points to t-series one-to-one by greedy global minimum
distance: candidate (series, point) pairs are taken in order of distance, ties
broken by lower point index and then by the earlier row in the buffer.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .codebook import BlinkDictionary, match_sequence
from .errors import DegenerateFitError, FrameOrderError, InputError, InvariantViolation
from .model import Buffer, DetectionFrame, PState, TrackerConfig, TSeries, append_pstate
from .numerics import compute_weights, predict, prediction_halfwidth, weighted_polyfit_columns

__all__ = [
    "SearchWindow",
    "Identification",
    "FrameResult",
    "Tracker",
    "max_displacement",
    "local_search",
    "extended_window",
    "extended_search",
    "verification",
    "process_frame",
    "decode_rows",
    "check_buffer",
]

# fallback gate growth stops at this many frames' worth of max displacement
FALLBACK_CAP_FRAMES = 4


@dataclass(frozen=True)
class SearchWindow:
    center: tuple[float, float]
    halfwidth: tuple[float, float]

    def contains(self, x: float, y: float) -> bool:
        return (
            abs(x - self.center[0]) <= self.halfwidth[0]
            and abs(y - self.center[1]) <= self.halfwidth[1]
        )


class Identification(NamedTuple):
    """A decoded LED ID with the newest stored position of its series.

    On a frame where the LED is dark the stored position is the last lit one,
    because zero states copy their predecessor's coordinates.
    """

    led_id: int
    x: float
    y: float
    track_id: int


@dataclass
class FrameResult:
    """Everything one frame of tracking produced.

    ``observations`` lists ``(track_id, x, y)`` for every state-1 p-state written
    this frame (matched points and newly spawned series), which is what the
    evaluation needs to reconstruct track histories after rows are trimmed.
    """

    frame_index: int
    timestamp: float
    identifications: list[Identification] = field(default_factory=list)
    new_series_count: int = 0
    removed_series_count: int = 0
    discarded_points: int = 0
    local_matches: int = 0
    extended_matches: int = 0
    extended_windows: int = 0
    observations: list[tuple[int, float, float]] = field(default_factory=list)
    buffer_rows: int = 0
    stored_pstates: int = 0
    processing_time: float = 0.0

    @property
    def extended_invoked(self) -> bool:
        return self.extended_windows > 0

    @property
    def assigned_points(self) -> int:
        return self.local_matches + self.extended_matches


def max_displacement(v_max: tuple[float, float], f: float) -> tuple[int, int]:
    """Per-frame pixel gate from the largest expected image velocity (px/s)."""
    if f <= 0:
        raise ValueError("frame rate must be positive")
    vx, vy = v_max
    if vx < 0 or vy < 0:
        raise ValueError("velocities must be >= 0")
    return math.ceil(vx / f), math.ceil(vy / f)


def _greedy_assign(dist: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> list[tuple[int, int]]:
    if dist.size == 0:
        return []
    order = np.lexsort((rows, cols, dist))
    used_r: set[int] = set()
    used_c: set[int] = set()
    out = []
    for i in order:
        r, c = int(rows[i]), int(cols[i])
        if r in used_r or c in used_c:
            continue
        used_r.add(r)
        used_c.add(c)
        out.append((r, c))
    return out


def _points_array(frame: DetectionFrame) -> np.ndarray:
    return np.asarray(frame.points, dtype=float).reshape(-1, 2)


def _check_next_frame(buffer: Buffer, frame: DetectionFrame) -> None:
    if buffer.last_frame is not None and frame.frame_index != buffer.last_frame + 1:
        raise FrameOrderError(
            f"expected frame {buffer.last_frame + 1}, got {frame.frame_index}"
        )


def _box_candidates(
    centers: np.ndarray, half: np.ndarray, pts: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    dx = pts[None, :, 0] - centers[:, 0, None]
    dy = pts[None, :, 1] - centers[:, 1, None]
    inside = (np.abs(dx) <= half[:, 0, None]) & (np.abs(dy) <= half[:, 1, None])
    rows, cols = np.nonzero(inside)
    return np.hypot(dx[rows, cols], dy[rows, cols]), rows, cols


def _local(buffer: Buffer, pts: np.ndarray):
    n_series, n_pts = len(buffer.series), len(pts)
    if n_series == 0 or n_pts == 0:
        return [], list(range(n_series)), list(range(n_pts))
    last = np.array([(s.states[-1].x, s.states[-1].y) for s in buffer.series])
    half = np.broadcast_to(np.asarray(buffer.config.max_displacement), last.shape)
    pairs = _greedy_assign(*_box_candidates(last, half, pts))
    taken_s = {r for r, _ in pairs}
    taken_p = {c for _, c in pairs}
    unmatched_rows = [i for i in range(n_series) if i not in taken_s]
    unmatched_points = [k for k in range(n_pts) if k not in taken_p]
    return pairs, unmatched_rows, unmatched_points


def local_search(buffer: Buffer, frame: DetectionFrame):
    """Fixed-box association around each series' newest p-state.

    Returns ``(assignments, unmatched_rows, unmatched_points)``: assignments are ``(row, point)``
    index pairs into ``buffer.series`` and ``frame.points``; ``unmatched_rows`` holds the
    unmatched rows and ``unmatched_points`` the unmatched point indices.
    """
    _check_next_frame(buffer, frame)
    return _local(buffer, _points_array(frame))


def _motion_fits(series: TSeries, config: TrackerConfig):
    """Per-axis fits over the series' on-states, memoised on the series.

    Normalised decay weights do not depend on the query time (it cancels), so
    the fit only changes when the set of on-states does.
    """
    last_on = series.last_on()
    key = (series.n_on, last_on.frame_index)
    memo = series._fit_memo
    if memo is not None and memo[0] == key:
        return memo[1]
    on = np.array([(p.timestamp, p.x, p.y) for p in series.states if p.state == 1])
    times = on[:, 0]
    weights = compute_weights(times[-1] - times, config.decay)
    try:
        fits = weighted_polyfit_columns(times, on[:, 1:], weights, config.degree)
    except DegenerateFitError:
        fits = None
    series._fit_memo = (key, fits)
    return fits


def _regression_window(series: TSeries, t: float, config: TrackerConfig) -> SearchWindow | None:
    fits = _motion_fits(series, config)
    if fits is None:
        return None
    fx, fy = fits
    floor = config.min_halfwidth
    return SearchWindow(
        (predict(fx, t), predict(fy, t)),
        (
            max(prediction_halfwidth(fx, t, config.alpha), floor),
            max(prediction_halfwidth(fy, t, config.alpha), floor),
        ),
    )


def _fallback_scale(zero_run: int) -> int:
    # frames from the newest on-state to the frame being searched, capped
    return min(zero_run + 1, FALLBACK_CAP_FRAMES)


def extended_window(series: TSeries, t: float, config: TrackerConfig) -> SearchWindow | None:
    """Search window for ``series`` on the frame after its newest p-state.

    With at least ``degree + 2`` on-states the window is the per-axis prediction
    interval at time ``t`` of the weighted polynomial fit, clamped below by
    ``min_halfwidth``. Otherwise (or if the fit is degenerate) it is a box
    around the newest on-state growing by the max displacement per frame
    elapsed since that on-state, capped at four frames' worth.
    """
    last_on = series.last_on()
    if last_on is None:
        return None
    if series.n_on >= config.degree + 2:
        window = _regression_window(series, t, config)
        if window is not None:
            return window
    k = _fallback_scale(series.zero_run)
    dxm, dym = config.max_displacement
    return SearchWindow((last_on.x, last_on.y), (dxm * k, dym * k))


def _extended(buffer: Buffer, unmatched_rows: list[int], unmatched_points: list[int], pts: np.ndarray, t: float):
    if not unmatched_rows or not unmatched_points:
        return [], list(unmatched_rows), list(unmatched_points), 0
    cfg = buffer.config
    min_on = cfg.degree + 2
    dxm, dym = cfg.max_displacement
    rows, centers, halves = [], [], []
    series = buffer.series
    for i in unmatched_rows:
        s = series[i]
        bits = s._bits  # read directly: this loop runs for every unmatched row
        if bits == 0:
            continue
        window = _regression_window(s, t, cfg) if bits.bit_count() >= min_on else None
        rows.append(i)
        if window is None:
            # zero-states repeat the last on-state position, so the newest
            # p-state already sits at the fallback centre
            newest = s.states[-1]
            k = min((bits & -bits).bit_length(), FALLBACK_CAP_FRAMES)  # zero run + 1
            centers.append((newest.x, newest.y))
            halves.append((dxm * k, dym * k))
        else:
            centers.append(window.center)
            halves.append(window.halfwidth)
    n_windows = len(rows)
    if not rows:
        return [], list(unmatched_rows), list(unmatched_points), 0
    half = np.array(halves, dtype=float)
    sub_pts = pts[unmatched_points]
    dist, r_idx, c_idx = _box_candidates(np.array(centers), half, sub_pts)
    row_map = np.asarray(rows)
    col_map = np.asarray(unmatched_points)
    pairs = _greedy_assign(dist, row_map[r_idx], col_map[c_idx])
    taken_s = {r for r, _ in pairs}
    taken_p = {c for _, c in pairs}
    missed_rows = [i for i in unmatched_rows if i not in taken_s]
    new_points = [k for k in unmatched_points if k not in taken_p]
    return pairs, missed_rows, new_points, n_windows


def extended_search(
    buffer: Buffer, unmatched_rows: Sequence[int], unmatched_points: Sequence[int], frame: DetectionFrame
):
    """Prediction-window association of the local-search leftovers.

    Returns ``(assignments, missed_rows, new_points)`` in the same index convention as
    :func:`local_search`.
    """
    pairs, missed_rows, new_points, _ = _extended(
        buffer, list(unmatched_rows), list(unmatched_points), _points_array(frame), frame.timestamp
    )
    return pairs, missed_rows, new_points


def decode_rows(rows: Sequence[TSeries], dictionary: BlinkDictionary) -> list[Identification]:
    """Refresh ``matched_id`` on every row and report one row per decoded ID.

    When several rows decode to the same ID the longest wins, then the oldest.
    """
    best: dict[int, tuple[int, int, TSeries]] = {}
    length = dictionary.length
    for pos, s in enumerate(rows):
        # short rows cannot decode; most clutter rows stop here
        s.matched_id = match_sequence(s, dictionary) if len(s.states) >= length else None
        if s.matched_id is None:
            continue
        rank = (len(s.states), -pos)
        held = best.get(s.matched_id)
        if held is None or rank > held[:2]:
            best[s.matched_id] = (*rank, s)
    out = []
    for led_id in sorted(best):
        s = best[led_id][2]
        p = s.states[-1]
        out.append(Identification(led_id, p.x, p.y, s.id))
    return out


def verification(
    buffer: Buffer,
    frame: DetectionFrame,
    assignments: Sequence[tuple[int, int]],
    missed_rows: Sequence[int],
    new_points: Sequence[int],
    dictionary: BlinkDictionary,
) -> FrameResult:
    """Write this frame's p-states, prune, trim, spawn, and decode.

    ``assignments`` are all ``(row, point)`` pairs from both searches.
    """
    cfg = buffer.config
    t, k = frame.timestamp, frame.frame_index
    result = FrameResult(frame_index=k, timestamp=t)
    series = buffer.series

    for row, pi in assignments:
        x, y = frame.points[pi]
        s = series[row]
        append_pstate(s, PState(t, k, float(x), float(y), 1))
        result.observations.append((s.id, float(x), float(y)))
    budget = cfg.zero_budget
    doomed = set()
    for row in missed_rows:
        s = series[row]
        prev = s.states[-1]
        # rows all end at frame k - 1 here, so the gap-free check is skipped
        s.states.append(PState(t, k, prev.x, prev.y, 0))
        s._bits <<= 1
        # only a row that just took a zero can have broken the budget
        if s.zero_run > budget:
            doomed.add(row)

    if doomed:
        buffer.series = [s for row, s in enumerate(series) if row not in doomed]
    result.removed_series_count = len(doomed)
    limit = cfg.series_length
    for s in buffer.series:
        if len(s.states) > limit:
            s.trim(limit)

    for pi in sorted(new_points):
        if len(buffer.series) >= cfg.max_rows:
            result.discarded_points += 1
            continue
        x, y = frame.points[pi]
        s = buffer.spawn(PState(t, k, float(x), float(y), 1))
        result.new_series_count += 1
        result.observations.append((s.id, float(x), float(y)))

    result.identifications = decode_rows(buffer.series, dictionary)
    result.buffer_rows = len(buffer.series)
    result.stored_pstates = buffer.stored_pstates
    return result


def process_frame(buffer: Buffer, frame: DetectionFrame, dictionary: BlinkDictionary) -> FrameResult:
    """Run one frame through Local Search, Extended Search and Verification."""
    start = time.perf_counter()
    _check_next_frame(buffer, frame)
    pts = _points_array(frame)
    local_pairs, unmatched_rows, unmatched_points = _local(buffer, pts)
    ext_pairs, missed_rows, new_points, n_windows = _extended(buffer, unmatched_rows, unmatched_points, pts, frame.timestamp)
    result = verification(buffer, frame, local_pairs + ext_pairs, missed_rows, new_points, dictionary)
    buffer.last_frame = frame.frame_index
    result.local_matches = len(local_pairs)
    result.extended_matches = len(ext_pairs)
    result.extended_windows = n_windows
    result.processing_time = time.perf_counter() - start
    return result


def check_buffer(buffer: Buffer) -> None:
    """Raise InvariantViolation if the buffer's structural invariants do not hold."""
    cfg = buffer.config
    if len(buffer.series) > cfg.max_rows:
        raise InvariantViolation(f"{len(buffer.series)} rows exceed m_r={cfg.max_rows}")
    seen = set()
    for s in buffer.series:
        if s.id in seen:
            raise InvariantViolation(f"duplicate series id {s.id}")
        seen.add(s.id)
        if not s.states:
            raise InvariantViolation(f"series {s.id} is empty")
        if len(s.states) > cfg.series_length:
            raise InvariantViolation(f"series {s.id} holds {len(s.states)} > L_S states")
        if s.states[-1].frame_index != buffer.last_frame:
            raise InvariantViolation(f"series {s.id} does not end at frame {buffer.last_frame}")
        frames = [p.frame_index for p in s.states]
        if frames != list(range(frames[0], frames[0] + len(frames))):
            raise InvariantViolation(f"series {s.id} has a frame gap")
        if s._bits != int("".join(str(p.state) for p in s.states), 2):
            raise InvariantViolation(f"series {s.id} bit cache is stale")


class Tracker:
    """One tracking stream: a buffer plus the dictionary it decodes against."""

    name = "amt"

    def __init__(self, config: TrackerConfig, dictionary: BlinkDictionary) -> None:
        if dictionary.length != config.sequence_length:
            raise InputError(
                f"dictionary sequence length {dictionary.length} != L_D={config.sequence_length}"
            )
        self.config = config
        self.dictionary = dictionary
        self.buffer = Buffer(config)

    def process(self, frame: DetectionFrame) -> FrameResult:
        return process_frame(self.buffer, frame, self.dictionary)

    def check(self) -> None:
        check_buffer(self.buffer)
