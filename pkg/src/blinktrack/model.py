"""Buffer data model: p-states, t-series, the buffer itself and tracker settings.

A t-series is one row of the buffer. It holds one p-state per frame since it was
created (gap-free), so the row can be read as a bit stream for decoding and as a
sparse trajectory (its "on" samples) for motion prediction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, NamedTuple, Sequence

from .errors import FrameOrderError, InputError

__all__ = [
    "PState",
    "TSeries",
    "Buffer",
    "TrackerConfig",
    "DetectionFrame",
    "PARAMETER_SETS",
    "append_pstate",
    "on_states",
    "trailing_zero_run",
]


class PState(NamedTuple):
    """One per-frame sample of a tracked marker."""

    timestamp: float
    frame_index: int
    x: float
    y: float
    state: int  # 1 = observed on, 0 = inferred off


@dataclass(eq=False)
class TSeries:
    """Gap-free sequence of p-states hypothesised to belong to one marker.

    ``_bits`` mirrors the state column as an integer (newest state in the least
    significant bit) so decoding and zero-run queries do not walk the list.
    """

    id: int
    states: list[PState] = field(default_factory=list)
    matched_id: int | None = None
    _bits: int = field(default=0, repr=False)
    # (key, fits) memo for the motion regression; see tracker.extended_window
    _fit_memo: Any = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def newest(self) -> PState:
        return self.states[-1]

    @property
    def last_frame(self) -> int:
        return self.states[-1].frame_index

    @property
    def n_on(self) -> int:
        return self._bits.bit_count()

    @property
    def zero_run(self) -> int:
        if self._bits == 0:
            return len(self.states)
        return (self._bits & -self._bits).bit_length() - 1

    def last_on(self) -> PState | None:
        """Newest state-1 p-state, or None if the series never saw the marker on."""
        if self._bits == 0:
            return None
        return self.states[-1 - self.zero_run]

    def window_bits(self, length: int) -> int:
        """Newest ``length`` states packed oldest-first (MSB) into an integer."""
        return self._bits & ((1 << length) - 1)

    def bit_list(self) -> list[int]:
        return [p.state for p in self.states]

    def trim(self, max_length: int) -> int:
        """Drop the oldest states beyond ``max_length``; returns how many were dropped."""
        excess = len(self.states) - max_length
        if excess <= 0:
            return 0
        del self.states[:excess]
        self._bits &= (1 << max_length) - 1
        return excess


def append_pstate(series: TSeries, p: PState) -> TSeries:
    """Append ``p`` to ``series`` in place, enforcing gap-free frame order."""
    if p.state not in (0, 1):
        raise ValueError(f"p-state bit must be 0 or 1, got {p.state!r}")
    if series.states:
        expected = series.states[-1].frame_index + 1
        if p.frame_index != expected:
            raise FrameOrderError(
                f"series {series.id}: expected frame {expected}, got {p.frame_index}"
            )
    series.states.append(p)
    series._bits = (series._bits << 1) | p.state
    return series


def on_states(series: TSeries) -> list[tuple[float, float, float]]:
    """(timestamp, x, y) of every state-1 p-state, oldest first."""
    return [(p.timestamp, p.x, p.y) for p in series.states if p.state == 1]


def trailing_zero_run(series: TSeries) -> int:
    """Number of consecutive state-0 p-states at the newest end of the series."""
    return series.zero_run


# Config file keys (left) and the attribute each one fills.
_CONFIG_KEYS = {
    "f": "frame_rate",
    "b_m0": "max_zero_bits",
    "e": "bit_errors",
    "dpx_max": "max_displacement",
    "alpha": "alpha",
    "L_D": "sequence_length",
    "L_S": "series_length",
    "d": "degree",
    "eta": "eta",
    "lambda": "decay",
    "m_r": "max_rows",
    "min_halfwidth": "min_halfwidth",
}


@dataclass(frozen=True)
class TrackerConfig:
    """Tracker parameters. Defaults are the universal set used for Exps. 3-6.

    ``alpha`` is the significance level of the prediction window (0.05 means a
    95 % window). ``series_length`` defaults to ``eta * degree`` and must equal it.
    """

    frame_rate: float = 60.0
    max_displacement: tuple[float, float] = (3.0, 3.0)
    alpha: float = 0.05
    degree: int = 4
    eta: int = 90
    series_length: int | None = None
    decay: float = 0.1
    max_zero_bits: int = 10
    bit_errors: int = 0
    max_rows: int = 500
    sequence_length: int = 18
    min_halfwidth: float = 2.0

    def __post_init__(self) -> None:
        dx, dy = self.max_displacement
        object.__setattr__(self, "max_displacement", (float(dx), float(dy)))
        if self.series_length is None:
            object.__setattr__(self, "series_length", self.eta * self.degree)
        problems = []
        if self.frame_rate <= 0:
            problems.append("f must be positive")
        if min(self.max_displacement) < 0:
            problems.append("dpx_max components must be >= 0")
        if not 0 < self.alpha < 1:
            problems.append("alpha must lie in (0, 1)")
        if self.degree < 1:
            problems.append("d must be >= 1")
        if self.eta < 1:
            problems.append("eta must be >= 1")
        if self.series_length != self.eta * self.degree:
            problems.append(f"L_S={self.series_length} must equal eta*d={self.eta * self.degree}")
        if self.series_length < self.sequence_length:
            problems.append("L_S must be >= L_D")
        if self.decay < 0:
            problems.append("lambda must be >= 0")
        if self.max_zero_bits < 0 or self.bit_errors < 0:
            problems.append("b_m0 and e must be >= 0")
        if self.max_rows < 1:
            problems.append("m_r must be >= 1")
        if self.sequence_length < 2:
            problems.append("L_D must be >= 2")
        if self.min_halfwidth < 0:
            problems.append("min_halfwidth must be >= 0")
        if problems:
            raise InputError("invalid tracker config: " + "; ".join(problems))

    @property
    def zero_budget(self) -> int:
        """Longest tolerated trailing run of inferred-off frames."""
        return self.max_zero_bits + self.bit_errors

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "TrackerConfig":
        unknown = set(data) - set(_CONFIG_KEYS)
        if unknown:
            raise InputError(f"unknown tracker config keys: {sorted(unknown)}")
        kwargs = {_CONFIG_KEYS[k]: v for k, v in data.items()}
        if "max_displacement" in kwargs:
            dpx = kwargs["max_displacement"]
            if not isinstance(dpx, Sequence) or len(dpx) != 2:
                raise InputError("dpx_max must be a pair [dx, dy]")
            kwargs["max_displacement"] = tuple(dpx)
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise InputError(str(exc)) from exc

    def to_mapping(self) -> dict[str, Any]:
        out = {}
        for key, attr in _CONFIG_KEYS.items():
            value = getattr(self, attr)
            out[key] = list(value) if isinstance(value, tuple) else value
        return out


# published tracker settings per experiment group; "3-6" is the general default
PARAMETER_SETS: dict[str, TrackerConfig] = {
    "1+2": TrackerConfig(max_displacement=(0, 7), alpha=0.2, degree=1, eta=360, decay=1.0),
    "3-6": TrackerConfig(),
    "7": TrackerConfig(max_displacement=(6, 6), degree=3, eta=120),
}


@dataclass(frozen=True)
class DetectionFrame:
    """Anonymous image points extracted from one camera frame.

    ``labels`` is simulator ground truth: for each point the tuple of marker IDs
    that produced it (empty for clutter, two or more after an occlusion merge).
    """

    frame_index: int
    timestamp: float
    points: tuple[tuple[float, float], ...] = ()
    labels: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self) -> None:
        if self.labels is not None and len(self.labels) != len(self.points):
            raise InputError("labels must align with points")


@dataclass
class Buffer:
    """All live t-series of one tracker, oldest row first."""

    config: TrackerConfig
    series: list[TSeries] = field(default_factory=list)
    last_frame: int | None = None
    next_id: int = 0

    def spawn(self, p: PState) -> TSeries:
        s = append_pstate(TSeries(id=self.next_id), p)
        self.next_id += 1
        self.series.append(s)
        return s

    @property
    def stored_pstates(self) -> int:
        return sum(len(s.states) for s in self.series)
