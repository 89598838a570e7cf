"""Evaluation of identification streams against simulator ground truth."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError
from .simulator import TruthLog
from .tracker import FrameResult

__all__ = ["MetricsReport", "compute_metrics", "compare", "merge_events"]


@dataclass
class MetricsReport:
    """Summary of one tracking run.

    Timing fields come from wall-clock measurements and are therefore kept out
    of :meth:`rows`, which must be reproducible byte for byte.
    """

    scenario: str
    algorithm: str
    seed: int
    n_frames: int
    duration: float
    tolerance_px: float
    success_rate: dict[int, float] = field(default_factory=dict)
    correct_identifications: dict[int, int] = field(default_factory=dict)
    false_identifications: int = 0
    purity: float = 1.0
    zero_tracks: bool = True
    n_tracks: int = 0
    id_switch_count: int = 0
    merge_events: int = 0
    unrecovered_events: int = 0
    recovery_mean: float = math.nan
    recovery_max: float = math.nan
    rmse_px: float = math.nan
    peak_rows: int = 0
    peak_pstates: int = 0
    extended_frames: int = 0
    marker_ids: list[int] = field(default_factory=list)
    mean_frame_time: float = math.nan
    p95_frame_time: float = math.nan

    @property
    def mean_success_rate(self) -> float:
        """Mean identification rate over the scenario's true markers."""
        ids = self.marker_ids or sorted(self.success_rate)
        if not ids:
            return 0.0
        return float(np.mean([self.success_rate.get(i, 0.0) for i in ids]))

    def header(self) -> dict[str, str]:
        return {
            "scenario": self.scenario,
            "algorithm": self.algorithm,
            "seed": str(self.seed),
            "n_frames": str(self.n_frames),
            "duration_s": _fmt(self.duration),
            "tolerance_px": _fmt(self.tolerance_px),
            "markers": ";".join(map(str, self.marker_ids)),
        }

    def rows(self) -> list[tuple[str, str, str]]:
        out = [("success_rate", str(i), _fmt(v)) for i, v in sorted(self.success_rate.items())]
        out += [
            ("correct_identifications", str(i), str(v))
            for i, v in sorted(self.correct_identifications.items())
        ]
        out += [
            ("mean_success_rate", "", _fmt(self.mean_success_rate)),
            ("false_identifications", "", str(self.false_identifications)),
            ("purity", "", _fmt(self.purity)),
            ("zero_tracks", "", str(int(self.zero_tracks))),
            ("n_tracks", "", str(self.n_tracks)),
            ("id_switch_count", "", str(self.id_switch_count)),
            ("merge_events", "", str(self.merge_events)),
            ("unrecovered_events", "", str(self.unrecovered_events)),
            ("recovery_mean_frames", "", _fmt(self.recovery_mean)),
            ("recovery_max_frames", "", _fmt(self.recovery_max)),
            ("rmse_px", "", _fmt(self.rmse_px)),
            ("peak_rows", "", str(self.peak_rows)),
            ("peak_pstates", "", str(self.peak_pstates)),
            ("extended_frames", "", str(self.extended_frames)),
        ]
        return out

    def timing_rows(self) -> list[tuple[str, str, str]]:
        return [
            ("mean_frame_time_s", "", _fmt(self.mean_frame_time, 9)),
            ("p95_frame_time_s", "", _fmt(self.p95_frame_time, 9)),
        ]

    @classmethod
    def from_rows(cls, header: dict[str, str], rows: Iterable[Sequence[str]]) -> "MetricsReport":
        try:
            rep = cls(
                scenario=header["scenario"],
                algorithm=header["algorithm"],
                seed=int(header["seed"]),
                n_frames=int(header["n_frames"]),
                duration=float(header["duration_s"]),
                tolerance_px=float(header["tolerance_px"]),
                marker_ids=[int(x) for x in header.get("markers", "").split(";") if x],
            )
            scalar = {
                "false_identifications": ("false_identifications", int),
                "purity": ("purity", float),
                "zero_tracks": ("zero_tracks", lambda s: bool(int(s))),
                "n_tracks": ("n_tracks", int),
                "id_switch_count": ("id_switch_count", int),
                "merge_events": ("merge_events", int),
                "unrecovered_events": ("unrecovered_events", int),
                "recovery_mean_frames": ("recovery_mean", float),
                "recovery_max_frames": ("recovery_max", float),
                "rmse_px": ("rmse_px", float),
                "peak_rows": ("peak_rows", int),
                "peak_pstates": ("peak_pstates", int),
                "extended_frames": ("extended_frames", int),
                "mean_frame_time_s": ("mean_frame_time", float),
                "p95_frame_time_s": ("p95_frame_time", float),
            }
            for metric, key, value in rows:
                if metric == "success_rate":
                    rep.success_rate[int(key)] = float(value)
                elif metric == "correct_identifications":
                    rep.correct_identifications[int(key)] = int(value)
                elif metric in scalar:
                    attr, conv = scalar[metric]
                    setattr(rep, attr, conv(value))
        except (KeyError, ValueError) as exc:
            raise InputError(f"malformed metrics report: {exc}") from exc
        return rep


def _fmt(x: float, digits: int = 6) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{x:.{digits}f}"


def merge_events(truth: TruthLog) -> list[tuple[int, int, int]]:
    """Contiguous runs where two markers sit within the merge radius in the image.

    Returns ``(marker_col_a, marker_col_b, last_frame_of_run)`` per event.
    """
    pos = truth.positions
    events = []
    n_markers = pos.shape[1]
    for a in range(n_markers):
        for b in range(a + 1, n_markers):
            d = np.hypot(*(pos[:, a] - pos[:, b]).T)
            close = np.nan_to_num(d, nan=np.inf) <= truth.merge_radius
            # a run ends where close flips True -> False (or at the last frame)
            ends = np.flatnonzero(close & ~np.append(close[1:], False))
            events.extend((a, b, int(k)) for k in ends)
    return events


def compute_metrics(
    results: Sequence[FrameResult],
    truth: TruthLog,
    tolerance_px: float = 3.0,
    scenario: str = "scenario",
    algorithm: str = "amt",
    seed: int = 0,
) -> MetricsReport:
    """Score a run.

    An identification is correct when its ID belongs to a true marker whose
    projected position on that frame lies within ``tolerance_px``. Track purity
    labels each state-1 observation with the nearest true marker inside the
    tolerance; when several markers are that close (an occlusion) the track's
    majority marker is accepted if it is among them.
    """
    if len(results) != truth.n_frames or any(r.frame_index != k for k, r in enumerate(results)):
        raise InputError(
            f"results cover {len(results)} frames but the truth log covers {truth.n_frames}"
        )
    col = {led: j for j, led in enumerate(truth.marker_ids)}
    pos = truth.positions
    report = MetricsReport(
        scenario=scenario,
        algorithm=algorithm,
        seed=seed,
        n_frames=truth.n_frames,
        duration=truth.duration,
        tolerance_px=tolerance_px,
        marker_ids=list(truth.marker_ids),
    )

    correct: Counter[int] = Counter()
    correct_frames: dict[int, list[int]] = defaultdict(list)
    sq_err = []
    reported = set()
    for r in results:
        for ident in r.identifications:
            reported.add(ident.led_id)
            j = col.get(ident.led_id)
            if j is None or np.isnan(pos[r.frame_index, j, 0]):
                report.false_identifications += 1
                continue
            err = math.hypot(ident.x - pos[r.frame_index, j, 0], ident.y - pos[r.frame_index, j, 1])
            sq_err.append(err * err)
            if err <= tolerance_px:
                correct[ident.led_id] += 1
                correct_frames[ident.led_id].append(r.frame_index)
            else:
                report.false_identifications += 1
    for led in sorted(set(truth.marker_ids) | reported):
        report.correct_identifications[led] = correct[led]
        report.success_rate[led] = correct[led] / truth.duration
    report.rmse_px = math.sqrt(float(np.mean(sq_err))) if sq_err else math.nan

    _score_tracks(results, truth, tolerance_px, report)

    recoveries = []
    for a, b, end in merge_events(truth):
        if end >= truth.n_frames - 1:
            continue
        report.merge_events += 1
        firsts = []
        for led in (truth.marker_ids[a], truth.marker_ids[b]):
            later = [k for k in correct_frames.get(led, []) if k > end]
            firsts.append(later[0] if later else None)
        if None in firsts:
            report.unrecovered_events += 1
        else:
            recoveries.append(max(firsts) - end)
    if recoveries:
        report.recovery_mean = float(np.mean(recoveries))
        report.recovery_max = float(max(recoveries))

    times = np.array([r.processing_time for r in results])
    if times.size:
        report.mean_frame_time = float(times.mean())
        report.p95_frame_time = float(np.percentile(times, 95))
    report.peak_rows = max((r.buffer_rows for r in results), default=0)
    report.peak_pstates = max((r.stored_pstates for r in results), default=0)
    report.extended_frames = sum(1 for r in results if r.extended_invoked)
    return report


def _score_tracks(
    results: Sequence[FrameResult], truth: TruthLog, tol: float, report: MetricsReport
) -> None:
    tracks: dict[int, list[tuple[int, float, float]]] = defaultdict(list)
    for r in results:
        for tid, x, y in r.observations:
            tracks[tid].append((r.frame_index, x, y))

    pos = truth.positions
    weighted, total, switches, n_tracks = 0.0, 0, 0, 0
    for tid in sorted(tracks):
        obs = tracks[tid]
        cands = []
        for k, x, y in obs:
            d = np.hypot(pos[k, :, 0] - x, pos[k, :, 1] - y)
            close = [int(j) for j in np.argsort(np.nan_to_num(d, nan=np.inf)) if d[j] <= tol]
            cands.append(close)
        nearest = [c[0] for c in cands if c]
        if not nearest:
            continue  # clutter-only track
        majority = Counter(nearest).most_common(1)[0][0]
        labels = [majority if majority in c else (c[0] if c else None) for c in cands]
        hits = sum(1 for lbl in labels if lbl == majority)
        weighted += hits
        total += len(obs)
        n_tracks += 1
        seq = [lbl for lbl in labels if lbl is not None]
        switches += sum(1 for p, q in zip(seq, seq[1:]) if p != q)
    report.n_tracks = n_tracks
    report.zero_tracks = n_tracks == 0
    report.purity = weighted / total if total else 1.0
    report.id_switch_count = switches


def _ratio(a: float, b: float) -> float:
    if a == b or (math.isnan(a) and math.isnan(b)):
        return 1.0
    if b == 0 or math.isnan(a) or math.isnan(b):
        return math.inf if b == 0 and a > 0 else math.nan
    return a / b


def compare(a: MetricsReport, b: MetricsReport) -> list[tuple[str, str, str, str, str]]:
    """Side-by-side table ``(metric, key, a, b, a/b)`` for two runs of one scenario."""
    if (a.scenario, a.seed, a.n_frames) != (b.scenario, b.seed, b.n_frames):
        raise InputError(
            f"reports come from different scenarios: {a.scenario}/seed {a.seed} "
            f"vs {b.scenario}/seed {b.seed}"
        )
    table = []
    for led in sorted(set(a.success_rate) | set(b.success_rate)):
        va, vb = a.success_rate.get(led, 0.0), b.success_rate.get(led, 0.0)
        table.append(("success_rate", str(led), _fmt(va), _fmt(vb), _fmt(_ratio(va, vb))))
    scalars = [
        ("mean_success_rate", a.mean_success_rate, b.mean_success_rate),
        ("purity", a.purity, b.purity),
        ("id_switch_count", a.id_switch_count, b.id_switch_count),
        ("unrecovered_events", a.unrecovered_events, b.unrecovered_events),
        ("recovery_mean_frames", a.recovery_mean, b.recovery_mean),
        ("rmse_px", a.rmse_px, b.rmse_px),
        ("peak_rows", a.peak_rows, b.peak_rows),
        ("peak_pstates", a.peak_pstates, b.peak_pstates),
        ("mean_frame_time_s", a.mean_frame_time, b.mean_frame_time),
        ("p95_frame_time_s", a.p95_frame_time, b.p95_frame_time),
    ]
    for name, va, vb in scalars:
        digits = 9 if name.endswith("_s") else 6
        va, vb = float(va), float(vb)
        table.append((name, "", _fmt(va, digits), _fmt(vb, digits), _fmt(_ratio(va, vb))))
    return table
