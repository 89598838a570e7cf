"""Text file formats: configs and scenarios (YAML), streams and reports (CSV).

Every CSV starts with ``# key=value`` header lines, then a column header row.
"""

from __future__ import annotations

import csv
import io
import math
import os
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import yaml

from .baseline import NNConfig
from .errors import InputError
from .metrics import MetricsReport
from .model import DetectionFrame, TrackerConfig
from .simulator import (
    CameraModel,
    MarkerSpec,
    Scenario,
    TruthLog,
    trajectory_from_mapping,
    trajectory_to_mapping,
)
from .tracker import FrameResult

PathLike = str | os.PathLike


def _read_yaml(path: PathLike) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return yaml.safe_load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {os.fspath(path)}: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise InputError(f"{os.fspath(path)}: invalid YAML: {exc}") from exc


def _write_yaml(data: Any, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(data, fh, sort_keys=False)


# -- tracker configuration ---------------------------------------------------


def load_config(path: PathLike) -> TrackerConfig:
    data = _read_yaml(path)
    if not isinstance(data, dict):
        raise InputError(f"{os.fspath(path)}: expected a mapping of config keys")
    data = {k: v for k, v in data.items() if k != "nn"}
    try:
        return TrackerConfig.from_mapping(data)
    except InputError as exc:
        raise InputError(f"{os.fspath(path)}: {exc}") from None


def load_nn_config(path: PathLike) -> NNConfig:
    """NN settings from an ``nn:`` section, else derived from the tracker keys."""
    data = _read_yaml(path)
    if not isinstance(data, dict):
        raise InputError(f"{os.fspath(path)}: expected a mapping of config keys")
    if "nn" in data:
        section = data["nn"]
        if not isinstance(section, dict):
            raise InputError(f"{os.fspath(path)}: 'nn' must be a mapping")
        return NNConfig.from_mapping(section)
    if "gate_radius" in data:
        return NNConfig.from_mapping(data)
    return NNConfig.from_tracker_config(load_config(path))


def save_config(config: TrackerConfig, path: PathLike, nn: NNConfig | None = None) -> None:
    data = config.to_mapping()
    if nn is not None:
        data["nn"] = {"gate_radius": nn.gate_radius, "max_zero_run": nn.max_zero_run, "L_D": nn.L_D}
    _write_yaml(data, path)


# -- scenarios ---------------------------------------------------------------


def scenario_to_mapping(sc: Scenario) -> dict[str, Any]:
    cam = sc.camera
    return {
        "name": sc.name,
        "duration": sc.duration,
        "f": sc.f,
        "seed": sc.seed,
        "clutter_rate": sc.clutter_rate,
        "detection_noise_sigma": sc.detection_noise_sigma,
        "drop_probability": sc.drop_probability,
        "merge_radius": sc.merge_radius,
        "camera": {
            "resolution": list(cam.resolution),
            "focal_px": cam.focal_px,
            "principal_point": list(cam.principal_point),
            "position": list(cam.position),
            "yaw_deg": cam.yaw_deg,
            "pitch_deg": cam.pitch_deg,
        },
        "markers": [
            {
                "led_id": m.led_id,
                "phase": m.sequence_phase,
                "trajectory": trajectory_to_mapping(m.trajectory),
            }
            for m in sc.markers
        ],
    }


def scenario_from_mapping(data: Any, source: str = "<scenario>") -> Scenario:
    if not isinstance(data, dict):
        raise InputError(f"{source}: expected a mapping")
    data = dict(data)
    try:
        cam_data = dict(data.pop("camera", {}) or {})
        for key in ("resolution", "principal_point", "position"):
            if key in cam_data and cam_data[key] is not None:
                cam_data[key] = tuple(cam_data[key])
        camera = CameraModel(**cam_data)
        markers = []
        for m in data.pop("markers", []) or []:
            markers.append(
                MarkerSpec(
                    led_id=int(m["led_id"]),
                    trajectory=trajectory_from_mapping(m["trajectory"]),
                    sequence_phase=None if m.get("phase") is None else int(m["phase"]),
                )
            )
        return Scenario(camera=camera, markers=tuple(markers), **data)
    except InputError as exc:
        raise InputError(f"{source}: {exc}") from None
    except (TypeError, KeyError, ValueError) as exc:
        raise InputError(f"{source}: malformed scenario ({exc})") from exc


def load_scenario(path: PathLike) -> Scenario:
    return scenario_from_mapping(_read_yaml(path), os.fspath(path))


def save_scenario(sc: Scenario, path: PathLike) -> None:
    _write_yaml(scenario_to_mapping(sc), path)


# -- delimited text ----------------------------------------------------------


def _write_csv(
    path: PathLike, header: dict[str, str], columns: Sequence[str], rows: Iterable[Sequence[Any]]
) -> None:
    buf = io.StringIO()
    for key, value in header.items():
        buf.write(f"# {key}={value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _read_csv(path: PathLike, columns: Sequence[str]) -> tuple[dict[str, str], list[list[str]]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {os.fspath(path)}: {exc.strerror}") from exc
    header: dict[str, str] = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            header[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)
    rows = list(csv.reader(body))
    if not rows or [c.strip() for c in rows[0]][: len(columns)] != list(columns):
        raise InputError(f"{os.fspath(path)}: expected columns {','.join(columns)}")
    return header, rows[1:]


def _num(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.6f}"


DETECTION_COLUMNS = ("frame_index", "timestamp_s", "x_px", "y_px", "truth_marker_id")


def write_detections(path: PathLike, frames: Sequence[DetectionFrame], scenario: Scenario) -> None:
    header = {
        "scenario": scenario.name,
        "seed": str(scenario.seed),
        "f": repr(float(scenario.f)),
        "resolution": f"{scenario.camera.resolution[0]}x{scenario.camera.resolution[1]}",
        "n_frames": str(len(frames)),
    }

    def rows():
        for fr in frames:
            labels = fr.labels or [()] * len(fr.points)
            for (x, y), lbl in zip(fr.points, labels):
                yield fr.frame_index, f"{fr.timestamp:.6f}", _num(x), _num(y), ";".join(map(str, lbl))

    _write_csv(path, header, DETECTION_COLUMNS, rows())


def read_detections(path: PathLike) -> tuple[dict[str, str], list[DetectionFrame]]:
    header, rows = _read_csv(path, DETECTION_COLUMNS[:4])
    try:
        f = float(header["f"])
        n_frames = int(header["n_frames"])
    except (KeyError, ValueError) as exc:
        raise InputError(f"{os.fspath(path)}: header needs f and n_frames") from exc
    points: list[list[tuple[float, float]]] = [[] for _ in range(n_frames)]
    labels: list[list[tuple[int, ...]]] = [[] for _ in range(n_frames)]
    try:
        for row in rows:
            k = int(row[0])
            if not 0 <= k < n_frames:
                raise InputError(f"{os.fspath(path)}: frame {k} outside 0..{n_frames - 1}")
            points[k].append((float(row[2]), float(row[3])))
            lbl = row[4].strip() if len(row) > 4 else ""
            labels[k].append(tuple(int(v) for v in lbl.split(";")) if lbl else ())
    except (ValueError, IndexError) as exc:
        raise InputError(f"{os.fspath(path)}: malformed detection row ({exc})") from exc
    frames = [
        DetectionFrame(k, k / f, tuple(points[k]), tuple(labels[k])) for k in range(n_frames)
    ]
    return header, frames


TRUTH_COLUMNS = ("frame_index", "marker_id", "true_x", "true_y", "bit")


def write_truth(path: PathLike, truth: TruthLog, scenario: Scenario) -> None:
    header = {
        "scenario": scenario.name,
        "seed": str(scenario.seed),
        "f": repr(float(truth.f)),
        "resolution": f"{scenario.camera.resolution[0]}x{scenario.camera.resolution[1]}",
        "n_frames": str(truth.n_frames),
        "merge_radius": repr(float(truth.merge_radius)),
        "markers": ";".join(map(str, truth.marker_ids)),
    }

    def rows():
        for k in range(truth.n_frames):
            for j, led in enumerate(truth.marker_ids):
                x, y = truth.positions[k, j]
                yield k, led, _num(x), _num(y), int(truth.bits[k, j])

    _write_csv(path, header, TRUTH_COLUMNS, rows())


def read_truth(path: PathLike) -> tuple[dict[str, str], TruthLog]:
    header, rows = _read_csv(path, TRUTH_COLUMNS)
    try:
        f = float(header["f"])
        n_frames = int(header["n_frames"])
        merge_radius = float(header.get("merge_radius", "0"))
        ids = [int(v) for v in header.get("markers", "").split(";") if v]
        col = {led: j for j, led in enumerate(ids)}
        positions = np.full((n_frames, len(ids), 2), np.nan)
        bits = np.zeros((n_frames, len(ids)), dtype=np.int8)
        for row in rows:
            k, j = int(row[0]), col[int(row[1])]
            positions[k, j] = float(row[2]), float(row[3])
            bits[k, j] = int(row[4])
    except (KeyError, ValueError, IndexError) as exc:
        raise InputError(f"{os.fspath(path)}: malformed truth log ({exc})") from exc
    return header, TruthLog(ids, positions, bits, f, merge_radius)


IDENT_COLUMNS = ("frame_index", "timestamp_s", "led_id", "x_px", "y_px", "track_id")


def write_identifications(path: PathLike, results: Sequence[FrameResult], header: dict[str, str]) -> None:
    def rows():
        for r in results:
            for ident in r.identifications:
                yield r.frame_index, f"{r.timestamp:.6f}", ident.led_id, _num(ident.x), _num(ident.y), ident.track_id

    _write_csv(path, header, IDENT_COLUMNS, rows())


REPORT_COLUMNS = ("metric", "key", "value")


def write_report(path: PathLike, report: MetricsReport) -> None:
    _write_csv(path, report.header(), REPORT_COLUMNS, report.rows())


def read_report(path: PathLike) -> MetricsReport:
    header, rows = _read_csv(path, REPORT_COLUMNS)
    report = MetricsReport.from_rows(header, rows)
    timing = Path(path).with_name("timing.csv")
    if timing.exists():
        t_header, _ = _read_csv(timing, TIMING_COLUMNS)
        try:
            report.mean_frame_time = float(t_header.get("mean_frame_time_s", "nan"))
            report.p95_frame_time = float(t_header.get("p95_frame_time_s", "nan"))
        except ValueError as exc:
            raise InputError(f"{timing}: malformed timing header") from exc
    return report


TIMING_COLUMNS = ("frame_index", "processing_time_s", "buffer_rows", "stored_pstates")


def write_timing(path: PathLike, results: Sequence[FrameResult]) -> None:
    """Per-frame processing time and buffer occupancy; summary in the header."""
    times = np.array([r.processing_time for r in results], dtype=float)
    header = {
        "mean_frame_time_s": _num9(float(times.mean())) if times.size else "nan",
        "p95_frame_time_s": _num9(float(np.percentile(times, 95))) if times.size else "nan",
    }
    rows = (
        (r.frame_index, f"{r.processing_time:.9f}", r.buffer_rows, r.stored_pstates) for r in results
    )
    _write_csv(path, header, TIMING_COLUMNS, rows)


def _num9(x: float) -> str:
    return f"{x:.9f}"


COMPARE_COLUMNS = ("metric", "key", "a", "b", "ratio_a_over_b")


def write_comparison(path: PathLike | None, table: Sequence[Sequence[str]], header: dict[str, str]) -> str:
    buf = io.StringIO()
    for key, value in header.items():
        buf.write(f"# {key}={value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COMPARE_COLUMNS)
    writer.writerows(table)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
