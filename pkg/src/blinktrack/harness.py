"""End-to-end runs: simulate a scenario, track it, score it, write the files."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .baseline import NNConfig, NNTracker
from .codebook import BlinkDictionary, generate_dictionary, load_dictionary
from .errors import InputError
from .fileio import (
    load_config,
    load_nn_config,
    load_scenario,
    read_detections,
    read_truth,
    write_detections,
    write_identifications,
    write_report,
    write_timing,
    write_truth,
)
from .metrics import MetricsReport, compute_metrics
from .model import PARAMETER_SETS, DetectionFrame, TrackerConfig
from .scenarios import PRESETS, build_preset
from .simulator import Scenario, TruthLog, simulate
from .tracker import FrameResult, Tracker, check_buffer

__all__ = [
    "ALGORITHMS",
    "RunOutput",
    "default_dictionary",
    "resolve_scenario",
    "make_tracker",
    "track_frames",
    "simulate_to_files",
    "track_stream",
    "run_scenario",
]

ALGORITHMS = ("amt", "nn")

# how often (in frames) the full structural check walks the buffer
CHECK_INTERVAL = 60


def default_dictionary(errors: int = 0) -> BlinkDictionary:
    """Eight IDs of 18 bits with zero runs of at most 4, from a fixed seed."""
    return generate_dictionary(8, 18, max_zero_bits=4, errors=errors, seed=1)


def resolve_scenario(spec: str | os.PathLike, seed: int | None = None) -> tuple[Scenario, TrackerConfig]:
    """Load a scenario from a YAML path or a preset name.

    Returns the scenario (reseeded if ``seed`` is given) and the tracker
    configuration that goes with it by default.
    """
    path = Path(spec)
    if path.suffix in (".yaml", ".yml") or path.exists():
        if not path.exists():
            raise InputError(f"scenario file not found: {path}")
        scenario = load_scenario(path)
        config = PARAMETER_SETS["3-6"]
    elif str(spec) in PRESETS:
        scenario, config = build_preset(str(spec))
    else:
        raise InputError(f"{spec!r} is neither a scenario file nor a preset ({', '.join(sorted(PRESETS))})")
    if seed is not None:
        scenario = scenario.with_seed(seed)
    return scenario, config


def _load_dict(path: str | os.PathLike | None, errors: int) -> BlinkDictionary:
    if path is None:
        return default_dictionary(errors)
    if not Path(path).exists():
        raise InputError(f"dictionary file not found: {os.fspath(path)}")
    return load_dictionary(path, errors=errors)


def make_tracker(
    algorithm: str,
    dictionary_path: str | os.PathLike | None = None,
    config_path: str | os.PathLike | None = None,
    default_config: TrackerConfig | None = None,
) -> Tracker | NNTracker:
    """Build the requested tracker from optional config and dictionary files."""
    if algorithm not in ALGORITHMS:
        raise InputError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")
    if config_path is not None and not Path(config_path).exists():
        raise InputError(f"config file not found: {os.fspath(config_path)}")
    cfg = load_config(config_path) if config_path is not None else (default_config or TrackerConfig())
    dictionary = _load_dict(dictionary_path, cfg.bit_errors)
    if algorithm == "amt":
        return Tracker(cfg, dictionary)
    nn = load_nn_config(config_path) if config_path is not None else NNConfig.from_tracker_config(cfg)
    return NNTracker(nn, dictionary)


def track_frames(
    tracker: Tracker | NNTracker, frames: Sequence[DetectionFrame], check_interval: int = CHECK_INTERVAL
) -> list[FrameResult]:
    """Feed every frame through ``tracker``, checking buffer invariants as it goes."""
    results = []
    for frame in frames:
        results.append(tracker.process(frame))
        if check_interval and frame.frame_index % check_interval == 0:
            check_buffer(tracker.buffer)
    if frames:
        check_buffer(tracker.buffer)
    return results


@dataclass
class RunOutput:
    report: MetricsReport | None
    results: list[FrameResult]
    files: dict[str, Path]


def _write_run_files(
    out: Path,
    results: Sequence[FrameResult],
    header: dict[str, str],
    report: MetricsReport | None,
) -> dict[str, Path]:
    out.mkdir(parents=True, exist_ok=True)
    files = {"identifications": out / "identifications.csv", "timing": out / "timing.csv"}
    write_identifications(files["identifications"], results, header)
    write_timing(files["timing"], results)
    if report is not None:
        files["report"] = out / "report.csv"
        write_report(files["report"], report)
    return files


def simulate_to_files(
    scenario: Scenario, dictionary: BlinkDictionary, output_dir: str | os.PathLike
) -> tuple[list[DetectionFrame], TruthLog, dict[str, Path]]:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    frames, truth = simulate(scenario, dictionary)
    files = {"detections": out / "detections.csv", "truth": out / "truth.csv"}
    write_detections(files["detections"], frames, scenario)
    write_truth(files["truth"], truth, scenario)
    return frames, truth, files


def track_stream(
    stream_path: str | os.PathLike,
    dictionary_path: str | os.PathLike | None,
    config_path: str | os.PathLike | None,
    algorithm: str,
    output_dir: str | os.PathLike,
    truth_path: str | os.PathLike | None = None,
    tolerance_px: float = 3.0,
) -> RunOutput:
    """Track a recorded detection stream; score it when a truth log is available."""
    if not Path(stream_path).exists():
        raise InputError(f"detection stream not found: {os.fspath(stream_path)}")
    header, frames = read_detections(stream_path)
    tracker = make_tracker(algorithm, dictionary_path, config_path)
    results = track_frames(tracker, frames)
    if truth_path is None:
        sibling = Path(stream_path).with_name("truth.csv")
        truth_path = sibling if sibling.exists() else None
    report = None
    if truth_path is not None:
        if not Path(truth_path).exists():
            raise InputError(f"truth log not found: {os.fspath(truth_path)}")
        _, truth = read_truth(truth_path)
        report = compute_metrics(
            results,
            truth,
            tolerance_px,
            scenario=header.get("scenario", "stream"),
            algorithm=algorithm,
            seed=int(header.get("seed", 0)),
        )
    run_header = {
        "scenario": header.get("scenario", "stream"),
        "seed": header.get("seed", "0"),
        "algorithm": algorithm,
    }
    files = _write_run_files(Path(output_dir), results, run_header, report)
    return RunOutput(report, results, files)


def run_scenario(
    scenario_path: str | os.PathLike,
    config_path: str | os.PathLike | None,
    dictionary_path: str | os.PathLike | None,
    algorithm: str,
    output_dir: str | os.PathLike,
    seed: int | None = None,
    tolerance_px: float = 3.0,
) -> MetricsReport:
    """Simulate, track, score, and write every artefact into ``output_dir``.

    ``scenario_path`` may also name a built-in preset.
    """
    if tolerance_px <= 0:
        raise InputError("tolerance_px must be positive")
    scenario, preset_config = resolve_scenario(scenario_path, seed)
    tracker = make_tracker(algorithm, dictionary_path, config_path, preset_config)
    frames, truth, _ = simulate_to_files(scenario, tracker.dictionary, output_dir)
    results = track_frames(tracker, frames)
    report = compute_metrics(
        results, truth, tolerance_px, scenario=scenario.name, algorithm=algorithm, seed=scenario.seed
    )
    header = {"scenario": scenario.name, "seed": str(scenario.seed), "algorithm": algorithm}
    _write_run_files(Path(output_dir), results, header, report)
    return report
