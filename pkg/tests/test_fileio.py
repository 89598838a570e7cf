from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from blinktrack.baseline import NNConfig
from blinktrack.codebook import load_dictionary
from blinktrack.errors import InputError
from blinktrack.fileio import (
    load_config,
    load_nn_config,
    load_scenario,
    read_detections,
    read_report,
    read_truth,
    save_config,
    save_scenario,
    write_detections,
    write_report,
    write_timing,
    write_truth,
)
from blinktrack.harness import default_dictionary
from blinktrack.metrics import compute_metrics
from blinktrack.model import PARAMETER_SETS
from blinktrack.scenarios import PRESETS, PRESET_CONFIG, build_preset
from blinktrack.simulator import simulate
from blinktrack.tracker import Tracker

DATA = Path(__file__).resolve().parents[1] / "data"


@pytest.mark.parametrize("name", sorted(PARAMETER_SETS))
def test_config_round_trip(tmp_path, name):
    cfg = PARAMETER_SETS[name]
    nn = NNConfig(5.5, 7, 18)
    save_config(cfg, tmp_path / "c.yaml", nn)
    assert load_config(tmp_path / "c.yaml") == cfg
    assert load_nn_config(tmp_path / "c.yaml") == nn


def test_nn_config_derived_without_section(tmp_path):
    save_config(PARAMETER_SETS["7"], tmp_path / "c.yaml")
    assert load_nn_config(tmp_path / "c.yaml") == NNConfig.from_tracker_config(PARAMETER_SETS["7"])


def test_shipped_configs_match_presets():
    assert load_config(DATA / "configs/params_exp3_6.yaml") == PARAMETER_SETS["3-6"]
    assert load_config(DATA / "configs/params_exp7.yaml") == PARAMETER_SETS["7"]
    assert load_config(DATA / "configs/params_exp1_2.yaml") == PARAMETER_SETS["1+2"]
    assert load_config(DATA / "configs/params_exp1_2_horizontal.yaml") == PRESET_CONFIG["exp1_yaw"]


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_shipped_scenarios_match_presets(tmp_path, name):
    scenario, _ = build_preset(name)
    assert load_scenario(DATA / f"scenarios/{name}.yaml") == scenario
    save_scenario(scenario, tmp_path / "s.yaml")
    assert load_scenario(tmp_path / "s.yaml") == scenario


@pytest.mark.parametrize(
    "text,msg",
    [
        ("f: [1, 2\n", "invalid YAML"),
        ("- 1\n- 2\n", "mapping"),
        ("alpha: 2.0\n", "alpha"),
        ("bogus: 1\n", "unknown"),
    ],
)
def test_bad_config_files(tmp_path, text, msg):
    p = tmp_path / "c.yaml"
    p.write_text(text)
    with pytest.raises(InputError, match=msg):
        load_config(p)


def test_bad_scenario_file(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text("duration: 1\nmarkers:\n  - led_id: 0\n    trajectory: {kind: blob}\n")
    with pytest.raises(InputError, match="s.yaml"):
        load_scenario(p)


def test_stream_and_truth_round_trip(tmp_path, dictionary):
    sc, _ = build_preset("exp4_crossing", seed=2)
    sc = replace(sc, duration=5.0, clutter_rate=3.0)
    frames, truth = simulate(sc, dictionary)
    write_detections(tmp_path / "d.csv", frames, sc)
    write_truth(tmp_path / "t.csv", truth, sc)
    header, back = read_detections(tmp_path / "d.csv")
    assert header["scenario"] == sc.name and header["resolution"] == "752x480"
    assert len(back) == len(frames)
    for a, b in zip(frames, back):
        assert a.frame_index == b.frame_index and a.labels == b.labels
        np.testing.assert_allclose(np.reshape(a.points, (-1, 2)), np.reshape(b.points, (-1, 2)), atol=1e-6)
    _, t2 = read_truth(tmp_path / "t.csv")
    assert t2.marker_ids == truth.marker_ids and t2.merge_radius == truth.merge_radius
    np.testing.assert_allclose(t2.positions, truth.positions, atol=1e-6)
    np.testing.assert_array_equal(t2.bits, truth.bits)


def test_report_round_trip(tmp_path, dictionary):
    sc, cfg = build_preset("exp5_circles", seed=1)
    sc = replace(sc, duration=5.0)
    frames, truth = simulate(sc, dictionary)
    tracker = Tracker(cfg, dictionary)
    results = [tracker.process(f) for f in frames]
    rep = compute_metrics(results, truth, scenario=sc.name, seed=sc.seed)
    write_report(tmp_path / "report.csv", rep)
    write_timing(tmp_path / "timing.csv", results)
    back = read_report(tmp_path / "report.csv")
    assert back.rows() == rep.rows() and back.header() == rep.header()
    assert back.mean_frame_time == pytest.approx(rep.mean_frame_time, abs=1e-9)


def test_wrong_columns_are_rejected(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("# f=60.0\n# n_frames=1\na,b,c\n")
    with pytest.raises(InputError, match="expected columns"):
        read_detections(p)


def test_malformed_detection_row(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("# f=60.0\n# n_frames=2\nframe_index,timestamp_s,x_px,y_px\n0,0.0,abc,1\n")
    with pytest.raises(InputError, match="malformed"):
        read_detections(p)


def test_detection_frame_out_of_range(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("# f=60.0\n# n_frames=2\nframe_index,timestamp_s,x_px,y_px\n5,0.0,1,1\n")
    with pytest.raises(InputError, match="outside"):
        read_detections(p)


def test_default_dictionary_file_matches_generator():
    assert load_dictionary(DATA / "dict/default.txt").entries == default_dictionary().entries
