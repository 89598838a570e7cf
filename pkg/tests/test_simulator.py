import math

import numpy as np
import pytest

from blinktrack.codebook import BlinkDictionary
from blinktrack.errors import InputError
from blinktrack.scenarios import PRESETS, crossing_scenario
from blinktrack.simulator import (
    CameraModel,
    Circle,
    Hover,
    Linear,
    MarkerSpec,
    Scenario,
    Star,
    YawOrbit,
    blink_state,
    project,
    resolve_phases,
    simulate,
    trajectory_from_mapping,
    trajectory_position,
    trajectory_to_mapping,
)

ALWAYS_ON = BlinkDictionary({0: [1] * 18, 1: [1] * 9 + [0] * 9}, max_zero_bits=9)
CAM = CameraModel()


# -- camera --------------------------------------------------------------------


def test_default_camera_geometry():
    assert CAM.resolution == (752, 480)
    assert CAM.principal_point == (376.0, 240.0)


@pytest.mark.parametrize("depth", [0.5, 5.0, 40.0])
def test_optical_axis_hits_principal_point(depth):
    assert project(CAM, (depth, 0.0, 0.0)) == pytest.approx((376.0, 240.0))


def test_point_behind_camera_is_invisible():
    assert project(CAM, (-5.0, 0.0, 0.0)) is None
    assert project(CAM, (0.0, 1.0, 0.0)) is None


def test_point_outside_image_is_invisible():
    assert project(CAM, (1.0, -5.0, 0.0)) is None


def test_lateral_offset_arithmetic():
    # 500 px * 1 m / 4 m
    x, y = project(CAM, (4.0, -1.0, 0.0))
    assert (x - 376.0, y - 240.0) == pytest.approx((125.0, 0.0))
    x, y = project(CAM, (4.0, 0.0, 1.0))
    assert (x - 376.0, y - 240.0) == pytest.approx((0.0, -125.0))


def test_yawed_camera_keeps_axis_on_principal_point():
    cam = CameraModel(yaw_deg=90.0, position=(1.0, 2.0, 0.5))
    assert project(cam, (1.0, 7.0, 0.5)) == pytest.approx(cam.principal_point)


# -- trajectories --------------------------------------------------------------


def test_circle_is_periodic_with_fixed_radius():
    c = Circle(center=(6.0, 0.0, 0.0), radius=1.0, speed=0.6)
    period = 2 * math.pi * 1.0 / 0.6
    np.testing.assert_allclose(c.position(0.0), c.position(period), atol=1e-12)
    for t in np.linspace(0, period, 37):
        assert np.linalg.norm(c.position(t) - np.array(c.center)) == pytest.approx(1.0)


def test_hover_is_constant():
    h = Hover(point=(5.0, 0.3, -0.2))
    for t in (0.0, 1.5, 100.0):
        np.testing.assert_array_equal(trajectory_position(h, t), [5.0, 0.3, -0.2])


def test_linear_reaches_both_ends_and_returns():
    lin = Linear(start=(6, -1, 0), end=(6, 1, 0), speed=1.0, accel=2.0)
    leg = 2.0 / 1.0 + 1.0 / 2.0  # cruise time plus one ramp
    np.testing.assert_allclose(lin.position(0.0), [6, -1, 0])
    np.testing.assert_allclose(lin.position(leg), [6, 1, 0], atol=1e-12)
    np.testing.assert_allclose(lin.position(2 * leg), [6, -1, 0], atol=1e-12)


TRAJECTORIES = [
    Linear(start=(6, -4, 0), end=(6, 4, 0), speed=1.54, accel=2.0),
    Linear(start=(6, 0, 0), end=(6, 0.5, 0), speed=3.0, accel=2.0),  # never reaches cruise
    Circle(radius=1.5, speed=0.9),
    Star(scale=1.5, speed=1.5),
    YawOrbit(radius=8.0, amplitude_deg=25, rate_deg=20),
]


@pytest.mark.parametrize("traj", TRAJECTORIES, ids=lambda t: t.kind)
def test_speed_never_exceeds_configured_maximum(traj):
    f = 60.0
    t = np.arange(0, 40, 1 / f)
    pos = np.array([traj.position(x) for x in t])
    speed = np.linalg.norm(np.diff(pos, axis=0), axis=1) * f
    assert speed.max() <= traj.max_speed * 1.01
    assert speed.max() >= traj.max_speed * 0.9  # the bound is actually reached


@pytest.mark.parametrize("traj", TRAJECTORIES, ids=lambda t: t.kind)
def test_trajectory_mapping_round_trip(traj):
    assert trajectory_from_mapping(trajectory_to_mapping(traj)) == traj


def test_trajectory_mapping_errors():
    with pytest.raises(InputError, match="unknown trajectory"):
        trajectory_from_mapping({"kind": "spiral"})
    with pytest.raises(InputError, match="speed"):
        trajectory_from_mapping({"kind": "circle", "speed": -1})


# -- blink states --------------------------------------------------------------


def test_blink_state_indexing():
    d = BlinkDictionary({7: [1, 0, 1, 1]})
    assert blink_state(d, 7, 0, 1) == 0
    for k in range(12):
        assert blink_state(d, 7, 0, k) == blink_state(d, 7, 0, k + 4)
        for p in range(4):
            assert blink_state(d, 7, p, k) == blink_state(d, 7, 0, k + p)
    with pytest.raises(KeyError):
        blink_state(d, 1, 0, 0)


def test_random_phases_come_from_the_seed(dictionary):
    sc = Scenario(duration=1, markers=(MarkerSpec(0, Hover(), None), MarkerSpec(1, Hover(), 5)))
    p1 = resolve_phases(sc, dictionary)
    assert p1 == resolve_phases(sc, dictionary) and p1[1] == 5
    assert {tuple(resolve_phases(sc.with_seed(s), dictionary)) for s in range(10)} != {tuple(p1)}


# -- simulate ------------------------------------------------------------------


def hover_scenario(**kw):
    return Scenario(duration=2.0, markers=(MarkerSpec(0, Hover((5.0, 0.4, 0.2))),), **kw)


def test_noiseless_hover_gives_one_exact_detection_per_frame():
    frames, truth = simulate(hover_scenario(), ALWAYS_ON)
    expected = project(CAM, (5.0, 0.4, 0.2))
    assert len(frames) == 120
    for k, fr in enumerate(frames):
        assert fr.frame_index == k and fr.timestamp == k / 60.0
        assert fr.points == (pytest.approx(expected),)
        assert fr.labels == ((0,),)
    np.testing.assert_allclose(truth.positions[:, 0], np.tile(expected, (120, 1)))


def test_off_bits_emit_nothing():
    sc = Scenario(duration=1.0, markers=(MarkerSpec(1, Hover((5.0, 0.0, 0.0))),))
    frames, truth = simulate(sc, ALWAYS_ON)
    for k, fr in enumerate(frames):
        assert len(fr.points) == (1 if k % 18 < 9 else 0)
        assert truth.bits[k, 0] == (1 if k % 18 < 9 else 0)
    # the truth log keeps positions whether or not the marker is lit
    assert not np.isnan(truth.positions).any()


def test_noiseless_detections_sit_on_truth(dictionary):
    frames, truth = simulate(PRESETS["exp5_circles"](3), dictionary)
    col = {led: j for j, led in enumerate(truth.marker_ids)}
    checked = 0
    for fr in frames:
        for (x, y), labels in zip(fr.points, fr.labels):
            if labels:
                np.testing.assert_allclose((x, y), truth.positions[fr.frame_index, col[labels[0]]])
                checked += 1
    assert checked > 1000


def test_crossing_merges_into_one_detection():
    # both markers sweep the same image line from opposite ends and meet mid-way
    a = Linear(start=(5, -1, 0), end=(5, 1, 0), speed=0.5, accel=1.0)
    b = Linear(start=(6, 1.2, 0), end=(6, -1.2, 0), speed=0.6, accel=1.2)
    sc = Scenario(duration=5.0, markers=(MarkerSpec(0, a), MarkerSpec(1, b)), merge_radius=4.0)
    frames, truth = simulate(sc, ALWAYS_ON)
    gap = np.hypot(*(truth.positions[:, 0] - truth.positions[:, 1]).T)
    merged = np.flatnonzero(gap <= 4.0)
    assert merged.size > 0
    for k in merged:
        both_lit = truth.bits[k].all()
        if both_lit:
            assert len(frames[k].points) == 1
            # the nearer marker (depth 5 m) survives, both labels are kept
            assert frames[k].labels == ((0, 1),)
            np.testing.assert_allclose(frames[k].points[0], truth.positions[k, 0])
    far = np.flatnonzero((gap > 4.0) & truth.bits.all(axis=1))
    assert all(len(frames[k].points) == 2 for k in far)


def test_clutter_count_matches_rate():
    sc = Scenario(duration=200.0, f=50.0, clutter_rate=2.0, seed=4)
    frames, _ = simulate(sc, ALWAYS_ON)
    counts = np.array([len(f.points) for f in frames])
    assert counts.size == 10_000
    se = math.sqrt(2.0 / counts.size)
    assert abs(counts.mean() - 2.0) <= 3 * se
    assert all(CAM.in_bounds(x, y) for f in frames for x, y in f.points)


def test_noise_and_drops_stay_in_bounds():
    frames, _ = simulate(hover_scenario(detection_noise_sigma=2.0, drop_probability=0.3, seed=1), ALWAYS_ON)
    n = sum(len(f.points) for f in frames)
    assert 60 < n < 110
    assert all(CAM.in_bounds(x, y) for f in frames for x, y in f.points)


def test_simulation_is_deterministic(dictionary):
    sc = crossing_scenario(seed=5, clutter_rate=5.0, duration=10)
    a, ta = simulate(sc, dictionary)
    b, tb = simulate(sc, dictionary)
    assert a == b
    np.testing.assert_array_equal(ta.positions, tb.positions)
    c, _ = simulate(sc.with_seed(6), dictionary)
    assert c != a


@pytest.mark.parametrize(
    "kwargs",
    [
        {"duration": 1.01},  # 60.6 frames
        {"drop_probability": 1.0},
        {"clutter_rate": -1.0},
        {"markers": (MarkerSpec(0, Hover()), MarkerSpec(0, Hover()))},
    ],
)
def test_scenario_validation(kwargs):
    with pytest.raises(InputError):
        Scenario(**kwargs)


def test_unknown_marker_id_is_rejected():
    sc = Scenario(duration=1, markers=(MarkerSpec(42, Hover()),))
    with pytest.raises(InputError, match="42"):
        simulate(sc, ALWAYS_ON)
