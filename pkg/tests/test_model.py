import pytest

from blinktrack.errors import FrameOrderError, InputError
from blinktrack.model import (
    PARAMETER_SETS,
    Buffer,
    DetectionFrame,
    PState,
    TrackerConfig,
    TSeries,
    append_pstate,
    on_states,
    trailing_zero_run,
)


def series_from_bits(bits, start=0, f=60.0, track_id=0):
    s = TSeries(id=track_id)
    for i, b in enumerate(bits):
        k = start + i
        append_pstate(s, PState(k / f, k, float(k), 2.0 * k, b))
    return s


def test_append_extends_by_one():
    s = series_from_bits([1] * 10)
    assert s.last_frame == 9
    append_pstate(s, PState(10 / 60, 10, 0.0, 0.0, 0))
    assert s.last_frame == 10 and len(s) == 11


def test_append_rejects_duplicate_and_gap():
    s = series_from_bits([1] * 10)
    with pytest.raises(FrameOrderError):
        append_pstate(s, PState(9 / 60, 9, 0.0, 0.0, 1))
    with pytest.raises(FrameOrderError):
        append_pstate(s, PState(11 / 60, 11, 0.0, 0.0, 1))
    assert len(s) == 10


def test_append_to_empty_series():
    s = append_pstate(TSeries(id=4), PState(0.0, 0, 1.0, 1.0, 1))
    assert len(s) == 1 and s.newest.state == 1


def test_append_rejects_non_bit_state():
    with pytest.raises(ValueError):
        append_pstate(TSeries(id=0), PState(0.0, 0, 1.0, 1.0, 2))


@pytest.mark.parametrize(
    "bits,expected",
    [([1, 0, 0, 1, 1], [0, 3, 4]), ([0, 0, 0], []), ([1] * 6, list(range(6)))],
)
def test_on_states_filters_in_order(bits, expected):
    s = series_from_bits(bits)
    assert on_states(s) == [(s.states[i].timestamp, s.states[i].x, s.states[i].y) for i in expected]


@pytest.mark.parametrize("bits,expected", [([1, 1, 0, 0, 0], 3), ([1, 0, 1], 0), ([0, 0], 2), ([], 0)])
def test_trailing_zero_run(bits, expected):
    assert trailing_zero_run(series_from_bits(bits)) == expected


def test_bit_cache_follows_trim():
    s = series_from_bits([1, 0, 1, 1, 0, 0, 1, 0])
    assert s.trim(5) == 3
    assert s.bit_list() == [1, 0, 0, 1, 0]
    assert s.window_bits(5) == 0b10010
    assert s.n_on == 2 and s.zero_run == 1
    assert s.last_on() is s.states[3]


def test_last_on_absent_for_all_zero_series():
    assert series_from_bits([0, 0, 0]).last_on() is None


def test_default_config_is_the_universal_set():
    cfg = TrackerConfig()
    assert cfg == PARAMETER_SETS["3-6"]
    assert cfg.series_length == 360 == cfg.eta * cfg.degree
    assert cfg.max_displacement == (3.0, 3.0)
    assert cfg.zero_budget == 10


def test_parameter_sets_keep_series_length_360():
    for cfg in PARAMETER_SETS.values():
        assert cfg.series_length == 360
        assert cfg.sequence_length == 18 and cfg.max_rows == 500


@pytest.mark.parametrize(
    "kwargs",
    [
        {"series_length": 100},
        {"eta": 2, "degree": 4},  # L_S = 8 < L_D
        {"alpha": 0.0},
        {"alpha": 1.0},
        {"degree": 0},
        {"decay": -1.0},
        {"frame_rate": 0.0},
        {"max_rows": 0},
        {"max_displacement": (-1, 3)},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(InputError):
        TrackerConfig(**kwargs)


def test_config_mapping_round_trip():
    cfg = PARAMETER_SETS["7"]
    assert TrackerConfig.from_mapping(cfg.to_mapping()) == cfg


def test_config_mapping_rejects_unknown_keys():
    with pytest.raises(InputError, match="unknown"):
        TrackerConfig.from_mapping({"f": 60, "speed": 3})


def test_detection_frame_labels_must_align():
    with pytest.raises(InputError):
        DetectionFrame(0, 0.0, ((1.0, 2.0),), ((), ()))


def test_buffer_spawn_assigns_fresh_ids():
    buf = Buffer(TrackerConfig())
    a = buf.spawn(PState(0.0, 0, 1.0, 1.0, 1))
    b = buf.spawn(PState(0.0, 0, 5.0, 1.0, 1))
    assert (a.id, b.id) == (0, 1)
    assert buf.stored_pstates == 2
