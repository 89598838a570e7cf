"""Built-in scenario presets modelled on the seven outdoor flight experiments.

Geometry is camera-relative: the observer sits at the origin looking along +x,
so lateral (y) motion becomes horizontal image motion and vertical (z) or
depth motion becomes vertical image motion. Distances and speeds follow the
flight descriptions where those are given; everything else is a plausible
choice and the presets are approximations, not reproductions.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Callable

from .errors import InputError
from .model import PARAMETER_SETS, TrackerConfig
from .simulator import Circle, Hover, Linear, MarkerSpec, Scenario, Star, YawOrbit

__all__ = [
    "HORIZONTAL_LINE_CONFIG",
    "PRESETS",
    "PRESET_CONFIG",
    "build_preset",
    "crossing_scenario",
    "single_marker_scenario",
]


def crossing_scenario(seed: int = 0, clutter_rate: float = 0.0, duration: float = 60.0) -> Scenario:
    """Two markers sweeping 8 m across the view in opposite directions.

    The nearer marker (6 m) occludes the farther one (6.4 m) where their image
    paths intersect. The farther one flies slightly lower, so the two image
    rows differ by about 5 px: more than the local-search box but less than
    the merge radius. The nearer path is scaled by the depth ratio so both
    image paths have the same length and speed profile; the markers stay in
    antiphase and every pass causes exactly one short merge mid-image.
    """
    k = 6.0 / 6.4
    a = Linear(start=(6.0, 4.0 * k, 0.0), end=(6.0, -4.0 * k, 0.0), speed=1.54 * k, accel=2.0 * k)
    b = Linear(start=(6.4, -4.0, -0.06), end=(6.4, 4.0, -0.06), speed=1.54, accel=2.0)
    return Scenario(
        name="exp4_crossing",
        duration=duration,
        markers=(MarkerSpec(1, a, None), MarkerSpec(2, b, None)),
        clutter_rate=clutter_rate,
        merge_radius=8.0,
        seed=seed,
    )


def single_marker_scenario(px_per_frame: float, seed: int = 0, duration: float = 30.0) -> Scenario:
    """One marker 6 m away moving side to side with the given peak image speed.

    The move starts from rest with a 4 m/s^2 ramp, so a new track sees slow
    motion first, like a marker taking off.
    """
    depth, focal, f = 6.0, 500.0, 60.0
    speed = px_per_frame * f * depth / focal
    traj = Linear(start=(depth, 2.5, 0.0), end=(depth, -2.5, 0.0), speed=speed, accel=4.0)
    return Scenario(
        name=f"single_{px_per_frame:g}px",
        duration=duration,
        f=f,
        markers=(MarkerSpec(0, traj, None),),
        seed=seed,
    )


def _exp1(seed: int) -> Scenario:
    # both at camera height: a pure yaw then moves them along one image row,
    # which is what the zero-height local-search box of this parameter set expects
    near = YawOrbit(radius=4.0, bearing_deg=0.0, amplitude_deg=25.0, rate_deg=20.0)
    far = YawOrbit(radius=8.0, bearing_deg=10.0, amplitude_deg=25.0, rate_deg=20.0)
    return Scenario(
        name="exp1_yaw", markers=(MarkerSpec(0, near, None), MarkerSpec(1, far, None)), seed=seed
    )


def _exp2(seed: int) -> Scenario:
    a = Linear(start=(6.0, 4.0, 0.3), end=(6.0, -4.0, 0.3), speed=1.2)
    b = Linear(start=(7.0, 4.0, -0.3), end=(7.0, -4.0, -0.3), speed=1.2, t_offset=0.5)
    return Scenario(
        name="exp2_parallel", markers=(MarkerSpec(2, a, None), MarkerSpec(3, b, None)), seed=seed
    )


def _exp3(seed: int) -> Scenario:
    a = Linear(start=(4.0, 0.5, 1.2), end=(8.0, 0.5, 1.2), speed=1.5)
    b = Linear(start=(4.0, -0.5, -0.9), end=(8.0, -0.5, -0.9), speed=1.5)
    return Scenario(
        name="exp3_vertical", markers=(MarkerSpec(4, a, None), MarkerSpec(5, b, None)), seed=seed
    )


def _exp4(seed: int) -> Scenario:
    return crossing_scenario(seed)


def _exp5(seed: int) -> Scenario:
    a = Circle(center=(6.0, 0.0, 0.0), radius=1.0, speed=0.6)
    b = Circle(center=(6.5, 0.6, 0.2), radius=1.5, speed=1.44, phase_deg=90.0)
    return Scenario(
        name="exp5_circles",
        markers=(MarkerSpec(6, a, None), MarkerSpec(7, b, None)),
        merge_radius=3.0,
        seed=seed,
    )


def _exp6(seed: int) -> Scenario:
    a = Star(center=(7.0, 0.0, 0.0), scale=1.5, speed=2.22)
    b = Star(center=(7.5, 0.8, 0.2), scale=1.5, speed=1.63, t_offset=1.0)
    return Scenario(
        name="exp6_star", markers=(MarkerSpec(0, a, None), MarkerSpec(1, b, None)), seed=seed
    )


def _exp7(kind: str) -> Callable[[int], Scenario]:
    def build(seed: int) -> Scenario:
        if kind == "linear":
            traj = Linear(start=(4.0, 2.5, 0.0), end=(4.0, -2.5, 0.0), speed=5.43, accel=6.0)
        elif kind == "circle":
            # a circle has no run-up, so use the slower of the two speeds: a new
            # track has to be able to form with the fallback gate
            traj = Circle(center=(4.0, 0.0, 0.0), radius=1.5, speed=2.5)
        else:
            traj = Star(center=(4.0, 0.0, 0.0), scale=1.5, speed=5.43, accel=6.0)
        return Scenario(name=f"exp7_{kind}", markers=(MarkerSpec(3, traj, None),), seed=seed)

    return build


def _hover(seed: int) -> Scenario:
    return Scenario(
        name="hover", duration=10.0, markers=(MarkerSpec(0, Hover(point=(5.0, 0.0, 0.0)), 0),), seed=seed
    )


PRESETS: dict[str, Callable[[int], Scenario]] = {
    "exp1_yaw": _exp1,
    "exp2_parallel": _exp2,
    "exp3_vertical": _exp3,
    "exp4_crossing": _exp4,
    "exp5_circles": _exp5,
    "exp6_star": _exp6,
    "exp7_linear": _exp7("linear"),
    "exp7_circle": _exp7("circle"),
    "exp7_star": _exp7("star"),
    "hover": _hover,
}

# The "1+2" parameter set lists its box as [0, 7]. Read as (dx, dy) that is a
# zero-width box for motion that is purely horizontal, and the tracker cannot
# start a single track. The yaw and parallel presets therefore use the pair
# read the other way round.
HORIZONTAL_LINE_CONFIG = replace(PARAMETER_SETS["1+2"], max_displacement=(7, 0))

# tracker parameter set each preset was tuned for
PRESET_CONFIG: dict[str, TrackerConfig] = {
    "exp1_yaw": HORIZONTAL_LINE_CONFIG,
    "exp2_parallel": HORIZONTAL_LINE_CONFIG,
    "exp7_linear": PARAMETER_SETS["7"],
    "exp7_circle": PARAMETER_SETS["7"],
    "exp7_star": PARAMETER_SETS["7"],
}


def build_preset(name: str, seed: int = 0) -> tuple[Scenario, TrackerConfig]:
    """Scenario preset plus the tracker configuration it pairs with."""
    if name not in PRESETS:
        raise InputError(f"unknown scenario preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name](seed), PRESET_CONFIG.get(name, PARAMETER_SETS["3-6"])
