"""Deterministic synthetic scenes: marker trajectories, blinking, pinhole projection.

World frame: x forward, y left, z up (metres). The camera looks along its own
+x axis after applying yaw (about z) and pitch (about y, positive looks up).
Image coordinates: u to the right, v down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .codebook import BlinkDictionary
from .errors import InputError
from .model import DetectionFrame

__all__ = [
    "CameraModel",
    "Trajectory",
    "Hover",
    "Linear",
    "Circle",
    "Star",
    "YawOrbit",
    "MarkerSpec",
    "Scenario",
    "TruthLog",
    "trajectory_position",
    "project",
    "blink_state",
    "simulate",
    "trapezoid_profile",
]

DEFAULT_ACCEL = 2.0  # m/s^2 for linear segments


@dataclass(frozen=True)
class CameraModel:
    resolution: tuple[int, int] = (752, 480)
    focal_px: float = 500.0
    principal_point: tuple[float, float] | None = None
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    yaw_deg: float = 0.0
    pitch_deg: float = 0.0

    def __post_init__(self) -> None:
        if self.principal_point is None:
            w, h = self.resolution
            object.__setattr__(self, "principal_point", (w / 2.0, h / 2.0))
        if self.focal_px <= 0:
            raise InputError("focal_px must be positive")

    def to_camera(self, world: Sequence[float]) -> tuple[float, float, float]:
        """World point to (right, down, forward) camera coordinates."""
        rel = np.subtract(world, self.position)
        cy, sy = math.cos(math.radians(self.yaw_deg)), math.sin(math.radians(self.yaw_deg))
        # undo yaw
        fx = cy * rel[0] + sy * rel[1]
        ly = -sy * rel[0] + cy * rel[1]
        uz = rel[2]
        cp, sp = math.cos(math.radians(self.pitch_deg)), math.sin(math.radians(self.pitch_deg))
        fwd = cp * fx + sp * uz
        up = -sp * fx + cp * uz
        return -ly, -up, fwd

    def in_bounds(self, x: float, y: float) -> bool:
        w, h = self.resolution
        return 0.0 <= x <= w - 1 and 0.0 <= y <= h - 1


def _project(camera: CameraModel, world: Sequence[float]) -> tuple[float, float, float] | None:
    right, down, depth = camera.to_camera(world)
    if depth <= 1e-9:
        return None
    cx, cy = camera.principal_point
    x = cx + camera.focal_px * right / depth
    y = cy + camera.focal_px * down / depth
    if not camera.in_bounds(x, y):
        return None
    return x, y, depth


def project(camera: CameraModel, world: Sequence[float]) -> tuple[float, float] | None:
    """Pinhole projection; None if behind the camera or outside the image."""
    hit = _project(camera, world)
    return None if hit is None else hit[:2]


def trapezoid_profile(length: float, v_max: float, accel: float) -> tuple[float, float]:
    """Duration and peak speed of a rest-to-rest move over ``length``."""
    if length <= 0:
        return 0.0, 0.0
    if v_max <= 0 or accel <= 0:
        raise InputError("speed and acceleration must be positive for a moving segment")
    if length >= v_max * v_max / accel:
        return length / v_max + v_max / accel, v_max
    peak = math.sqrt(accel * length)
    return 2.0 * peak / accel, peak


def _trapezoid_distance(tau: float, length: float, v_max: float, accel: float) -> float:
    duration, peak = trapezoid_profile(length, v_max, accel)
    t_acc = peak / accel
    tau = min(max(tau, 0.0), duration)
    if tau < t_acc:
        return 0.5 * accel * tau * tau
    if tau <= duration - t_acc:
        return 0.5 * accel * t_acc * t_acc + peak * (tau - t_acc)
    rem = duration - tau
    return length - 0.5 * accel * rem * rem


def _polyline_position(points: np.ndarray, v_max: float, accel: float, t: float) -> np.ndarray:
    # closed loop through ``points``, stopping at every vertex
    segs = [(points[i], points[(i + 1) % len(points)]) for i in range(len(points))]
    lengths = [float(np.linalg.norm(b - a)) for a, b in segs]
    durations = [trapezoid_profile(L, v_max, accel)[0] for L in lengths]
    period = sum(durations)
    if period == 0:
        return points[0].copy()
    tau = t % period
    for (a, b), L, dur in zip(segs, lengths, durations):
        if tau <= dur:
            if L == 0:
                return a.copy()
            s = _trapezoid_distance(tau, L, v_max, accel)
            return a + (b - a) * (s / L)
        tau -= dur
    return points[0].copy()


def _plane_axes(plane: str) -> tuple[np.ndarray, np.ndarray]:
    axes = {"x": np.array([1.0, 0, 0]), "y": np.array([0, 1.0, 0]), "z": np.array([0, 0, 1.0])}
    if len(plane) != 2 or any(c not in axes for c in plane) or plane[0] == plane[1]:
        raise InputError(f"plane must be two distinct axes like 'yz', got {plane!r}")
    return axes[plane[0]], axes[plane[1]]


@dataclass(frozen=True)
class Trajectory:
    kind = "abstract"
    t_offset: float = field(default=0.0, kw_only=True)

    def position(self, t: float) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    @property
    def max_speed(self) -> float:  # pragma: no cover - interface
        raise NotImplementedError


@dataclass(frozen=True)
class Hover(Trajectory):
    kind = "hover"
    point: tuple[float, float, float] = (5.0, 0.0, 0.0)

    def position(self, t: float) -> np.ndarray:
        return np.asarray(self.point, dtype=float)

    @property
    def max_speed(self) -> float:
        return 0.0


@dataclass(frozen=True)
class Linear(Trajectory):
    """Back-and-forth between two endpoints with a trapezoidal speed profile."""

    kind = "linear"
    start: tuple[float, float, float] = (6.0, -4.0, 0.0)
    end: tuple[float, float, float] = (6.0, 4.0, 0.0)
    speed: float = 1.0
    accel: float = DEFAULT_ACCEL

    def position(self, t: float) -> np.ndarray:
        pts = np.array([self.start, self.end], dtype=float)
        return _polyline_position(pts, self.speed, self.accel, t + self.t_offset)

    @property
    def max_speed(self) -> float:
        length = float(np.linalg.norm(np.subtract(self.end, self.start)))
        return trapezoid_profile(length, self.speed, self.accel)[1]


@dataclass(frozen=True)
class Circle(Trajectory):
    kind = "circle"
    center: tuple[float, float, float] = (6.0, 0.0, 0.0)
    radius: float = 1.0
    speed: float = 0.6
    plane: str = "yz"
    phase_deg: float = 0.0

    def position(self, t: float) -> np.ndarray:
        a, b = _plane_axes(self.plane)
        ang = math.radians(self.phase_deg) + (t + self.t_offset) * self.speed / self.radius
        return np.asarray(self.center, float) + self.radius * (math.cos(ang) * a + math.sin(ang) * b)

    @property
    def max_speed(self) -> float:
        return self.speed


@dataclass(frozen=True)
class Star(Trajectory):
    """Pentagram through five vertices on a circle of radius ``scale``, stopping at each."""

    kind = "star"
    center: tuple[float, float, float] = (6.0, 0.0, 0.0)
    scale: float = 1.5
    speed: float = 1.5
    accel: float = DEFAULT_ACCEL
    plane: str = "yz"

    def vertices(self) -> np.ndarray:
        a, b = _plane_axes(self.plane)
        c = np.asarray(self.center, float)
        ring = [
            c + self.scale * (math.cos(th) * a + math.sin(th) * b)
            for th in (math.pi / 2 + 2 * math.pi * k / 5 for k in range(5))
        ]
        return np.array([ring[i] for i in (0, 2, 4, 1, 3)])

    def position(self, t: float) -> np.ndarray:
        return _polyline_position(self.vertices(), self.speed, self.accel, t + self.t_offset)

    @property
    def max_speed(self) -> float:
        v = self.vertices()
        length = float(np.linalg.norm(v[1] - v[0]))
        return trapezoid_profile(length, self.speed, self.accel)[1]


@dataclass(frozen=True)
class YawOrbit(Trajectory):
    """Apparent motion of a hovering marker while the observer yaws back and forth.

    The bearing swings between ``bearing_deg +- amplitude_deg`` with a trapezoidal
    angular-rate profile; the marker stays at ``radius`` from ``center``.
    """

    kind = "yaw_orbit"
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    radius: float = 4.0
    height: float = 0.0
    bearing_deg: float = 0.0
    amplitude_deg: float = 20.0
    rate_deg: float = 30.0
    accel_deg: float = 60.0

    def position(self, t: float) -> np.ndarray:
        lo = self.bearing_deg - self.amplitude_deg
        hi = self.bearing_deg + self.amplitude_deg
        ends = np.array([[lo], [hi]])
        ang = math.radians(float(_polyline_position(ends, self.rate_deg, self.accel_deg, t + self.t_offset)[0]))
        c = np.asarray(self.center, float)
        return c + np.array([self.radius * math.cos(ang), self.radius * math.sin(ang), self.height])

    @property
    def max_speed(self) -> float:
        peak = trapezoid_profile(2 * self.amplitude_deg, self.rate_deg, self.accel_deg)[1]
        return self.radius * math.radians(peak)


TRAJECTORY_KINDS: dict[str, type[Trajectory]] = {
    cls.kind: cls for cls in (Hover, Linear, Circle, Star, YawOrbit)
}


def trajectory_from_mapping(data: dict[str, Any]) -> Trajectory:
    data = dict(data)
    kind = data.pop("kind", None)
    if kind not in TRAJECTORY_KINDS:
        raise InputError(f"unknown trajectory kind {kind!r}; choose from {sorted(TRAJECTORY_KINDS)}")
    cls = TRAJECTORY_KINDS[kind]
    for key, value in list(data.items()):
        if isinstance(value, list):
            data[key] = tuple(value)
    try:
        traj = cls(**data)
    except TypeError as exc:
        raise InputError(f"{kind} trajectory: {exc}") from exc
    for name in ("speed", "radius", "scale", "accel", "rate_deg", "accel_deg"):
        if getattr(traj, name, 1.0) < 0:
            raise InputError(f"{kind} trajectory: {name} must be >= 0")
    return traj


def trajectory_to_mapping(traj: Trajectory) -> dict[str, Any]:
    out: dict[str, Any] = {"kind": traj.kind}
    for name in traj.__dataclass_fields__:
        value = getattr(traj, name)
        out[name] = list(value) if isinstance(value, tuple) else value
    return out


@dataclass(frozen=True)
class MarkerSpec:
    """One blinking marker. ``sequence_phase=None`` draws the phase from the scenario seed."""

    led_id: int
    trajectory: Trajectory
    sequence_phase: int | None = 0


@dataclass(frozen=True)
class Scenario:
    name: str = "scenario"
    duration: float = 60.0
    f: float = 60.0
    camera: CameraModel = field(default_factory=CameraModel)
    markers: tuple[MarkerSpec, ...] = ()
    clutter_rate: float = 0.0
    detection_noise_sigma: float = 0.0
    drop_probability: float = 0.0
    merge_radius: float = 3.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.f <= 0 or self.duration <= 0:
            raise InputError("duration and f must be positive")
        n = self.duration * self.f
        if abs(n - round(n)) > 1e-6:
            raise InputError(f"duration*f = {n} is not an integer frame count")
        if not 0.0 <= self.drop_probability < 1.0:
            raise InputError("drop_probability must lie in [0, 1)")
        if self.clutter_rate < 0 or self.detection_noise_sigma < 0 or self.merge_radius < 0:
            raise InputError("clutter_rate, detection_noise_sigma and merge_radius must be >= 0")
        ids = [m.led_id for m in self.markers]
        if len(set(ids)) != len(ids):
            raise InputError("marker LED-IDs must be unique within a scenario")

    @property
    def n_frames(self) -> int:
        return int(round(self.duration * self.f))

    def with_seed(self, seed: int) -> "Scenario":
        from dataclasses import replace

        return replace(self, seed=int(seed))


def trajectory_position(spec: MarkerSpec | Trajectory, t: float) -> np.ndarray:
    traj = spec.trajectory if isinstance(spec, MarkerSpec) else spec
    return traj.position(t)


def blink_state(dictionary: BlinkDictionary, led_id: int, phase: int, frame_index: int) -> int:
    if led_id not in dictionary:
        raise KeyError(f"LED-ID {led_id} is not in the dictionary")
    seq = dictionary[led_id]
    return seq[(frame_index + phase) % len(seq)]


@dataclass
class TruthLog:
    """True marker pixel positions (NaN when not visible) and bits per frame."""

    marker_ids: list[int]
    positions: np.ndarray  # (n_frames, n_markers, 2)
    bits: np.ndarray  # (n_frames, n_markers)
    f: float
    merge_radius: float

    @property
    def n_frames(self) -> int:
        return self.positions.shape[0]

    @property
    def duration(self) -> float:
        return self.n_frames / self.f


def resolve_phases(scenario: Scenario, dictionary: BlinkDictionary) -> list[int]:
    rng = np.random.default_rng([scenario.seed, 0x9E3779B9])
    phases = []
    for m in scenario.markers:
        drawn = int(rng.integers(0, dictionary.length))
        phases.append(drawn if m.sequence_phase is None else int(m.sequence_phase))
    return phases


def simulate(scenario: Scenario, dictionary: BlinkDictionary) -> tuple[list[DetectionFrame], TruthLog]:
    """Render the scenario into detection frames plus the ground-truth log."""
    for m in scenario.markers:
        if m.led_id not in dictionary:
            raise InputError(f"marker LED-ID {m.led_id} is not in the dictionary")
    rng = np.random.default_rng(scenario.seed)
    phases = resolve_phases(scenario, dictionary)
    cam = scenario.camera
    w, h = cam.resolution
    n_frames, n_markers = scenario.n_frames, len(scenario.markers)
    positions = np.full((n_frames, n_markers, 2), np.nan)
    bits = np.zeros((n_frames, n_markers), dtype=np.int8)
    frames = []
    r2 = scenario.merge_radius**2

    for k in range(n_frames):
        t = k / scenario.f
        emitted = []  # (depth, x, y, led_id)
        for j, m in enumerate(scenario.markers):
            bit = blink_state(dictionary, m.led_id, phases[j], k)
            bits[k, j] = bit
            hit = _project(cam, m.trajectory.position(t))
            if hit is None:
                continue
            x, y, depth = hit
            positions[k, j] = (x, y)
            if bit == 1 and rng.random() >= scenario.drop_probability:
                if scenario.detection_noise_sigma > 0:
                    x, y = np.clip(
                        (x, y) + rng.normal(0.0, scenario.detection_noise_sigma, 2),
                        (0.0, 0.0),
                        (w - 1, h - 1),
                    )
                emitted.append((depth, float(x), float(y), m.led_id))

        kept: list[tuple[float, float, list[int]]] = []
        for depth, x, y, led_id in sorted(emitted):
            for kx, ky, labels in kept:
                if (kx - x) ** 2 + (ky - y) ** 2 <= r2:
                    labels.append(led_id)
                    break
            else:
                kept.append((x, y, [led_id]))

        n_clutter = int(rng.poisson(scenario.clutter_rate)) if scenario.clutter_rate > 0 else 0
        for _ in range(n_clutter):
            kept.append((float(rng.uniform(0, w - 1)), float(rng.uniform(0, h - 1)), []))

        # raster order, as a bright-point extractor would emit them
        kept.sort(key=lambda p: (p[1], p[0]))
        frames.append(
            DetectionFrame(
                frame_index=k,
                timestamp=t,
                points=tuple((x, y) for x, y, _ in kept),
                labels=tuple(tuple(lbl) for _, _, lbl in kept),
            )
        )
    truth = TruthLog(
        marker_ids=[m.led_id for m in scenario.markers],
        positions=positions,
        bits=bits,
        f=scenario.f,
        merge_radius=scenario.merge_radius,
    )
    return frames, truth
