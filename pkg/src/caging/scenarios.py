"""Manipulation task scenarios: planar pushing, balanced transport, toppling.

A scenario bundles everything one task needs: the simulation world, wrench
bounds for planner perturbations, the capture-set and success-set
predicates over system states, a scripted controller used to generate
labeled trajectories, and the end-effector rule for planner rollouts.
During planning the end-effector is treated as unactuated: kinematic
effectors coast at their frozen twist, and spring-driven fingertips keep
reacting passively while their carrier stays parked.

Worlds are deterministic and every scripted controller is a pure function
of (state, step index, seed), so identical seeds reproduce identical
trajectories bit for bit.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Any, Mapping, NamedTuple

from . import dynamics as dyn
from .dynamics import Pose2, Twist2, WorldState, wrap_angle
from .geometry import (
    Circle,
    ConvexPolygon,
    box,
    distance_circle_polygon,
    edge_normals,
)

_TWIST_EPS = 1e-9


class SystemState(NamedTuple):
    """Object and end-effector kinematic state at one instant."""

    object_pose: Pose2
    object_twist: Twist2
    ee_pose: Pose2
    ee_twist: Twist2
    time: float


@dataclass(frozen=True)
class ControlBounds:
    """Axis-wise wrench box and duration range for planner controls."""

    f_max: float
    tau_max: float
    min_steps: int = 12
    max_steps: int = 60

    def __post_init__(self) -> None:
        if not self.f_max > 0.0:
            raise ValueError("f_max must be positive")
        if self.tau_max < 0.0:
            raise ValueError("tau_max must be nonnegative")
        if not 1 <= self.min_steps <= self.max_steps:
            raise ValueError("need 1 <= min_steps <= max_steps")


@dataclass(frozen=True)
class StateBox:
    """Axis-aligned bounds on the object state explored by the planners."""

    x: tuple[float, float]
    y: tuple[float, float]
    v_max: float
    omega_max: float

    def __post_init__(self) -> None:
        if self.x[0] >= self.x[1] or self.y[0] >= self.y[1]:
            raise ValueError("degenerate position box")
        if self.v_max <= 0.0 or self.omega_max <= 0.0:
            raise ValueError("velocity bounds must be positive")

    def contains(self, pose: Pose2, twist: Twist2) -> bool:
        return (
            self.x[0] <= pose.x <= self.x[1]
            and self.y[0] <= pose.y <= self.y[1]
            and abs(twist.vx) <= self.v_max
            and abs(twist.vy) <= self.v_max
            and abs(twist.omega) <= self.omega_max
        )


@dataclass(frozen=True)
class CaptureSetSpec:
    """Capture-set predicate family plus its resolved parameters.

    kinds: ``swept_sector`` (pushing), ``support_region`` (balancing),
    ``pivot_slip_bound`` (toppling).
    """

    kind: str
    params: Mapping[str, Any]


@dataclass(frozen=True)
class SuccessSetSpec:
    """Success-set predicate family: ``region_goal`` or ``orientation_goal``."""

    kind: str
    params: Mapping[str, Any]


@dataclass(frozen=True)
class ScenarioSpec:
    """Immutable description of one manipulation task.

    ``home`` is the canonical scripted start state; ``config`` is the fully
    resolved constructor parameter set (sufficient to rebuild the spec).
    ``carrier_index`` names the kinematic carrier of a spring-driven
    end-effector, if the scenario has one.
    """

    name: str
    world: dyn.World
    home: WorldState
    object_index: int
    ee_index: int
    control_bounds: ControlBounds
    capture: CaptureSetSpec
    success: SuccessSetSpec
    kinematic_bounds: StateBox
    ee_policy: str
    datum_height: float
    config: Mapping[str, Any]
    carrier_index: int | None = None
    script: Mapping[str, Any] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# state conversions


def from_world_state(spec: ScenarioSpec, ws: WorldState) -> SystemState:
    """Project a full world state onto the (object, end-effector) pair."""
    return SystemState(
        object_pose=ws.poses[spec.object_index],
        object_twist=ws.twists[spec.object_index],
        ee_pose=ws.poses[spec.ee_index],
        ee_twist=ws.twists[spec.ee_index],
        time=ws.time,
    )


def carrier_pose_at(spec: ScenarioSpec, t: float) -> Pose2 | None:
    """Scripted carrier pose at time ``t`` (None without a carrier).

    The carrier advances at its scripted velocity for the scripted
    duration and parks afterwards, so any recorded frame's carrier pose is
    reconstructible from the frame time alone.
    """
    if spec.carrier_index is None:
        return None
    sc = spec.script
    x0, y0, th0 = sc["carrier_start"]
    vx, vy = sc["carrier_velocity"]
    dur = sc["carrier_duration_steps"] * dyn.DT
    h = min(max(t, 0.0), dur)
    return Pose2(x0 + vx * h, y0 + vy * h, th0)


def to_world_state(
    spec: ScenarioSpec, z: SystemState, carrier_pose: Pose2 | None = None
) -> WorldState:
    """Embed a system state back into the full world.

    Bodies outside the (object, end-effector) pair take their home poses;
    a spring carrier is placed at ``carrier_pose`` when given, else at its
    scripted pose for ``z.time`` with zero twist.
    """
    poses = list(spec.home.poses)
    twists = list(spec.home.twists)
    poses[spec.object_index] = z.object_pose
    twists[spec.object_index] = z.object_twist
    poses[spec.ee_index] = z.ee_pose
    twists[spec.ee_index] = z.ee_twist
    if spec.carrier_index is not None:
        pose = carrier_pose if carrier_pose is not None else carrier_pose_at(spec, z.time)
        poses[spec.carrier_index] = pose
        twists[spec.carrier_index] = Twist2(0.0, 0.0, 0.0)
    return WorldState(poses=tuple(poses), twists=tuple(twists), time=z.time)


def home_state(spec: ScenarioSpec) -> SystemState:
    """The scripted initial system state."""
    return from_world_state(spec, spec.home)


# ---------------------------------------------------------------------------
# capture predicates


def _sector_contains(params: Mapping[str, Any], z_init: SystemState, z: SystemState) -> bool:
    """Membership in the region the end-effector footprint sweeps.

    The sector is anchored at the query state ``z_init``: its instantaneous
    center of rotation and speed define an annular arc (a straight strip in
    the pure-translation limit, a dilated footprint disk when stationary)
    covering ``horizon`` seconds of coasting.  Membership tests the object
    center of mass.
    """
    band = params["band"]
    horizon = params["horizon"]
    ex, ey, _ = z_init.ee_pose
    vx, vy, om = z_init.ee_twist
    px, py, _ = z.object_pose
    speed = math.hypot(vx, vy)

    if abs(om) < 1e-6:
        if speed < _TWIST_EPS:
            return math.hypot(px - ex, py - ey) <= band
        ux, uy = vx / speed, vy / speed
        dx, dy = px - ex, py - ey
        forward = dx * ux + dy * uy
        lateral = -dx * uy + dy * ux
        return 0.0 <= forward <= speed * horizon and abs(lateral) <= band

    icx = ex - vy / om
    icy = ey + vx / om
    r_ee = math.hypot(ex - icx, ey - icy)
    r_obj = math.hypot(px - icx, py - icy)
    if abs(r_obj - r_ee) > band:
        return False
    sweep = om * horizon
    if abs(sweep) >= 2.0 * math.pi:
        return True
    phi_ee = math.atan2(ey - icy, ex - icx)
    phi_obj = math.atan2(py - icy, px - icx)
    ahead = wrap_angle(phi_obj - phi_ee)
    if om > 0.0:
        return 0.0 <= ahead <= sweep
    return sweep <= ahead <= 0.0


def _support_contains(params: Mapping[str, Any], z: SystemState) -> bool:
    """Object center of mass over the (shrunken) support rectangle."""
    ex, ey, eth = z.ee_pose
    px, py, _ = z.object_pose
    c, s = math.cos(eth), math.sin(eth)
    dx, dy = px - ex, py - ey
    lx = c * dx + s * dy
    ly = -s * dx + c * dy
    return abs(lx) <= params["half_x"] and params["y_lo"] <= ly <= params["y_hi"]


def _pivot_slip_ok(
    spec: ScenarioSpec, params: Mapping[str, Any], z: SystemState
) -> bool:
    """Tangential speed of the object's lowest point under the threshold."""
    px, py, th = z.object_pose
    vx, _, om = z.object_twist
    shape = spec.world.bodies[spec.object_index].shape
    if isinstance(shape, Circle):
        rx, ry = 0.0, -shape.radius
    else:
        c, s = math.cos(th), math.sin(th)
        rx, ry = 0.0, math.inf
        for lx, ly in shape.vertices:
            wx = c * lx - s * ly
            wy = s * lx + c * ly
            if wy < ry:
                rx, ry = wx, wy
    slip = abs(vx - om * ry)
    return slip <= params["threshold"]


def capture_contains(spec: ScenarioSpec, z_init: SystemState, z: SystemState) -> bool:
    """Whether ``z`` is still inside the capture set anchored at ``z_init``."""
    cap = spec.capture
    if cap.kind == "swept_sector":
        return _sector_contains(cap.params, z_init, z)
    if cap.kind == "support_region":
        return _support_contains(cap.params, z)
    if cap.kind == "pivot_slip_bound":
        return _pivot_slip_ok(spec, cap.params, z)
    raise ValueError(f"unknown capture kind {cap.kind!r}")


# ---------------------------------------------------------------------------
# success predicates


def _in_polygon(params: Mapping[str, Any], x: float, y: float) -> bool:
    return (
        distance_circle_polygon(x, y, 0.0, params["polygon_verts"], params["polygon_normals"])
        == 0.0
    )


def success_contains(spec: ScenarioSpec, z: SystemState) -> bool:
    """Whether ``z`` fulfills the task objective."""
    suc = spec.success
    params = suc.params
    if suc.kind == "region_goal":
        px, py, th = z.object_pose
        if not _in_polygon(params, px, py):
            return False
        tol = params.get("align_tol")
        if tol is None:
            return True
        period = params["align_period"]
        off = math.remainder(th - params["align_angle"], period)
        return abs(off) <= tol
    if suc.kind == "orientation_goal":
        th = wrap_angle(z.object_pose.theta)
        if params.get("absolute", False):
            th = abs(th)
        return abs(th - params["angle"]) <= params["tol"]
    raise ValueError(f"unknown success kind {suc.kind!r}")


# ---------------------------------------------------------------------------
# scripted controllers


def _segment_uniform(seed: int, segment: int, salt: str) -> float:
    """Deterministic uniform in [-1, 1] per (seed, segment), process-stable."""
    h = zlib.crc32(f"{salt}:{seed}:{segment}".encode())
    return (h / 0xFFFFFFFF) * 2.0 - 1.0


def scripted_control(
    spec: ScenarioSpec, z: SystemState, k: int, rng_seed: int
) -> tuple[float, float, float]:
    """Twist command for the scenario's driven body at step ``k``.

    Pure function of its arguments: replaying the same seed reproduces the
    same command sequence.  Beyond the scripted horizon, and once the
    task-specific stop condition holds, the command is zero.
    """
    sc = spec.script
    kind = sc["policy"]
    if k >= sc["horizon_steps"]:
        return (0.0, 0.0, 0.0)

    if kind == "push":
        ws = to_world_state(spec, z)
        gap = dyn.min_body_distance(
            spec.world, ws, spec.object_index, sc["wall_index"]
        )
        if gap <= sc["stop_gap"]:
            return (0.0, 0.0, 0.0)
        u = _segment_uniform(rng_seed, k // sc["segment_steps"], "push-lateral")
        b = _segment_uniform(rng_seed, 0, "push-bias")
        vx = sc["lateral_noise"] * u + sc["lateral_bias"] * b
        return (vx, sc["push_speed"], 0.0)

    if kind == "slide":
        seg = sc["segment_steps"]
        base = sc["base_speed"]
        travelled = 0.0
        for j in range(k // seg + 1):
            speed = base * _slide_boost(sc, rng_seed, j)
            n_steps = min(seg, k - j * seg) if j == k // seg else seg
            travelled += speed * n_steps * dyn.DT
        if travelled >= sc["travel"]:
            return (0.0, 0.0, 0.0)
        speed = base * _slide_boost(sc, rng_seed, k // seg)
        return (speed * sc["dir"][0], speed * sc["dir"][1], 0.0)

    if kind == "press":
        if k >= sc["carrier_duration_steps"]:
            return (0.0, 0.0, 0.0)
        # Once the box tips past its balance diagonal it falls on its own;
        # parking the carrier there keeps the press to a single quarter turn.
        if abs(wrap_angle(z.object_pose.theta)) >= sc["park_angle"]:
            return (0.0, 0.0, 0.0)
        vx, vy = sc["carrier_velocity"]
        return (vx, vy, 0.0)

    raise ValueError(f"unknown scripted policy {kind!r}")


def _slide_boost(sc: Mapping[str, Any], seed: int, segment: int) -> float:
    """Per-segment speed multiplier: occasional bursts of random strength."""
    u = _segment_uniform(seed, segment, "slide-burst")
    if (u + 1.0) / 2.0 >= sc["burst_prob"]:
        return 1.0
    u2 = (_segment_uniform(seed, segment, "slide-burst-size") + 1.0) / 2.0
    return 1.0 + (sc["burst_scale"] - 1.0) * u2


def driven_index(spec: ScenarioSpec) -> int:
    """World index of the body that receives scripted twist commands."""
    return spec.carrier_index if spec.carrier_index is not None else spec.ee_index


def propagate_ee(
    spec: ScenarioSpec, z: SystemState, dt: float
) -> tuple[Pose2, Twist2]:
    """End-effector pose and twist after coasting unactuated for ``dt``.

    Kinematic effectors extrapolate at their frozen twist; spring-driven
    fingertips integrate the passive spring against a parked carrier.
    ``dt`` is rounded to whole simulator steps.
    """
    steps = max(0, round(dt / dyn.DT))
    ws = to_world_state(spec, z)
    for _ in range(steps):
        ws, _ = dyn.step(spec.world, ws)
    out = from_world_state(spec, ws)
    return out.ee_pose, out.ee_twist


# ---------------------------------------------------------------------------
# constructors


def _resolve(name: str, defaults: Mapping[str, Any], config: Mapping[str, Any] | None) -> dict:
    merged = dict(defaults)
    for key, value in (config or {}).items():
        if key not in defaults:
            raise ValueError(f"unknown {name} parameter {key!r}")
        merged[key] = value
    return merged


def _check_initial_invariants(spec: ScenarioSpec) -> None:
    z0 = home_state(spec)
    if not capture_contains(spec, z0, z0):
        raise ValueError(f"{spec.name}: initially uncaptured scripted start state")
    if success_contains(spec, z0):
        raise ValueError(f"{spec.name}: scripted start state already successful")


def _goal_params(verts: tuple[tuple[float, float], ...], **extra: Any) -> dict:
    poly = ConvexPolygon(tuple(tuple(v) for v in verts))
    return {
        "polygon_verts": poly.vertices,
        "polygon_normals": edge_normals(poly.vertices),
        **extra,
    }


PUSHING_DEFAULTS: Mapping[str, Any] = {
    "object_half_extents": (0.05, 0.03),
    "object_mass": 0.5,
    "ee_shape": "circle",          # "circle" or "polygon"
    "ee_radius": 0.02,
    "ee_vertices": None,           # used when ee_shape == "polygon"
    "wall_y": 0.3,
    "wall_half_extents": (0.5, 0.02),
    "mu": 0.3,
    "ground_mu": 0.3,
    "object_start": (0.0, 0.05, 0.0),
    "ee_start": (0.0, -0.01, 0.0),
    "push_speed": 0.08,
    "lateral_noise": 0.05,
    "lateral_bias": 0.05,
    "horizon_steps": 1200,
    "segment_steps": 60,
    "stop_gap": 1e-3,
    "sector_horizon": 1.0,
    "sector_margin_scale": 1.5,
    "goal_depth_scale": 1.2,
    "align_tol": 0.1,
    "f_max": 5.0,
    "tau_max": 0.5,
    "bounds_x": (-0.6, 0.6),
    "bounds_y": (-0.35, 0.6),
    "bounds_v": 2.0,
    "bounds_omega": 10.0,
}


def make_pushing_scenario(config: Mapping[str, Any] | None = None) -> ScenarioSpec:
    """Top-down pushing of an object toward a wall with a driven pusher.

    Gravity acts as the ground-friction normal load only; the capture set
    is the region the pusher footprint will sweep, and success is the
    object parked against the wall with its long edge aligned.
    """
    cfg = _resolve("pushing", PUSHING_DEFAULTS, config)
    hx, hy = cfg["object_half_extents"]
    mass = cfg["object_mass"]
    inertia = mass * (hx * hx + hy * hy) / 3.0
    obj = dyn.BodyDef(
        "object", "dynamic", box(hx, hy), mass=mass, inertia=inertia,
        friction_mu=cfg["mu"], ground_mu=cfg["ground_mu"],
    )
    if cfg["ee_shape"] == "circle":
        ee_shape = Circle(cfg["ee_radius"])
        footprint = cfg["ee_radius"]
    elif cfg["ee_shape"] == "polygon":
        ee_shape = ConvexPolygon(tuple(tuple(v) for v in cfg["ee_vertices"]))
        footprint = max(math.hypot(x, y) for x, y in ee_shape.vertices)
    else:
        raise ValueError(f"unknown ee_shape {cfg['ee_shape']!r}")
    ee = dyn.BodyDef("pusher", "kinematic", ee_shape, friction_mu=cfg["mu"])
    wall = dyn.BodyDef(
        "wall", "static", box(*cfg["wall_half_extents"]), friction_mu=cfg["mu"]
    )
    world = dyn.build_world([obj, ee, wall], gravity=(0.0, 0.0))

    wall_pose = Pose2(0.0, cfg["wall_y"], 0.0)
    home = WorldState(
        poses=(Pose2(*cfg["object_start"]), Pose2(*cfg["ee_start"]), wall_pose),
        twists=(
            Twist2(0.0, 0.0, 0.0),
            Twist2(0.0, cfg["push_speed"], 0.0),
            Twist2(0.0, 0.0, 0.0),
        ),
        time=0.0,
    )

    band = (1.0 + cfg["sector_margin_scale"]) * footprint
    capture = CaptureSetSpec(
        "swept_sector", {"horizon": cfg["sector_horizon"], "band": band}
    )

    face_y = cfg["wall_y"] - cfg["wall_half_extents"][1]
    depth = cfg["goal_depth_scale"] * min(hx, hy)
    gx = cfg["wall_half_extents"][0]
    goal = _goal_params(
        ((-gx, face_y - depth), (gx, face_y - depth), (gx, face_y), (-gx, face_y)),
        align_tol=cfg["align_tol"],
        align_angle=0.0,
        # long-edge direction is modulo pi (modulo pi/2 for a square)
        align_period=math.pi if abs(hx - hy) > 1e-12 else math.pi / 2.0,
    )
    success = SuccessSetSpec("region_goal", goal)

    spec = ScenarioSpec(
        name="pushing",
        world=world,
        home=home,
        object_index=0,
        ee_index=1,
        control_bounds=ControlBounds(cfg["f_max"], cfg["tau_max"]),
        capture=capture,
        success=success,
        kinematic_bounds=StateBox(
            cfg["bounds_x"], cfg["bounds_y"], cfg["bounds_v"], cfg["bounds_omega"]
        ),
        ee_policy="constant_velocity",
        datum_height=0.0,
        config=cfg,
        script={
            "policy": "push",
            "horizon_steps": cfg["horizon_steps"],
            "segment_steps": cfg["segment_steps"],
            "push_speed": cfg["push_speed"],
            "lateral_noise": cfg["lateral_noise"],
            "lateral_bias": cfg["lateral_bias"],
            "stop_gap": cfg["stop_gap"],
            "wall_index": 2,
        },
    )
    _check_initial_invariants(spec)
    return spec


BALANCE_DEFAULTS: Mapping[str, Any] = {
    "slope": math.radians(35.0),
    "cube_half": 0.03,
    "cube_mass": 0.2,
    "support_half_extents": (0.06, 0.01),
    "mu": 0.8,
    "shrink": 0.01,
    "cube_offset": 0.0,            # along the support surface
    "travel": 0.22,
    "base_speed": 0.04,
    "burst_prob": 0.25,
    "burst_scale": 8.0,
    "segment_steps": 60,
    "horizon_steps": 1680,
    "goal_half_extents": (0.05, 0.06),
    "f_max": 5.0,
    "tau_max": 0.5,
    "bounds_x": (-0.45, 0.55),
    "bounds_y": (-0.25, 0.6),
    "bounds_v": 2.5,
    "bounds_omega": 12.0,
}


def make_balance_scenario(config: Mapping[str, Any] | None = None) -> ScenarioSpec:
    """Carrying an object on a tilted support surface up its slope.

    The support is a kinematic plate at a fixed slope angle; the capture
    set keeps the object's center of mass over the plate (with an inset
    margin), and success is reaching a goal region near the top of the
    scripted travel.
    """
    cfg = _resolve("balance", BALANCE_DEFAULTS, config)
    alpha = cfg["slope"]
    if not 0.0 <= alpha < math.pi / 2.0:
        raise ValueError("slope must lie in [0, pi/2)")
    hc = cfg["cube_half"]
    hs_x, hs_y = cfg["support_half_extents"]
    if 2.0 * hc >= 2.0 * hs_x:
        raise ValueError("object larger than support surface")

    inertia = cfg["cube_mass"] * (hc * hc + hc * hc) / 3.0
    cube = dyn.BodyDef(
        "cube", "dynamic", box(hc, hc), mass=cfg["cube_mass"], inertia=inertia,
        friction_mu=cfg["mu"],
    )
    support = dyn.BodyDef(
        "support", "kinematic", box(hs_x, hs_y), friction_mu=cfg["mu"]
    )
    world = dyn.build_world([cube, support], gravity=(0.0, -9.81))

    ca, sa = math.cos(alpha), math.sin(alpha)
    up = (-sa, ca)                  # support surface normal
    along = (ca, sa)                # upslope direction
    off = cfg["cube_offset"]
    lift = hs_y + hc
    cube_pose = Pose2(
        up[0] * lift + along[0] * off, up[1] * lift + along[1] * off, alpha
    )
    home = WorldState(
        poses=(cube_pose, Pose2(0.0, 0.0, alpha)),
        twists=(Twist2(0.0, 0.0, 0.0), Twist2(0.0, 0.0, 0.0)),
        time=0.0,
    )

    capture = CaptureSetSpec(
        "support_region",
        {"half_x": hs_x - cfg["shrink"], "y_lo": 0.0, "y_hi": hs_y + 6.0 * hc},
    )

    gcx = up[0] * lift + along[0] * cfg["travel"]
    gcy = up[1] * lift + along[1] * cfg["travel"]
    ghx, ghy = cfg["goal_half_extents"]
    goal = _goal_params(
        (
            (gcx - ghx, gcy - ghy),
            (gcx + ghx, gcy - ghy),
            (gcx + ghx, gcy + ghy),
            (gcx - ghx, gcy + ghy),
        ),
        align_tol=None,
    )
    success = SuccessSetSpec("region_goal", goal)

    spec = ScenarioSpec(
        name="balance",
        world=world,
        home=home,
        object_index=0,
        ee_index=1,
        control_bounds=ControlBounds(cfg["f_max"], cfg["tau_max"]),
        capture=capture,
        success=success,
        kinematic_bounds=StateBox(
            cfg["bounds_x"], cfg["bounds_y"], cfg["bounds_v"], cfg["bounds_omega"]
        ),
        ee_policy="constant_velocity",
        datum_height=0.0,
        config=cfg,
        script={
            "policy": "slide",
            "horizon_steps": cfg["horizon_steps"],
            "segment_steps": cfg["segment_steps"],
            "base_speed": cfg["base_speed"],
            "burst_prob": cfg["burst_prob"],
            "burst_scale": cfg["burst_scale"],
            "travel": cfg["travel"],
            "dir": along,
        },
    )
    _check_initial_invariants(spec)
    return spec


TOPPLING_DEFAULTS: Mapping[str, Any] = {
    "box_half_extents": (0.04, 0.05),
    "box_mass": 0.12,
    "table_mu": 0.9,
    "contact_mu": 0.3,
    "fingertip_radius": 0.01,
    "fingertip_mass": 0.05,
    "stiffness": 300.0,
    "damping": 5.0,
    "carrier_start": (-0.075, 0.07, 0.0),
    "press_speed": 0.04,
    "press_duration_steps": 960,
    "park_angle": 0.72,
    "horizon_steps": 1200,
    "slip_threshold": 0.1,
    "success_angle": math.pi / 2.0,
    "success_tol": 0.05,
    "table_half_extents": (0.5, 0.05),
    "f_max": 5.0,
    "tau_max": 0.5,
    "bounds_x": (-0.35, 0.45),
    "bounds_y": (-0.02, 0.45),
    "bounds_v": 3.0,
    "bounds_omega": 12.0,
}


def make_toppling_scenario(config: Mapping[str, Any] | None = None) -> ScenarioSpec:
    """Toppling a standing box over one corner with a spring fingertip.

    The fingertip is a dynamic disk coupled by a spring-damper to a
    kinematic carrier that advances on a fixed script.  The capture set
    bounds the sliding speed of the box's table contact; success is a
    quarter-turn of the box.
    """
    cfg = _resolve("toppling", TOPPLING_DEFAULTS, config)
    if cfg["stiffness"] <= 0.0:
        raise ValueError("invalid stiffness")
    hx, hy = cfg["box_half_extents"]
    mass = cfg["box_mass"]
    inertia = mass * (hx * hx + hy * hy) / 3.0
    obj = dyn.BodyDef(
        "object", "dynamic", box(hx, hy), mass=mass, inertia=inertia,
        friction_mu=cfg["table_mu"],
    )
    r = cfg["fingertip_radius"]
    tip = dyn.BodyDef(
        "fingertip", "dynamic", Circle(r), mass=cfg["fingertip_mass"],
        inertia=0.5 * cfg["fingertip_mass"] * r * r,
        friction_mu=cfg["contact_mu"],
    )
    carrier = dyn.BodyDef(
        "carrier", "kinematic", Circle(0.005), collides=False
    )
    table = dyn.BodyDef(
        "table", "static", box(*cfg["table_half_extents"]),
        friction_mu=cfg["table_mu"],
    )
    carrier_start = Pose2(*cfg["carrier_start"])
    spring = dyn.SpringJointDef(
        body_index=1,
        anchor_world=(carrier_start.x, carrier_start.y),
        stiffness=cfg["stiffness"],
        damping=cfg["damping"],
        rest_length=0.0,
        anchor_body_index=2,
    )
    world = dyn.build_world(
        [obj, tip, carrier, table], springs=[spring], gravity=(0.0, -9.81)
    )

    table_top = Pose2(0.0, -cfg["table_half_extents"][1], 0.0)
    home = WorldState(
        poses=(Pose2(0.0, hy, 0.0), carrier_start, carrier_start, table_top),
        twists=(Twist2(0.0, 0.0, 0.0),) * 4,
        time=0.0,
    )

    capture = CaptureSetSpec("pivot_slip_bound", {"threshold": cfg["slip_threshold"]})
    success = SuccessSetSpec(
        "orientation_goal",
        {"angle": cfg["success_angle"], "tol": cfg["success_tol"], "absolute": True},
    )

    spec = ScenarioSpec(
        name="toppling",
        world=world,
        home=home,
        object_index=0,
        ee_index=1,
        control_bounds=ControlBounds(cfg["f_max"], cfg["tau_max"]),
        capture=capture,
        success=success,
        kinematic_bounds=StateBox(
            cfg["bounds_x"], cfg["bounds_y"], cfg["bounds_v"], cfg["bounds_omega"]
        ),
        ee_policy="spring_dynamics",
        datum_height=0.0,
        config=cfg,
        carrier_index=2,
        script={
            "policy": "press",
            "horizon_steps": cfg["horizon_steps"],
            "carrier_start": tuple(cfg["carrier_start"]),
            "carrier_velocity": (cfg["press_speed"], 0.0),
            "carrier_duration_steps": cfg["press_duration_steps"],
            "park_angle": cfg["park_angle"],
        },
    )
    _check_initial_invariants(spec)
    return spec


CONSTRUCTORS = {
    "pushing": make_pushing_scenario,
    "balance": make_balance_scenario,
    "toppling": make_toppling_scenario,
}
