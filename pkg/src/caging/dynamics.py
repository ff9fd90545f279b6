"""Deterministic 2D rigid-body simulator with per-step energy accounting.

The simulator exists to make energy margins measurable, so its contract is
stronger than "looks physical": every step reports how much work the control
inputs did (``w_control``) and how much energy contacts destroyed
(``w_noncons``), and those ledgers must close against the mechanical energy
of the state to tight tolerances.

Integration scheme
------------------
Velocity-level contact impulses are applied at the step boundary, then a
kick-drift-kick (velocity Verlet) update runs with no impulses between the
two half-kicks.  For forces that are constant across a step (gravity,
control wrenches) this makes the discrete work-energy identity exact:

    dKE = f_total . dx       with dx the actual per-step displacement,

so gravity bookkeeping closes to machine precision and elastic bounces
conserve energy exactly.  Plain force-first Euler loses 0.5*|g|^2*dt^2 per
step in free fall, which is orders of magnitude above the closure tolerance
this module is tested to.

Resting contacts are solved with the upcoming half-kick anticipated in the
constraint target.  In steady state the impulse then swings the normal
velocity symmetrically about zero, so a resting body neither sinks nor
generates phantom dissipation: resting and sticking are exactly cost-free.

Work attribution
----------------
* ``w_control``: control wrenches (force dot actual displacement), plus the
  work kinematic bodies (velocity-driven end-effectors, infinite effective
  mass) do on dynamic bodies through contacts and springs.
* ``w_noncons``: friction work, inelastic impact losses, dampers; never
  positive beyond rounding.

Positional penetration cleanup is a Baumgarte-style projection (factor 0.2,
1 mm slop) applied directly to poses after integration, never through
velocity bias, so it cannot inject kinetic energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .geometry import (
    Circle,
    ConvexPolygon,
    Shape,
    check_convex_ccw,
    contact_circle_circle,
    contact_circle_polygon,
    contact_polygon_polygon,
    distance_circle_circle,
    distance_circle_polygon,
    distance_polygon_polygon,
    edge_normals,
    effective_spin_radius,
    min_half_width,
    polygon_area_centroid,
    transform_normals,
    transform_polygon,
)

DT = 1.0 / 240.0
G_STD = 9.81
VELOCITY_ITERATIONS = 10
BAUMGARTE = 0.2
LINEAR_SLOP = 1e-3
MAX_CORRECTION = 0.05
RESTITUTION_THRESHOLD = 0.1
SLIP_TOLERANCE = 1e-5
TUNNEL_FRACTION = 0.1

DYNAMIC = 0
KINEMATIC = 1
STATIC = 2

_KIND_CODES = {"dynamic": DYNAMIC, "kinematic": KINEMATIC, "static": STATIC}


class TunnelingError(RuntimeError):
    """Penetration exceeded the guard fraction of a body extent."""


def wrap_angle(theta: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    if -math.pi < theta <= math.pi:
        return theta
    r = math.remainder(theta, math.tau)
    if r <= -math.pi:
        r += math.tau
    return r


class Pose2(NamedTuple):
    x: float
    y: float
    theta: float


class Twist2(NamedTuple):
    vx: float
    vy: float
    omega: float


@dataclass(frozen=True)
class BodyDef:
    """Immutable body description.

    ``mass`` and ``inertia`` are only meaningful for dynamic bodies.
    ``ground_mu`` enables virtual-floor Coulomb friction with normal load
    m*g for top-down (in-plane gravity-free) worlds.  ``collides=False``
    removes the body from contact generation entirely.
    """

    name: str
    kind: str
    shape: Shape
    mass: float = 0.0
    inertia: float = 0.0
    friction_mu: float = 0.5
    restitution: float = 0.0
    ground_mu: float = 0.0
    collides: bool = True


@dataclass(frozen=True)
class SpringJointDef:
    """Linear spring (optionally damped) from a body's center of mass.

    The far end attaches to a fixed world anchor, or, when
    ``anchor_body_index`` is set, to that body's center of mass so the
    anchor can ride on a kinematic carrier.
    """

    body_index: int
    anchor_world: tuple[float, float] = (0.0, 0.0)
    stiffness: float = 0.0
    damping: float = 0.0
    rest_length: float = 0.0
    anchor_body_index: int | None = None


class WorldState(NamedTuple):
    """Snapshot of every body's pose and twist at a simulation time."""

    poses: tuple[Pose2, ...]
    twists: tuple[Twist2, ...]
    time: float


class ContactPoint(NamedTuple):
    """One solved contact point; forces are step-averaged Newtons."""

    body_a: int
    body_b: int
    point: tuple[float, float]
    normal: tuple[float, float]
    lambda_n: float
    lambda_t: float
    slip_speed: float
    penetration: float


class StepReport(NamedTuple):
    contacts: tuple[ContactPoint, ...]
    w_control: float
    w_noncons: float
    dt: float


class World:
    """Immutable scene description with precomputed solver quantities.

    Bodies are indexed by their position in ``bodies``.  Construct via
    :func:`build_world`; instances must not be mutated afterwards.
    """

    def __init__(self, bodies: tuple[BodyDef, ...], springs: tuple[SpringJointDef, ...],
                 gravity: tuple[float, float]):
        self.bodies = bodies
        self.springs = springs
        self.gravity = (float(gravity[0]), float(gravity[1]))
        n = len(bodies)
        self.n = n
        self.kind = [_KIND_CODES[b.kind] for b in bodies]
        self.mass = [0.0] * n
        self.inv_m = [0.0] * n
        self.inv_i = [0.0] * n
        self.radius = [0.0] * n
        self.is_circle = [False] * n
        self.local_verts: list[tuple | None] = [None] * n
        self.local_normals: list[tuple | None] = [None] * n
        self.min_hw = [0.0] * n
        self.circum = [0.0] * n
        self.spin_radius = [0.0] * n
        self.friction = [0.0] * n
        self.restitution = [0.0] * n
        self.ground_mu = [0.0] * n
        for i, b in enumerate(bodies):
            if b.kind == "dynamic":
                self.mass[i] = b.mass
                self.inv_m[i] = 1.0 / b.mass
                self.inv_i[i] = 1.0 / b.inertia
            self.friction[i] = b.friction_mu
            self.restitution[i] = b.restitution
            self.ground_mu[i] = b.ground_mu
            self.min_hw[i] = min_half_width(b.shape)
            self.spin_radius[i] = effective_spin_radius(b.shape)
            if isinstance(b.shape, Circle):
                self.is_circle[i] = True
                self.radius[i] = b.shape.radius
                self.circum[i] = b.shape.radius
            else:
                verts = tuple((float(x), float(y)) for x, y in b.shape.vertices)
                self.local_verts[i] = verts
                self.local_normals[i] = edge_normals(verts)
                self.circum[i] = max(math.hypot(x, y) for x, y in verts)
        self.pairs = [
            (i, j)
            for i in range(n)
            for j in range(i + 1, n)
            if (self.kind[i] == DYNAMIC or self.kind[j] == DYNAMIC)
            and bodies[i].collides
            and bodies[j].collides
        ]
        self.pair_mu = {
            (i, j): math.sqrt(self.friction[i] * self.friction[j])
            for i, j in self.pairs
        }
        self.pair_rest = {
            (i, j): max(self.restitution[i], self.restitution[j])
            for i, j in self.pairs
        }
        self.body_index = {b.name: i for i, b in enumerate(bodies)}

    def initial_state(self, poses: Sequence[Pose2] | None = None) -> WorldState:
        """WorldState at time 0 with all twists zero.

        ``poses`` defaults to every body at the origin; pass explicit poses
        to place the scene.
        """
        if poses is None:
            poses = [Pose2(0.0, 0.0, 0.0)] * self.n
        poses = tuple(Pose2(float(p[0]), float(p[1]), float(p[2])) for p in poses)
        if len(poses) != self.n:
            raise ValueError("pose count must match body count")
        return WorldState(poses, (Twist2(0.0, 0.0, 0.0),) * self.n, 0.0)


def build_world(
    bodies: Sequence[BodyDef],
    springs: Sequence[SpringJointDef] = (),
    gravity: tuple[float, float] = (0.0, -G_STD),
) -> World:
    """Validate body definitions and assemble an immutable World.

    Raises ValueError for non-convex or degenerate polygons, nonpositive
    mass/inertia on dynamic bodies, and dynamic polygons whose vertex list
    is not centered on its centroid (poses track the center of mass, and
    inertia is declared about it).
    """
    bodies = tuple(bodies)
    names = set()
    for b in bodies:
        if b.kind not in _KIND_CODES:
            raise ValueError(f"unknown body kind {b.kind!r}")
        if b.name in names:
            raise ValueError(f"duplicate body name {b.name!r}")
        names.add(b.name)
        if isinstance(b.shape, ConvexPolygon):
            verts = tuple((float(x), float(y)) for x, y in b.shape.vertices)
            check_convex_ccw(verts)
            if b.kind == "dynamic":
                area, (cx, cy) = polygon_area_centroid(verts)
                if area <= 0.0:
                    raise ValueError("polygon vertices must be counter-clockwise")
                if math.hypot(cx, cy) > 1e-9:
                    raise ValueError(
                        "dynamic polygon vertices must be centered on the centroid"
                    )
        elif isinstance(b.shape, Circle):
            if b.shape.radius <= 0.0:
                raise ValueError("circle radius must be positive")
        else:
            raise ValueError(f"unsupported shape {type(b.shape).__name__}")
        if b.kind == "dynamic" and (b.mass <= 0.0 or b.inertia <= 0.0):
            raise ValueError(f"dynamic body {b.name!r} needs positive mass and inertia")
        if b.friction_mu < 0.0 or b.restitution < 0.0 or b.restitution > 1.0:
            raise ValueError("friction must be >= 0 and restitution within [0, 1]")
    springs = tuple(springs)
    for s in springs:
        if not 0 <= s.body_index < len(bodies):
            raise ValueError("spring body_index out of range")
        if bodies[s.body_index].kind != "dynamic":
            raise ValueError("springs must attach to a dynamic body")
        if s.anchor_body_index is not None and not 0 <= s.anchor_body_index < len(bodies):
            raise ValueError("spring anchor_body_index out of range")
        if s.stiffness < 0.0 or s.damping < 0.0 or s.rest_length < 0.0:
            raise ValueError("spring parameters must be nonnegative")
    return World(bodies, springs, gravity)


class _TransformCache:
    """World-frame polygon geometry, computed at most once per body."""

    __slots__ = ("world", "px", "py", "th", "verts", "normals")

    def __init__(self, world: World, px: list, py: list, th: list):
        self.world = world
        self.px = px
        self.py = py
        self.th = th
        self.verts: list = [None] * world.n
        self.normals: list = [None] * world.n

    def polygon(self, i: int):
        verts = self.verts[i]
        if verts is None:
            t = self.th[i]
            if t == 0.0:
                x, y = self.px[i], self.py[i]
                verts = [(x + vx, y + vy) for vx, vy in self.world.local_verts[i]]
                normals = list(self.world.local_normals[i])
            else:
                c, s = math.cos(t), math.sin(t)
                verts = transform_polygon(
                    self.world.local_verts[i], self.px[i], self.py[i], c, s
                )
                normals = transform_normals(self.world.local_normals[i], c, s)
            self.verts[i] = verts
            self.normals[i] = normals
        return verts, self.normals[i]


def _narrowphase(world: World, ia: int, ib: int, cache: _TransformCache):
    """Contact points for one pair at the cached transforms."""
    px, py = cache.px, cache.py
    if world.is_circle[ia]:
        if world.is_circle[ib]:
            return contact_circle_circle(
                px[ia], py[ia], world.radius[ia], px[ib], py[ib], world.radius[ib]
            )
        verts, normals = cache.polygon(ib)
        return contact_circle_polygon(
            px[ia], py[ia], world.radius[ia], verts, normals, flip=False
        )
    if world.is_circle[ib]:
        verts, normals = cache.polygon(ia)
        return contact_circle_polygon(
            px[ib], py[ib], world.radius[ib], verts, normals, flip=True
        )
    verts_a, normals_a = cache.polygon(ia)
    verts_b, normals_b = cache.polygon(ib)
    return contact_polygon_polygon(verts_a, normals_a, verts_b, normals_b)


def _spring_forces(world: World, px, py, vx, vy):
    """Per-body spring force, damper dissipation, and kinematic drive power."""
    n = world.n
    fx = [0.0] * n
    fy = [0.0] * n
    damp_power = 0.0
    drive_power = 0.0
    for s in world.springs:
        i = s.body_index
        j = s.anchor_body_index
        if j is None:
            ax_, ay_ = s.anchor_world
            avx = avy = 0.0
        else:
            ax_, ay_ = px[j], py[j]
            avx, avy = vx[j], vy[j]
        dx = ax_ - px[i]
        dy = ay_ - py[i]
        length = math.hypot(dx, dy)
        if length < 1e-12:
            continue
        ux, uy = dx / length, dy / length
        ext_rate = -(vx[i] * ux + vy[i] * uy) + (avx * ux + avy * uy)
        f = s.stiffness * (length - s.rest_length) + s.damping * ext_rate
        fx[i] += f * ux
        fy[i] += f * uy
        damp_power += -s.damping * ext_rate * ext_rate
        if j is not None and world.kind[j] != DYNAMIC:
            # Reaction force on the moving anchor: work done by the carrier.
            drive_power += (-f * ux) * avx + (-f * uy) * avy
    return fx, fy, damp_power, drive_power


def step(
    world: World,
    state: WorldState,
    controls: Sequence[tuple[float, float, float]] | None = None,
    dt: float = DT,
) -> tuple[WorldState, StepReport]:
    """Advance one fixed time step.

    ``controls`` holds one wrench (fx, fy, tau) per body, applied at the
    center of mass of dynamic bodies and ignored for the rest.  Returns the
    new state plus a report carrying solved contacts and the step's work
    ledger.  Raises :class:`TunnelingError` when any penetration exceeds
    10% of the smaller body's half-extent.
    """
    n = world.n
    kind = world.kind
    inv_m = world.inv_m
    inv_i = world.inv_i
    px = [p.x for p in state.poses]
    py = [p.y for p in state.poses]
    th = [p.theta for p in state.poses]
    vx = [t.vx for t in state.twists]
    vy = [t.vy for t in state.twists]
    om = [t.omega for t in state.twists]
    cache = _TransformCache(world, px, py, th)
    if controls is None:
        controls = ((0.0, 0.0, 0.0),) * n

    gx, gy = world.gravity
    half_dt = 0.5 * dt

    sfx, sfy, damp_power, spring_drive_power = _spring_forces(world, px, py, vx, vy)

    # Per-body kick acceleration at the start-of-step configuration.
    acc_x = [0.0] * n
    acc_y = [0.0] * n
    acc_w = [0.0] * n
    for i in range(n):
        if kind[i] == DYNAMIC:
            fxi, fyi, taui = controls[i]
            acc_x[i] = gx + (fxi + sfx[i]) * inv_m[i]
            acc_y[i] = gy + (fyi + sfy[i]) * inv_m[i]
            acc_w[i] = taui * inv_i[i]

    # ---- contact detection at the step boundary -------------------------
    circum = world.circum
    cp_ia: list[int] = []
    cp_ib: list[int] = []
    cp_px: list[float] = []
    cp_py: list[float] = []
    cp_nx: list[float] = []
    cp_ny: list[float] = []
    cp_pen: list[float] = []
    touched_pairs: list[tuple[int, int]] = []
    need_projection = False
    for ia, ib in world.pairs:
        dx = px[ib] - px[ia]
        dy = py[ib] - py[ia]
        reach = circum[ia] + circum[ib] + 1e-6
        if dx * dx + dy * dy > reach * reach:
            continue
        pts = _narrowphase(world, ia, ib, cache)
        if not pts:
            continue
        touched_pairs.append((ia, ib))
        guard = TUNNEL_FRACTION * min(world.min_hw[ia], world.min_hw[ib])
        for cx_, cy_, nx_, ny_, pen in pts:
            if pen > 0.5 * LINEAR_SLOP:
                need_projection = True
            if pen > guard:
                raise TunnelingError(
                    f"tunneling detected between bodies {ia} and {ib}: "
                    f"penetration {pen:.4g} m exceeds {guard:.4g} m (dt too large)"
                )
            cp_ia.append(ia)
            cp_ib.append(ib)
            cp_px.append(cx_)
            cp_py.append(cy_)
            cp_nx.append(nx_)
            cp_ny.append(ny_)
            cp_pen.append(pen)

    npts = len(cp_ia)
    w_noncons = 0.0
    w_drive = 0.0

    # ---- solver precomputation ------------------------------------------
    c_rax = [0.0] * npts
    c_ray = [0.0] * npts
    c_rbx = [0.0] * npts
    c_rby = [0.0] * npts
    c_mn = [0.0] * npts
    c_mt = [0.0] * npts
    c_target = [0.0] * npts
    c_tt = [0.0] * npts
    c_mu = [0.0] * npts
    c_ln = [0.0] * npts
    c_lt = [0.0] * npts
    for k in range(npts):
        ia = cp_ia[k]
        ib = cp_ib[k]
        nx_ = cp_nx[k]
        ny_ = cp_ny[k]
        rax = cp_px[k] - px[ia]
        ray = cp_py[k] - py[ia]
        rbx = cp_px[k] - px[ib]
        rby = cp_py[k] - py[ib]
        c_rax[k], c_ray[k], c_rbx[k], c_rby[k] = rax, ray, rbx, rby
        rna = rax * ny_ - ray * nx_
        rnb = rbx * ny_ - rby * nx_
        kn = inv_m[ia] + inv_m[ib] + rna * rna * inv_i[ia] + rnb * rnb * inv_i[ib]
        c_mn[k] = 1.0 / kn if kn > 0.0 else 0.0
        tx, ty = -ny_, nx_
        rta = rax * ty - ray * tx
        rtb = rbx * ty - rby * tx
        kt = inv_m[ia] + inv_m[ib] + rta * rta * inv_i[ia] + rtb * rtb * inv_i[ib]
        c_mt[k] = 1.0 / kt if kt > 0.0 else 0.0
        c_mu[k] = world.pair_mu[(ia, ib)]
        # Relative normal velocity (positive = separating).
        van = (vx[ia] - om[ia] * ray) * nx_ + (vy[ia] + om[ia] * rax) * ny_
        vbn = (vx[ib] - om[ib] * rby) * nx_ + (vy[ib] + om[ib] * rbx) * ny_
        approach = van - vbn
        # Half-kick change of the approach rate, anticipated for resting
        # contacts so steady contact neither sinks nor dissipates.
        aan = (acc_x[ia] - acc_w[ia] * ray) * nx_ + (acc_y[ia] + acc_w[ia] * rax) * ny_
        abn = (acc_x[ib] - acc_w[ib] * rby) * nx_ + (acc_y[ib] + acc_w[ib] * rbx) * ny_
        kick = (aan - abn) * half_dt
        bias = kick if kick > 0.0 else 0.0
        # Tangential analogue: anticipate the slip the half-kick would add so
        # a contact inside the friction cone sticks without per-step creep.
        aat = (acc_x[ia] - acc_w[ia] * ray) * tx + (acc_y[ia] + acc_w[ia] * rax) * ty
        abt = (acc_x[ib] - acc_w[ib] * rby) * tx + (acc_y[ib] + acc_w[ib] * rbx) * ty
        c_tt[k] = (abt - aat) * half_dt
        e = world.pair_rest[(ia, ib)]
        if e > 0.0 and approach > RESTITUTION_THRESHOLD:
            c_target[k] = e * approach
        elif approach > 0.0:
            c_target[k] = bias if bias < approach else approach
        else:
            c_target[k] = 0.0

    # Virtual-floor friction constraints (top-down worlds).
    gf_bodies = [
        i for i in range(n) if kind[i] == DYNAMIC and world.ground_mu[i] > 0.0
    ]
    gf_jx = [0.0] * n
    gf_jy = [0.0] * n
    gf_jw = [0.0] * n
    gf_cap = [0.0] * n
    gf_cap_w = [0.0] * n
    for i in gf_bodies:
        load = world.ground_mu[i] * world.mass[i] * G_STD
        gf_cap[i] = load * dt
        gf_cap_w[i] = load * world.spin_radius[i] * dt

    # ---- sequential impulse iterations ----------------------------------
    for _ in range(VELOCITY_ITERATIONS):
        for k in range(npts):
            ia = cp_ia[k]
            ib = cp_ib[k]
            nx_ = cp_nx[k]
            ny_ = cp_ny[k]
            rax, ray, rbx, rby = c_rax[k], c_ray[k], c_rbx[k], c_rby[k]
            # Normal constraint with accumulated clamping.
            vax = vx[ia] - om[ia] * ray
            vay = vy[ia] + om[ia] * rax
            vbx = vx[ib] - om[ib] * rby
            vby = vy[ib] + om[ib] * rbx
            vn = (vax - vbx) * nx_ + (vay - vby) * ny_  # approach rate
            # Drive the approach rate down to minus the target separation
            # rate (restitution or anticipated half-kick).
            dl = (vn + c_target[k]) * c_mn[k]
            ln_new = c_ln[k] + dl
            if ln_new < 0.0:
                ln_new = 0.0
            dl = ln_new - c_ln[k]
            if dl != 0.0:
                c_ln[k] = ln_new
                jx = dl * nx_
                jy = dl * ny_
                # Impulse pushes A and B apart: +j on B... the normal points
                # A -> B, approach is positive when closing, so apply -j to A
                # and +j to B with j along the normal.
                ima = inv_m[ia]
                imb = inv_m[ib]
                iia = inv_i[ia]
                iib = inv_i[ib]
                dva_x = -jx * ima
                dva_y = -jy * ima
                dwa = -(rax * jy - ray * jx) * iia
                dvb_x = jx * imb
                dvb_y = jy * imb
                dwb = (rbx * jy - rby * jx) * iib
                # Energy ledger: relative part is dissipation, kinematic
                # side's share is drive work.
                vax_m = vax + 0.5 * (dva_x - dwa * ray)
                vay_m = vay + 0.5 * (dva_y + dwa * rax)
                vbx_m = vbx + 0.5 * (dvb_x - dwb * rby)
                vby_m = vby + 0.5 * (dvb_y + dwb * rbx)
                w_noncons += jx * (vbx_m - vax_m) + jy * (vby_m - vay_m)
                if ima == 0.0:
                    w_drive += jx * vax + jy * vay
                if imb == 0.0:
                    w_drive += -(jx * vbx + jy * vby)
                vx[ia] += dva_x
                vy[ia] += dva_y
                om[ia] += dwa
                vx[ib] += dvb_x
                vy[ib] += dvb_y
                om[ib] += dwb
            # Friction constraint, clamped to the cone of the accumulated
            # normal impulse.
            cap = c_mu[k] * c_ln[k]
            if cap > 0.0:
                tx, ty = -ny_, nx_
                vax = vx[ia] - om[ia] * ray
                vay = vy[ia] + om[ia] * rax
                vbx = vx[ib] - om[ib] * rby
                vby = vy[ib] + om[ib] * rbx
                vt = (vbx - vax) * tx + (vby - vay) * ty
                dl = -(vt + c_tt[k]) * c_mt[k]
                lt_new = c_lt[k] + dl
                if lt_new > cap:
                    lt_new = cap
                elif lt_new < -cap:
                    lt_new = -cap
                dl = lt_new - c_lt[k]
                if dl != 0.0:
                    c_lt[k] = lt_new
                    jx = dl * tx
                    jy = dl * ty
                    ima = inv_m[ia]
                    imb = inv_m[ib]
                    iia = inv_i[ia]
                    iib = inv_i[ib]
                    dva_x = -jx * ima
                    dva_y = -jy * ima
                    dwa = -(rax * jy - ray * jx) * iia
                    dvb_x = jx * imb
                    dvb_y = jy * imb
                    dwb = (rbx * jy - rby * jx) * iib
                    vax_m = vax + 0.5 * (dva_x - dwa * ray)
                    vay_m = vay + 0.5 * (dva_y + dwa * rax)
                    vbx_m = vbx + 0.5 * (dvb_x - dwb * rby)
                    vby_m = vby + 0.5 * (dvb_y + dwb * rbx)
                    w_noncons += jx * (vbx_m - vax_m) + jy * (vby_m - vay_m)
                    if ima == 0.0:
                        w_drive += jx * vax + jy * vay
                    if imb == 0.0:
                        w_drive += -(jx * vbx + jy * vby)
                    vx[ia] += dva_x
                    vy[ia] += dva_y
                    om[ia] += dwa
                    vx[ib] += dvb_x
                    vy[ib] += dvb_y
                    om[ib] += dwb
        for i in gf_bodies:
            # Linear Coulomb friction against the virtual floor, anticipated
            # like the contact solve so a parked body stays parked for free.
            m = world.mass[i]
            tx_ = -(vx[i] + acc_x[i] * half_dt)
            ty_ = -(vy[i] + acc_y[i] * half_dt)
            djx = tx_ * m
            djy = ty_ * m
            jx_new = gf_jx[i] + djx
            jy_new = gf_jy[i] + djy
            norm = math.hypot(jx_new, jy_new)
            cap = gf_cap[i]
            if norm > cap:
                scale = cap / norm
                jx_new *= scale
                jy_new *= scale
            djx = jx_new - gf_jx[i]
            djy = jy_new - gf_jy[i]
            if djx != 0.0 or djy != 0.0:
                gf_jx[i] = jx_new
                gf_jy[i] = jy_new
                im = inv_m[i]
                w_noncons += djx * (vx[i] + 0.5 * djx * im) + djy * (
                    vy[i] + 0.5 * djy * im
                )
                vx[i] += djx * im
                vy[i] += djy * im
            dw = -(om[i] + acc_w[i] * half_dt)
            dj = dw / inv_i[i]
            jw_new = gf_jw[i] + dj
            cap_w = gf_cap_w[i]
            if jw_new > cap_w:
                jw_new = cap_w
            elif jw_new < -cap_w:
                jw_new = -cap_w
            dj = jw_new - gf_jw[i]
            if dj != 0.0:
                gf_jw[i] = jw_new
                w_noncons += dj * (om[i] + 0.5 * dj * inv_i[i])
                om[i] += dj * inv_i[i]

    # ---- kick-drift-kick -------------------------------------------------
    w_control = 0.0
    for i in range(n):
        if kind[i] == DYNAMIC:
            vx[i] += acc_x[i] * half_dt
            vy[i] += acc_y[i] * half_dt
            om[i] += acc_w[i] * half_dt
    for i in range(n):
        if kind[i] != STATIC:
            dx = vx[i] * dt
            dy = vy[i] * dt
            dth = om[i] * dt
            px[i] += dx
            py[i] += dy
            th[i] += dth
            if not -math.pi < th[i] <= math.pi:
                th[i] = wrap_angle(th[i])
            if kind[i] == DYNAMIC:
                fxi, fyi, taui = controls[i]
                w_control += fxi * dx + fyi * dy + taui * dth
    sfx2, sfy2, damp_power2, spring_drive_power2 = _spring_forces(world, px, py, vx, vy)
    for i in range(n):
        if kind[i] == DYNAMIC:
            fxi, fyi, taui = controls[i]
            vx[i] += (gx + (fxi + sfx2[i]) * inv_m[i]) * half_dt
            vy[i] += (gy + (fyi + sfy2[i]) * inv_m[i]) * half_dt
            om[i] += taui * inv_i[i] * half_dt

    w_noncons += (damp_power + damp_power2) * half_dt
    w_drive += (spring_drive_power + spring_drive_power2) * half_dt
    w_control += w_drive

    # ---- positional correction (projection, no velocity change) ---------
    if need_projection:
        cache = _TransformCache(world, px, py, th)
        for ia, ib in touched_pairs:
            pts = _narrowphase(world, ia, ib, cache)
            for _, _, nx_, ny_, pen in pts:
                if pen <= LINEAR_SLOP:
                    continue
                corr = BAUMGARTE * (pen - LINEAR_SLOP)
                if corr > MAX_CORRECTION:
                    corr = MAX_CORRECTION
                total_inv = inv_m[ia] + inv_m[ib]
                if total_inv <= 0.0:
                    continue
                sa = inv_m[ia] / total_inv
                sb = inv_m[ib] / total_inv
                px[ia] -= nx_ * corr * sa
                py[ia] -= ny_ * corr * sa
                px[ib] += nx_ * corr * sb
                py[ib] += ny_ * corr * sb

    # ---- report ----------------------------------------------------------
    contacts = []
    inv_dt = 1.0 / dt
    for k in range(npts):
        ia = cp_ia[k]
        ib = cp_ib[k]
        nx_ = cp_nx[k]
        ny_ = cp_ny[k]
        rax, ray, rbx, rby = c_rax[k], c_ray[k], c_rbx[k], c_rby[k]
        tx, ty = -ny_, nx_
        vax = vx[ia] - om[ia] * ray
        vay = vy[ia] + om[ia] * rax
        vbx = vx[ib] - om[ib] * rby
        vby = vy[ib] + om[ib] * rbx
        slip = abs((vbx - vax) * tx + (vby - vay) * ty)
        contacts.append(
            ContactPoint(
                body_a=ia,
                body_b=ib,
                point=(cp_px[k], cp_py[k]),
                normal=(nx_, ny_),
                lambda_n=c_ln[k] * inv_dt,
                lambda_t=c_lt[k] * inv_dt,
                slip_speed=slip,
                penetration=cp_pen[k],
            )
        )

    new_state = WorldState(
        poses=tuple(Pose2(px[i], py[i], th[i]) for i in range(n)),
        twists=tuple(Twist2(vx[i], vy[i], om[i]) for i in range(n)),
        time=state.time + dt,
    )
    report = StepReport(
        contacts=tuple(contacts),
        w_control=w_control,
        w_noncons=w_noncons,
        dt=dt,
    )
    return new_state, report


def min_body_distance(world: World, state: WorldState, body_a: int, body_b: int) -> float:
    """Exact separation distance between two convex bodies (0 if touching)."""
    px = [p.x for p in state.poses]
    py = [p.y for p in state.poses]
    th = [p.theta for p in state.poses]
    cache = _TransformCache(world, px, py, th)
    ia, ib = body_a, body_b
    if world.is_circle[ia] and world.is_circle[ib]:
        return distance_circle_circle(
            px[ia], py[ia], world.radius[ia], px[ib], py[ib], world.radius[ib]
        )
    if world.is_circle[ia]:
        verts, normals = cache.polygon(ib)
        return distance_circle_polygon(px[ia], py[ia], world.radius[ia], verts, normals)
    if world.is_circle[ib]:
        verts, normals = cache.polygon(ia)
        return distance_circle_polygon(px[ib], py[ib], world.radius[ib], verts, normals)
    verts_a, normals_a = cache.polygon(ia)
    verts_b, normals_b = cache.polygon(ib)
    return distance_polygon_polygon(verts_a, normals_a, verts_b, normals_b)
