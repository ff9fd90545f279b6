import math
import random

import pytest

from caging import dynamics as dyn
from caging import energy as en
from caging.geometry import Circle, box

from helpers import rollout


def _ball(name="ball", r=0.05, m=1.0, mu=0.5, e=0.0, **kw):
    return dyn.BodyDef(name, "dynamic", Circle(r), mass=m, inertia=0.5 * m * r * r,
                       friction_mu=mu, restitution=e, **kw)


# ---------------------------------------------------------------------------
# construction

def test_empty_world_steps_as_noop():
    w = dyn.build_world([])
    s, r = dyn.step(w, w.initial_state())
    assert s.poses == () and r.contacts == ()
    assert r.w_control == 0.0 and r.w_noncons == 0.0


def test_resting_box_world_has_one_contacting_pair():
    ground = dyn.BodyDef("ground", "static", box(5.0, 0.5))
    cube = dyn.BodyDef("box", "dynamic", box(0.5, 0.5), mass=1.0, inertia=1.0 / 6)
    w = dyn.build_world([ground, cube], gravity=(0.0, -9.81))
    s = w.initial_state([dyn.Pose2(0, 0, 0), dyn.Pose2(0, 1.0, 0)])
    s, r = dyn.step(w, s)
    pairs = {(c.body_a, c.body_b) for c in r.contacts}
    assert pairs == {(0, 1)}


def test_degenerate_polygon_rejected():
    shape = dyn.ConvexPolygon(((0.0, 0.0), (1.0, 0.0), (2.0, 0.0)))
    with pytest.raises(ValueError, match="degenerate shape"):
        dyn.build_world([dyn.BodyDef("bad", "static", shape)])


def test_nonpositive_mass_rejected():
    with pytest.raises(ValueError, match="positive mass"):
        dyn.build_world([dyn.BodyDef("m0", "dynamic", Circle(0.1), mass=0.0, inertia=1.0)])


def test_duplicate_names_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        dyn.build_world([_ball("a"), _ball("a")])


def test_off_center_dynamic_polygon_rejected():
    shape = dyn.ConvexPolygon(((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)))
    with pytest.raises(ValueError, match="centroid"):
        dyn.build_world([dyn.BodyDef("sq", "dynamic", shape, mass=1.0, inertia=0.1)])


def test_restitution_out_of_range_rejected():
    with pytest.raises(ValueError):
        dyn.build_world([_ball(e=1.5)])


def test_spring_validation():
    with pytest.raises(ValueError, match="body_index"):
        dyn.build_world([_ball()], springs=[dyn.SpringJointDef(body_index=3)])
    with pytest.raises(ValueError, match="dynamic"):
        dyn.build_world(
            [dyn.BodyDef("k", "kinematic", Circle(0.1))],
            springs=[dyn.SpringJointDef(body_index=0)],
        )


# ---------------------------------------------------------------------------
# integration basics

def test_free_drift_advances_pose_only():
    w = dyn.build_world([_ball()], gravity=(0.0, 0.0))
    s = w.initial_state()
    s = s._replace(twists=(dyn.Twist2(1.0, 0.0, 0.0),))
    s, r = dyn.step(w, s, dt=0.1)
    assert s.poses[0].x == pytest.approx(0.1, abs=1e-15)
    assert s.twists[0] == dyn.Twist2(1.0, 0.0, 0.0)
    assert r.w_noncons == 0.0


def test_half_kick_work_convention_single_step():
    # 2 N on a unit mass from rest for one 0.5 s step: the velocity update
    # brackets the drift, so x advances by 0.25 m and the control work is
    # f * dx = 0.5 J, exactly the kinetic energy gained.
    w = dyn.build_world([_ball(r=0.1)], gravity=(0.0, 0.0))
    s, r = dyn.step(w, w.initial_state(), {0: (2.0, 0.0, 0.0)}, dt=0.5)
    assert s.twists[0].vx == pytest.approx(1.0, abs=1e-12)
    assert s.poses[0].x == pytest.approx(0.25, abs=1e-12)
    assert r.w_control == pytest.approx(0.5, abs=1e-12)
    e = en.mechanical_energy(w, s).total
    assert e == pytest.approx(r.w_control, abs=1e-12)


def test_free_flight_energy_closure():
    w = dyn.build_world([_ball(m=1.0)], gravity=(0.0, -9.81))
    s = w.initial_state([dyn.Pose2(0.0, 2.0, 0.0)])
    s = s._replace(twists=(dyn.Twist2(0.7, 1.5, 0.3),))
    s, ledger = rollout(w, s, steps=480)
    assert abs(ledger["e1"] - ledger["e0"] - ledger["w_control"]) < 1e-9
    assert ledger["w_noncons"] == 0.0


def test_controlled_flight_energy_closure():
    w = dyn.build_world([_ball(m=0.7)], gravity=(0.0, -9.81))
    s = w.initial_state([dyn.Pose2(0.0, 1.0, 0.0)])
    rng = random.Random(11)
    e_prev = en.mechanical_energy(w, s).total
    drift = 0.0
    for _ in range(60):
        u = (rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-0.2, 0.2))
        for _ in range(20):
            s, r = dyn.step(w, s, {0: u})
            e = en.mechanical_energy(w, s).total
            drift += (e - e_prev) - r.w_control
            e_prev = e
    assert abs(drift) < 1e-9  # 5 simulated seconds


def test_theta_stays_normalized():
    w = dyn.build_world([_ball()], gravity=(0.0, 0.0))
    s = w.initial_state()
    s = s._replace(twists=(dyn.Twist2(0.0, 0.0, 5.0),))
    for _ in range(1000):
        s, _ = dyn.step(w, s)
        assert -math.pi < s.poses[0].theta <= math.pi


def test_determinism_bitwise():
    def run():
        w = dyn.build_world([
            dyn.BodyDef("ground", "static", box(5.0, 0.5), friction_mu=0.6),
            dyn.BodyDef("b", "dynamic", box(0.1, 0.1), mass=1.0, inertia=1 / 6,
                        friction_mu=0.4, restitution=0.3),
        ])
        s = w.initial_state([dyn.Pose2(0, 0, 0), dyn.Pose2(0, 1.2, 0.4)])
        out = []
        for _ in range(500):
            s, _ = dyn.step(w, s)
            out.append(s)
        return out
    a, b = run(), run()
    assert a == b


def test_mirror_symmetry():
    def build(sign):
        w = dyn.build_world([
            dyn.BodyDef("ground", "static", box(5.0, 0.5), friction_mu=0.4),
            _ball("b", r=0.1, m=0.5, mu=0.4, e=0.5),
        ])
        s = w.initial_state([dyn.Pose2(0, 0, 0), dyn.Pose2(sign * 0.3, 1.0, 0)])
        s = s._replace(twists=(dyn.Twist2(0, 0, 0), dyn.Twist2(sign * 1.3, 0.0, -sign * 2.0)))
        return w, s

    wl, sl = build(1.0)
    wr, sr = build(-1.0)
    for _ in range(480):
        sl, _ = dyn.step(wl, sl)
        sr, _ = dyn.step(wr, sr)
        assert sl.poses[1].x == pytest.approx(-sr.poses[1].x, abs=1e-9)
        assert sl.poses[1].y == pytest.approx(sr.poses[1].y, abs=1e-9)
        assert sl.twists[1].vx == pytest.approx(-sr.twists[1].vx, abs=1e-9)
        assert sl.twists[1].omega == pytest.approx(-sr.twists[1].omega, abs=1e-9)


# ---------------------------------------------------------------------------
# contacts

def test_elastic_head_on_bounce():
    wall = dyn.BodyDef("wall", "static", box(0.1, 1.0), friction_mu=0.0)
    ball = _ball(m=0.5, mu=0.0, e=1.0)
    w = dyn.build_world([wall, ball], gravity=(0.0, 0.0))
    s = w.initial_state([dyn.Pose2(0.5, 0, 0), dyn.Pose2(0, 0, 0)])
    s = s._replace(twists=(dyn.Twist2(0, 0, 0), dyn.Twist2(2.0, 0.0, 0.0)))
    s, ledger = rollout(w, s, steps=240)
    assert s.twists[1].vx == pytest.approx(-2.0, abs=1e-6)
    assert abs(ledger["w_noncons"]) < 1e-9
    assert abs(ledger["e1"] - ledger["e0"]) < 1e-9


def test_slow_approach_treated_inelastic():
    # Below the restitution activation speed even e=1 contacts settle.
    ground = dyn.BodyDef("ground", "static", box(5.0, 0.5))
    ball = _ball(m=1.0, e=1.0)
    w = dyn.build_world([ground, ball])
    s = w.initial_state([dyn.Pose2(0, 0, 0), dyn.Pose2(0, 0.55 + 2e-5, 0)])
    for _ in range(240):
        s, _ = dyn.step(w, s)
    # At a step boundary a resting body carries the half-kick velocity
    # g dt / 2; anything larger would be a genuine bounce.
    assert abs(s.twists[1].vy) <= 9.81 * dyn.DT
    assert s.poses[1].y == pytest.approx(0.55, abs=1e-3)


def test_resting_contact_costs_nothing():
    ground = dyn.BodyDef("ground", "static", box(5.0, 0.5))
    cube = dyn.BodyDef("box", "dynamic", box(0.5, 0.5), mass=1.0, inertia=1.0 / 6)
    w = dyn.build_world([ground, cube])
    s = w.initial_state([dyn.Pose2(0, 0, 0), dyn.Pose2(0, 1.0, 0)])
    s, ledger = rollout(w, s, steps=1200)
    assert ledger["cost"] < 1e-6          # five simulated seconds
    assert s.poses[1].y == pytest.approx(1.0, abs=1e-3)
    support = sum(c.lambda_n for c in ledger["reports"][-1].contacts)
    assert support == pytest.approx(9.81, abs=1e-2)


def test_sticking_contact_within_friction_cone():
    ground = dyn.BodyDef("ground", "static", box(5.0, 0.5), friction_mu=0.8)
    cube = dyn.BodyDef("box", "dynamic", box(0.5, 0.5), mass=1.0, inertia=1.0 / 6,
                       friction_mu=0.8)
    w = dyn.build_world([ground, cube])
    s = w.initial_state([dyn.Pose2(0, 0, 0), dyn.Pose2(0, 1.0, 0)])
    mu = 0.8
    for k in range(480):
        # Subcritical lateral shove: the cube must stick, not creep.
        s, r = dyn.step(w, s, {1: (3.0, 0.0, 0.0)})
        for c in r.contacts:
            if c.slip_speed < 1e-5:
                assert abs(c.lambda_t) <= mu * c.lambda_n + 1e-6
    # Creep over two seconds stays below 0.1 mm (solver residual only).
    assert s.poses[1].x == pytest.approx(0.0, abs=1e-4)


def test_sliding_friction_stopping_distance():
    # v0 = 2 m/s against mu = 0.4: stops after v0^2/(2 mu g) = 0.5097 m
    # having dissipated the 2.0 J of kinetic energy, at zero path cost.
    ground = dyn.BodyDef("ground", "static", box(50.0, 0.5), friction_mu=0.4)
    cube = dyn.BodyDef("box", "dynamic", box(0.1, 0.1), mass=1.0, inertia=1.0 / 6,
                       friction_mu=0.4)
    w = dyn.build_world([ground, cube])
    s = w.initial_state([dyn.Pose2(0, 0, 0), dyn.Pose2(0, 0.6, 0)])
    s = s._replace(twists=(dyn.Twist2(0, 0, 0), dyn.Twist2(2.0, 0.0, 0.0)))
    s, ledger = rollout(w, s, steps=720)
    assert abs(s.twists[1].vx) < 1e-3
    assert s.poses[1].x == pytest.approx(2.0 ** 2 / (2 * 0.4 * 9.81), rel=0.01)
    assert ledger["w_noncons"] == pytest.approx(-2.0, rel=0.01)
    assert ledger["cost"] < 1e-6


def test_cumulative_dissipation_never_positive():
    # Impact speeds stay under one tunneling-guard length per step.
    ground = dyn.BodyDef("ground", "static", box(5.0, 0.5), friction_mu=0.5)
    ball = _ball(r=0.12, m=0.3, mu=0.5, e=0.6)
    w = dyn.build_world([ground, ball])
    s = w.initial_state([dyn.Pose2(0, 0, 0), dyn.Pose2(-0.5, 0.75, 0)])
    s = s._replace(twists=(dyn.Twist2(0, 0, 0), dyn.Twist2(1.0, 0.0, -4.0)))
    total = 0.0
    for _ in range(720):
        s, r = dyn.step(w, s)
        assert r.w_noncons <= 1e-12
        total += r.w_noncons
        assert total <= 1e-12


def test_tunneling_guard_fires_on_kinematic_crush():
    # A velocity-driven pusher wedging the object against a static wall is
    # unresolvable at any timestep; the guard must fail loudly.
    obj = dyn.BodyDef("obj", "dynamic", box(0.06, 0.04), mass=0.5,
                      inertia=0.5 * (0.06 ** 2 + 0.04 ** 2) / 3,
                      friction_mu=0.3, ground_mu=0.3)
    push = dyn.BodyDef("ee", "kinematic", Circle(0.02), friction_mu=0.3)
    wall = dyn.BodyDef("wall", "static", box(0.02, 0.5), friction_mu=0.3)
    w = dyn.build_world([obj, push, wall], gravity=(0.0, 0.0))
    s = w.initial_state([dyn.Pose2(0, 0, 0), dyn.Pose2(-0.085, 0, 0), dyn.Pose2(0.3, 0, 0)])
    s = s._replace(twists=(dyn.Twist2(0, 0, 0), dyn.Twist2(0.05, 0, 0), dyn.Twist2(0, 0, 0)))
    with pytest.raises(dyn.TunnelingError, match="tunneling detected"):
        for _ in range(2000):
            s, _ = dyn.step(w, s)


# ---------------------------------------------------------------------------
# top-down worlds (virtual-floor friction)

def test_parked_object_resists_subcritical_push():
    obj = dyn.BodyDef("obj", "dynamic", box(0.06, 0.04), mass=0.5,
                      inertia=0.5 * (0.06 ** 2 + 0.04 ** 2) / 3, ground_mu=0.3)
    w = dyn.build_world([obj], gravity=(0.0, 0.0))
    s = w.initial_state()
    s, ledger = rollout(w, s, controls={0: (1.0, 0.0, 0.0)}, steps=240)
    assert s.poses[0].x == 0.0      # 1.0 N < mu m g = 1.47 N
    assert ledger["cost"] == 0.0


def test_ground_friction_stops_sliding_object():
    obj = dyn.BodyDef("obj", "dynamic", box(0.06, 0.04), mass=0.5,
                      inertia=0.5 * (0.06 ** 2 + 0.04 ** 2) / 3, ground_mu=0.3)
    w = dyn.build_world([obj], gravity=(0.0, 0.0))
    s = w.initial_state()
    s = s._replace(twists=(dyn.Twist2(0.5, 0.0, 0.0),))
    for _ in range(120):
        s, _ = dyn.step(w, s)
    # v/(mu g) = 0.17 s to stop; the discrete trajectory undershoots the
    # continuum distance by exactly v0 dt / 2 (midpoint update).
    assert s.twists[0].vx == pytest.approx(0.0, abs=1e-9)
    expected = 0.5 ** 2 / (2 * 0.3 * 9.81) - 0.5 * dyn.DT / 2
    assert s.poses[0].x == pytest.approx(expected, abs=1e-4)


def test_kinematic_pusher_work_matches_path_cost():
    # The only external energy source is the velocity-driven pusher; the
    # absolute-work cost recovered from the energy ledger must equal its
    # attributed work step by step.
    obj = dyn.BodyDef("obj", "dynamic", box(0.06, 0.04), mass=0.5,
                      inertia=0.5 * (0.06 ** 2 + 0.04 ** 2) / 3,
                      friction_mu=0.3, ground_mu=0.3)
    push = dyn.BodyDef("ee", "kinematic", Circle(0.02), friction_mu=0.3)
    w = dyn.build_world([obj, push], gravity=(0.0, 0.0))
    s = w.initial_state([dyn.Pose2(0, 0, 0), dyn.Pose2(-0.085, 0, 0)])
    s = s._replace(twists=(dyn.Twist2(0, 0, 0), dyn.Twist2(0.05, 0.0, 0.0)))
    s, ledger = rollout(w, s, steps=2400)
    assert ledger["w_control"] > 0.5        # it really pushed
    assert ledger["mismatch"] < 1e-9
    assert ledger["cost"] == pytest.approx(ledger["w_control"], abs=1e-9)


def test_kinematic_body_keeps_its_twist():
    obj = _ball("obj", m=0.2, mu=0.2)
    push = dyn.BodyDef("ee", "kinematic", Circle(0.05))
    w = dyn.build_world([obj, push], gravity=(0.0, 0.0))
    s = w.initial_state([dyn.Pose2(0, 0, 0), dyn.Pose2(-0.2, 0, 0)])
    s = s._replace(twists=(dyn.Twist2(0, 0, 0), dyn.Twist2(0.3, 0.0, 0.0)))
    for _ in range(480):
        s, _ = dyn.step(w, s)
        assert s.twists[1] == dyn.Twist2(0.3, 0.0, 0.0)


# ---------------------------------------------------------------------------
# springs

def test_spring_oscillation_period_and_energy():
    body = _ball(m=1.0)
    spring = dyn.SpringJointDef(body_index=0, anchor_world=(0.0, 0.0),
                                stiffness=100.0, damping=0.0, rest_length=0.0)
    w = dyn.build_world([body], springs=[spring], gravity=(0.0, 0.0))
    s = w.initial_state([dyn.Pose2(0.1, 0.0, 0.0)])
    e0 = en.mechanical_energy(w, s).total
    assert e0 == pytest.approx(0.5, abs=1e-12)   # 0.5 * k * x^2
    period_steps = int(round(2 * math.pi / math.sqrt(100.0) * 240))
    for _ in range(period_steps):
        s, _ = dyn.step(w, s)
    assert s.poses[0].x == pytest.approx(0.1, abs=2e-3)
    assert en.mechanical_energy(w, s).total == pytest.approx(e0, abs=1e-3)


def test_damped_spring_settles_and_dissipates():
    body = _ball(m=1.0)
    spring = dyn.SpringJointDef(body_index=0, anchor_world=(0.0, 0.0),
                                stiffness=50.0, damping=8.0, rest_length=0.0)
    w = dyn.build_world([body], springs=[spring], gravity=(0.0, 0.0))
    s = w.initial_state([dyn.Pose2(0.2, 0.0, 0.0)])
    total_noncons = 0.0
    for _ in range(2400):
        s, r = dyn.step(w, s)
        assert r.w_noncons <= 1e-12
        total_noncons += r.w_noncons
    assert abs(s.poses[0].x) < 1e-4
    assert total_noncons == pytest.approx(-0.5 * 50.0 * 0.2 ** 2, rel=1e-3)


# ---------------------------------------------------------------------------
# distances

def test_min_body_distance_examples():
    a = _ball("a", r=1.0)
    b = dyn.BodyDef("b", "static", Circle(1.0))
    w = dyn.build_world([a, b], gravity=(0.0, 0.0))
    s = w.initial_state([dyn.Pose2(0, 0, 0), dyn.Pose2(3.0, 0, 0)])
    assert dyn.min_body_distance(w, s, 0, 1) == pytest.approx(1.0)

    boxes = dyn.build_world([
        dyn.BodyDef("p", "dynamic", box(0.5, 0.5), mass=1.0, inertia=1 / 6),
        dyn.BodyDef("q", "static", box(0.5, 0.5)),
    ], gravity=(0.0, 0.0))
    s = boxes.initial_state([dyn.Pose2(0, 0, 0), dyn.Pose2(0.3, 0.2, 0)])
    assert dyn.min_body_distance(boxes, s, 0, 1) == 0.0

    mixed = dyn.build_world([
        dyn.BodyDef("sq", "static", box(0.5, 0.5)),
        _ball("c", r=0.5),
    ], gravity=(0.0, 0.0))
    s = mixed.initial_state([dyn.Pose2(0, 0, 0), dyn.Pose2(2.0, 0, 0)])
    assert dyn.min_body_distance(mixed, s, 0, 1) == pytest.approx(1.0)
