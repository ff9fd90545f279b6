"""Shared rollout utilities for the test suite."""

from __future__ import annotations

from caging import dynamics as dyn
from caging import energy as en
from caging import geometry as geo
from caging import scenarios as sc


def rollout(world, state, controls=None, steps=240, datum=(0.0, 0.0)):
    """Step ``steps`` times and return (final state, ledger summary dict).

    The ledger accumulates control work, non-conservative work, and the
    absolute-external-work path cost computed step by step from the energy
    module, along with the boundary mechanical energies.
    """
    e0 = en.mechanical_energy(world, state, datum).total
    e_prev = e0
    w_control = 0.0
    w_noncons = 0.0
    cost = 0.0
    mismatch = 0.0
    reports = []
    for _ in range(steps):
        state, report = dyn.step(world, state, controls)
        e = en.mechanical_energy(world, state, datum).total
        inc = en.cost_increment(e_prev, e, report)
        cost += inc.d_work_ext_abs
        mismatch += abs(inc.d_work_ext_abs - abs(report.w_control))
        w_control += report.w_control
        w_noncons += report.w_noncons
        e_prev = e
        reports.append(report)
    return state, {
        "e0": e0,
        "e1": e_prev,
        "w_control": w_control,
        "w_noncons": w_noncons,
        "cost": cost,
        "mismatch": mismatch,
        "reports": reports,
    }


def make_well_spec(f_max=15.0, sealed=False):
    """A 1 kg disk at rest in a frictionless U-channel.

    The capture region is "center of mass below the rim", where the rim
    sits exactly 0.1 m above the resting height, so the least possible
    escape work is m*g*0.1 = 0.981 J.  The channel walls rise well past
    the rim and every surface is frictionless and inelastic, which makes
    gravity the only escape barrier; the force bound must exceed the
    9.81 N weight for an escape to exist at all.

    With ``sealed=True`` a ceiling closes the channel below the rim, so
    no escape exists at any effort.
    """
    radius = 0.05
    rest_y = radius           # floor top sits at y = 0
    rim_y = rest_y + 0.1
    bodies = [
        dyn.BodyDef("disk", "dynamic", geo.Circle(radius), mass=1.0,
                    inertia=0.5 * 1.0 * radius ** 2, friction_mu=0.0),
        dyn.BodyDef("frame", "static", geo.Circle(0.004), collides=False),
        dyn.BodyDef("floor", "static", geo.box(0.25, 0.02), friction_mu=0.0),
        dyn.BodyDef("wall_l", "static", geo.box(0.02, 0.25), friction_mu=0.0),
        dyn.BodyDef("wall_r", "static", geo.box(0.02, 0.25), friction_mu=0.0),
    ]
    poses = [
        dyn.Pose2(0.0, rest_y, 0.0),
        dyn.Pose2(0.0, 0.0, 0.0),
        dyn.Pose2(0.0, -0.02, 0.0),
        dyn.Pose2(-0.14, 0.2, 0.0),
        dyn.Pose2(0.14, 0.2, 0.0),
    ]
    if sealed:
        bodies.append(dyn.BodyDef("ceiling", "static", geo.box(0.25, 0.02),
                                  friction_mu=0.0))
        poses.append(dyn.Pose2(0.0, 0.14, 0.0))
    world = dyn.build_world(bodies)
    home = world.initial_state(poses)
    goal_verts = tuple((x, y + 0.7) for x, y in geo.box(0.3, 0.1).vertices)
    return sc.ScenarioSpec(
        name="well",
        world=world,
        home=home,
        object_index=0,
        ee_index=1,
        control_bounds=sc.ControlBounds(f_max=f_max, tau_max=0.0),
        capture=sc.CaptureSetSpec(
            "support_region", {"half_x": 0.12, "y_lo": -0.5, "y_hi": rim_y}),
        success=sc.SuccessSetSpec(
            "region_goal",
            {"polygon_verts": goal_verts,
             "polygon_normals": geo.edge_normals(goal_verts)}),
        kinematic_bounds=sc.StateBox(x=(-0.45, 0.45), y=(-0.05, 0.8),
                                     v_max=4.0, omega_max=10.0),
        ee_policy="frozen",
        datum_height=rest_y,
        config={"f_max": f_max, "rim_y": rim_y, "barrier": 1.0 * 9.81 * 0.1},
        script={"horizon_steps": 0},
    )


def run_scripted(spec, seed):
    """Drive a scenario with its scripted controller to the horizon.

    The driven body's twist is replaced each step by the scripted velocity
    command before integrating, mirroring a kinematic actuator. Returns
    (success flag at the final frame, final system state).
    """
    ws = spec.home
    drv = sc.driven_index(spec)
    for k in range(spec.script["horizon_steps"]):
        z = sc.from_world_state(spec, ws)
        cmd = sc.scripted_control(spec, z, k, seed)
        twists = list(ws.twists)
        twists[drv] = dyn.Twist2(*cmd)
        ws = ws._replace(twists=tuple(twists))
        ws, _ = dyn.step(spec.world, ws)
    z = sc.from_world_state(spec, ws)
    return sc.success_contains(spec, z), z
