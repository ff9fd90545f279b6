"""Oracle and property tests for the robustness scores."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import caging.metrics as mt
import caging.planner as pl
import caging.scenarios as scn
from caging.dynamics import ContactPoint, Pose2, Twist2
from caging.scenarios import SystemState

from helpers import make_well_spec

GRAVITY_BARRIER = 1.0 * 9.81 * 0.1  # disk mass times g times rim height


def well_state(y=0.05, x=0.0):
    return SystemState(Pose2(x, y, 0.0), Twist2(0.0, 0.0, 0.0),
                       Pose2(0.0, 0.0, 0.0), Twist2(0.0, 0.0, 0.0), 0.0)


@pytest.fixture(scope="module")
def well():
    return make_well_spec()


# ---------------------------------------------------------------------------
# effort of escape


def test_effort_zero_when_already_escaped(well):
    z = well_state(y=0.35)  # above the rim, outside the capture region
    assert not scn.capture_contains(well, z, z)
    result = mt.effort_of_escape(well, z, n=2, per_iteration_budget=50)
    assert result.effort == 0.0
    assert result.path is None
    assert result.bound_history == ()
    assert result.iterations_used == 0


def test_effort_infinite_when_sealed():
    spec = make_well_spec(sealed=True)
    result = mt.effort_of_escape(spec, well_state(), n=2,
                                 per_iteration_budget=100, seed=0)
    assert math.isinf(result.effort)
    assert result.path is None
    assert result.bound_history == ()
    assert result.iterations_used == 100


def test_effort_converges_on_the_well(well):
    z0 = well_state()
    result = mt.effort_of_escape(well, z0, subroutine="est", n=3,
                                 per_iteration_budget=600, seed=1)
    hist = result.bound_history
    assert math.isfinite(result.effort)
    assert len(hist) >= 1
    assert all(b > a for a, b in zip(hist[1:], hist))  # strictly decreasing
    assert result.effort == hist[-1]
    assert result.effort <= hist[0]
    # a real escape can never cost less than lifting the disk over the rim
    assert result.effort >= GRAVITY_BARRIER - 1e-3
    path = result.path
    assert path is not None
    assert path.cost == result.effort
    assert path.nodes[0].aug.z == z0
    assert not scn.capture_contains(well, z0, path.nodes[-1].aug.z)


def test_effort_deterministic(well):
    z0 = well_state()
    a = mt.effort_of_escape(well, z0, n=1, per_iteration_budget=300, seed=7)
    b = mt.effort_of_escape(well, z0, n=1, per_iteration_budget=300, seed=7)
    assert a.effort == b.effort
    assert a.bound_history == b.bound_history
    assert a.iterations_used == b.iterations_used


# ---------------------------------------------------------------------------
# energy cost field


def test_field_single_sample(well):
    z0 = well_state()
    field = mt.energy_cost_field(well, z0, M=1, seed=0)
    assert field.samples == ((z0, 0.0),)
    assert field.root == z0


def test_field_rejects_empty(well):
    with pytest.raises(ValueError):
        mt.energy_cost_field(well, well_state(), M=0)


def test_field_sizes_and_costs(well):
    z0 = well_state()
    field = mt.energy_cost_field(well, z0, M=30, seed=3)
    assert len(field.samples) == 30
    assert field.samples[0] == (z0, 0.0)
    assert all(c >= 0.0 for _, c in field.samples)


def test_field_deterministic(well):
    z0 = well_state()
    a = mt.energy_cost_field(well, z0, M=20, seed=5)
    b = mt.energy_cost_field(well, z0, M=20, seed=5)
    c = mt.energy_cost_field(well, z0, M=20, seed=6)
    assert a.samples == b.samples
    assert a.samples != c.samples


def test_downhill_field_costs_near_zero():
    # With a vanishing force bound, the only work done on a dropped disk
    # is gravity's, so every sample's external-work cost stays tiny even
    # though the mechanical-energy change is large.
    spec = make_well_spec(f_max=0.01)
    z0 = well_state(y=0.35)
    field = mt.energy_cost_field(spec, z0, M=40, seed=2)
    drop_work = 1.0 * 9.81 * 0.30  # falling to rest on the floor
    assert max(c for _, c in field.samples) < 0.05 * drop_work
    assert min(z.object_pose.y for z, _ in field.samples) < 0.2


def test_field_snapshots_share_prefix(well):
    z0 = well_state()
    snaps = mt.field_snapshots(well, z0, milestones=[20, 5], seed=4)
    assert [m for m, _, _ in snaps] == [5, 20]
    small, large = snaps[0][1], snaps[1][1]
    assert len(small.samples) == 5
    assert len(large.samples) == 20
    assert large.samples[:5] == small.samples
    assert snaps[1][2] >= snaps[0][2]  # cumulative wall clock


# ---------------------------------------------------------------------------
# likelihoods

DUMMY = SystemState(Pose2(0, 0, 0), Twist2(0, 0, 0),
                    Pose2(0, 0, 0), Twist2(0, 0, 0), 0.0)


def field_of(costs):
    return mt.EnergyCostField(tuple((DUMMY, c) for c in costs), DUMMY)


def test_likelihoods_uniform_for_equal_costs():
    for lam in (0.0, 1.0, 7.3):
        mass = mt.likelihoods(field_of([5.0, 5.0, 5.0, 5.0]), lam)
        assert np.allclose(mass, 0.25, atol=1e-12)


def test_likelihoods_hand_example():
    mass = mt.likelihoods(field_of([0.0, math.log(2.0)]), 1.0)
    assert abs(mass[0] - 2.0 / 3.0) < 1e-12
    assert abs(mass[1] - 1.0 / 3.0) < 1e-12


def test_likelihoods_zero_lambda_uniform():
    mass = mt.likelihoods(field_of([0.0, 3.0, 40.0, 2.5]), 0.0)
    assert np.allclose(mass, 0.25, atol=1e-12)


def test_likelihoods_validation():
    with pytest.raises(ValueError):
        mt.likelihoods(mt.EnergyCostField((), DUMMY), 1.0)
    with pytest.raises(ValueError):
        mt.likelihoods(field_of([1.0]), -0.5)


@settings(max_examples=60, deadline=None)
@given(costs=st.lists(st.floats(min_value=0.0, max_value=50.0),
                      min_size=1, max_size=12),
       lam=st.floats(min_value=0.0, max_value=5.0),
       shift=st.floats(min_value=-30.0, max_value=100.0))
def test_likelihoods_normalized_and_shift_invariant(costs, lam, shift):
    base = mt.likelihoods(field_of(costs), lam)
    assert abs(base.sum() - 1.0) < 1e-9
    shifted = mt.likelihoods(field_of([c + shift for c in costs]), lam)
    assert np.max(np.abs(base - shifted)) < 1e-12


@settings(max_examples=60, deadline=None)
@given(costs=st.lists(st.floats(min_value=0.0, max_value=20.0),
                      min_size=2, max_size=10),
       lam_lo=st.floats(min_value=0.0, max_value=3.0),
       lam_step=st.floats(min_value=0.0, max_value=3.0))
def test_sharper_lambda_never_favors_costliest(costs, lam_lo, lam_step):
    worst = int(np.argmax(costs))
    lo = mt.likelihoods(field_of(costs), lam_lo)
    hi = mt.likelihoods(field_of(costs), lam_lo + lam_step)
    assert hi[worst] <= lo[worst] + 1e-12


def test_lower_cost_never_lower_mass():
    mass = mt.likelihoods(field_of([3.0, 1.0, 4.0, 1.0, 0.5]), 2.0)
    order = np.argsort([3.0, 1.0, 4.0, 1.0, 0.5])
    sorted_mass = mass[order]
    assert all(b <= a + 1e-15 for a, b in zip(sorted_mass, sorted_mass[1:]))


# ---------------------------------------------------------------------------
# capture scores


def test_capture_two_sample_oracle(well):
    z_in = well_state()          # resting inside the channel
    z_out = well_state(y=0.35)   # above the rim
    field = mt.EnergyCostField(((z_in, 0.0), (z_out, math.log(2.0))), z_in)
    scores = mt.capture_scores(well, z_in, field, lam=1.0)
    assert abs(scores.omega_cap - 2.0 / 3.0) < 1e-12
    assert scores.omega_suc == 0.0


def test_capture_all_in_none_successful(well):
    z_in = well_state()
    field = mt.EnergyCostField(((z_in, 0.0), (well_state(x=0.02), 1.0)), z_in)
    scores = mt.capture_scores(well, z_in, field, lam=1.0)
    assert abs(scores.omega_cap - 1.0) < 1e-12
    assert scores.omega_suc == 0.0


def test_success_mass_counted(well):
    z_in = well_state()
    z_goal = well_state(y=0.70)  # inside the elevated goal region
    assert scn.success_contains(well, z_goal)
    field = mt.EnergyCostField(((z_goal, 0.0), (z_in, math.log(2.0))), z_in)
    scores = mt.capture_scores(well, z_in, field, lam=1.0)
    assert abs(scores.omega_suc - 2.0 / 3.0) < 1e-12


def test_capture_mass_partition(well):
    z_in = well_state()
    field = mt.energy_cost_field(well, z_in, M=25, seed=9)
    mass = mt.likelihoods(field, 1.0)
    scores = mt.capture_scores(well, z_in, field, lam=1.0)
    outside = sum(m for (z, _), m in zip(field.samples, mass)
                  if not scn.capture_contains(well, z_in, z))
    assert abs(scores.omega_cap + outside - 1.0) < 1e-9
    assert 0.0 <= scores.omega_cap <= 1.0
    assert 0.0 <= scores.omega_suc <= 1.0


# ---------------------------------------------------------------------------
# force score


def contact(lambda_n, lambda_t):
    return ContactPoint(0, 1, (0.0, 0.0), (0.0, 1.0),
                        lambda_n, lambda_t, 0.0, 0.0)


def test_stick_hand_example():
    inp = mt.ForceScoreInput((contact(10.0, 2.0),), mu=0.5, min_distance=0.0)
    stick = mt.force_score(inp, weights=(0.0, 1.0, 0.0))
    assert abs(stick - 3.0 * math.cos(math.atan(0.5))) < 1e-12
    assert abs(stick - 2.6832815729997477) < 1e-9


def test_stick_zero_on_cone_edge():
    inp = mt.ForceScoreInput((contact(10.0, 5.0),), mu=0.5, min_distance=0.0)
    assert mt.force_score(inp, weights=(0.0, 1.0, 0.0)) == pytest.approx(0.0)


def test_stick_negative_outside_cone():
    inp = mt.ForceScoreInput((contact(10.0, 10.0),), mu=0.5, min_distance=0.0)
    assert mt.force_score(inp, weights=(0.0, 1.0, 0.0)) < 0.0


def test_no_contact_distance_only():
    inp = mt.ForceScoreInput((), mu=0.5, min_distance=0.05)
    assert mt.force_score(inp) == pytest.approx(math.exp(-1.0))
    assert mt.force_score(inp, weights=(1.0, 1.0, 0.0)) == 0.0


def test_engage_and_stick_take_best_contact():
    inp = mt.ForceScoreInput((contact(10.0, 2.0), contact(20.0, 9.9)),
                             mu=0.5, min_distance=0.0)
    # isolate one term at a time with unit weights
    assert mt.force_score(inp, weights=(1.0, 0.0, 0.0)) == pytest.approx(20.0)
    best_stick = max(0.5 * 10.0 - 2.0, 0.5 * 20.0 - 9.9) * math.cos(math.atan(0.5))
    assert mt.force_score(inp, weights=(0.0, 1.0, 0.0)) == pytest.approx(best_stick)


def test_force_score_default_weights():
    inp = mt.ForceScoreInput((contact(10.0, 2.0),), mu=0.5, min_distance=0.02)
    expected = (0.1 * 10.0 + 1.0 * 3.0 * math.cos(math.atan(0.5))
                + 1.0 * math.exp(-0.02 / 0.05))
    assert mt.force_score(inp) == pytest.approx(expected, abs=1e-12)


def test_force_score_rejects_bad_d0():
    with pytest.raises(ValueError):
        mt.force_score(mt.ForceScoreInput((), 0.5, 0.1), d0=0.0)


# ---------------------------------------------------------------------------
# trajectory success score


def test_trajectory_score_two_frames():
    assert mt.trajectory_success_score([0.0, 1.0], 2) == pytest.approx(2.0 / 3.0)


def test_trajectory_score_front_loaded():
    score = mt.trajectory_success_score([1.0, 0.0, 0.0, 0.0, 0.0], 5)
    assert score == pytest.approx(1.0 / 15.0)


def test_trajectory_score_constant():
    for k_bar in (1, 2, 5):
        assert mt.trajectory_success_score([0.37] * 6, k_bar) == pytest.approx(0.37)


def test_trajectory_score_validation():
    with pytest.raises(ValueError):
        mt.trajectory_success_score([1.0, 1.0], 0)
    with pytest.raises(ValueError):
        mt.trajectory_success_score([1.0, 1.0], 3)
