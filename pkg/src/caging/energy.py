"""Mechanical energy bookkeeping and the external-work path cost.

The path cost integrand is the absolute external power: for one simulator
step the external work is recovered from the energy ledger as

    |dW_ext| = |dE_mech - w_noncons|

where ``dE_mech`` is the mechanical-energy change across the step and
``w_noncons`` is the step's non-conservative (friction and impact) loss.
Friction alone therefore costs nothing, and resting or sticking states
accumulate zero cost; only work injected or extracted by something outside
the passive system (control wrenches, driven end-effectors) counts.

Kinetic and potential terms cover dynamic bodies only.  Velocity-driven
end-effectors are energy sources, not energy stores, so they are excluded
from the ledger and their work shows up in ``w_control`` instead.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

from .dynamics import DYNAMIC, StepReport, World, WorldState


class EnergyBreakdown(NamedTuple):
    kinetic: float
    gravitational: float
    elastic: float
    total: float


class CostIncrement(NamedTuple):
    d_energy: float
    d_noncons: float
    d_work_ext_abs: float


def mechanical_energy(
    world: World, state: WorldState, datum: tuple[float, float] = (0.0, 0.0)
) -> EnergyBreakdown:
    """Kinetic + gravitational + elastic energy of the dynamic bodies.

    Gravitational potential is measured relative to the fixed world point
    ``datum``.  Spring elastic energy counts for every spring joint (they
    attach to dynamic bodies by construction).
    """
    gx, gy = world.gravity
    kinetic = 0.0
    gravitational = 0.0
    for i in range(world.n):
        if world.kind[i] != DYNAMIC:
            continue
        m = world.mass[i]
        vx, vy, om = state.twists[i]
        kinetic += 0.5 * m * (vx * vx + vy * vy) + 0.5 * (1.0 / world.inv_i[i]) * om * om
        x, y, _ = state.poses[i]
        gravitational += -m * (gx * (x - datum[0]) + gy * (y - datum[1]))
    elastic = 0.0
    for s in world.springs:
        bx, by, _ = state.poses[s.body_index]
        if s.anchor_body_index is None:
            ax, ay = s.anchor_world
        else:
            ax, ay, _ = state.poses[s.anchor_body_index]
        ext = math.hypot(ax - bx, ay - by) - s.rest_length
        elastic += 0.5 * s.stiffness * ext * ext
    return EnergyBreakdown(
        kinetic=kinetic,
        gravitational=gravitational,
        elastic=elastic,
        total=kinetic + gravitational + elastic,
    )


def cost_increment(e_before: float, e_after: float, report: StepReport) -> CostIncrement:
    """Per-step |external work| recovered from the energy ledger."""
    d_energy = e_after - e_before
    d_noncons = report.w_noncons
    return CostIncrement(
        d_energy=d_energy,
        d_noncons=d_noncons,
        d_work_ext_abs=abs(d_energy - d_noncons),
    )


def path_cost(increments: Sequence[CostIncrement | float]) -> float:
    """Sum of per-step |external work| along a path.

    Accepts CostIncrement entries or bare nonnegative work magnitudes;
    additive over concatenated segments.
    """
    total = 0.0
    for inc in increments:
        total += inc.d_work_ext_abs if isinstance(inc, CostIncrement) else float(inc)
    return total


def rollout_cost(energies: Sequence[float], reports: Sequence[StepReport]) -> float:
    """Path cost of a recorded rollout from its step-boundary energies.

    ``energies`` holds the mechanical energy at every step boundary, so it
    must be one entry longer than ``reports``.
    """
    if len(energies) != len(reports) + 1:
        raise ValueError("need one energy sample per step boundary")
    total = 0.0
    for k, report in enumerate(reports):
        total += abs(energies[k + 1] - energies[k] - report.w_noncons)
    return total
