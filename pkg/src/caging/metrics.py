"""Robustness scores built on the planners and the contact simulator.

Three families are provided.  The effort of escape is the converged upper
bound on the work an adversary must spend to drive the object out of the
capture set, obtained by repeatedly shrinking a planner cost bound around
the cheapest known escape.  The capture and success scores weigh an
energy cost field (an unbounded, goal-free tree of reachable states and
their costs) with a softmax over cost, estimating how much of the cheaply
reachable neighborhood stays captured or reaches the task goal.  The
force score is a contact-snapshot baseline mixing normal load, friction
cone margin, and proximity.
"""

from __future__ import annotations

import dataclasses
import math
import time
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import planner as pl
from . import scenarios as scn
from .dynamics import ContactPoint
from .planner import EscapePath, PlannerConfig
from .scenarios import ScenarioSpec, SystemState

__all__ = [
    "EnergyCostField",
    "EscapeResult",
    "CaptureScores",
    "ForceScoreInput",
    "effort_of_escape",
    "energy_cost_field",
    "field_snapshots",
    "likelihoods",
    "capture_scores",
    "force_score",
    "trajectory_success_score",
    "DELTA",
    "DEFAULT_LAMBDA",
    "DEFAULT_FORCE_WEIGHTS",
    "DEFAULT_D0",
]

DELTA = 0.01                 # strict-improvement factor between escape rounds
DEFAULT_LAMBDA = 1.0         # softmax inverse temperature, per joule
DEFAULT_FORCE_WEIGHTS = (0.1, 1.0, 1.0)
DEFAULT_D0 = 0.05            # proximity decay length, meters

_FIELD_ITERATION_FACTOR = 20  # iteration cap per requested field sample


class EnergyCostField(NamedTuple):
    """Reachable states and their costs-to-come; sample 0 is the root."""

    samples: tuple[tuple[SystemState, float], ...]
    root: SystemState


class EscapeResult(NamedTuple):
    """Converged escape effort with its search record.

    ``effort`` is the last entry of ``bound_history`` (infinity when no
    escape was found at all, zero when the query state was already
    outside the capture set).  ``path`` realizes the final bound.
    """

    effort: float
    path: Optional[EscapePath]
    bound_history: tuple[float, ...]
    iterations_used: int


class CaptureScores(NamedTuple):
    omega_cap: float
    omega_suc: float


class ForceScoreInput(NamedTuple):
    """Contact snapshot between object and end-effector for one frame."""

    contacts: tuple[ContactPoint, ...]
    mu: float
    min_distance: float


# ---------------------------------------------------------------------------
# effort of escape


def _escape_goal(spec: ScenarioSpec, z_init: SystemState):
    return lambda z: not scn.capture_contains(spec, z_init, z)


def effort_of_escape(
    spec: ScenarioSpec,
    z_init: SystemState,
    subroutine: str = "est",
    n: int = 10,
    per_iteration_budget: int = 2000,
    seed: int = 0,
    config: PlannerConfig | None = None,
) -> EscapeResult:
    """Converge an upper bound on the least work needed to escape.

    A first unbounded query stops at the first escape found and takes its
    cost.  Each of the ``n`` following rounds prunes the cached tree to
    just below the best known cost, regrows it for the full iteration
    budget under that bound, and harvests the cheapest escape discovered
    so far.  Bounded insertion rejects extensions at or above the bound,
    so every harvested escape strictly improves.  Rounds that find no
    escape under the bound keep the previous value and still count.  A
    state already outside the capture set costs nothing to escape; a
    state no escape was found for at all yields the infinite sentinel.
    """
    if not scn.capture_contains(spec, z_init, z_init):
        return EscapeResult(0.0, None, (), 0)
    base = config if config is not None else PlannerConfig()
    cfg = dataclasses.replace(
        base,
        max_iterations=per_iteration_budget,
        cost_bound=math.inf,
        rng_seed=seed,
    )
    goal = _escape_goal(spec, z_init)
    tree = pl.Tree(spec, z_init, cfg, kind=subroutine)
    found = tree.grow(per_iteration_budget, goal, stop_on_goal=True)
    if not found:
        return EscapeResult(math.inf, None, (), tree.iterations)
    history = [tree.nodes[found[0]].aug.c]
    best_path = tree.path_to(found[0])
    for _ in range(n):
        bound = (1.0 - DELTA) * history[-1]
        tree.prune(bound)
        tree.grow(per_iteration_budget, goal, cost_bound=bound)
        if tree.goal_nodes:
            best = min(tree.goal_nodes, key=lambda i: tree.nodes[i].aug.c)
            history.append(tree.nodes[best].aug.c)
            best_path = tree.path_to(best)
    return EscapeResult(history[-1], best_path, tuple(history),
                        tree.iterations)


# ---------------------------------------------------------------------------
# energy cost field


def energy_cost_field(spec: ScenarioSpec, z_init: SystemState, M: int,
                      seed: int = 0,
                      config: PlannerConfig | None = None) -> EnergyCostField:
    """Grow a goal-free, unbounded tree of ``M`` samples rooted at
    ``z_init`` and return every (state, cost) pair.

    Iterations are capped at a fixed multiple of ``M``, so a jammed
    configuration where almost no extension is valid still terminates
    (with fewer samples).
    """
    if M < 1:
        raise ValueError("M must be at least 1")
    tree = _field_tree(spec, z_init, seed, config)
    tree.grow(_FIELD_ITERATION_FACTOR * M, target_nodes=M)
    return EnergyCostField(
        tuple((node.aug.z, node.aug.c) for node in tree.nodes), z_init)


def field_snapshots(
    spec: ScenarioSpec,
    z_init: SystemState,
    milestones: Sequence[int],
    seed: int = 0,
    config: PlannerConfig | None = None,
) -> list[tuple[int, EnergyCostField, float]]:
    """Energy cost fields at increasing sample-count milestones.

    One tree is grown through the sorted milestones; each snapshot shares
    the growth prefix, and the reported wall-clock seconds are cumulative
    from the start of growth, so small-milestone timings are what a
    standalone run of that size would cost.
    """
    ms = sorted(set(int(m) for m in milestones))
    if not ms or ms[0] < 1:
        raise ValueError("milestones must be positive sample counts")
    tree = _field_tree(spec, z_init, seed, config)
    out = []
    start = time.perf_counter()
    for m in ms:
        tree.grow(_FIELD_ITERATION_FACTOR * m, target_nodes=m)
        field = EnergyCostField(
            tuple((node.aug.z, node.aug.c) for node in tree.nodes), z_init)
        out.append((m, field, time.perf_counter() - start))
    return out


def _field_tree(spec, z_init, seed, config):
    base = config if config is not None else PlannerConfig()
    cfg = dataclasses.replace(base, cost_bound=math.inf, rng_seed=seed)
    return pl.Tree(spec, z_init, cfg, kind="est")


# ---------------------------------------------------------------------------
# softmax likelihoods and capture scores


def likelihoods(field: EnergyCostField, lam: float = DEFAULT_LAMBDA) -> np.ndarray:
    """Per-sample probability masses, softmax-decaying in cost.

    Costs are shifted by their minimum before exponentiation, so adding
    any constant to every cost leaves the masses unchanged and large
    costs cannot underflow all at once.
    """
    if not field.samples:
        raise ValueError("empty field")
    if lam < 0.0:
        raise ValueError("lambda must be nonnegative")
    costs = np.array([c for _, c in field.samples], dtype=float)
    weights = np.exp(-lam * (costs - costs.min()))
    return weights / weights.sum()


def capture_scores(spec: ScenarioSpec, z_init: SystemState,
                   field: EnergyCostField,
                   lam: float = DEFAULT_LAMBDA) -> CaptureScores:
    """Softmax mass of the field remaining captured, and reaching the goal."""
    mass = likelihoods(field, lam)
    cap = 0.0
    suc = 0.0
    for (z, _), m in zip(field.samples, mass):
        if scn.capture_contains(spec, z_init, z):
            cap += m
        if scn.success_contains(spec, z):
            suc += m
    # subset sums of a softmax lie in [0, 1]; clamp float roundoff only
    return CaptureScores(min(max(cap, 0.0), 1.0), min(max(suc, 0.0), 1.0))


# ---------------------------------------------------------------------------
# force baseline


def force_score(inp: ForceScoreInput,
                weights: tuple[float, float, float] = DEFAULT_FORCE_WEIGHTS,
                d0: float = DEFAULT_D0) -> float:
    """Contact-snapshot score: normal engagement, friction-cone margin,
    and proximity.

    Engagement is the largest normal force across the given contacts;
    the sticking term is the largest distance of a contact force from
    its friction cone edge; both are zero without contact.  Proximity
    decays exponentially in the object-to-end-effector distance with
    length scale ``d0``.
    """
    if d0 <= 0.0:
        raise ValueError("d0 must be positive")
    w_e, w_s, w_d = weights
    engage = 0.0
    stick = 0.0
    if inp.contacts:
        engage = max(c.lambda_n for c in inp.contacts)
        edge = math.cos(math.atan(inp.mu))
        stick = max((inp.mu * c.lambda_n - abs(c.lambda_t)) * edge
                    for c in inp.contacts)
    return (w_e * engage + w_s * stick
            + w_d * math.exp(-inp.min_distance / d0))


# ---------------------------------------------------------------------------
# trajectory-level aggregation


def trajectory_success_score(per_frame_scores: Sequence[float],
                             k_bar: int) -> float:
    """Linearly up-weighted average of the first ``k_bar`` frame scores.

    Weight w_k = k / (1 + 2 + ... + k_bar), so later frames in the
    window count more and the weights sum to one.
    """
    if k_bar <= 0:
        raise ValueError("k_bar must be positive")
    if k_bar > len(per_frame_scores):
        raise ValueError("k_bar exceeds the number of frame scores")
    denom = k_bar * (k_bar + 1) / 2.0
    return sum((k / denom) * per_frame_scores[k - 1]
               for k in range(1, k_bar + 1))
