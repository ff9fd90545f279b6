"""Kinodynamic tree planners over the cost-augmented system state.

Two feasible planners share one tree structure: an expansion-sampling
variant (EST) that favors growth where existing nodes are sparse, and a
nearest-neighbor variant (RRT) that extends toward random state targets
with a best-of-K candidate control rule.  Both propagate sampled wrenches
on the object through the contact simulator, accumulate the absolute
external-work path cost alongside the state, respect an optional cost
upper bound, and record nodes reaching a caller-supplied goal predicate.
A tree can be pruned to a tighter bound and regrown in place, which keeps
earlier search effort across a sequence of shrinking bounds.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Any, Callable, NamedTuple, Optional

import numpy as np

from . import dynamics as dyn
from . import energy as en
from . import scenarios as scn
from .dynamics import Pose2, Twist2, wrap_angle
from .scenarios import ScenarioSpec, SystemState

__all__ = [
    "MetricWeights",
    "PlannerConfig",
    "AugmentedState",
    "ControlSample",
    "TreeNode",
    "PropagationResult",
    "EscapePath",
    "Tree",
    "state_distance",
    "propagate",
    "est_grow",
    "rrt_grow",
    "prune",
]

_K_CANDIDATES = 8          # candidate controls per RRT extension
_GOAL_SAMPLE_ATTEMPTS = 64  # rejection-sampling budget for goal-biased targets
_SELECT_ATTEMPTS = 200      # rejection-sampling budget for EST node selection


class MetricWeights(NamedTuple):
    """Per-component weights of the planner state metric.

    Units make each term commensurate: meters for positions, radians and
    per-second quantities scaled down so that velocity differences do not
    dominate position differences at tabletop scale.
    """

    position: float = 1.0
    angle: float = 0.3
    linear_velocity: float = 0.2
    angular_velocity: float = 0.05
    ee_position: float = 0.5


@dataclass(frozen=True)
class PlannerConfig:
    """Tunable knobs shared by both planners.

    ``est_radius`` is the density-neighborhood radius in the weighted
    metric: a node's density is its inclusive neighbor count within that
    radius.  ``goal_bias`` only affects RRT target sampling.
    ``cost_bound`` rejects extensions whose cost-to-come would reach it;
    infinity disables the bound.  Under a finite bound the tree searches
    the state-cost product space: the accumulated cost joins the metric
    as an extra coordinate weighted by ``cost_weight`` (per joule), so
    selection pressure also lands on cheap, crowded regions whose
    continuations still fit under the bound.  Unbounded growth ignores
    the cost axis, whose range is then open-ended.
    """

    metric_weights: MetricWeights = MetricWeights()
    est_radius: float = 0.3
    goal_bias: float = 0.05
    cost_weight: float = 0.5
    max_iterations: int = 2000
    cost_bound: float = math.inf
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if any(w <= 0.0 for w in self.metric_weights):
            raise ValueError("metric weights must be positive")
        if self.est_radius <= 0.0:
            raise ValueError("est_radius must be positive")
        if not 0.0 <= self.goal_bias <= 1.0:
            raise ValueError("goal_bias must lie in [0, 1]")
        if self.cost_weight < 0.0:
            raise ValueError("cost_weight must be nonnegative")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")
        if self.cost_bound < 0.0:
            raise ValueError("cost_bound must be nonnegative")


class AugmentedState(NamedTuple):
    """System state paired with its accumulated cost-to-come in joules."""

    z: SystemState
    c: float


class ControlSample(NamedTuple):
    """A constant wrench on the object held for a number of steps."""

    force: tuple[float, float]
    torque: float
    duration_steps: int


class TreeNode(NamedTuple):
    aug: AugmentedState
    parent: Optional[int]
    incoming_control: Optional[ControlSample]


class PropagationResult(NamedTuple):
    """Outcome of a valid propagation: final augmented state, the number
    of simulator steps actually taken (shorter than the control's duration
    when the goal was crossed mid-edge), and the goal flag."""

    aug: AugmentedState
    duration_steps: int
    reached_goal: bool


class EscapePath(NamedTuple):
    """Root-to-goal node sequence and its total path cost."""

    nodes: tuple[TreeNode, ...]
    cost: float


# ---------------------------------------------------------------------------
# state metric


def state_distance(a: SystemState, b: SystemState,
                   weights: MetricWeights = MetricWeights()) -> float:
    """Weighted Euclidean distance between two system states.

    Covers object position, shortest-arc orientation difference, object
    twist, and end-effector position.  Symmetric, zero exactly when those
    components agree.
    """
    wp, wa, wv, ww, we = weights
    dx = a.object_pose.x - b.object_pose.x
    dy = a.object_pose.y - b.object_pose.y
    da = wrap_angle(a.object_pose.theta - b.object_pose.theta)
    dvx = a.object_twist.vx - b.object_twist.vx
    dvy = a.object_twist.vy - b.object_twist.vy
    dom = a.object_twist.omega - b.object_twist.omega
    dex = a.ee_pose.x - b.ee_pose.x
    dey = a.ee_pose.y - b.ee_pose.y
    return math.sqrt(
        (wp * dx) ** 2 + (wp * dy) ** 2 + (wa * da) ** 2
        + (wv * dvx) ** 2 + (wv * dvy) ** 2 + (ww * dom) ** 2
        + (we * dex) ** 2 + (we * dey) ** 2
    )


# ---------------------------------------------------------------------------
# forward propagation


def propagate(
    spec: ScenarioSpec,
    start: AugmentedState,
    u: ControlSample,
    goal: Callable[[SystemState], bool] | None = None,
    carrier_pose: Pose2 | None = None,
) -> PropagationResult | None:
    """Simulate ``u`` from ``start`` and accumulate the path cost.

    The wrench acts on the object's center of mass; every other body
    follows its own dynamics (a kinematic end-effector coasts on the twist
    carried in the state).  The goal predicate, when given, is checked at
    every intermediate step and truncates the edge at the crossing step.
    Returns None when any intermediate state leaves the kinematic bounds
    or the simulator reports tunneling; both discard the extension.

    ``carrier_pose`` freezes a spring carrier at a fixed pose for the
    whole edge; by default it parks at its scripted pose for the start
    state's time.
    """
    if u.duration_steps <= 0:
        return PropagationResult(start, 0, False)
    if carrier_pose is None and spec.carrier_index is not None:
        carrier_pose = scn.carrier_pose_at(spec, start.z.time)
    world = spec.world
    ws = scn.to_world_state(spec, start.z, carrier_pose)
    datum = (0.0, spec.datum_height)
    controls = [(0.0, 0.0, 0.0)] * world.n
    controls[spec.object_index] = (u.force[0], u.force[1], u.torque)
    bounds = spec.kinematic_bounds
    c = start.c
    e_prev = en.mechanical_energy(world, ws, datum).total
    for k in range(u.duration_steps):
        try:
            ws, report = dyn.step(world, ws, controls)
        except dyn.TunnelingError:
            return None
        e = en.mechanical_energy(world, ws, datum).total
        c += en.cost_increment(e_prev, e, report).d_work_ext_abs
        e_prev = e
        z = scn.from_world_state(spec, ws)
        if not bounds.contains(z.object_pose, z.object_twist):
            return None
        if goal is not None and goal(z):
            return PropagationResult(AugmentedState(z, c), k + 1, True)
    return PropagationResult(AugmentedState(z, c), u.duration_steps, False)


# ---------------------------------------------------------------------------
# search tree


class Tree:
    """Search tree over augmented states with incremental growth.

    One tree serves one planner query.  It owns its RNG stream, so a grow,
    prune, regrow sequence yields one deterministic node sequence per
    seed.  ``kind`` selects the expansion rule: "est" picks an existing
    node with probability proportional to the inverse local node density;
    "rrt" extends the node nearest a random target state with the best of
    eight sampled candidate controls.
    """

    def __init__(self, spec: ScenarioSpec, root: SystemState,
                 config: PlannerConfig, kind: str = "est"):
        if kind not in ("est", "rrt"):
            raise ValueError(f"unknown planner kind: {kind!r}")
        self.spec = spec
        self.config = config
        self.kind = kind
        self.cost_bound = config.cost_bound
        self.iterations = 0
        self.goal_nodes: list[int] = []
        self.nodes: list[TreeNode] = []
        self._rng = random.Random(config.rng_seed)
        # A spring carrier stays parked at the query time's scripted pose
        # for every edge of this tree.
        self._carrier = scn.carrier_pose_at(spec, root.time)
        self._cost_scale = (config.cost_weight
                            if math.isfinite(self.cost_bound) else 0.0)
        self._feat = np.empty((256, 9))
        self._density = np.zeros(256, dtype=np.int64)
        self._append(TreeNode(AugmentedState(root, 0.0), None, None))

    # -- bookkeeping ------------------------------------------------------

    def _features(self, z: SystemState, c: float = 0.0) -> np.ndarray:
        wp, wa, wv, ww, we = self.config.metric_weights
        return np.array([
            wp * z.object_pose.x,
            wp * z.object_pose.y,
            wa * wrap_angle(z.object_pose.theta),
            wv * z.object_twist.vx,
            wv * z.object_twist.vy,
            ww * z.object_twist.omega,
            we * z.ee_pose.x,
            we * z.ee_pose.y,
            self._cost_scale * c,
        ])

    def _wrap_angle_column(self, diffs: np.ndarray) -> None:
        half_turn = self.config.metric_weights.angle * math.pi
        diffs[:, 2] = np.remainder(diffs[:, 2] + half_turn,
                                   2.0 * half_turn) - half_turn

    def _append(self, node: TreeNode) -> int:
        nid = len(self.nodes)
        self.nodes.append(node)
        if nid == self._feat.shape[0]:
            grown = np.empty((2 * nid, 9))
            grown[:nid] = self._feat
            self._feat = grown
            counts = np.zeros(2 * nid, dtype=np.int64)
            counts[:nid] = self._density
            self._density = counts
        row = self._features(node.aug.z, node.aug.c)
        self._feat[nid] = row
        # Incremental density maintenance (EST selection only): the new
        # node joins every neighborhood it falls into, and starts with
        # its own inclusive neighbor count.
        if self.kind != "est" or nid == 0:
            self._density[nid] = 1
        else:
            d = self._feat[:nid] - row
            self._wrap_angle_column(d)
            near = np.einsum("ij,ij->i", d, d) <= self.config.est_radius ** 2
            self._density[:nid][near] += 1
            self._density[nid] = 1 + int(near.sum())
        return nid

    # -- sampling ---------------------------------------------------------

    def _sample_control(self) -> ControlSample:
        b = self.spec.control_bounds
        r = self._rng
        return ControlSample(
            force=(r.uniform(-b.f_max, b.f_max), r.uniform(-b.f_max, b.f_max)),
            torque=r.uniform(-b.tau_max, b.tau_max),
            duration_steps=r.randint(b.min_steps, b.max_steps),
        )

    def _sample_target(self, goal) -> tuple[SystemState, float]:
        r = self._rng
        kb = self.spec.kinematic_bounds
        biased = goal is not None and r.random() < self.config.goal_bias
        attempts = _GOAL_SAMPLE_ATTEMPTS if biased else 1
        for _ in range(attempts):
            z = SystemState(
                object_pose=Pose2(r.uniform(*kb.x), r.uniform(*kb.y),
                                  r.uniform(-math.pi, math.pi)),
                object_twist=Twist2(r.uniform(-kb.v_max, kb.v_max),
                                    r.uniform(-kb.v_max, kb.v_max),
                                    r.uniform(-kb.omega_max, kb.omega_max)),
                ee_pose=Pose2(r.uniform(*kb.x), r.uniform(*kb.y), 0.0),
                ee_twist=Twist2(0.0, 0.0, 0.0),
                time=0.0,
            )
            if not biased or goal(z):
                break
        c_hat = (r.uniform(0.0, self.cost_bound)
                 if math.isfinite(self.cost_bound) else 0.0)
        return z, c_hat

    def _select_est(self) -> int:
        # Accept a uniformly drawn node with probability inverse to its
        # inclusive neighbor count within est_radius: exact
        # inverse-density weighting via rejection sampling.
        r = self._rng
        idx = 0
        for _ in range(_SELECT_ATTEMPTS):
            idx = r.randrange(len(self.nodes))
            if r.random() * self._density[idx] < 1.0:
                break
        return idx

    def _nearest(self, target: SystemState, target_cost: float = 0.0) -> int:
        t = self._features(target, target_cost)
        d = self._feat[: len(self.nodes)] - t
        self._wrap_angle_column(d)
        return int(np.argmin(np.einsum("ij,ij->i", d, d)))

    # -- growth -----------------------------------------------------------

    def grow(self, iterations: int,
             goal: Callable[[SystemState], bool] | None = None,
             stop_on_goal: bool = False,
             target_nodes: int | None = None,
             cost_bound: float | None = None) -> list[int]:
        """Run up to ``iterations`` expansion iterations.

        Each iteration inserts at most one node; invalid extensions
        consume the iteration.  With ``target_nodes`` growth also stops
        once the tree holds that many nodes (root included).  Passing
        ``cost_bound`` tightens (or relaxes) the active insertion bound
        for this and later calls.  Returns the ids of goal-reaching nodes
        found during this call; with ``stop_on_goal`` growth stops at the
        first of them.
        """
        if cost_bound is not None:
            self.cost_bound = cost_bound
            scale = (self.config.cost_weight
                     if math.isfinite(cost_bound) else 0.0)
            if scale != self._cost_scale:
                self._cost_scale = scale
                self._refresh_features()
        found: list[int] = []
        for _ in range(iterations):
            if target_nodes is not None and len(self.nodes) >= target_nodes:
                break
            self.iterations += 1
            if self.kind == "est":
                hit = self._iterate_est(goal)
            else:
                hit = self._iterate_rrt(goal)
            if hit is not None:
                found.append(hit)
                if stop_on_goal:
                    break
        return found

    def _insert(self, res: PropagationResult, parent: int,
                u: ControlSample) -> int:
        control = ControlSample(u.force, u.torque, res.duration_steps)
        nid = self._append(TreeNode(res.aug, parent, control))
        if res.reached_goal:
            self.goal_nodes.append(nid)
        return nid

    def _iterate_est(self, goal) -> Optional[int]:
        parent = self._select_est()
        u = self._sample_control()
        res = propagate(self.spec, self.nodes[parent].aug, u, goal, self._carrier)
        if res is None or res.aug.c >= self.cost_bound:
            return None
        nid = self._insert(res, parent, u)
        return nid if res.reached_goal else None

    def _iterate_rrt(self, goal) -> Optional[int]:
        target, target_cost = self._sample_target(goal)
        parent = self._nearest(target, target_cost)
        start = self.nodes[parent].aug
        best: tuple[PropagationResult, ControlSample] | None = None
        best_d = math.inf
        for _ in range(_K_CANDIDATES):
            u = self._sample_control()
            res = propagate(self.spec, start, u, goal, self._carrier)
            if res is None or res.aug.c >= self.cost_bound:
                continue
            if res.reached_goal:
                nid = self._insert(res, parent, u)
                return nid
            d = math.hypot(
                state_distance(res.aug.z, target, self.config.metric_weights),
                self._cost_scale * (res.aug.c - target_cost))
            if d < best_d:
                best_d, best = d, (res, u)
        if best is not None:
            self._insert(best[0], parent, best[1])
        return None

    # -- pruning ----------------------------------------------------------

    def prune(self, c_bound: float) -> "Tree":
        """Drop every node with cost-to-come >= ``c_bound``, and its
        descendants.  The root is always retained.  Node ids are
        compacted; goal records are remapped or dropped accordingly."""
        remap = {0: 0}
        keep = [0]
        new_nodes = [self.nodes[0]]
        for i in range(1, len(self.nodes)):
            node = self.nodes[i]
            if node.aug.c >= c_bound:
                continue
            parent = remap.get(node.parent)
            if parent is None:
                continue
            remap[i] = len(new_nodes)
            new_nodes.append(TreeNode(node.aug, parent, node.incoming_control))
            keep.append(i)
        self.nodes = new_nodes
        kept_feat = self._feat[keep]
        capacity = 256
        while capacity < len(keep):
            capacity *= 2
        self._feat = np.empty((capacity, 9))
        self._feat[: len(keep)] = kept_feat
        self._density = np.zeros(capacity, dtype=np.int64)
        self._recount_density(len(keep))
        self.goal_nodes = [remap[g] for g in self.goal_nodes if g in remap]
        return self

    def _refresh_features(self) -> None:
        """Rebuild feature rows after the cost axis switches on or off."""
        for i, node in enumerate(self.nodes):
            self._feat[i] = self._features(node.aug.z, node.aug.c)
        self._recount_density(len(self.nodes))

    def _recount_density(self, n: int, block: int = 256) -> None:
        """Recompute inclusive neighbor counts for the first ``n`` rows.

        Works blockwise on the Gram matrix so memory stays at a few
        block-by-n panels even for large trees; the wrapped angle column
        is folded in separately since it is not a Euclidean coordinate.
        """
        if self.kind != "est":
            self._density[:n] = 1
            return
        feats = self._feat[:n]
        euclid = feats[:, [0, 1, 3, 4, 5, 6, 7, 8]]
        angles = feats[:, 2]
        sq = np.einsum("ij,ij->i", euclid, euclid)
        half_turn = self.config.metric_weights.angle * math.pi
        r2 = self.config.est_radius ** 2
        for lo in range(0, n, block):
            hi = min(lo + block, n)
            d2 = sq[None, :] + sq[lo:hi, None] - 2.0 * (euclid[lo:hi] @ euclid.T)
            dth = np.remainder(angles[None, :] - angles[lo:hi, None] + half_turn,
                               2.0 * half_turn) - half_turn
            d2 += dth * dth
            self._density[lo:hi] = (d2 <= r2 + 1e-12).sum(axis=1)

    # -- extraction -------------------------------------------------------

    def path_to(self, node_id: int) -> EscapePath:
        """Root-to-node sequence with the node's cost-to-come."""
        chain = []
        cursor: Optional[int] = node_id
        while cursor is not None:
            node = self.nodes[cursor]
            chain.append(node)
            cursor = node.parent
        chain.reverse()
        return EscapePath(tuple(chain), self.nodes[node_id].aug.c)

    def to_json(self) -> dict[str, Any]:
        """JSON-ready dump: per-node id, parent, state components, cost."""
        nodes = []
        for i, node in enumerate(self.nodes):
            z = node.aug.z
            nodes.append({
                "id": i,
                "parent": node.parent,
                "c": node.aug.c,
                "z": {
                    "x": z.object_pose.x, "y": z.object_pose.y,
                    "theta": z.object_pose.theta,
                    "vx": z.object_twist.vx, "vy": z.object_twist.vy,
                    "omega": z.object_twist.omega,
                    "ee_x": z.ee_pose.x, "ee_y": z.ee_pose.y,
                    "ee_theta": z.ee_pose.theta,
                    "ee_vx": z.ee_twist.vx, "ee_vy": z.ee_twist.vy,
                    "ee_omega": z.ee_twist.omega,
                    "time": z.time,
                },
            })
        return {"kind": self.kind, "nodes": nodes,
                "goal_nodes": list(self.goal_nodes)}


# ---------------------------------------------------------------------------
# functional front ends


def est_grow(spec: ScenarioSpec, root: SystemState, config: PlannerConfig,
             goal: Callable[[SystemState], bool] | None = None,
             stop_on_goal: bool = False) -> Tree:
    """Grow an EST tree from ``root`` for ``config.max_iterations``."""
    tree = Tree(spec, root, config, kind="est")
    tree.grow(config.max_iterations, goal, stop_on_goal)
    return tree


def rrt_grow(spec: ScenarioSpec, root: SystemState, config: PlannerConfig,
             goal: Callable[[SystemState], bool] | None = None,
             stop_on_goal: bool = False) -> Tree:
    """Grow an RRT tree from ``root`` for ``config.max_iterations``."""
    tree = Tree(spec, root, config, kind="rrt")
    tree.grow(config.max_iterations, goal, stop_on_goal)
    return tree


def prune(tree: Tree, c_bound: float) -> Tree:
    """Prune ``tree`` in place to the cost bound and return it."""
    return tree.prune(c_bound)
