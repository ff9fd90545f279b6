"""Dataset generation, labeling, ranking statistics, and the study driver.

A dataset is a set of scripted-controller rollouts recorded as evenly
spaced frames.  Frames carry everything the scores need (system state,
object-effector contacts, clearance, friction), plus ground-truth labels:
per-frame capture labels from a windowed membership rule and a per
trajectory task-success label.  AUC and average precision compare score
rankings against those labels, and the study driver sweeps metrics,
field sizes, and input perturbations into delimited report files.
"""

from __future__ import annotations

import json
import math
import random
import zlib
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Mapping, NamedTuple, Optional, Sequence

from . import dynamics as dyn
from . import metrics as mt
from . import planner as pl
from . import scenarios as scn
from .dynamics import ContactPoint, Pose2, Twist2
from .scenarios import ScenarioSpec, SystemState

__all__ = [
    "Frame",
    "TrajectoryRecord",
    "Dataset",
    "PerturbationSpec",
    "generate_dataset",
    "label_captured",
    "auc",
    "average_precision",
    "perturb_dataset",
    "frame_score",
    "run_study",
    "save_dataset",
    "load_dataset",
    "DEFAULT_STUDY",
]

K_HAT = 3   # capture-label window length, in recorded frames
K_BAR = 3   # leading frames aggregated into the trajectory success score


class Frame(NamedTuple):
    """One recorded instant of a rollout.

    ``k`` is the simulator step index, ``contacts`` the solved
    object-effector contact points over the step that follows, ``mu``
    their friction coefficient, and ``min_distance`` the object to
    end-effector clearance.
    """

    k: int
    z: SystemState
    contacts: tuple[ContactPoint, ...]
    min_distance: float
    mu: float


class TrajectoryRecord(NamedTuple):
    id: str
    scenario: str
    frames: tuple[Frame, ...]
    success_label: bool
    captured_labels: tuple[bool, ...]
    params: tuple[tuple[str, Any], ...]  # per-trajectory config overrides


class Dataset(NamedTuple):
    records: tuple[TrajectoryRecord, ...]
    generation_config: tuple[tuple[str, Any], ...]


class PerturbationSpec(NamedTuple):
    """Uniform input noise of one kind, bounded by ``e_max``."""

    kind: str   # friction | position | velocity | force
    e_max: float
    seed: int


PERTURBATION_KINDS = ("friction", "position", "velocity", "force")


# ---------------------------------------------------------------------------
# scenario variants


def _u01(seed: int, salt: str) -> float:
    h = zlib.crc32(f"{salt}:{seed}:0".encode())
    return h / 0xFFFFFFFF


def _toppling_variant(seed: int) -> dict[str, Any]:
    """Per-trajectory scene randomization for the toppling scenario.

    The fingertip carrier height and the table friction vary between
    rollouts, which is what makes some presses topple cleanly and others
    slip out or stall.
    """
    h = 0.030 + 0.055 * _u01(seed, "carrier-height")
    table_mu = 0.45 + 0.45 * _u01(seed, "table-mu")
    return {"carrier_start": (-0.075, h, 0.0), "table_mu": table_mu}


_VARIANTS: Mapping[str, Callable[[int], dict[str, Any]]] = {
    "toppling": _toppling_variant,
}


def build_spec(scenario: str, config: Mapping[str, Any] | None = None) -> ScenarioSpec:
    """Construct a scenario by name; raises ValueError for unknown names."""
    try:
        ctor = scn.CONSTRUCTORS[scenario]
    except KeyError:
        names = ", ".join(sorted(scn.CONSTRUCTORS))
        raise ValueError(f"unknown scenario {scenario!r}; valid names: {names}")
    return ctor(dict(config) if config else None)


# ---------------------------------------------------------------------------
# rollouts


def _pair_mu(spec: ScenarioSpec) -> float:
    key = (min(spec.object_index, spec.ee_index),
           max(spec.object_index, spec.ee_index))
    return spec.world.pair_mu.get(key, 0.0)


def _object_ee_contacts(spec: ScenarioSpec,
                        report: dyn.StepReport) -> tuple[ContactPoint, ...]:
    pair = {spec.object_index, spec.ee_index}
    return tuple(c for c in report.contacts if {c.body_a, c.body_b} == pair)


def _frame_indices(horizon: int, K: int) -> list[int]:
    if horizon < K - 1:
        raise ValueError(f"horizon of {horizon} steps cannot yield {K} frames")
    return [round(j * horizon / (K - 1)) for j in range(K)]


def record_trajectory(spec: ScenarioSpec, rng_seed: int, K: int,
                      traj_id: str,
                      params: tuple[tuple[str, Any], ...] = (),
                      k_hat: int = K_HAT,
                      dump: Optional[list] = None) -> TrajectoryRecord:
    """Roll the scripted controller and record K evenly spaced frames.

    When ``dump`` is a list, every per-step world state (step index,
    WorldState) is appended to it, for animation or debugging.
    """
    horizon = spec.script["horizon_steps"]
    wanted = _frame_indices(horizon, K)
    driven = scn.driven_index(spec)
    mu = _pair_mu(spec)
    ws = spec.home
    frames: list[Frame] = []
    for k in range(horizon + 1):
        z = scn.from_world_state(spec, ws)
        cmd = scn.scripted_control(spec, z, k, rng_seed)
        twists = list(ws.twists)
        twists[driven] = Twist2(*cmd)
        ws = dyn.WorldState(ws.poses, tuple(twists), ws.time)
        if dump is not None:
            dump.append((k, ws))
        nxt, report = dyn.step(spec.world, ws)
        if k in wanted:
            z = scn.from_world_state(spec, ws)
            frames.append(Frame(
                k=k,
                z=z,
                contacts=_object_ee_contacts(spec, report),
                min_distance=dyn.min_body_distance(
                    spec.world, ws, spec.object_index, spec.ee_index),
                mu=mu,
            ))
        ws = nxt
    if dump is not None:
        dump.append((horizon + 1, ws))
    success = scn.success_contains(spec, frames[-1].z)
    record = TrajectoryRecord(traj_id, spec.name, tuple(frames), success, (),
                              params)
    return record._replace(captured_labels=label_captured(record, spec, k_hat))


def generate_dataset(spec: ScenarioSpec, n_traj: int, K: int, seed: int,
                     k_hat: int = K_HAT) -> Dataset:
    """Record ``n_traj`` scripted rollouts of the given scenario.

    Per-trajectory variation comes from the controller noise seed and,
    for scenarios with scene randomization, rebuilt world parameters.
    The returned provenance is sufficient to regenerate the dataset
    exactly.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    if K < 2:
        raise ValueError("need at least two frames per trajectory")
    variant = _VARIANTS.get(spec.name)
    records = []
    for i in range(n_traj):
        traj_seed = seed + i
        overrides = variant(traj_seed) if variant else {}
        traj_spec = spec
        if overrides:
            traj_spec = build_spec(spec.name, {**spec.config, **overrides})
        records.append(record_trajectory(
            traj_spec, traj_seed, K, traj_id=f"{spec.name}-{i:03d}",
            params=tuple(sorted(overrides.items())), k_hat=k_hat))
    provenance = (
        ("scenario", spec.name),
        ("scenario_config", tuple(sorted(spec.config.items()))),
        ("n_traj", n_traj),
        ("K", K),
        ("seed", seed),
        ("k_hat", k_hat),
    )
    return Dataset(tuple(records), provenance)


def label_captured(record: TrajectoryRecord, spec: ScenarioSpec,
                   k_hat: int = K_HAT) -> tuple[bool, ...]:
    """Windowed capture labels: frame k is captured when membership holds
    at frames k through k + k_hat (window truncated at trajectory end)."""
    if k_hat < 0:
        raise ValueError("k_hat must be nonnegative")
    member = [scn.capture_contains(spec, f.z, f.z) for f in record.frames]
    n = len(member)
    return tuple(
        all(member[j:min(j + k_hat, n - 1) + 1]) for j in range(n)
    )


# ---------------------------------------------------------------------------
# ranking statistics


def _check_binary(labels: Sequence[bool]) -> tuple[int, int]:
    pos = sum(1 for b in labels if b)
    neg = len(labels) - pos
    return pos, neg


def auc(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Area under the ROC curve via rank statistics; ties count half."""
    if len(scores) != len(labels):
        raise ValueError("scores and labels differ in length")
    pos, neg = _check_binary(labels)
    if pos == 0 or neg == 0:
        raise ValueError("need at least one positive and one negative label")
    order = sorted(range(len(scores)), key=lambda i: scores[i])
    ranks = [0.0] * len(scores)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        mid = (i + j) / 2.0 + 1.0  # 1-based average rank over the tie run
        for t in range(i, j + 1):
            ranks[order[t]] = mid
        i = j + 1
    rank_sum = sum(r for r, b in zip(ranks, labels) if b)
    u = rank_sum - pos * (pos + 1) / 2.0
    return u / (pos * neg)


def average_precision(scores: Sequence[float], labels: Sequence[bool]) -> float:
    """Mean precision at each positive, ranked by descending score.

    Ties keep their original order (stable sort), which matters for
    scores with many repeated values.
    """
    if len(scores) != len(labels):
        raise ValueError("scores and labels differ in length")
    pos, _ = _check_binary(labels)
    if pos == 0:
        raise ValueError("need at least one positive label")
    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    hits = 0
    total = 0.0
    for rank, idx in enumerate(order, start=1):
        if labels[idx]:
            hits += 1
            total += hits / rank
    return total / pos


# ---------------------------------------------------------------------------
# perturbations


def perturb_dataset(dataset: Dataset, spec: PerturbationSpec) -> Dataset:
    """Copy of the dataset with uniform input noise of one kind.

    Position and velocity noise lands on the recorded object states (the
    quantities a sensor would report); friction noise on the recorded
    coefficient; force noise scales each contact's solved forces.
    Labels are left untouched: the noise models measurement error, not a
    different world.
    """
    if spec.kind not in PERTURBATION_KINDS:
        raise ValueError(f"unknown perturbation kind {spec.kind!r}")
    if spec.e_max < 0.0:
        raise ValueError("e_max must be nonnegative")
    rng = random.Random(f"perturb:{spec.kind}:{spec.seed}")
    records = tuple(
        rec._replace(frames=tuple(_perturb_frame(f, spec, rng)
                                  for f in rec.frames))
        for rec in dataset.records
    )
    return Dataset(records, dataset.generation_config
                   + (("perturbation", (spec.kind, spec.e_max, spec.seed)),))


def _signed(rng: random.Random, e_max: float) -> float:
    return rng.choice((-1.0, 1.0)) * rng.uniform(0.0, e_max)


def _perturb_frame(frame: Frame, spec: PerturbationSpec,
                   rng: random.Random) -> Frame:
    e = spec.e_max
    if spec.kind == "friction":
        return frame._replace(mu=max(0.0, frame.mu + _signed(rng, e)))
    if spec.kind == "position":
        z = frame.z
        pose = Pose2(z.object_pose.x + _signed(rng, e),
                     z.object_pose.y + _signed(rng, e),
                     z.object_pose.theta)
        return frame._replace(z=z._replace(object_pose=pose))
    if spec.kind == "velocity":
        z = frame.z
        tw = Twist2(z.object_twist.vx + _signed(rng, e),
                    z.object_twist.vy + _signed(rng, e),
                    z.object_twist.omega + _signed(rng, 2.0 * e))
        return frame._replace(z=z._replace(object_twist=tw))
    contacts = tuple(
        c._replace(lambda_n=max(0.0, c.lambda_n * (1.0 + _signed(rng, e))),
                   lambda_t=c.lambda_t * (1.0 + _signed(rng, e)))
        for c in frame.contacts
    )
    return frame._replace(contacts=contacts)


# ---------------------------------------------------------------------------
# frame scoring


ENERGY_METRICS = ("omega_cap", "omega_suc")
EFFORT_METRICS = ("omega_esc_est", "omega_esc_rrt")
ALL_METRICS = ENERGY_METRICS + EFFORT_METRICS + ("omega_force",)


def score_seed(base_seed: int, traj_id: str, k: int, what: str) -> int:
    return zlib.crc32(f"{what}:{base_seed}:{traj_id}:{k}".encode())


def frame_score(spec: ScenarioSpec, frame: Frame, metric: str,
                lam: float = mt.DEFAULT_LAMBDA, M: int = 100,
                seed: int = 0,
                effort_rounds: int = 2, effort_budget: int = 200,
                planner_config: pl.PlannerConfig | None = None) -> float:
    """One metric value for one recorded frame."""
    if metric == "omega_force":
        return mt.force_score(mt.ForceScoreInput(
            frame.contacts, frame.mu, frame.min_distance))
    if metric in ENERGY_METRICS:
        field = mt.energy_cost_field(spec, frame.z, M, seed=seed,
                                     config=planner_config)
        scores = mt.capture_scores(spec, frame.z, field, lam)
        return scores.omega_cap if metric == "omega_cap" else scores.omega_suc
    if metric in EFFORT_METRICS:
        sub = metric.rsplit("_", 1)[1]
        result = mt.effort_of_escape(
            spec, frame.z, subroutine=sub, n=effort_rounds,
            per_iteration_budget=effort_budget, seed=seed,
            config=planner_config)
        return result.effort
    raise ValueError(f"unknown metric {metric!r}")


# ---------------------------------------------------------------------------
# serialization (datasets as JSON lines, floats at 17 significant digits)


def to_json_text(obj: Any) -> str:
    """Compact JSON with floats at 17 significant digits.

    The standard encoder formats floats with shortest-repr, which is
    round-trip exact but not a fixed width; a fixed 17-digit format keeps
    serialized files byte-stable across Python versions and is still
    exact for every double.
    """
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if math.isinf(obj):
            return '"Infinity"' if obj > 0 else '"-Infinity"'
        if math.isnan(obj):
            return '"NaN"'
        return format(obj, ".17g")
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(to_json_text(v) for v in obj) + "]"
    if isinstance(obj, dict):
        return "{" + ",".join(
            json.dumps(str(k)) + ":" + to_json_text(v)
            for k, v in obj.items()) + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _pose(p: Pose2) -> list[float]:
    return [p.x, p.y, p.theta]


def _record_obj(rec: TrajectoryRecord) -> dict[str, Any]:
    return {
        "id": rec.id,
        "scenario": rec.scenario,
        "success_label": rec.success_label,
        "captured_labels": list(rec.captured_labels),
        "params": {k: v for k, v in rec.params},
        "frames": [
            {
                "k": f.k,
                "z": {
                    "object_pose": _pose(f.z.object_pose),
                    "object_twist": list(f.z.object_twist),
                    "ee_pose": _pose(f.z.ee_pose),
                    "ee_twist": list(f.z.ee_twist),
                    "time": f.z.time,
                },
                "contacts": [list(c) for c in f.contacts],
                "min_distance": f.min_distance,
                "mu": f.mu,
            }
            for f in rec.frames
        ],
    }


def dumps_record(rec: TrajectoryRecord) -> str:
    return to_json_text(_record_obj(rec))


def _parse_state(obj: Mapping[str, Any]) -> SystemState:
    return SystemState(
        Pose2(*obj["object_pose"]), Twist2(*obj["object_twist"]),
        Pose2(*obj["ee_pose"]), Twist2(*obj["ee_twist"]), obj["time"])


def parse_record(text: str) -> TrajectoryRecord:
    obj = json.loads(text)
    frames = tuple(
        Frame(
            k=f["k"],
            z=_parse_state(f["z"]),
            contacts=tuple(
                ContactPoint(c[0], c[1], tuple(c[2]), tuple(c[3]),
                             c[4], c[5], c[6], c[7])
                for c in f["contacts"]),
            min_distance=f["min_distance"],
            mu=f["mu"],
        )
        for f in obj["frames"]
    )
    return TrajectoryRecord(
        id=obj["id"],
        scenario=obj["scenario"],
        frames=frames,
        success_label=obj["success_label"],
        captured_labels=tuple(obj["captured_labels"]),
        params=tuple(sorted(obj["params"].items())),
    )


def save_dataset(dataset: Dataset, path) -> None:
    lines = [to_json_text({"generation_config":
                           _config_obj(dataset.generation_config)})]
    lines += [dumps_record(rec) for rec in dataset.records]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _config_obj(config: tuple[tuple[str, Any], ...]) -> dict[str, Any]:
    out = {}
    for key, value in config:
        if isinstance(value, tuple) and value and isinstance(value[0], tuple) \
                and all(len(v) == 2 and isinstance(v[0], str) for v in value):
            out[key] = {k: v for k, v in value}
        else:
            out[key] = value
    return out


def load_dataset(path) -> Dataset:
    records = []
    config: tuple[tuple[str, Any], ...] = ()
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: bad JSON on line {lineno}: {exc}")
            if "generation_config" in obj:
                config = tuple(sorted(
                    (k, _freeze(v))
                    for k, v in obj["generation_config"].items()))
            else:
                try:
                    records.append(parse_record(line))
                except (KeyError, TypeError, IndexError) as exc:
                    raise ValueError(
                        f"{path}: bad record on line {lineno}: {exc!r}")
    return Dataset(tuple(records), config)


def _freeze(v: Any) -> Any:
    if isinstance(v, dict):
        return tuple(sorted((k, _freeze(x)) for k, x in v.items()))
    if isinstance(v, list):
        return tuple(_freeze(x) for x in v)
    return v


# ---------------------------------------------------------------------------
# study driver


DEFAULT_STUDY: Mapping[str, Any] = {
    "scenarios": ("pushing", "balance", "toppling"),
    "scenario_configs": {},
    "n_traj": 50,
    "K": 10,
    "seed": 0,
    "k_hat": K_HAT,
    "k_bar": K_BAR,
    "lambda": 1.0,
    "M": 100,
    "metrics": ALL_METRICS,
    "effort_trajectories": 10,
    "effort_rounds": 2,
    "effort_budget": 200,
    "m_sweep": (10, 30, 100, 1000),
    "m_sweep_scenario": "pushing",
    "m_sweep_seeds": (0, 1, 2),
    "perturbation_scenario": "pushing",
    "perturbation_levels": (0.0, 0.5, 1.0),
    "perturbation_emax": {
        "friction": 0.3,
        "position": 0.01,
        "velocity": 0.05,
        "force": 0.3,
    },
    "perturbation_metrics": {
        "friction": ("omega_cap", "omega_force"),
        "position": ("omega_cap",),
        "velocity": ("omega_cap",),
        "force": ("omega_force",),
    },
    "workers": 0,  # 0 = serial execution in-process
}


def resolve_study_config(config: Mapping[str, Any] | None) -> dict[str, Any]:
    out = dict(DEFAULT_STUDY)
    for key, value in (config or {}).items():
        if key not in DEFAULT_STUDY:
            raise ValueError(f"unknown study option {key!r}")
        out[key] = value
    return out


class StudyReport(NamedTuple):
    """In-memory study results; the CLI writes them to files."""

    config: dict[str, Any]
    datasets: dict[str, Dataset]
    score_rows: list[tuple]       # scenario, traj_id, frame, metric, value, label
    table_rows: list[tuple]       # scenario, metric, auc, ap, n
    sweep_rows: list[tuple]       # M, auc_median, auc_min, auc_max
    timing_rows: list[tuple]      # M, seconds_mean, seconds_min, seconds_max
    perturb_rows: list[tuple]     # kind, metric, level, e_max, ap


def _traj_spec(scenario: str, base_config: Mapping[str, Any],
               rec: TrajectoryRecord) -> ScenarioSpec:
    overrides = dict(rec.params)
    if overrides:
        return build_spec(scenario, {**base_config, **overrides})
    return build_spec(scenario, dict(base_config))


def _spec_with_mu(scenario: str, base_config: Mapping[str, Any],
                  rec: TrajectoryRecord, mu: float) -> ScenarioSpec:
    overrides = dict(rec.params)
    cfg = {**base_config, **overrides}
    if "mu" not in cfg:
        raise ValueError(
            f"{scenario}: friction perturbation needs a 'mu' parameter")
    cfg["mu"] = mu
    return build_spec(scenario, cfg)


def run_study(config: Mapping[str, Any] | None = None,
              progress: Optional[Callable[[str], None]] = None) -> StudyReport:
    """Execute the full prediction-quality study.

    Emits frame-level scores with labels, per-scenario AUC/AP tables, the
    field-size sweep with its timing record, and perturbation-robustness
    AP curves.  Deterministic given the config; wall-clock timings are
    the only values that vary between runs.
    """
    cfg = resolve_study_config(config)
    note = progress or (lambda msg: None)
    lam = cfg["lambda"]
    datasets: dict[str, Dataset] = {}
    score_rows: list[tuple] = []
    table_rows: list[tuple] = []

    for scenario in cfg["scenarios"]:
        sc_config = cfg["scenario_configs"].get(scenario, {})
        spec = build_spec(scenario, sc_config)
        note(f"dataset {scenario}")
        ds = generate_dataset(spec, cfg["n_traj"], cfg["K"], cfg["seed"],
                              cfg["k_hat"])
        datasets[scenario] = ds
        note(f"scores {scenario}")
        rows = _score_pass(scenario, spec.config, ds, cfg, lam)
        score_rows.extend(rows)
        table_rows.extend(_table_for(scenario, rows, ds, cfg))

    sweep_rows, timing_rows = _field_size_sweep(cfg, datasets, lam, note)
    perturb_rows = _perturbation_curves(cfg, datasets, lam, note)
    return StudyReport(cfg, datasets, score_rows, table_rows, sweep_rows,
                       timing_rows, perturb_rows)


def _score_record(task: tuple) -> list[tuple]:
    """All metric rows for one trajectory record (worker unit)."""
    scenario, base_config, rec, cfg, lam, with_effort = task
    rows: list[tuple] = []
    metrics = tuple(cfg["metrics"])
    spec = _traj_spec(scenario, base_config, rec)
    suc_frames: list[float] = []
    for j, frame in enumerate(rec.frames):
        cap_label = rec.captured_labels[j]
        for metric in metrics:
            if metric in EFFORT_METRICS and not with_effort:
                continue
            seed = score_seed(cfg["seed"], rec.id, frame.k, metric)
            value = frame_score(
                spec, frame, metric, lam=lam, M=cfg["M"], seed=seed,
                effort_rounds=cfg["effort_rounds"],
                effort_budget=cfg["effort_budget"])
            label = (rec.success_label if metric == "omega_suc"
                     else cap_label)
            rows.append((scenario, rec.id, frame.k, metric, value, label))
            if metric == "omega_suc":
                suc_frames.append(value)
    if "omega_suc" in metrics:
        k_bar = cfg["k_bar"]
        traj_score = mt.trajectory_success_score(suc_frames[:k_bar], k_bar)
        rows.append((scenario, rec.id, -1, "omega_suc_traj", traj_score,
                     rec.success_label))
    return rows


def _score_pass(scenario: str, base_config: Mapping[str, Any], ds: Dataset,
                cfg: Mapping[str, Any], lam: float) -> list[tuple]:
    """All frame-level metric rows for one scenario's dataset.

    With ``workers`` > 1 records are scored in a process pool; results
    are collected in submission order, so the rows are identical to a
    serial run.
    """
    effort_ids = {rec.id for rec in ds.records[: cfg["effort_trajectories"]]}
    base = dict(base_config)
    plain_cfg = dict(cfg)
    tasks = [(scenario, base, rec, plain_cfg, lam, rec.id in effort_ids)
             for rec in ds.records]
    workers = int(cfg.get("workers", 0))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_score_record, tasks))
    else:
        chunks = [_score_record(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def _table_for(scenario: str, rows: Sequence[tuple], ds: Dataset,
               cfg: Mapping[str, Any]) -> list[tuple]:
    """AUC/AP per metric over one scenario's score rows."""
    out = []
    metrics = tuple(cfg["metrics"])
    wanted = [m for m in metrics] + (
        ["omega_suc_traj"] if "omega_suc" in metrics else [])
    for metric in wanted:
        scored = [(r[4], r[5]) for r in rows
                  if r[0] == scenario and r[3] == metric]
        if not scored:
            continue
        values = [v for v, _ in scored]
        labels = [b for _, b in scored]
        try:
            a = auc(values, labels)
            p = average_precision(values, labels)
        except ValueError:
            a = p = math.nan
        out.append((scenario, metric, a, p, len(scored)))
    return out


def _field_size_sweep(cfg: Mapping[str, Any], datasets: dict[str, Dataset],
                      lam: float, note) -> tuple[list[tuple], list[tuple]]:
    """Trajectory-success AUC and wall clock versus field size.

    One tree per (frame, repeat) grows through all milestones, so every
    field size shares its growth prefix with the larger ones and the
    timing at each milestone matches a standalone run of that size.
    """
    scenario = cfg["m_sweep_scenario"]
    milestones = sorted(int(m) for m in cfg["m_sweep"])
    if not milestones or scenario not in datasets:
        return [], []
    ds = datasets[scenario]
    base_config = dict(cfg["scenario_configs"].get(scenario, {}))
    k_bar = cfg["k_bar"]
    aucs: dict[int, list[float]] = {m: [] for m in milestones}
    elapsed: dict[int, list[float]] = {m: [] for m in milestones}
    for rep in cfg["m_sweep_seeds"]:
        note(f"field sweep repeat {rep}")
        traj_scores: dict[int, dict[str, list[float]]] = {
            m: {} for m in milestones}
        for rec in ds.records:
            spec = _traj_spec(scenario, base_config, rec)
            for frame in rec.frames[:k_bar]:
                seed = score_seed(cfg["seed"], rec.id, frame.k,
                                   f"sweep-{rep}")
                snaps = mt.field_snapshots(spec, frame.z, milestones,
                                           seed=seed)
                for m, field, secs in snaps:
                    suc = mt.capture_scores(spec, frame.z, field, lam).omega_suc
                    traj_scores[m].setdefault(rec.id, []).append(suc)
                    elapsed[m].append(secs)
        labels = [rec.success_label for rec in ds.records]
        for m in milestones:
            scores = [
                mt.trajectory_success_score(traj_scores[m][rec.id], k_bar)
                for rec in ds.records
            ]
            aucs[m].append(auc(scores, labels))
    sweep_rows = []
    timing_rows = []
    for m in milestones:
        vals = sorted(aucs[m])
        mid = len(vals) // 2
        median = (vals[mid] if len(vals) % 2
                  else 0.5 * (vals[mid - 1] + vals[mid]))
        sweep_rows.append((m, median, vals[0], vals[-1]))
        secs = elapsed[m]
        timing_rows.append((m, sum(secs) / len(secs), min(secs), max(secs)))
    return sweep_rows, timing_rows


def _perturbation_curves(cfg: Mapping[str, Any], datasets: dict[str, Dataset],
                         lam: float, note) -> list[tuple]:
    """AP of each targeted metric under increasing input noise."""
    scenario = cfg["perturbation_scenario"]
    if scenario not in datasets:
        return []
    ds = datasets[scenario]
    base_config = dict(cfg["scenario_configs"].get(scenario, {}))
    rows = []
    for kind, metrics in cfg["perturbation_metrics"].items():
        e_s = cfg["perturbation_emax"][kind]
        for level in cfg["perturbation_levels"]:
            e_max = level * e_s
            pspec = PerturbationSpec(kind, e_max, cfg["seed"])
            perturbed = (ds if e_max == 0.0 else perturb_dataset(ds, pspec))
            note(f"perturbation {kind} level {level}")
            for metric in metrics:
                values = []
                labels = []
                for rec, orig in zip(perturbed.records, ds.records):
                    spec_cache: dict[float, ScenarioSpec] = {}
                    for j, frame in enumerate(rec.frames):
                        if metric == "omega_force":
                            value = frame_score(None, frame, metric, lam=lam)
                        else:
                            if kind == "friction":
                                mu = frame.mu
                                spec = spec_cache.get(mu)
                                if spec is None:
                                    spec = _spec_with_mu(
                                        scenario, base_config, rec, mu)
                                    spec_cache[mu] = spec
                            else:
                                spec = spec_cache.get(-1.0)
                                if spec is None:
                                    spec = _traj_spec(
                                        scenario, base_config, rec)
                                    spec_cache[-1.0] = spec
                            seed = score_seed(cfg["seed"], rec.id, frame.k,
                                               metric)
                            value = frame_score(spec, frame, metric, lam=lam,
                                                M=cfg["M"], seed=seed)
                        values.append(value)
                        labels.append(orig.captured_labels[j])
                rows.append((kind, metric, level, e_max,
                             average_precision(values, labels)))
    return rows
