"""Command-line interface.

Subcommands cover single rollouts (``simulate``), dataset generation
(``generate``), frame scoring (``score``), escape-effort queries
(``escape``), and the full prediction-quality study (``study``).

Configs are TOML files; JSON is accepted interchangeably.  Flags override
config values, and the ``CAGING_SEED`` environment variable overrides
both, so CI can pin seeds without editing configs.  Every command echoes
the fully resolved configuration it ran with into the output directory;
re-running with that config reproduces the outputs bit-identically
(wall-clock timing files excepted).

Exit codes: 0 success, 1 runtime error, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import evaluation as ev
from . import metrics as mt
from . import planner as pl
from . import plots
from . import scenarios as scn

__all__ = ["main"]


class UsageError(Exception):
    """Bad flags or config contents; reported with exit code 2."""


# ---------------------------------------------------------------------------
# config plumbing


RUN_DEFAULTS: dict[str, Any] = {
    "scenario": "pushing",
    "scenario_config": {},
    "planner": {},
    "metrics": list(ev.ALL_METRICS),
    "lambda": mt.DEFAULT_LAMBDA,
    "M": 100,
    "n_rounds": 10,
    "seeds": [0],
    "output_dir": ".",
    "K": 10,
    "n_traj": 1,
    "k_hat": ev.K_HAT,
    "k_bar": ev.K_BAR,
    "effort_budget": 2000,
    "effort_trajectories": None,
    "subroutine": "est",
}


def _load_config(path: str) -> dict[str, Any]:
    """Parse a TOML (or JSON) config file with line diagnostics."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}")
    if path.endswith(".json"):
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: {exc}")
    try:
        return tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as toml_exc:
        try:
            return json.loads(raw)
        except json.JSONDecodeError:
            raise UsageError(f"{path}: {toml_exc}")


def _resolve_run_config(args) -> dict[str, Any]:
    cfg = {k: (dict(v) if isinstance(v, dict) else
               list(v) if isinstance(v, list) else v)
           for k, v in RUN_DEFAULTS.items()}
    if getattr(args, "config", None):
        loaded = _load_config(args.config)
        for key, value in loaded.items():
            if key not in cfg:
                valid = ", ".join(sorted(cfg))
                raise UsageError(
                    f"unknown config field {key!r}; valid fields: {valid}")
            cfg[key] = value
    for key in ("scenario", "M", "n_rounds", "subroutine", "K", "n_traj",
                "effort_budget", "effort_trajectories"):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if getattr(args, "lam", None) is not None:
        cfg["lambda"] = args.lam
    if getattr(args, "metrics", None):
        cfg["metrics"] = _parse_metrics(args.metrics)
    if getattr(args, "out_dir", None):
        cfg["output_dir"] = args.out_dir
    return cfg


def _parse_metrics(text: str) -> list[str]:
    names = [m.strip() for m in text.split(",") if m.strip()]
    valid = ev.ALL_METRICS
    for name in names:
        if name not in valid:
            raise UsageError(
                f"unknown metric {name!r}; valid metrics: {', '.join(valid)}")
    if not names:
        raise UsageError("empty metric list")
    return names


def _resolve_seed(args, cfg: Mapping[str, Any]) -> int:
    env = os.environ.get("CAGING_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"CAGING_SEED must be an integer, got {env!r}")
    flag = getattr(args, "seed", None)
    if flag is not None:
        return flag
    seeds = cfg.get("seeds") or [0]
    return int(seeds[0])


def _resolve_seeds(args, cfg: Mapping[str, Any]) -> list[int]:
    env = os.environ.get("CAGING_SEED")
    if env is not None:
        try:
            return [int(env)]
        except ValueError:
            raise UsageError(f"CAGING_SEED must be an integer, got {env!r}")
    if getattr(args, "seed", None) is not None:
        return [args.seed]
    return [int(s) for s in (cfg.get("seeds") or [0])]


def _planner_config(overrides: Mapping[str, Any]) -> Optional[pl.PlannerConfig]:
    if not overrides:
        return None
    kwargs = dict(overrides)
    if "metric_weights" in kwargs:
        kwargs["metric_weights"] = pl.MetricWeights(*kwargs["metric_weights"])
    try:
        return pl.PlannerConfig(**kwargs)
    except TypeError:
        valid = ", ".join(f.name for f in
                          pl.PlannerConfig.__dataclass_fields__.values())
        raise UsageError(
            f"bad planner config {sorted(overrides)}; valid fields: {valid}")
    except ValueError as exc:
        raise UsageError(f"bad planner config: {exc}")


def _build_spec(name: str, config: Mapping[str, Any]) -> scn.ScenarioSpec:
    try:
        return ev.build_spec(name, dict(config))
    except ValueError as exc:
        raise UsageError(str(exc))


def _out_dir(cfg: Mapping[str, Any]) -> Path:
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(out: Path, command: str, cfg: Mapping[str, Any],
                 extra: Mapping[str, Any]) -> Path:
    resolved = dict(cfg)
    resolved.update(extra)
    path = out / f"{command}_config.json"
    path.write_text(ev.to_json_text(resolved) + "\n")
    return path


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write_csv(path: Path, header: Sequence[str],
               rows: Sequence[Sequence[Any]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


# ---------------------------------------------------------------------------
# subcommands


def _cmd_simulate(args) -> int:
    cfg = _resolve_run_config(args)
    seed = _resolve_seed(args, cfg)
    spec = _build_spec(cfg["scenario"], cfg["scenario_config"])
    ds = ev.generate_dataset(spec, 1, cfg["K"], seed, cfg["k_hat"])
    out = _out_dir(cfg)
    path = out / f"trajectory_{cfg['scenario']}_seed{seed}.jsonl"
    ev.save_dataset(ds, path)
    written = [path]
    if args.dump_frames:
        rec = ds.records[0]
        traj_spec = _build_spec(cfg["scenario"],
                                {**spec.config, **dict(rec.params)})
        dump: list = []
        ev.record_trajectory(traj_spec, seed, cfg["K"], rec.id,
                             params=rec.params, k_hat=cfg["k_hat"], dump=dump)
        frames_path = out / f"frames_{cfg['scenario']}_seed{seed}.jsonl"
        with open(frames_path, "w") as fh:
            for k, ws in dump:
                fh.write(ev.to_json_text({
                    "k": k,
                    "time": ws.time,
                    "poses": [[p.x, p.y, p.theta] for p in ws.poses],
                    "twists": [[t.vx, t.vy, t.omega] for t in ws.twists],
                }) + "\n")
        written.append(frames_path)
    written.append(_echo_config(out, "simulate", cfg, {"seed": seed}))
    for p in written:
        print(p)
    return 0


def _cmd_generate(args) -> int:
    cfg = _resolve_run_config(args)
    seed = _resolve_seed(args, cfg)
    spec = _build_spec(cfg["scenario"], cfg["scenario_config"])
    ds = ev.generate_dataset(spec, cfg["n_traj"], cfg["K"], seed,
                             cfg["k_hat"])
    out = _out_dir(cfg)
    path = Path(args.out) if args.out else (
        out / f"dataset_{cfg['scenario']}.jsonl")
    path.parent.mkdir(parents=True, exist_ok=True)
    ev.save_dataset(ds, path)
    print(path)
    print(_echo_config(out, "generate", cfg, {"seed": seed}))
    n_success = sum(r.success_label for r in ds.records)
    print(f"{len(ds.records)} trajectories, {n_success} successful",
          file=sys.stderr)
    return 0


_SCORE_HEADER = ("scenario", "trajectory", "frame", "metric", "value",
                 "label")


def _cmd_score(args) -> int:
    cfg = _resolve_run_config(args)
    seed = _resolve_seed(args, cfg)
    ds = ev.load_dataset(args.dataset)
    gen = dict(ds.generation_config)
    scenario = gen.get("scenario", ds.records[0].scenario if ds.records
                       else cfg["scenario"])
    base_config = dict(gen.get("scenario_config", ()))
    out = _out_dir(cfg)
    path = Path(args.out) if args.out else out / "scores.csv"
    path.parent.mkdir(parents=True, exist_ok=True)

    done: set[tuple] = set()
    if path.exists():
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            for i, row in enumerate(reader):
                if i == 0 or not row:
                    continue
                done.add((row[1], int(row[2]), row[3]))

    planner_config = _planner_config(cfg["planner"])
    metrics = list(cfg["metrics"])
    limit = cfg["effort_trajectories"]
    effort_ids = {rec.id for rec in
                  (ds.records if limit is None else ds.records[:limit])}
    new_rows = []
    for rec in ds.records:
        spec = _build_spec(scenario, {**base_config, **dict(rec.params)})
        need_traj = ("omega_suc" in metrics
                     and (rec.id, -1, "omega_suc_traj") not in done)
        suc_frames: list[float] = []
        for j, frame in enumerate(rec.frames):
            for metric in metrics:
                if metric in ev.EFFORT_METRICS and rec.id not in effort_ids:
                    continue
                need_value = (rec.id, frame.k, metric) not in done
                want_suc = metric == "omega_suc" and need_traj
                if not need_value and not want_suc:
                    continue
                value = ev.frame_score(
                    spec, frame, metric, lam=cfg["lambda"], M=cfg["M"],
                    seed=ev.score_seed(seed, rec.id, frame.k, metric),
                    effort_rounds=cfg["n_rounds"],
                    effort_budget=cfg["effort_budget"],
                    planner_config=planner_config)
                if metric == "omega_suc":
                    suc_frames.append(value)
                if not need_value:
                    continue
                label = (rec.success_label if metric == "omega_suc"
                         else rec.captured_labels[j])
                new_rows.append((scenario, rec.id, frame.k, metric, value,
                                 label))
        if need_traj:
            traj = mt.trajectory_success_score(suc_frames[: cfg["k_bar"]],
                                               cfg["k_bar"])
            new_rows.append((scenario, rec.id, -1, "omega_suc_traj", traj,
                             rec.success_label))

    fresh = not path.exists()
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if fresh:
            writer.writerow(_SCORE_HEADER)
        for row in new_rows:
            writer.writerow([_fmt(v) for v in row])
    _echo_config(out, "score", cfg, {"seed": seed, "dataset": args.dataset})
    print(f"{path}: {len(new_rows)} new rows, {len(done)} already scored",
          file=sys.stderr)
    print(path)
    return 0


def _cmd_escape(args) -> int:
    cfg = _resolve_run_config(args)
    seeds = _resolve_seeds(args, cfg)
    planner_config = _planner_config(cfg["planner"])
    if args.dataset:
        ds = ev.load_dataset(args.dataset)
        gen = dict(ds.generation_config)
        scenario = gen.get("scenario", cfg["scenario"])
        base_config = dict(gen.get("scenario_config", ()))
        try:
            rec = ds.records[args.trajectory]
            frame = rec.frames[args.frame]
        except IndexError:
            raise UsageError(
                f"dataset has no trajectory {args.trajectory} frame "
                f"{args.frame}")
        spec = _build_spec(scenario, {**base_config, **dict(rec.params)})
        z0 = frame.z
        origin = f"{rec.id} frame {frame.k}"
    else:
        spec = _build_spec(cfg["scenario"], cfg["scenario_config"])
        z0 = scn.from_world_state(spec, spec.home)
        origin = f"{cfg['scenario']} home state"
    results = []
    for seed in seeds:
        result = mt.effort_of_escape(
            spec, z0, subroutine=cfg["subroutine"], n=cfg["n_rounds"],
            per_iteration_budget=cfg["effort_budget"], seed=seed,
            config=planner_config)
        results.append((seed, result))
        print(f"seed={seed} effort={_fmt(result.effort)} "
              f"rounds_improved={max(len(result.bound_history) - 1, 0)} "
              f"iterations={result.iterations_used}")
    out = _out_dir(cfg)
    payload = {
        "origin": origin,
        "subroutine": cfg["subroutine"],
        "results": [
            {
                "seed": seed,
                "effort": r.effort,
                "bound_history": list(r.bound_history),
                "iterations_used": r.iterations_used,
                "path_length": len(r.path.nodes) if r.path else 0,
            }
            for seed, r in results
        ],
    }
    path = out / f"escape_{spec.name}.json"
    path.write_text(ev.to_json_text(payload) + "\n")
    _echo_config(out, "escape", cfg, {"seeds": seeds})
    print(path)
    return 0


def _cmd_study(args) -> int:
    raw = _load_config(args.config) if args.config else {}
    try:
        cfg = ev.resolve_study_config(raw)
    except ValueError as exc:
        raise UsageError(str(exc))
    if args.metrics:
        cfg["metrics"] = _parse_metrics(args.metrics)
    if args.workers is not None:
        cfg["workers"] = args.workers
    elif not cfg.get("workers"):
        cfg["workers"] = os.cpu_count() or 1
    env = os.environ.get("CAGING_SEED")
    if env is not None:
        try:
            cfg["seed"] = int(env)
        except ValueError:
            raise UsageError(f"CAGING_SEED must be an integer, got {env!r}")
    elif args.seed is not None:
        cfg["seed"] = args.seed

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    note = (lambda msg: None) if args.quiet else (
        lambda msg: print(f"[study] {msg}", file=sys.stderr))
    report = ev.run_study(cfg, progress=note)

    (out / "study_config.json").write_text(
        ev.to_json_text(report.config) + "\n")
    for scenario, ds in report.datasets.items():
        ev.save_dataset(ds, out / f"dataset_{scenario}.jsonl")
    _write_csv(out / "scores.csv", _SCORE_HEADER, report.score_rows)
    _write_csv(out / "table.csv",
               ("scenario", "metric", "auc", "ap", "n"), report.table_rows)
    _write_csv(out / "fig6.csv",
               ("M", "auc_median", "auc_min", "auc_max"), report.sweep_rows)
    _write_csv(out / "fig6_timing.csv",
               ("M", "seconds_mean", "seconds_min", "seconds_max"),
               report.timing_rows)
    _write_csv(out / "fig7.csv",
               ("kind", "metric", "level", "e_max", "ap"),
               report.perturb_rows)
    plots.save_auc_vs_field_size(report.sweep_rows, out / "fig6_auc.png")
    plots.save_timing_vs_field_size(report.timing_rows,
                                    out / "fig6_timing.png")
    plots.save_perturbation_ap(report.perturb_rows, out / "fig7_ap.png")
    print(out)
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML or JSON config file")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out-dir", help="output directory (default from config)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="caging",
        description="Energy-margin robustness scores for planar "
                    "manipulation under a deterministic contact simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="roll one scripted trajectory")
    _add_common(p)
    p.add_argument("--scenario", help="scenario name")
    p.add_argument("--frames", dest="K", type=int,
                   help="recorded frames per trajectory")
    p.add_argument("--dump-frames", action="store_true",
                   help="also write every simulation step for animation")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("generate", help="record a scripted dataset")
    _add_common(p)
    p.add_argument("--scenario", help="scenario name")
    p.add_argument("--n-traj", dest="n_traj", type=int,
                   help="number of trajectories")
    p.add_argument("--frames", dest="K", type=int,
                   help="recorded frames per trajectory")
    p.add_argument("--out", help="dataset file path")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("score", help="score recorded frames")
    _add_common(p)
    p.add_argument("--dataset", required=True, help="dataset JSONL path")
    p.add_argument("--metrics", help="comma-separated metric names")
    p.add_argument("--lambda", dest="lam", type=float,
                   help="cost sensitivity (1/J)")
    p.add_argument("--M", dest="M", type=int, help="field samples per frame")
    p.add_argument("--n-rounds", dest="n_rounds", type=int,
                   help="escape refinement rounds")
    p.add_argument("--effort-budget", dest="effort_budget", type=int,
                   help="planner iterations per escape round")
    p.add_argument("--effort-trajectories", dest="effort_trajectories",
                   type=int, help="limit effort metrics to leading subset")
    p.add_argument("--out", help="scores CSV path")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("escape", help="effort of escape for a state")
    _add_common(p)
    p.add_argument("--scenario", help="scenario name")
    p.add_argument("--subroutine", choices=("est", "rrt"),
                   help="planner used inside the refinement loop")
    p.add_argument("--n-rounds", dest="n_rounds", type=int,
                   help="refinement rounds")
    p.add_argument("--effort-budget", dest="effort_budget", type=int,
                   help="planner iterations per round")
    p.add_argument("--dataset", help="take the state from this dataset")
    p.add_argument("--trajectory", type=int, default=0,
                   help="trajectory index within --dataset")
    p.add_argument("--frame", type=int, default=0,
                   help="frame index within the trajectory")
    p.set_defaults(func=_cmd_escape)

    p = sub.add_parser("study", help="full prediction-quality study")
    p.add_argument("--config", help="study config file (TOML or JSON)")
    p.add_argument("--out", default="study_out", help="report directory")
    p.add_argument("--metrics", help="comma-separated metric restriction")
    p.add_argument("--workers", type=int,
                   help="scoring process count (default: available cores)")
    p.add_argument("--seed", type=int, help="override the study seed")
    p.add_argument("--quiet", action="store_true",
                   help="suppress progress messages")
    p.set_defaults(func=_cmd_study)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
