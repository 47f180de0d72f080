"""Experiment pipeline: data, training (or checkpoint reuse), search, metrics."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..data import (
    chain_trajectories,
    collect_trajectory,
    sample_training_pairs,
)
from ..errors import ConfigError
from ..models import LatentGoalModel, OverheadHeuristic
from ..search import PhysicalSearch, SearchConfig, SearchResult, SearchTrace
from ..sim import (
    DT,
    Pose,
    apply_corruption,
    generate_world,
    observe,
    save_world,
)
from .config import BUCKETS, ExperimentConfig, sample_start_goal
from .plots import emit_plots


@dataclass
class MetricsRow:
    variant: str
    seed: int
    outcome: str
    ticks: int
    meters: float
    mean_speed: float
    expansions: int
    nodes: int
    final_gps_error: float

    def header(self) -> str:
        return ",".join(f.name for f in dataclasses.fields(self))

    def csv_line(self) -> str:
        vals = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            vals.append(repr(v) if isinstance(v, float) else str(v))
        return ",".join(vals)


def metrics_from_trace(trace: SearchTrace, variant: str, seed: int) -> MetricsRow:
    """Recompute the row purely from trace records (no live search state)."""
    out = trace.outcome()
    if out is None:
        raise ValueError("trace has no outcome record")
    goal = np.asarray(trace.of_type("start")[0]["goal"])
    final = np.asarray(out["final_gps"])
    ticks = out["ticks"]
    meters = trace.path_meters()
    return MetricsRow(
        variant=variant,
        seed=seed,
        outcome=out["outcome"],
        ticks=ticks,
        meters=meters,
        mean_speed=meters / (ticks * DT) if ticks else 0.0,
        expansions=out["expansions"],
        nodes=out["nodes"],
        final_gps_error=float(np.hypot(*(final - goal))),
    )


def write_metrics_csv(rows: list[MetricsRow], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        if rows:
            f.write(rows[0].header() + "\n")
        for r in rows:
            f.write(r.csv_line() + "\n")
    return path


def collect_training_set(cfg: ExperimentConfig):
    """Trajectories from the held-out training worlds, with their worlds."""
    rng = np.random.default_rng(cfg.collect_seed)
    out = []
    for seed in cfg.train_world_seeds:
        w = generate_world(seed, cfg.world_kind, hint_fidelity=cfg.hint_fidelity)
        trajs = []
        for _ in range(cfg.n_random_walk):
            t = collect_trajectory(w, "random_walk", rng)
            if len(t) >= 2:
                trajs.append(t)
        for _ in range(cfg.n_trail_follow):
            t = collect_trajectory(w, "trail_follow", rng)
            if len(t) >= 2:
                trajs.append(t)
        out.append((w, trajs))
    return out


def ensure_models(cfg: ExperimentConfig, ckpt_dir: Path):
    """Load checkpoints when present, else train (if allowed) and save."""
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    latent_path = ckpt_dir / "latent.vkp"
    heuristic_path = ckpt_dir / "heuristic.vkp"
    need_heuristic = cfg.variant == "full"
    have = latent_path.exists() and (heuristic_path.exists() or not need_heuristic)
    if have:
        latent = LatentGoalModel.load(latent_path)
        heuristic = OverheadHeuristic.load(heuristic_path) \
            if heuristic_path.exists() else None
        return latent, heuristic
    if not cfg.train_if_missing:
        raise ConfigError(f"missing checkpoints under {ckpt_dir} "
                          "and training is disabled")
    corpora = collect_training_set(cfg)
    all_trajs = [t for _, trajs in corpora for t in trajs]
    rng = np.random.default_rng(cfg.collect_seed + 1)
    pairs = sample_training_pairs(all_trajs, cfg.n_pairs, rng)
    latent = LatentGoalModel(**cfg.latent)
    latent.fit(pairs, curve_path=ckpt_dir / "latent_curve.csv")
    latent.save(latent_path)
    heuristic = None
    w0, trajs0 = corpora[0]
    groups = chain_trajectories(trajs0)
    heuristic = OverheadHeuristic(**cfg.heuristic)
    heuristic.fit(groups, w0, curve_path=ckpt_dir / "heuristic_curve.csv")
    heuristic.save(heuristic_path)
    return latent, heuristic


def run_experiment(cfg: ExperimentConfig):
    """Returns (MetricsRow, SearchResult, out_dir)."""
    out_dir = cfg.resolved_out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg.save(out_dir / "config.json")

    world = generate_world(cfg.world_seed, cfg.world_kind,
                           hint_fidelity=cfg.hint_fidelity)
    corruption = cfg.corruption()

    # goal placement happens on the uncorrupted world, then corruption is
    # validated to keep the pair connected
    rng_goal = np.random.default_rng(cfg.goal_seed)
    if cfg.start_xy is not None and cfg.goal_xy is not None:
        start = Pose(cfg.start_xy[0], cfg.start_xy[1],
                     cfg.start_xy[2] if len(cfg.start_xy) > 2 else 0.0)
        goal_xy = np.asarray(cfg.goal_xy, dtype=np.float64)
    else:
        start, goal_xy = sample_start_goal(world, cfg.goal_bucket, rng_goal)
    world = apply_corruption(world, corruption,
                             require_connected=((start.x, start.y), tuple(goal_xy)))
    save_world(world, out_dir / "world.vkw")

    ckpt_dir = Path(cfg.checkpoint_dir) if cfg.checkpoint_dir else out_dir / "ckpt"
    latent, heuristic = ensure_models(cfg, ckpt_dir)

    goal_obs = observe(world, Pose(goal_xy[0], goal_xy[1], 0.0)).features
    scfg = SearchConfig(heuristic=cfg.heuristic_kind, **cfg.search)
    search = PhysicalSearch(world, corruption, latent,
                            heuristic if cfg.heuristic_kind == "learned" else None,
                            scfg, start, np.random.default_rng(cfg.search_seed))
    result = search.run_goal(goal_obs, goal_xy)
    result.trace.to_jsonl(out_dir / "trace.jsonl")

    row = metrics_from_trace(result.trace, cfg.variant, cfg.world_seed)
    write_metrics_csv([row], out_dir / "metrics.csv")
    if cfg.emit_plots:
        emit_plots(result.trace, world, result.graph, out_dir,
                   heuristic_model=heuristic if cfg.heuristic_kind == "learned" else None,
                   goal_xy=goal_xy)
    return row, result, out_dir


def bucket_of(row_meters_straight: float) -> str:
    for name, (lo, hi) in BUCKETS.items():
        if lo <= row_meters_straight <= hi:
            return name
    return "hard"


def eval_suite(configs: list[ExperimentConfig], out_dir):
    """Run every config; aggregate per variant and range bucket."""
    if not configs:
        raise ConfigError("eval_suite needs at least one config")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows: list[MetricsRow] = []
    buckets: list[str] = []
    for cfg in configs:
        row, result, run_dir = run_experiment(cfg)
        start_rec = result.trace.of_type("start")[0]
        d = float(np.hypot(start_rec["goal"][0] - start_rec["pose"][0],
                           start_rec["goal"][1] - start_rec["pose"][1]))
        rows.append(row)
        buckets.append(bucket_of(d))
    write_metrics_csv(rows, out_dir / "metrics.csv")

    summary: dict = {}
    for row, bucket in zip(rows, buckets):
        cell = summary.setdefault(row.variant, {}).setdefault(
            bucket, {"n": 0, "success": 0, "meters": 0.0, "speed": 0.0})
        cell["n"] += 1
        cell["success"] += int(row.outcome == "success")
        cell["meters"] += row.meters
        cell["speed"] += row.mean_speed
    lines = ["variant,bucket,success,total,mean_meters,mean_speed"]
    for variant in sorted(summary):
        for bucket in ("easy", "medium", "hard"):
            if bucket not in summary[variant]:
                continue
            c = summary[variant][bucket]
            lines.append("%s,%s,%d,%d,%r,%r" % (
                variant, bucket, c["success"], c["n"],
                c["meters"] / c["n"], c["speed"] / c["n"]))
    (out_dir / "summary.csv").write_text("\n".join(lines) + "\n")
    return rows, summary
