"""Command-line driver: worlds, datasets, training, search runs, ablations."""

from __future__ import annotations

import functools
import sys
from pathlib import Path

import click
import numpy as np

from .errors import ConfigError
from .experiments import (
    ExperimentConfig,
    emit_plots,
    eval_suite,
    run_experiment,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SEARCH_FAILED = 3


def _config_errors_exit(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as e:
            click.echo(f"config error: {e}", err=True)
            sys.exit(EXIT_CONFIG)
        except (ValueError, OSError) as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_CONFIG)
    return wrapper


@click.group()
@click.option("--seed", type=int, default=0, show_default=True,
              help="Default seed for commands that take one.")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Experiment config JSON (used by search/eval/ablate).")
@click.option("--out", "out_root", type=click.Path(), default=None,
              help="Output directory root.")
@click.pass_context
def main(ctx, seed, config_path, out_root):
    """Physical-search navigation experiments in simulated 2D worlds."""
    ctx.ensure_object(dict)
    ctx.obj.update(seed=seed, config_path=config_path, out_root=out_root)


def _out_dir(ctx, fallback: str) -> Path:
    root = ctx.obj.get("out_root")
    return Path(root) if root else Path(fallback)


@main.command("gen-world")
@click.option("--kind", required=True,
              type=click.Choice(["open_field", "building_blocks",
                                 "trail_park", "canopy"]))
@click.option("--seed", type=int, default=None, help="World seed.")
@click.option("--out", "out_path", type=click.Path(), default="world.vkw",
              show_default=True)
@click.option("--csv-dir", type=click.Path(), default=None,
              help="Also export rasters as CSV grids here.")
@click.pass_context
@_config_errors_exit
def gen_world(ctx, kind, seed, out_path, csv_dir):
    """Generate a world and write it as a VKW1 file."""
    from .sim import export_rasters_csv, generate_world, save_world
    seed = ctx.obj["seed"] if seed is None else seed
    world = generate_world(seed, kind)
    save_world(world, out_path)
    click.echo(f"wrote {out_path} ({kind}, seed {seed})")
    if csv_dir:
        for p in export_rasters_csv(world, csv_dir):
            click.echo(f"wrote {p}")


@main.command("gen-data")
@click.option("--world", "world_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default="dataset.jsonl",
              show_default=True)
@click.option("--n-random", type=int, default=40, show_default=True)
@click.option("--n-trail", type=int, default=0, show_default=True)
@click.option("--seed", type=int, default=None)
@click.pass_context
@_config_errors_exit
def gen_data(ctx, world_path, out_path, n_random, n_trail, seed):
    """Collect trajectories in a world and write a step-record dataset."""
    from .data import collect_trajectory, dataset_stats, save_dataset
    from .sim import load_world
    seed = ctx.obj["seed"] if seed is None else seed
    world = load_world(world_path)
    rng = np.random.default_rng(seed)
    trajs = []
    for _ in range(n_random):
        t = collect_trajectory(world, "random_walk", rng)
        if len(t) >= 2:
            trajs.append(t)
    for _ in range(n_trail):
        t = collect_trajectory(world, "trail_follow", rng)
        if len(t) >= 2:
            trajs.append(t)
    manifest = save_dataset(trajs, out_path,
                            worlds=[{"kind": world.kind, "seed": world.seed}])
    stats = dataset_stats(trajs)
    click.echo(f"wrote {out_path} + {manifest}")
    click.echo(f"{stats['n_trajectories']} trajectories, "
               f"{stats['n_steps']} steps, "
               f"mean speed {stats['mean_speed_mps']:.2f} m/s")


@main.command("train-local")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default="latent.vkp",
              show_default=True)
@click.option("--steps", type=int, default=3000, show_default=True)
@click.option("--batch", type=int, default=128, show_default=True)
@click.option("--lr", type=float, default=1e-4, show_default=True)
@click.option("--beta", type=float, default=1e-2, show_default=True)
@click.option("--pairs", "n_pairs", type=int, default=20000, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--curve", type=click.Path(), default=None,
              help="Training-curve CSV path.")
@click.pass_context
@_config_errors_exit
def train_local(ctx, data_path, out_path, steps, batch, lr, beta, n_pairs,
                seed, curve):
    """Train the latent waypoint model on a collected dataset."""
    from .data import load_dataset, sample_training_pairs
    from .models import LatentGoalModel
    seed = ctx.obj["seed"] if seed is None else seed
    trajs = load_dataset(data_path)
    rng = np.random.default_rng(seed)
    pairs = sample_training_pairs(trajs, n_pairs, rng)
    model = LatentGoalModel(steps=steps, batch_size=batch, learning_rate=lr,
                            beta=beta, seed=seed)
    model.fit(pairs, curve_path=curve)
    model.save(out_path)
    click.echo(f"wrote {out_path} (final loss {model.curve_[-1][1]:.3f})")


@main.command("train-heuristic")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--world", "world_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default="heuristic.vkp",
              show_default=True)
@click.option("--steps", type=int, default=1500, show_default=True)
@click.option("--batch", type=int, default=64, show_default=True)
@click.option("--negatives", type=int, default=16, show_default=True)
@click.option("--lr", type=float, default=1e-4, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--curve", type=click.Path(), default=None)
@click.pass_context
@_config_errors_exit
def train_heuristic(ctx, data_path, world_path, out_path, steps, batch,
                    negatives, lr, seed, curve):
    """Train the overhead-map heuristic on chained trajectories."""
    from .data import chain_trajectories, load_dataset
    from .models import OverheadHeuristic
    from .sim import load_world
    seed = ctx.obj["seed"] if seed is None else seed
    trajs = load_dataset(data_path)
    world = load_world(world_path)
    groups = chain_trajectories(trajs)
    model = OverheadHeuristic(steps=steps, batch_size=batch,
                              n_negatives=negatives, learning_rate=lr,
                              seed=seed)
    model.fit(groups, world, curve_path=curve)
    model.save(out_path)
    click.echo(f"wrote {out_path} (final loss {model.curve_[-1][1]:.3f})")


@main.command("search")
@click.option("--world", "world_path", required=True, type=click.Path(exists=True))
@click.option("--latent", "latent_path", required=True, type=click.Path(exists=True))
@click.option("--heuristic", "heuristic_path", type=click.Path(exists=True),
              default=None, help="Required for the full variant.")
@click.option("--variant", type=click.Choice(["full", "gps_only", "uninformed"]),
              default="full", show_default=True)
@click.option("--start", "start_s", required=True,
              help="Start pose 'x,y[,heading]'.")
@click.option("--goal", "goal_s", required=True, help="Goal position 'x,y'.")
@click.option("--budget", type=int, default=1200, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", type=click.Path(), default="run",
              show_default=True)
@click.pass_context
@_config_errors_exit
def search_cmd(ctx, world_path, latent_path, heuristic_path, variant, start_s,
               goal_s, budget, seed, out_path):
    """Run one physical search; exits 3 when the goal is not reached."""
    from .experiments import VARIANT_HEURISTIC, metrics_from_trace
    from .models import LatentGoalModel, OverheadHeuristic
    from .search import PhysicalSearch, SearchConfig
    from .sim import Pose, load_world, observe
    seed = ctx.obj["seed"] if seed is None else seed
    world = load_world(world_path)
    latent = LatentGoalModel.load(latent_path)
    heuristic_kind = VARIANT_HEURISTIC[variant]
    heuristic = None
    if heuristic_kind == "learned":
        if heuristic_path is None:
            raise ConfigError("full variant needs --heuristic")
        heuristic = OverheadHeuristic.load(heuristic_path)
    parts = [float(v) for v in start_s.split(",")]
    start = Pose(parts[0], parts[1], parts[2] if len(parts) > 2 else 0.0)
    goal_xy = np.array([float(v) for v in goal_s.split(",")])
    goal_obs = observe(world, Pose(goal_xy[0], goal_xy[1], 0.0)).features
    cfg = SearchConfig(heuristic=heuristic_kind, tick_budget=budget)
    ps = PhysicalSearch(world, None, latent, heuristic, cfg, start,
                        np.random.default_rng(seed))
    result = ps.run_goal(goal_obs, goal_xy)
    out = _out_dir(ctx, out_path)
    out.mkdir(parents=True, exist_ok=True)
    result.trace.to_jsonl(out / "trace.jsonl")
    row = metrics_from_trace(result.trace, variant, seed)
    from .experiments import write_metrics_csv
    write_metrics_csv([row], out / "metrics.csv")
    emit_plots(result.trace, world, result.graph, out,
               heuristic_model=heuristic, goal_xy=goal_xy)
    click.echo(f"{result.outcome}: {result.ticks} ticks, "
               f"{result.meters:.1f} m, {result.expansions} expansions")
    if result.outcome != "success":
        sys.exit(EXIT_SEARCH_FAILED)


@main.command("eval")
@click.argument("config_paths", nargs=-1, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default="eval",
              show_default=True)
@click.pass_context
@_config_errors_exit
def eval_cmd(ctx, config_paths, out_path):
    """Run a suite of experiment configs and aggregate a metrics table."""
    paths = list(config_paths)
    if not paths and ctx.obj.get("config_path"):
        paths = [ctx.obj["config_path"]]
    if not paths:
        raise ConfigError("eval needs at least one config file")
    configs = [ExperimentConfig.from_file(p) for p in paths]
    out = _out_dir(ctx, out_path)
    rows, summary = eval_suite(configs, out)
    click.echo((out / "summary.csv").read_text().rstrip())


@main.command("ablate")
@click.option("--out", "out_path", type=click.Path(), default="ablation",
              show_default=True)
@click.pass_context
@_config_errors_exit
def ablate(ctx, out_path):
    """Run the full / gps_only / uninformed variants of one config."""
    import dataclasses
    if not ctx.obj.get("config_path"):
        raise ConfigError("ablate needs --config on the group")
    base = ExperimentConfig.from_file(ctx.obj["config_path"])
    out = _out_dir(ctx, out_path)
    rows = []
    for variant in ("full", "gps_only", "uninformed"):
        cfg = dataclasses.replace(
            base, variant=variant,
            out_dir=str(Path(base.out_dir) / variant))
        row, _, _ = run_experiment(cfg)
        rows.append(row)
        click.echo(f"{variant}: {row.outcome} in {row.ticks} ticks "
                   f"({row.meters:.1f} m)")
    from .experiments import write_metrics_csv
    write_metrics_csv(rows, out / "ablation.csv")


@main.command("plot")
@click.option("--trace", "trace_path", required=True, type=click.Path(exists=True))
@click.option("--world", "world_path", required=True, type=click.Path(exists=True))
@click.option("--heuristic", "heuristic_path", type=click.Path(exists=True),
              default=None)
@click.option("--goal", "goal_s", default=None, help="Goal 'x,y' for heatmap.")
@click.option("--out", "out_path", type=click.Path(), default="plots",
              show_default=True)
@click.pass_context
@_config_errors_exit
def plot(ctx, trace_path, world_path, heuristic_path, goal_s, out_path):
    """Render artifacts from a saved trace."""
    from .models import OverheadHeuristic
    from .search import SearchTrace
    from .sim import load_world
    world = load_world(world_path)
    trace = SearchTrace.from_jsonl(trace_path)
    heuristic = OverheadHeuristic.load(heuristic_path) if heuristic_path else None
    goal_xy = None
    if goal_s:
        goal_xy = np.array([float(v) for v in goal_s.split(",")])
    elif trace.of_type("start"):
        goal_xy = np.asarray(trace.of_type("start")[0]["goal"])
    out = _out_dir(ctx, out_path)
    for p in emit_plots(trace, world, None, out, heuristic_model=heuristic,
                        goal_xy=goal_xy):
        click.echo(f"wrote {p}")


if __name__ == "__main__":
    main()
