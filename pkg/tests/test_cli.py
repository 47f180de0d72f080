import json

import numpy as np
import pytest
from click.testing import CliRunner

from hintnav.cli import main


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    runner = CliRunner()
    r = runner.invoke(main, ["gen-world", "--kind", "building_blocks",
                             "--seed", "3", "--out", str(d / "w.vkw")])
    assert r.exit_code == 0, r.output
    r = runner.invoke(main, ["gen-data", "--world", str(d / "w.vkw"),
                             "--out", str(d / "data.jsonl"),
                             "--n-random", "10", "--seed", "1"])
    assert r.exit_code == 0, r.output
    return d


def test_gen_world_and_csv(tmp_path):
    runner = CliRunner()
    r = runner.invoke(main, ["gen-world", "--kind", "open_field", "--seed", "2",
                             "--out", str(tmp_path / "w.vkw"),
                             "--csv-dir", str(tmp_path / "csv")])
    assert r.exit_code == 0
    assert (tmp_path / "w.vkw").exists()
    assert (tmp_path / "csv" / "traversability.csv").exists()


def test_train_and_search_pipeline(workdir):
    runner = CliRunner()
    r = runner.invoke(main, [
        "train-local", "--data", str(workdir / "data.jsonl"),
        "--out", str(workdir / "latent.vkp"), "--steps", "60",
        "--pairs", "600", "--seed", "0",
        "--curve", str(workdir / "latent_curve.csv")])
    assert r.exit_code == 0, r.output
    assert (workdir / "latent_curve.csv").read_text().startswith(
        "step,loss,kl_term,nll_term")
    r = runner.invoke(main, [
        "train-heuristic", "--data", str(workdir / "data.jsonl"),
        "--world", str(workdir / "w.vkw"),
        "--out", str(workdir / "heur.vkp"), "--steps", "15",
        "--batch", "8", "--negatives", "4", "--seed", "0"])
    assert r.exit_code == 0, r.output

    # a search with a tiny budget: exit 3 unless it succeeds
    from hintnav.experiments import sample_start_goal
    from hintnav.sim import load_world
    world = load_world(workdir / "w.vkw")
    start, goal = sample_start_goal(world, "easy", np.random.default_rng(0))
    r = runner.invoke(main, [
        "search", "--world", str(workdir / "w.vkw"),
        "--latent", str(workdir / "latent.vkp"),
        "--heuristic", str(workdir / "heur.vkp"),
        "--variant", "full",
        "--start", f"{start.x},{start.y},{start.heading}",
        "--goal", f"{goal[0]},{goal[1]}",
        "--budget", "200", "--seed", "0",
        "--out", str(workdir / "run")])
    assert r.exit_code in (0, 3), r.output
    assert (workdir / "run" / "trace.jsonl").exists()
    assert (workdir / "run" / "metrics.csv").exists()
    assert (workdir / "run" / "overhead_path.svg").exists()


def test_search_full_requires_heuristic(workdir):
    runner = CliRunner()
    r = runner.invoke(main, [
        "search", "--world", str(workdir / "w.vkw"),
        "--latent", str(workdir / "latent.vkp"),
        "--variant", "full", "--start", "20,20", "--goal", "30,20"])
    assert r.exit_code == 2


def test_eval_runs_config(workdir, tmp_path):
    cfg = {
        "world_kind": "building_blocks", "world_seed": 3,
        "train_world_seeds": [9001], "n_random_walk": 10, "n_pairs": 500,
        "latent": {"z_dim": 4, "hidden": [16, 12], "steps": 40,
                   "batch_size": 16, "seed": 0},
        "heuristic": {"crop_hidden": [16, 8], "fusion_hidden": [24, 8],
                      "batch_size": 8, "n_negatives": 4, "steps": 10,
                      "seed": 0},
        "search": {"tick_budget": 80, "k_samples": 6},
        "variant": "uninformed",
        "goal_bucket": "easy",
        "out_dir": str(tmp_path / "run"),
        "checkpoint_dir": str(tmp_path / "ckpt"),
        "emit_plots": False,
    }
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    runner = CliRunner()
    r = runner.invoke(main, ["eval", str(p), "--out", str(tmp_path / "eval")])
    assert r.exit_code == 0, r.output
    assert (tmp_path / "eval" / "summary.csv").exists()
    assert "variant,bucket" in r.output


def test_eval_without_configs_exits_2(tmp_path):
    runner = CliRunner()
    r = runner.invoke(main, ["eval", "--out", str(tmp_path / "e")])
    assert r.exit_code == 2


def test_bad_config_exits_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"world_kind": "open_field", "nonsense_key": 1}))
    runner = CliRunner()
    r = runner.invoke(main, ["eval", str(p), "--out", str(tmp_path / "e")])
    assert r.exit_code == 2
    assert "config error" in r.output


def test_plot_from_trace(workdir, tmp_path):
    runner = CliRunner()
    run_dir = workdir / "run"
    if not (run_dir / "trace.jsonl").exists():
        pytest.skip("search artifacts missing")
    r = runner.invoke(main, ["plot", "--trace", str(run_dir / "trace.jsonl"),
                             "--world", str(workdir / "w.vkw"),
                             "--out", str(tmp_path / "plots")])
    assert r.exit_code == 0, r.output
    assert (tmp_path / "plots" / "overhead_path.svg").exists()
