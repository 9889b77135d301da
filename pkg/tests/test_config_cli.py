import json
import os

import pytest
from hypothesis import given, strategies as st

from dagsim import criteria
from dagsim.cli import EXIT_CONFIG, EXIT_OK, EXIT_THRESHOLD, main
from dagsim.config import (
    BudgetParams,
    ConfigError,
    ExperimentConfig,
    GameParams,
    GrowthParams,
    WalkParams,
    loads,
    parse_config,
)
from dagsim.experiments import run_experiment
from dagsim.ledger import DagLedger, atomic_write_text

small = st.integers(1, 50)
ratio = st.fractions(min_value=0, max_value=10).map(str)
params = st.one_of(
    st.builds(BudgetParams, ratio, ratio, ratio, ratio),
    st.builds(GameParams, st.lists(small, min_size=1, max_size=4), st.lists(small, min_size=1, max_size=4),
              st.none() | ratio, st.floats(1e-9, 1e-3), small, small),
    st.builds(GrowthParams, small, small, small, st.none() | small, st.integers(0, 5)),
    st.builds(WalkParams, st.floats(0, 1), small, small, small),
)
NAMES = {BudgetParams: "budget", GameParams: "game", GrowthParams: "growth", WalkParams: "walk"}


@given(params, st.integers(0, 2**31), st.text(max_size=8))
def test_config_round_trip(p, seed, name):
    cfg = ExperimentConfig(NAMES[type(p)], p, seed, "out", name)
    assert loads(cfg.dumps()) == cfg


def test_config_errors():
    with pytest.raises(ConfigError):
        parse_config({"scenario": "nope"})
    with pytest.raises(ConfigError):
        parse_config({"scenario": "walk", "seed": 1, "walk": {"p": 1, "horizon": 2, "trials": 2},
                      "growth": {"s": 1, "rounds": 1}})
    with pytest.raises(ConfigError):
        parse_config({"scenario": "walk", "walk": {"p": 1, "horizon": 2, "trials": 2}})
    with pytest.raises(ConfigError):
        parse_config({"scenario": "walk", "seed": 1, "walk": {"p": 1, "horizon": 2, "trials": 2, "x": 0}})
    with pytest.raises(ConfigError):
        parse_config({"scenario": "walk", "seed": True, "walk": {"p": 1, "horizon": 2, "trials": 2}})
    with pytest.raises(ConfigError):
        loads("{not json")
    # budget is deterministic, so no seed is needed
    assert parse_config({"scenario": "budget", "budget": {"alpha": "1", "throughput": "1", "delay": "1",
                                                           "verify_time": "1"}}).seed is None


def write(tmp_path, raw, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return str(path)


def summary(out):
    return json.loads((out / "summary.json").read_text())


def test_walk_certain_survival(tmp_path):
    cfg = write(tmp_path, {"scenario": "walk", "seed": 1, "walk": {"p": 1.0, "horizon": 50, "trials": 100}})
    assert main(["walk", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_OK
    s = summary(tmp_path / "o")["summary"]
    assert s["survival"] == 1.0 and s["matches_limit"] is True


def test_growth_chain(tmp_path):
    cfg = write(tmp_path, {"scenario": "growth", "seed": 2,
                           "growth": {"s": 1, "rounds": 30, "trials": 2, "inject_round": 4, "ledger_rounds": 5}})
    out = tmp_path / "o"
    assert main(["growth", "--config", cfg, "--out", str(out)]) == EXIT_OK
    s = summary(out)["summary"]
    assert s["max_leaves"] == 1 and s["bookkeeping"]
    assert all(r["rounds_to_cover"] == 1 for r in s["per_trial"])
    assert (out / "trace_0001.csv").read_text().startswith("t,leaves,referenced,psi\n")
    assert len(DagLedger.import_jsonl(out / "ledger.jsonl")) == 6
    assert (out / "payouts.csv").read_text().startswith("miner,accrued,pending,settled_blocks\n")


def test_symmetric_game_scenario(tmp_path):
    cfg = write(tmp_path, {"scenario": "game", "seed": 5, "game": {"powers": [1, 1], "rewards": [1, 1]}})
    out = tmp_path / "o"
    assert main(["game", "--config", cfg, "--out", str(out)]) == EXIT_OK
    s = summary(out)["summary"]
    assert s["exact_max_regret"] <= 1e-6 and s["distinct_mean"] == 2.0
    assert json.loads((out / "game.json").read_text())["m"] == 2


def test_budget_flags_and_threshold_exit(tmp_path):
    out = tmp_path / "b"
    args = ["budget", "--alpha", "1/10", "--throughput", "1001", "--delay", "1", "--verify-time", "1/100",
            "--out", str(out)]
    assert main(args) == EXIT_THRESHOLD
    assert summary(out)["summary"]["linear_threshold"]["last_feasible"] == 1000
    args[4] = "1000"
    assert main(args) == EXIT_OK


def test_seed_override_and_missing_seed(tmp_path):
    raw = {"scenario": "walk", "walk": {"p": 0.7, "horizon": 100, "trials": 500}}
    cfg = write(tmp_path, raw)
    assert main(["walk", "--config", cfg, "--out", str(tmp_path / "x")]) == EXIT_CONFIG
    assert not (tmp_path / "x").exists()
    assert main(["walk", "--config", cfg, "--seed", "3", "--out", str(tmp_path / "y")]) == EXIT_OK
    assert summary(tmp_path / "y")["seed"] == 3


def test_config_error_exits(tmp_path):
    assert main(["walk", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    bad = write(tmp_path, {"scenario": "growth", "seed": 1, "growth": {"s": 1, "rounds": 2}})
    assert main(["walk", "--config", bad]) == EXIT_CONFIG
    bad = write(tmp_path, {"scenario": "growth", "seed": 1, "growth": {"s": 0, "rounds": 2}})
    assert main(["growth", "--config", bad]) == EXIT_CONFIG
    bad = write(tmp_path, {"scenario": "budget", "budget": {"alpha": "2", "throughput": "1", "delay": "1",
                                                             "verify_time": "1"}})
    assert main(["budget", "--config", bad]) == EXIT_CONFIG
    assert main(["budget"]) == EXIT_CONFIG


def test_walk_threshold_failure_exit(tmp_path):
    # a short horizon sits far above the limit, so the z-test fails
    cfg = write(tmp_path, {"scenario": "walk", "seed": 1, "walk": {"p": 0.6, "horizon": 5, "trials": 5000}})
    assert main(["walk", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_THRESHOLD


def test_same_seed_same_summary(tmp_path):
    raw = {"scenario": "growth", "seed": 9, "growth": {"s": 6, "rounds": 80, "trials": 3, "inject_round": 10}}
    cfg = parse_config(raw)
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    for name in ("summary.json", "trace_0000.csv", "trace_0002.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_atomic_write_leaves_old_file_on_failure(tmp_path):
    path = tmp_path / "f.txt"
    atomic_write_text(path, "old\n")
    with pytest.raises(TypeError):
        atomic_write_text(path, 12345)
    assert path.read_text() == "old\n"
    assert os.listdir(tmp_path) == ["f.txt"]


@pytest.fixture
def tiny_suite(monkeypatch):
    tiny = {
        "dag_oracle": {"dags": 3, "max_blocks": 8},
        "reward_conservation": {"dags": 3, "max_blocks": 8},
        "utility_oracle": {"games": 2, "max_miners": 3, "mc_samples": 500},
        "equilibrium_soundness": {"games": 2, "grid": 2},
        "throughput": {"miners": [2, 3, 4, 5], "seeds": 1, "trials": 50},
        "fairness": {"equilibria": 3},
        "lemma_ineq": {"instances": 5, "n_max": 6, "m_max": 10},
        "leaf_bound": {"s": [4], "rounds": 100, "seeds": 1},
        "referenced_mean": {"s": [4], "multiples": [4], "draws": 500},
        "walk_limit": {"p": [0.9], "horizon": 100, "trials": 1000, "low_p": 0.4, "low_horizons": [10, 100]},
        "finality_scaling": {"s": [4, 16], "trials": 5, "c": 4.0},
        "budget_threshold": {"cases": [["1/10", "1", "1/100"]]},
    }
    monkeypatch.setitem(criteria.SUITES, "fast", tiny)


def test_reproduce_attempts_everything_and_is_byte_stable(tmp_path, tiny_suite):
    assert main(["reproduce", "--suite", "fast", "--out", str(tmp_path / "a")]) in (EXIT_OK, EXIT_THRESHOLD)
    main(["reproduce", "--suite", "fast", "--out", str(tmp_path / "b"), "--no-rerun"])
    a = (tmp_path / "a" / "report.jsonl").read_bytes()
    assert a == (tmp_path / "b" / "report.jsonl").read_bytes()
    assert len(a.splitlines()) == len(criteria.CRITERIA)
    rows = (tmp_path / "a" / "report.txt").read_text().splitlines()
    assert [r.split()[0] for r in rows[1:]] == [f"C{i:02d}" for i in range(1, 14)]


def test_reproduce_missing_seed_is_config_error(tmp_path, tiny_suite):
    seeds = dict(criteria.PINNED_SEEDS)
    del seeds["walk_limit"]
    path = write(tmp_path, seeds, "seeds.json")
    assert main(["reproduce", "--seeds", path]) == EXIT_CONFIG
