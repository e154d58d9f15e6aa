import csv
import json

import pytest

from casattack.errors import ConfigError
from casattack.report import emit_curves, render
from casattack.scenario import (OUTPUT_ENV, RESULT_FILE, SUMMARY_FILE, ExperimentResult, aggregate,
                                config_from_dict, derive_seed, load_config, load_result,
                                run_experiment, run_repetition)


def write(tmp_path, text, name="s.yaml"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_grid_defaults(tmp_path):
    cfg = load_config(write(tmp_path, "kind: grid-cascade\n"))
    assert cfg.target["loading"] == 0.75
    assert cfg.adversary["cap"] == 500
    assert cfg.repetitions == 100
    assert cfg.adversary["objective"] == 8


def test_rejections(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_config(write(tmp_path, "kind: grid-cascade\nrepetitions: 0\n"))
    assert info.value.field == "repetitions"
    with pytest.raises(ConfigError, match="foo") as info:
        load_config(write(tmp_path, "kind: grid-cascade\nfoo: 1\n"))
    assert info.value.field == "foo"
    with pytest.raises(ConfigError, match="alpah"):
        load_config(write(tmp_path, "kind: grid-cascade\nadversary:\n  alpah: 0.2\n"))
    with pytest.raises(ConfigError) as info:
        load_config(write(tmp_path, "kind: grid-cascade\nadversary:\n  objective: .inf\n"))
    assert info.value.field == "adversary.objective"
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "kind: volcano\n"))
    with pytest.raises(ConfigError) as info:
        load_config(write(tmp_path, "kind: grid-cascade\ntarget:\n  bus_csv: nope.csv\n  line_csv: nope.csv\n"))
    assert info.value.field == "target.bus_csv"


def test_parse_error_location(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_config(write(tmp_path, "kind: grid-cascade\ntarget: {loading: [0.7\n"))
    assert info.value.line is not None and info.value.column is not None


def test_relative_files_resolve_next_to_config(tmp_path):
    (tmp_path / "g.txt").write_text("0 1\n1 2\n2 3\n", encoding="utf-8")
    cfg = load_config(write(tmp_path, "kind: net-fragmentation\ntarget:\n  graph:\n    edge_list: g.txt\n"))
    assert cfg.target["graph"]["edge_list"] == str((tmp_path / "g.txt").resolve())


def test_seed_derivation_is_splitmix():
    # reference values of the splitmix64 generator seeded with 0 (first two outputs)
    assert derive_seed(0, 0) == 0xE220A8397B1DCDAF
    assert derive_seed(0, 1) == 0x6E789E6AA1B965F4
    assert len({derive_seed(7, i) for i in range(1000)}) == 1000


def test_output_root_override(tmp_path, monkeypatch):
    cfg = config_from_dict({"kind": "dynamics-demo", "output": {"directory": "runs/x"}})
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path))
    assert cfg.output_dir == tmp_path / "runs" / "x"
    monkeypatch.delenv(OUTPUT_ENV)
    assert str(cfg.output_dir) == "runs/x"


def small(kind, tmp_path, **extra):
    raw = {"kind": kind, "repetitions": 3, "seed": 11,
           "output": {"directory": str(tmp_path / kind)}}
    raw.update(extra)
    return config_from_dict(raw)


def test_grid_experiment_files(tmp_path):
    res = run_experiment(small("grid-cascade", tmp_path))
    out = tmp_path / "grid-cascade"
    assert len(res.reports) == 3
    rows = list(csv.reader(open(out / "failures_vs_trips.csv")))
    assert rows[0] == ["trip_index", "mean_cascaded", "min", "max"]
    summary = json.loads((out / SUMMARY_FILE).read_text())
    assert summary["aggregates"]["reference"]["mean_cascaded"] == 8.6
    assert "written_at" in summary["metadata"]
    assert "metadata" not in json.loads((out / RESULT_FILE).read_text())
    assert not list(out.glob(".*.tmp"))


def test_aggregates_recompute_from_reports(tmp_path):
    run_experiment(small("grid-cascade", tmp_path))
    stored = load_result(tmp_path / "grid-cascade")
    assert aggregate(stored.config.kind, stored.reports) == stored.aggregates
    costs = [r["success_cost"] for r in stored.reports if r["success"]]
    assert stored.aggregates["vulnerability"] == 1 / min(costs)


def test_repetitions_are_replayable(tmp_path):
    cfg = small("net-fragmentation", tmp_path, adversary={"planning_episodes": 300})
    res = run_experiment(cfg, write=False)
    again = run_repetition(cfg, 1)
    assert json.dumps(again, sort_keys=True) == json.dumps(res.reports[1], sort_keys=True)
    assert set(res.reports[0]["baselines"]) == {"betweenness", "brokerage"}
    assert res.reports[0]["graph"]["generator"] == "barabasi-albert"


def test_parallel_equals_serial(tmp_path):
    serial = run_experiment(small("grid-cascade", tmp_path / "a"), write=False)
    parallel = run_experiment(small("grid-cascade", tmp_path / "b", workers=2), write=False)
    assert serial.reports == parallel.reports
    assert serial.aggregates == parallel.aggregates


def test_failed_repetition_is_recorded(tmp_path, monkeypatch):
    import casattack.scenario as sc

    real = sc._RUNNERS["dynamics-demo"]

    def flaky(cfg, seed):
        if seed == derive_seed(cfg.seed, 1):
            raise RuntimeError("boom")
        return real(cfg, seed)

    monkeypatch.setitem(sc._RUNNERS, "dynamics-demo", flaky)
    res = run_experiment(small("dynamics-demo", tmp_path))
    assert res.failures == [1]
    assert res.reports[1]["reason"] == "INCOMPLETE" and "boom" in res.reports[1]["error"]
    summary = json.loads((tmp_path / "dynamics-demo" / SUMMARY_FILE).read_text())
    assert summary["failed_repetitions"] == [1]


def test_empty_result_writes_summary_only(tmp_path):
    cfg = small("grid-cascade", tmp_path, adversary={"cap": 1, "objective": 1000})
    res = run_experiment(cfg)
    assert not res.successes
    files = sorted(p.name for p in (tmp_path / "grid-cascade").iterdir())
    assert files == [RESULT_FILE, SUMMARY_FILE]
    summary = json.loads((tmp_path / "grid-cascade" / SUMMARY_FILE).read_text())
    assert summary["aggregates"]["successes"] == 0
    assert summary["aggregates"]["vulnerability"] == "undefined"
    assert summary["aggregates"]["resilience"] == "infinite"


def test_induction_curve_file(tmp_path):
    cfg = small("policy-induction", tmp_path, repetitions=1,
                target={"corridor": {"length": 8}, "epochs": 20}, adversary={"objective": 0.0})
    res = run_experiment(cfg)
    rows = list(csv.reader(open(tmp_path / "policy-induction" / "reward_per_epoch.csv")))
    assert rows[0] == ["epoch", "unperturbed", "perturbed"] and len(rows) == 21
    assert res.reports[0]["cost_unit"] == "epochs"


def test_fragmentation_curve_columns(tmp_path):
    cfg = small("net-fragmentation", tmp_path, repetitions=2, adversary={"planning_episodes": 300})
    run_experiment(cfg)
    out = tmp_path / "net-fragmentation"
    long = list(csv.reader(open(out / "fragmentation_per_step.csv")))
    assert long[0] == ["step", "method", "repetition", "fragmentation"]
    assert {r[1] for r in long[1:]} <= {"rl", "betweenness", "brokerage"}
    agg = list(csv.reader(open(out / "fragmentation_summary.csv")))
    assert agg[0] == ["step", "method", "mean", "min", "max"]


def test_unwritable_path_leaves_nothing(tmp_path):
    res = run_experiment(small("dynamics-demo", tmp_path), write=False)
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        emit_curves(res, blocker / "sub")
    assert not (blocker.is_dir())


def test_staged_write_failure_cleans_up(tmp_path, monkeypatch):
    res = run_experiment(small("dynamics-demo", tmp_path), write=False)
    import casattack.report as rp
    calls = {"n": 0}
    real = rp.os.fdopen

    def failing(*a, **k):
        calls["n"] += 1
        if calls["n"] == 2:
            raise OSError("disk full")
        return real(*a, **k)

    monkeypatch.setattr(rp.os, "fdopen", failing)
    out = tmp_path / "dest"
    with pytest.raises(OSError):
        emit_curves(res, out)
    assert list(out.iterdir()) == []


def test_render_is_deterministic_apart_from_metadata(tmp_path):
    a = run_experiment(small("dynamics-demo", tmp_path), write=False)
    b = run_experiment(small("dynamics-demo", tmp_path), write=False)
    fa, fb = render(a), render(b)
    assert fa[RESULT_FILE] == fb[RESULT_FILE]
    assert fa["basins.csv"] == fb["basins.csv"]
    strip = lambda s: {k: v for k, v in json.loads(s).items() if k != "metadata"}
    assert strip(fa[SUMMARY_FILE]) == strip(fb[SUMMARY_FILE])


def test_star_preset_is_default(tmp_path):
    res = run_experiment(small("formation-destabilize", tmp_path), write=False)
    assert all(r["success_actions"][0] == 0 for r in res.reports)
    assert res.aggregates["resilience"] == 1
