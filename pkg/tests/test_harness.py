import json
import statistics
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spatial_uct import cli, experiment
from spatial_uct.errors import ConfigError, DataError, ReplayError
from spatial_uct.experiment import (
    aggregate_ci,
    beta_csv,
    beta_sweep,
    run_experiment,
    subset_distribution,
)
from spatial_uct.ingest import load_graph
from spatial_uct.manifest import ablation_methods, load_manifest, manifest_from_dict, preset

DATA = Path(__file__).parent / "data"
ROOT = Path(__file__).parent.parent


def small_manifest(**kw):
    d = {
        "graphs": {"kh": {"n": 10, "count": 2, "seed": 3}},
        "objective": "efficiency",
        "seeds": [0, 1],
        "methods": ["Random", "MinCost"],
    }
    d.update(kw)
    return manifest_from_dict(d)


class TestAggregate:
    def test_constant(self):
        assert aggregate_ci([0.5, 0.5, 0.5]) == (0.5, 0.0)

    def test_two_values(self):
        assert aggregate_ci([0, 1])[0] == 0.5

    def test_single_value_has_zero_width(self):
        assert aggregate_ci([0.3]) == (0.3, 0.0)

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate_ci([])

    @given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=30))
    def test_matches_statistics(self, vals):
        mean, hw = aggregate_ci(vals)
        assert mean == pytest.approx(statistics.fmean(vals), abs=1e-12, rel=1e-12)
        assert hw == pytest.approx(1.96 * statistics.stdev(vals) / len(vals) ** 0.5, abs=1e-12, rel=1e-12)

    def test_ten_values(self):
        vals = np.random.default_rng(0).random(10).tolist()
        assert aggregate_ci(vals)[1] == pytest.approx(1.96 * statistics.stdev(vals) / 10**0.5, abs=1e-12)


class TestManifest:
    def test_defaults(self):
        m = manifest_from_dict({"graphs": {"kh": {"n": 25}}, "methods": ["UCT"]})
        assert (m.tau, m.rho, m.seeds, m.sims_multiplier) == (0.1, 1.0, list(range(10)), 20)
        m = manifest_from_dict({"graphs": {"files": ["a.gml"]}, "methods": ["UCT"]})
        assert m.rho == 2.0

    @pytest.mark.parametrize(
        "patch",
        [
            {"colour": "red"},
            {"graphs": {"kh": {"n": 10, "size": 3}}},
            {"graphs": {"kh": {"n": 10}, "files": ["a"]}},
            {"methods": [{"name": "x", "planner": {"cp": 0.1}}]},
            {"methods": [{"name": "x", "planner": {"reduction": {"statistic": "DEG", "q": 40, "extra": 1}}}]},
            {"methods": ["NoSuchMethod"]},
            {"methods": []},
            {"tau": 0.0},
            {"tau": 1.5},
            {"rho": 0.5},
            {"seeds": []},
            {"objective": "speed"},
            {"objective": {"name": "efficiency", "sims": 3}},
            {"methods": ["LDP"]},
            {"methods": ["UCT", "UCT"]},
        ],
    )
    def test_rejects(self, patch):
        with pytest.raises(ConfigError):
            small_manifest(**patch)

    def test_planner_entry(self):
        m = small_manifest(
            methods=[
                {"name": "mine", "planner": {"c_p": 0.3, "btm": True, "default_policy": {"kind": "cost_biased", "beta": 2},
                                            "reduction": {"statistic": "INVDEG", "q": 60}}},
                {"baseline": "greedy"},
                {"preset": "SG-UCT", "name": "sg"},
            ]
        )
        cfg = m.methods[0].planner
        assert (cfg.c_p, cfg.btm, cfg.default_policy.beta, cfg.reduction.statistic, cfg.reduction.q) == (0.3, True, 2.0, "ID", 60)
        assert m.methods[1].baseline == "Greedy" and m.methods[2].name == "sg"

    def test_digest_tracks_content(self):
        a, b = small_manifest(), small_manifest()
        assert a.digest() == b.digest()
        assert small_manifest(tau=0.2).digest() != a.digest()

    def test_yaml_file(self, tmp_path):
        p = tmp_path / "m.yaml"
        p.write_text("graphs:\n  kh: {n: 10, count: 1}\nobjective: {name: robustness, sims: 3}\nseeds: 2\nmethods: [UCT, ERes]\n")
        m = load_manifest(p)
        assert m.seeds == [0, 1] and m.objective.robustness_sims == 3
        p.write_text("graphs: [unclosed\n")
        with pytest.raises(DataError):
            load_manifest(p)

    def test_shipped_manifests_load(self):
        paths = sorted((ROOT / "manifests").rglob("*.yaml"))
        assert paths
        for p in paths:
            load_manifest(p)

    def test_ablation_grid(self):
        for obj in ("efficiency", "robustness"):
            methods = ablation_methods(obj)
            assert len(methods) == 13 and methods[0].name == "UCT"
            assert len({m.name for m in methods}) == 13

    def test_presets(self):
        sg = preset("SG-UCT", "robustness").planner
        assert sg.btm and sg.default_policy.beta == 25.0 and sg.reduction.label == "AECS-40"
        assert preset("SG-UCT_INVDEG-40", "efficiency").planner.reduction.statistic == "ID"
        assert preset("SG-UCT", "efficiency", c_p=0.5).planner.c_p == 0.5


class TestRunExperiment:
    def test_grid_arithmetic(self):
        rep = run_experiment(small_manifest())
        assert len(rep.rows) == 8 and len(rep.aggregates) == 4 and len(rep.summary) == 2
        assert all(r.reward == r.replay_reward for r in rep.rows)
        assert all(r.spent <= r.budget + 1e-9 for r in rep.rows)
        # deterministic baselines are reported without a half-width
        mc = [a for a in rep.aggregates if a.method == "MinCost"]
        assert all(a.half_width is None for a in mc)

    def test_deterministic_across_workers(self):
        m1 = small_manifest(methods=["UCT", "Random"], sims_multiplier=5)
        m2 = small_manifest(methods=["UCT", "Random"], sims_multiplier=5, workers=2)
        a, b = run_experiment(m1), run_experiment(m2)
        assert a.body_json() == b.body_json()
        assert run_experiment(m1).body_json() == a.body_json()

    def test_robustness_rows_replay(self):
        m = small_manifest(objective={"name": "robustness", "sims": 3}, methods=["UCT", "ERes", "Greedy"], sims_multiplier=4)
        rep = run_experiment(m)
        assert all(r.reward == r.replay_reward for r in rep.rows)

    def test_replay_mismatch_aborts(self, monkeypatch):
        real = experiment.replay

        def skewed(*a, **k):
            ep = real(*a, **k)
            ep.reward += 1e-3
            return ep

        monkeypatch.setattr(experiment, "replay", skewed)
        with pytest.raises(ReplayError):
            run_experiment(small_manifest(methods=["MinCost"], seeds=[0]))

    def test_outputs(self, tmp_path):
        rep = run_experiment(small_manifest())
        files = rep.write(tmp_path)
        assert {f.name for f in files} == {"report.json", "runs.csv", "aggregate.csv", "summary.csv"}
        doc = json.loads((tmp_path / "report.json").read_text())
        assert doc["manifest_hash"] == small_manifest().digest() and len(doc["runs"]) == 8
        assert (tmp_path / "runs.csv").read_text().count("\n") == 9

    def test_file_graphs(self, tmp_path):
        m = manifest_from_dict({"graphs": {"files": ["tiny.gml", "metro.txt"]}, "methods": ["MinCost"], "seeds": [0]},
                               base_dir=str(DATA))
        rep = run_experiment(m)
        assert [r.graph for r in rep.rows] == ["tiny", "metro"]


class TestSweeps:
    def test_beta_sweep_rows(self):
        m = small_manifest(seeds=[0], sims_multiplier=4)
        table, rep = beta_sweep(m, [0, 10])
        assert [b for b, _, _ in table] == [0.0, 10.0]
        assert beta_csv(table).count("\n") == 3
        cfg = next(mm for mm in rep.manifest["methods"] if mm["name"] == "beta=0")["planner"]
        assert cfg["default_policy"] == {"kind": "cost_biased", "beta": 0.0}
        assert not cfg["btm"] and cfg["reduction"] is None

    def test_subset_distribution(self):
        m = small_manifest(seeds=[4], sims_multiplier=5)
        a = subset_distribution(m, 3, 40)
        assert len(a["rewards"]) == 3 and len(a["subsets"]) == 3
        assert all(len(s) == 4 for s in a["subsets"])
        assert subset_distribution(m, 3, 40) == a
        with pytest.raises(ConfigError):
            subset_distribution(m, 0, 40)


class TestCli:
    def run(self, capsys, *argv):
        code = cli.main(list(argv))
        out = capsys.readouterr()
        return code, out.out, out.err

    def test_plan_json(self, capsys):
        code, out, _ = self.run(capsys, "plan", "--kh", "10", "--method", "UCT", "--sims-multiplier", "3", "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert len(doc["runs"]) == 1 and doc["runs"][0]["method"] == "UCT"

    def test_plan_baseline_csv(self, capsys):
        code, out, _ = self.run(capsys, "plan", "--graph", str(DATA / "metro.txt"), "--method", "MinCost")
        assert code == 0 and out.startswith("graph,method,seed,reward")

    def test_usage_errors(self, capsys):
        assert self.run(capsys, "plan", "--tau")[0] == 1
        assert self.run(capsys, "frobnicate")[0] == 1
        assert self.run(capsys, "plan", "--kh", "10", "--method", "Nope")[0] == 1
        assert self.run(capsys, "plan", "--kh", "10", "--method", "LDP")[0] == 1

    def test_data_errors(self, capsys, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("nodes:\n0,1\n")
        code, _, err = self.run(capsys, "inspect", str(bad))
        assert code == 2 and "line 2" in err
        assert self.run(capsys, "plan", "--graph", str(tmp_path / "none.gml"), "--method", "MinCost")[0] == 2

    def test_replay_failure_exit(self, capsys, monkeypatch):
        def boom(*a, **k):
            raise ReplayError("forced")

        monkeypatch.setattr(cli, "run_experiment", boom)
        assert self.run(capsys, "plan", "--kh", "10", "--method", "MinCost")[0] == 3

    def test_experiment_writes(self, capsys, tmp_path):
        p = tmp_path / "m.yaml"
        p.write_text(f"graphs:\n  kh: {{n: 10, count: 1}}\nseeds: [0]\nmethods: [MinCost, Random]\noutput: {tmp_path / 'out'}\n")
        assert self.run(capsys, "experiment", str(p))[0] == 0
        assert (tmp_path / "out" / "summary.csv").exists()

    def test_generate_then_inspect(self, capsys, tmp_path):
        assert self.run(capsys, "generate", "--n", "12", "--count", "2", "--out", str(tmp_path))[0] == 0
        files = sorted(tmp_path.glob("*.txt"))
        assert len(files) == 2 and load_graph(files[0]).n == 12
        code, out, _ = self.run(capsys, "inspect", *map(str, files), "--format", "json")
        rows = json.loads(out)
        assert code == 0 and [r["nodes"] for r in rows] == [12, 12] and all(r["connected"] for r in rows)

    def test_beta_sweep_and_subsets(self, capsys):
        code, out, _ = self.run(capsys, "beta-sweep", "--kh", "10", "--betas", "0", "5", "--sims-multiplier", "3")
        assert code == 0 and out.splitlines()[0] == "beta,mean_reward,half_width" and len(out.splitlines()) == 3
        code, out, _ = self.run(capsys, "subset-dist", "--kh", "10", "--subsets", "2", "--sims-multiplier", "3")
        assert code == 0 and len(out.splitlines()) == 3
