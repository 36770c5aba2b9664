import json
import os
from dataclasses import replace

import pytest

from ssmt.builder import build_tree
from ssmt.cli import main as cli_main
from ssmt.errors import ConfigInvalid
from ssmt.excursions import LevelTree
from ssmt.harness import (
    ExperimentConfig,
    canonical_bv_quadruplet,
    canonical_config,
    export_tree,
    import_tree_nodes,
    run,
)
from ssmt.levy import BV


def small_config(**kw):
    defaults = dict(n_trees=120, n_ks=250, n_paths=4000, structural_seeds=10)
    defaults.update(kw)
    return replace(canonical_config(), **defaults)


class TestConfig:
    def test_round_trip(self):
        cfg = canonical_config()
        again = ExperimentConfig.from_json(cfg.to_json())
        assert again == cfg
        assert again.config_hash() == cfg.config_hash()

    def test_unknown_suite_rejected(self):
        with pytest.raises(ConfigInvalid):
            replace(canonical_config(), suites=("nope",)).validate()

    def test_bad_mode_rejected(self):
        with pytest.raises(ConfigInvalid):
            replace(canonical_config(), mode="exact").validate()

    def test_spine_minimum(self):
        with pytest.raises(ConfigInvalid):
            replace(canonical_config(), suites=("spine",), n_ks=10).validate()

    def test_env_overrides(self, monkeypatch):
        monkeypatch.setenv("SSMT_N", "77")
        monkeypatch.setenv("SSMT_DT", "0.01")
        cfg = ExperimentConfig.from_json(canonical_config().to_json())
        assert cfg.n_trees == 77 and cfg.dt == 0.01

    def test_shipped_config_matches_code(self):
        root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
        with open(os.path.join(root, "configs", "canonical.json")) as fp:
            shipped = json.load(fp)
        assert ExperimentConfig.from_json(shipped) == canonical_config()


class TestRun:
    def test_empty_suite_list(self):
        report = run(replace(canonical_config(), suites=()))
        assert report.checks == [] and report.all_pass

    def test_structural_suite_passes(self):
        report = run(small_config(suites=("excursion_structural",)))
        assert report.all_pass
        assert len(report.checks) == 8

    def test_reports_are_reproducible(self, tmp_path):
        cfg = small_config(suites=("excursion_structural",))
        r1 = run(replace(cfg, out_dir=str(tmp_path / "a")))
        r2 = run(replace(cfg, out_dir=str(tmp_path / "b")))
        body1 = json.dumps(r1.to_json(with_timestamp=False), sort_keys=True)
        body2 = json.dumps(r2.to_json(with_timestamp=False), sort_keys=True)
        # timings differ between runs; everything else must be identical
        o1, o2 = json.loads(body1), json.loads(body2)
        o1.pop("timings"), o2.pop("timings")
        assert o1 == o2
        # the export files are bitwise reproducible
        for name in ("tree.json", "decorations.csv", "atoms.json"):
            a = tmp_path / "a" / "exports" / name
            b = tmp_path / "b" / "exports" / name
            assert a.read_bytes() == b.read_bytes()

    def test_suite_error_becomes_failed_check(self):
        # a quadruplet without omega cannot run convergence diagnostics
        from ssmt.builder import CharacteristicQuadruplet
        from ssmt.levy import LevyCharacteristics
        quad = CharacteristicQuadruplet(
            base=LevyCharacteristics(1.0, -1.0, (), 0.4), events=(), alpha=1.0)
        cfg = replace(small_config(suites=("convergence",)), quadruplet=quad)
        report = run(cfg)
        assert not report.all_pass
        assert report.checks[0].name == "convergence.error"


class TestExports:
    def test_tree_round_trip(self, tmp_path):
        tree = build_tree(canonical_bv_quadruplet(), 1.0, 1e-3, BV, None, seed=4)
        paths = export_tree(tree, str(tmp_path), resolution=32, level=0.5)
        nodes = import_tree_nodes(paths["tree"])
        assert set(nodes) == set(tree.nodes)
        for label, rec in nodes.items():
            assert rec["birth_size"] == pytest.approx(tree.nodes[label].birth_size)

    def test_overlay_marks_first_hits(self, tmp_path):
        tree = build_tree(canonical_bv_quadruplet(), 1.0, 1e-3, BV, None, seed=4)
        paths = export_tree(tree, str(tmp_path), level=0.5, seed=1)
        with open(paths["overlay"]) as fp:
            overlay = json.load(fp)
        from ssmt.levels import hitting_line
        hl = hitting_line(tree, 0.5)
        assert len(overlay["points"]) == hl.count
        assert all(pt["kind"] == "first_hit" for pt in overlay["points"])
        if overlay["spine"] is not None:
            assert overlay["spine"]["chain"][0] == []

    def test_decorations_csv(self, tmp_path):
        tree = build_tree(canonical_bv_quadruplet(), 1.0, 1e-3, BV, None, seed=4)
        paths = export_tree(tree, str(tmp_path), resolution=16)
        rows = open(paths["decorations"]).read().strip().splitlines()
        assert rows[0] == "label,age,value"
        assert len(rows) == 1 + 16 * len(tree.nodes)

    def test_spine_csv_export(self, tmp_path):
        # seed 0 reaches level 0.5 with this quadruplet
        tree = build_tree(canonical_bv_quadruplet(), 1.0, 1e-3, BV, None, seed=0)
        paths = export_tree(tree, str(tmp_path), level=0.5, seed=1)
        rows = open(paths["spine"]).read().strip().splitlines()
        assert rows[0] == "arclength,value"
        last = rows[-1].split(",")
        assert float(last[1]) == pytest.approx(0.5, rel=1e-6)

    def test_measure_csv_export(self, tmp_path):
        from ssmt.harness import export_measure_csv
        from ssmt.levels import level_local_time
        tree = build_tree(canonical_bv_quadruplet(), 1.0, 1e-3, BV, None, seed=4)
        measure = level_local_time(tree, 0.5)
        path = tmp_path / "measure.csv"
        export_measure_csv(measure, str(path))
        rows = path.read_text().strip().splitlines()
        assert rows[0] == "label,age,mass"
        total = sum(float(r.split(",")[2]) for r in rows[1:])
        assert total == pytest.approx(measure.total)


class TestCli:
    def test_run_subset(self, tmp_path, capsys):
        cfg = small_config(suites=("excursion_structural",))
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg.to_json()))
        rc = cli_main(["run", "--config", str(cfg_path), "--out",
                       str(tmp_path / "out")])
        assert rc == 0
        assert (tmp_path / "out" / "report.json").exists()
        out = capsys.readouterr().out
        assert "ALL PASS" in out

    def test_report_reprint(self, tmp_path, capsys):
        cfg = small_config(suites=("excursion_structural",),
                           out_dir=str(tmp_path / "out"))
        run(cfg)
        rc = cli_main(["report", "--dir", str(tmp_path / "out")])
        assert rc == 0

    def test_tree_simulate_and_export(self, tmp_path):
        cfg = small_config(mode=BV, dt=None,
                           quadruplet=canonical_bv_quadruplet(), seed=4)
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg.to_json()))
        out = tmp_path / "tree.json"
        rc = cli_main(["tree", "simulate", "--config", str(cfg_path),
                       "--out", str(out), "--resolution", "16"])
        assert rc == 0
        obj = json.loads(out.read_text())
        assert obj["nodes"]
        rc = cli_main(["tree", "export", "--config", str(cfg_path),
                       "--out-dir", str(tmp_path / "exp"), "--level", "0.5"])
        assert rc == 0
        assert (tmp_path / "exp" / "overlay.json").exists()

    def test_exc_decompose_reconstruct_round_trip(self, tmp_path):
        cfg = small_config(mode=BV, dt=None,
                           quadruplet=canonical_bv_quadruplet(), seed=4)
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg.to_json()))
        rc = cli_main(["exc", "decompose", "--config", str(cfg_path),
                       "--out-dir", str(tmp_path)])
        assert rc == 0
        rc = cli_main(["exc", "reconstruct", "--atoms",
                       str(tmp_path / "atoms.json"),
                       "--out", str(tmp_path / "rebuilt.json")])
        assert rc == 0
        direct = LevelTree.from_json(
            json.loads((tmp_path / "level_tree.json").read_text()))
        rebuilt = LevelTree.from_json(
            json.loads((tmp_path / "rebuilt.json").read_text()))
        assert rebuilt.signature() == direct.signature()

    def test_levy_potential_csv(self, tmp_path):
        out = tmp_path / "v.csv"
        rc = cli_main(["levy", "potential", "--method", "closed_form",
                       "--lo", "-2", "--hi", "2", "--n-grid", "11",
                       "--out", str(out)])
        # canonical projection has jumps: closed form must fail cleanly
        assert rc != 0 or out.exists()

    def test_levy_potential_fourier(self, tmp_path):
        out = tmp_path / "v.csv"
        rc = cli_main(["levy", "potential", "--lo", "-2", "--hi", "2",
                       "--n-grid", "21", "--out", str(out)])
        assert rc == 0
        rows = out.read_text().strip().splitlines()
        assert rows[0] == "y,v" and len(rows) == 22
