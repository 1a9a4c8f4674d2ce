import json
import sys

import pytest

from rulefuzz import cli, sim
from rulefuzz.store import SeedStore


def run(argv, capsys):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture()
def sim_store(tmp_path):
    root = tmp_path / "seeds"
    SeedStore(root).ingest(sim.seed_catalog())
    return str(root)


def record_line(api="m.op", fill=1.0, rid=None):
    data = {
        "api": api,
        "params": [
            {"name": "x", "pos": 0, "kind": "tensor", "fill": fill,
             "shape": [2, 2], "dtype": "float32"}
        ],
        "source": "repos",
    }
    if rid:
        data["id"] = rid
    return json.dumps(data)


class TestIngest:
    def test_files_then_dedup(self, tmp_path, capsys):
        f = tmp_path / "traces.jsonl"
        f.write_text(record_line() + "\n" + record_line(fill=2.0) + "\n")
        code, out, _ = run(["ingest", str(f), "--store", str(tmp_path / "s")], capsys)
        assert code == 0
        assert "ingested 2 records (0 duplicate)" in out
        code, out, _ = run(["ingest", str(f), "--store", str(tmp_path / "s")], capsys)
        assert code == 0
        assert "ingested 0 records (2 duplicate)" in out

    def test_bad_line_reports_location(self, tmp_path, capsys):
        f = tmp_path / "traces.jsonl"
        f.write_text(record_line() + "\n{\"api\": 42}\n")
        code, _, err = run(["ingest", str(f), "--store", str(tmp_path / "s")], capsys)
        assert code == 1
        assert f"{f}:2" in err

    def test_sim_catalog(self, tmp_path, capsys):
        code, out, _ = run(
            ["ingest", "--sim-catalog", "--store", str(tmp_path / "s")], capsys)
        assert code == 0
        assert "12 added" in out
        assert len(SeedStore(tmp_path / "s").list_apis()) == 12

    def test_nothing_to_ingest(self, tmp_path, capsys):
        code, _, err = run(["ingest", "--store", str(tmp_path / "s")], capsys)
        assert code == 1
        assert "nothing to ingest" in err


class TestFuzz:
    def test_campaign_with_report_file(self, sim_store, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        code, out, _ = run(
            ["fuzz", "--store", sim_store, "--set", "num_iter=25",
             "--report", str(report_path)],
            capsys,
        )
        assert code == 2
        assert "unique findings" in out
        # rule table lists every rule
        for rid in ("R1", "R5", "R9", "R14"):
            assert rid in out
        data = json.loads(report_path.read_text())
        assert set(data) == {"config", "findings", "per_rule_counts",
                             "per_api_stats", "wall_time_s", "cases_executed"}
        assert data["findings"]

    def test_no_findings_exits_zero(self, sim_store, capsys):
        code, out, _ = run(
            ["fuzz", "--store", sim_store, "--set", "num_iter=2", "--set", "rules=[]"],
            capsys,
        )
        assert code == 0
        assert "0 unique findings" in out

    def test_bad_override_is_init_failure(self, sim_store, capsys):
        code, _, err = run(["fuzz", "--store", sim_store, "--set", "nonsense"], capsys)
        assert code == 1
        assert "bad config" in err

    def test_unknown_config_key_is_init_failure(self, sim_store, capsys):
        code, _, err = run(["fuzz", "--store", sim_store, "--set", "bogus=1"], capsys)
        assert code == 1

    def test_missing_store_is_init_failure(self, tmp_path, capsys):
        code, _, err = run(["fuzz", "--store", str(tmp_path / "nowhere")], capsys)
        assert code == 1
        assert "error" in err

    def test_config_file(self, sim_store, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"store_dir": sim_store, "num_iter": 2, "rules": []}))
        code, out, _ = run(["fuzz", "--config", str(cfg)], capsys)
        assert code == 0


class TestWorkdirEnv:
    def _fuzz_args(self, extra=()):
        return cli.build_parser().parse_args(["fuzz", "--store", "s", *extra])

    def test_env_supplies_default(self, monkeypatch):
        monkeypatch.setenv(cli.WORKDIR_ENV, "/tmp/orion-wd")
        config = cli._load_config(self._fuzz_args())
        assert config.work_dir == "/tmp/orion-wd"

    def test_explicit_override_wins(self, monkeypatch):
        monkeypatch.setenv(cli.WORKDIR_ENV, "/tmp/orion-wd")
        config = cli._load_config(self._fuzz_args(["--set", 'work_dir="elsewhere"']))
        assert config.work_dir == "elsewhere"

    def test_unset_env_leaves_default(self, monkeypatch):
        monkeypatch.delenv(cli.WORKDIR_ENV, raising=False)
        config = cli._load_config(self._fuzz_args())
        assert config.work_dir == "work"


class TestRules:
    def test_full_catalog(self, capsys):
        code, out, _ = run(["rules"], capsys)
        assert code == 0
        assert len(json.loads(out)) == 14

    def test_guided_category(self, capsys):
        code, out, _ = run(["rules", "--category", "guided"], capsys)
        entries = json.loads(out)
        assert [e["id"] for e in entries] == ["R1", "R2", "R3", "R4", "R5"]

    def test_corner_category(self, capsys):
        code, out, _ = run(["rules", "--category", "corner"], capsys)
        assert len(json.loads(out)) == 9


class TestReplay:
    def test_reproduces(self, sim_store, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        run(["fuzz", "--store", sim_store, "--set", "num_iter=25",
             "--report", str(report_path)], capsys)
        data = json.loads(report_path.read_text())
        case_id = data["findings"][0]["case"]["case_id"]
        code, out, _ = run(["replay", "--report", str(report_path), case_id], capsys)
        assert code == 0
        assert "reproduced" in out

    def test_unknown_case(self, sim_store, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        run(["fuzz", "--store", sim_store, "--set", "num_iter=2",
             "--set", "rules=[]", "--report", str(report_path)], capsys)
        code, _, err = run(["replay", "--report", str(report_path), "ffff0000"], capsys)
        assert code == 1
        assert "not in report" in err


REPORTS_FIXTURE = [
    {"id": "gh-1", "title": "heap buffer overflow in pad", "body": "crash on big pads"},
    {"id": "gh-2", "title": "wrong results on reduce", "body": "incorrect output values"},
    {"id": "gh-3", "title": "crash on windows only", "body": "x", "platform_tags": ["windows"]},
    {"id": "gh-4", "title": "cmake failure", "body": "x", "labels": ["build"]},
    {"id": "gh-5", "title": "broken with torchvision", "body": "x", "labels": ["torchvision"]},
    {"id": "gh-6", "title": "hang, no repro", "body": "x", "labels": ["no-input"]},
]


class TestClassifyReports:
    def test_filter_and_categorize(self, tmp_path, capsys):
        f = tmp_path / "reports.json"
        f.write_text(json.dumps(REPORTS_FIXTURE))
        code, out, _ = run(["classify-reports", str(f)], capsys)
        assert code == 0
        data = json.loads(out)
        assert data["kept"] == ["gh-1", "gh-2"]
        assert data["dropped"] == {
            "platform": ["gh-3"],
            "build-config": ["gh-4"],
            "external-library": ["gh-5"],
            "no-input": ["gh-6"],
        }
        assert "memory" in data["categories"]["gh-1"]
        assert "logical" in data["categories"]["gh-2"]

    def test_rule_provenance_with_annotations(self, tmp_path, capsys):
        f = tmp_path / "reports.json"
        f.write_text(json.dumps(REPORTS_FIXTURE[:2]))
        ann = tmp_path / "annotations.json"
        ann.write_text(json.dumps({"gh-1": "shape-mismatch", "gh-2": "value-corner"}))
        code, out, _ = run(
            ["classify-reports", str(f), "--annotations", str(ann)], capsys)
        assert code == 0
        data = json.loads(out)
        assert "rule_provenance" in data


class TestEnumerateApis:
    def test_missing_hooks_package(self, capsys, monkeypatch):
        monkeypatch.setitem(sys.modules, "apihooks", None)
        code, _, err = run(["enumerate-apis", "mockdl"], capsys)
        assert code == 1
        assert "apihooks" in err
