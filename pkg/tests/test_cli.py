"""Command-line behavior: config loading, overrides, exit codes, reruns."""
import json

import pytest
import yaml

from ulbench import cli
from ulbench.errors import ConfigError

BLOBS = {"n_train": 300, "n_test": 100, "d": 5, "seed": 2}
STUDY_CFG = {
    "dataset": BLOBS,
    "epochs": 800,
    "batch_size": 100,
    "distributions": ["uniform-random"],
    "fractions": [0.2],
    "seeds": [0],
}
TRADEOFF_CFG = {
    "dataset": BLOBS,
    "train": {"method": "fisher", "epochs": 3000, "batch_size": 300},
    "sigmas": [0.0, 0.1],
    "taus": [1],
    "fractions": [0.1],
    "seeds": [0],
}
PIPELINE_CFG = {
    "dataset": BLOBS,
    "train": {"method": "fisher", "epochs": 3000, "batch_size": 300},
    "c": 1.0,
    "stream": [{"fraction": 0.05}, {"fraction": 0.05}],
    "audit_threshold": 90.0,
}


def write_cfg(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


class TestLoadConfigFile:
    def test_none_is_empty(self):
        assert cli.load_config_file(None) == {}

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="cannot read"):
            cli.load_config_file("/no/such/config.yaml")

    def test_empty_file(self, tmp_path):
        p = tmp_path / "empty.yaml"
        p.write_text("")
        assert cli.load_config_file(str(p)) == {}

    def test_non_mapping_rejected(self, tmp_path):
        p = tmp_path / "list.yaml"
        p.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError, match="mapping"):
            cli.load_config_file(str(p))

    def test_invalid_yaml(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text("a: [unclosed\n")
        with pytest.raises(ConfigError, match="not valid YAML"):
            cli.load_config_file(str(p))

    def test_json_is_yaml(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text('{"a": {"b": 1}}')
        assert cli.load_config_file(str(p)) == {"a": {"b": 1}}


class TestApplyOverrides:
    def test_dotted_path_creates_nesting(self):
        data = {}
        cli.apply_overrides(data, ["train.method=fisher", "train.sigma=0.5"])
        assert data == {"train": {"method": "fisher", "sigma": 0.5}}

    def test_values_parse_as_yaml(self):
        data = {}
        cli.apply_overrides(data, [
            "a=3", "b=2.5", "c=true", "d=[1, 2]", "e=null", "f=text",
        ])
        assert data == {
            "a": 3, "b": 2.5, "c": True, "d": [1, 2], "e": None, "f": "text",
        }

    def test_replaces_existing(self):
        data = {"fractions": [0.2]}
        cli.apply_overrides(data, ["fractions=[0.4]"])
        assert data == {"fractions": [0.4]}

    def test_scalar_on_path_replaced_by_dict(self):
        data = {"train": "oops"}
        cli.apply_overrides(data, ["train.method=fisher"])
        assert data == {"train": {"method": "fisher"}}

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="key.path=value"):
            cli.apply_overrides({}, ["no-equals-here"])

    def test_empty_key(self):
        with pytest.raises(ConfigError, match="empty key"):
            cli.apply_overrides({}, ["=5"])


class TestExitCodes:
    def test_study_to_stdout(self, tmp_path, capsys):
        code = cli.main(["deletion-study", "--config", write_cfg(tmp_path, STUDY_CFG)])
        assert code == 0
        out = capsys.readouterr().out
        header, row = out.strip().splitlines()
        assert header.startswith("dataset,del_dist,del_fraction,m,seed")
        assert row.split(",")[3] == "60"

    def test_duplicate_seeds_exit_2(self, tmp_path, capsys):
        cfg = dict(STUDY_CFG, seeds=[1, 1])
        code = cli.main(["deletion-study", "--config", write_cfg(tmp_path, cfg)])
        assert code == 2
        assert "seeds" in capsys.readouterr().err

    def test_bad_config_path_exit_2(self, capsys):
        assert cli.main(["deletion-study", "--config", "/missing.yaml"]) == 2
        assert "cannot read" in capsys.readouterr().err

    def test_bad_override_exit_2(self, tmp_path):
        code = cli.main([
            "deletion-study", "--config", write_cfg(tmp_path, STUDY_CFG),
            "--set", "oops",
        ])
        assert code == 2

    def test_convergence_failure_exit_3(self, tmp_path, capsys):
        cfg = {
            "dataset": BLOBS,
            "train": {"method": "fisher", "epochs": 2, "batch_size": 300},
            "out": str(tmp_path / "w.npz"),
        }
        code = cli.main(["train", "--config", write_cfg(tmp_path, cfg)])
        assert code == 3
        assert "error:" in capsys.readouterr().err

    def test_audit_requires_threshold(self, tmp_path, capsys):
        cfg = {k: v for k, v in PIPELINE_CFG.items() if k != "audit_threshold"}
        code = cli.main(["audit", "--config", write_cfg(tmp_path, cfg)])
        assert code == 2
        assert "threshold" in capsys.readouterr().err


class TestOverridePrecedence:
    def test_set_beats_config_file(self, tmp_path, capsys):
        code = cli.main([
            "deletion-study", "--config", write_cfg(tmp_path, STUDY_CFG),
            "--set", "fractions=[0.4]",
        ])
        assert code == 0
        row = capsys.readouterr().out.strip().splitlines()[1]
        assert row.split(",")[3] == "120"

    def test_flag_beats_set(self, tmp_path, capsys):
        code = cli.main([
            "tradeoff", "--config", write_cfg(tmp_path, TRADEOFF_CFG),
            "--set", "train.method=fisher",
            "--method", "influence",
            "--set", "sigmas=[0.0]",
        ])
        assert code == 0
        rows = capsys.readouterr().out.strip().splitlines()[1:]
        assert all(row.split(",")[1] == "influence" for row in rows)


def strip_timing(csv_text: str) -> list[str]:
    lines = csv_text.strip().splitlines()
    return [lines[0]] + [",".join(line.split(",")[:-3]) for line in lines[1:]]


def events_without_timestamps(jsonl_text: str) -> list[dict]:
    events = []
    for line in jsonl_text.strip().splitlines():
        record = json.loads(line)
        record.pop("timestamp")
        events.append(record)
    return events


class TestRerunDeterminism:
    def test_tradeoff_rerun_identical_minus_timing(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, TRADEOFF_CFG)
        out_a = tmp_path / "a.csv"
        out_b = tmp_path / "b.csv"
        assert cli.main(["tradeoff", "--config", cfg, "--out", str(out_a)]) == 0
        assert cli.main(["tradeoff", "--config", cfg, "--out", str(out_b)]) == 0
        assert "wrote" in capsys.readouterr().out
        text_a, text_b = out_a.read_text(), out_b.read_text()
        assert len(text_a.strip().splitlines()) == 3
        assert strip_timing(text_a) == strip_timing(text_b)

    def test_pipeline_rerun_identical_minus_timestamps(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, PIPELINE_CFG)
        out_a = tmp_path / "a.jsonl"
        out_b = tmp_path / "b.jsonl"
        assert cli.main(["pipeline", "--config", cfg, "--out", str(out_a)]) == 0
        audit_a = capsys.readouterr().out.strip().splitlines()[-1]
        assert cli.main(["pipeline", "--config", cfg, "--out", str(out_b)]) == 0
        audit_b = capsys.readouterr().out.strip().splitlines()[-1]

        events_a = events_without_timestamps(out_a.read_text())
        events_b = events_without_timestamps(out_b.read_text())
        assert events_a == events_b
        assert [e["event"] for e in events_a] == ["train", "unlearn", "unlearn", "audit"]
        assert json.loads(audit_a) == json.loads(audit_b)

    def test_audit_command_reports_measured_disparity(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, PIPELINE_CFG)
        assert cli.main(["audit", "--config", cfg]) == 0
        body = json.loads(capsys.readouterr().out)
        assert set(body) == {"pass", "measured_acc_dis"}
        assert body["measured_acc_dis"] >= 0.0
