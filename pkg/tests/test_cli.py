import csv
import json

import pytest

from painpipe.cli import main
from painpipe.manifest import MANIFEST_COLUMNS


@pytest.fixture(scope="module")
def cli_workspace(tmp_path_factory, tiny224_arch_file, tiny224_weights_file):
    """Dataset + config shared by the CLI flow tests."""
    root = tmp_path_factory.mktemp("cli")
    assert main(["gen-synthetic", "--out", str(root / "data"),
                 "--subjects", "6", "--frames", "5", "--seed", "3"]) == 0
    config = {
        "architecture": str(tiny224_arch_file),
        "tap": {"layer": "Full 3", "phase": "PostReLU"},
        "selector": {"method": "su", "n": 5},
        "classifier": {"kind": "nb"},
        "split": {"test_fraction": 0.5, "seed": 2},
    }
    (root / "config.json").write_text(json.dumps(config))
    config["fusion"] = {"strain_n": 5, "deep_n": 10}
    (root / "config_fused.json").write_text(json.dumps(config))
    return {
        "root": root,
        "manifest": str(root / "data" / "manifest.csv"),
        "config": str(root / "config.json"),
        "config_fused": str(root / "config_fused.json"),
        "weights": str(tiny224_weights_file),
    }


def test_usage_error_exits_one():
    assert main(["extract"]) == 1


def test_unknown_command_exits_one():
    assert main(["frobnicate"]) == 1


def test_missing_manifest_exits_two(cli_workspace, tmp_path):
    assert main(["run", "--manifest", str(tmp_path / "nope.csv"),
                 "--config", cli_workspace["config"],
                 "--weights", cli_workspace["weights"],
                 "--out", str(tmp_path / "out")]) == 2


def test_bad_config_key_exits_two(cli_workspace, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"selector": {"methd": "su"}}))
    assert main(["run", "--manifest", cli_workspace["manifest"],
                 "--config", str(bad),
                 "--weights", cli_workspace["weights"],
                 "--out", str(tmp_path / "out")]) == 2


def test_full_stage_flow(cli_workspace, tmp_path):
    ws = cli_workspace
    feats = tmp_path / "feats"
    assert main(["extract", "--manifest", ws["manifest"], "--config", ws["config"],
                 "--weights", ws["weights"], "--out", str(feats)]) == 0
    deep_csv = next(feats.glob("deep_*.csv"))

    strain_csv = feats / "strain.csv"
    assert main(["strain", "--manifest", ws["manifest"], "--config", ws["config"],
                 "--out", str(strain_csv)]) == 0

    fused_csv = feats / "fused.csv"
    assert main(["fuse", "--deep", str(deep_csv), "--strain", str(strain_csv),
                 "--config", ws["config_fused"], "--out", str(fused_csv)]) == 0
    with open(fused_csv) as f:
        header = f.readline().strip().split(",")
    assert len(header) == 4 + 15  # reserved columns + strain(5) + deep(10)

    ranking_csv = feats / "ranking.csv"
    reduced_csv = feats / "reduced.csv"
    assert main(["select", "--matrix", str(deep_csv), "--config", ws["config"],
                 "--out", str(ranking_csv), "--reduced", str(reduced_csv)]) == 0
    with open(ranking_csv) as f:
        rows = list(csv.DictReader(f))
    assert rows[0]["method"] == "su"
    assert len(rows) == 32

    model = feats / "model.ppmd"
    assert main(["train", "--matrix", str(reduced_csv), "--config", ws["config"],
                 "--out", str(model)]) == 0

    scores = feats / "scores.csv"
    metrics = feats / "metrics.json"
    assert main(["evaluate", "--matrix", str(reduced_csv), "--model", str(model),
                 "--out", str(scores), "--metrics", str(metrics)]) == 0
    loaded = json.loads(metrics.read_text())
    assert 0.0 <= loaded["accuracy"] <= 1.0

    comparison = feats / "cmp.json"
    assert main(["compare", "--a", str(scores), "--b", str(scores),
                 "--out", str(comparison)]) == 0
    result = json.loads(comparison.read_text())
    assert result["p_value"] == 1.0 and result["significant"] is False


def test_run_and_report_deterministic(cli_workspace, tmp_path):
    ws = cli_workspace
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert main(["run", "--manifest", ws["manifest"], "--config", ws["config"],
                     "--weights", ws["weights"], "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        report["provenance"].pop("timestamp")
        outs.append(json.dumps(report, sort_keys=True))
    assert outs[0] == outs[1]

    rendered = tmp_path / "table.txt"
    assert main(["report", "--report", str(tmp_path / "r1" / "report.json"),
                 "--out", str(rendered)]) == 0
    text = rendered.read_text()
    assert "Accuracy" in text and "SU(5)" in text


def test_seed_flag_overrides_config(cli_workspace, tmp_path):
    ws = cli_workspace
    reports = []
    for seed in ("2", "5"):
        out = tmp_path / f"seed{seed}"
        assert main(["run", "--manifest", ws["manifest"], "--config", ws["config"],
                     "--weights", ws["weights"], "--out", str(out),
                     "--seed", seed]) == 0
        reports.append(json.loads((out / "report.json").read_text()))
    assert reports[0]["provenance"]["seed"] == 2
    assert reports[1]["provenance"]["seed"] == 5
    assert reports[0]["rows"][0]["test_subjects"] != reports[1]["rows"][0]["test_subjects"]


def test_compare_mismatched_instances_exits_two(cli_workspace, tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    a.write_text("instance_id,label,score,prediction\nx,0,0.1,0\ny,1,0.9,1\n")
    b.write_text("instance_id,label,score,prediction\nx,0,0.1,0\nz,1,0.9,1\n")
    assert main(["compare", "--a", str(a), "--b", str(b)]) == 2


def test_empty_manifest_extract_exit_zero(cli_workspace, tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text(",".join(MANIFEST_COLUMNS) + "\n")
    assert main(["extract", "--manifest", str(empty), "--config", cli_workspace["config"],
                 "--weights", cli_workspace["weights"],
                 "--out", str(tmp_path / "feats")]) == 0
