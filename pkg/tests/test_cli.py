import json
from pathlib import Path

import pytest

from negkit.cli import main
from negkit.corpus import read_jsonl, read_labeled_jsonl


def _config(tmp_path, atomic, anion, **extra):
    payload = {
        "atomic_path": str(atomic),
        "anion_path": str(anion),
        "split": "train",
        "output_dir": str(tmp_path / "out"),
        "backend": "mock",
        "per_relation_per_label": 2,
        "benchmark_per_relation": 1,
    }
    payload.update(extra)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return path


@pytest.fixture
def config(tmp_path, atomic_toy_path, anion_toy_path):
    return _config(tmp_path, atomic_toy_path, anion_toy_path)


# --- exit codes ---------------------------------------------------------------

def test_usage_errors_exit_1(capsys):
    with pytest.raises(SystemExit) as err:
        main(["definitely-not-a-command"])
    assert err.value.code == 1
    with pytest.raises(SystemExit) as err:
        main(["label"])  # missing required --in
    assert err.value.code == 1
    assert "usage" in capsys.readouterr().err


def test_config_errors_exit_1(tmp_path, capsys):
    assert main(["ingest", "--config", str(tmp_path / "nope.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"no_such_key": 1}), encoding="utf-8")
    assert main(["ingest", "--config", str(bad)]) == 1
    empty = tmp_path / "empty.json"
    empty.write_text("{}", encoding="utf-8")
    assert main(["ingest", "--config", str(empty),
                 "--output-dir", str(tmp_path / "out")]) == 1
    err = capsys.readouterr().err
    assert "ConfigError" in err


def test_data_errors_exit_2(tmp_path, config, capsys):
    missing = tmp_path / "missing.jsonl"
    assert main(["label", "--config", str(config), "--in", str(missing)]) == 2
    mangled = tmp_path / "mangled.jsonl"
    mangled.write_text("{broken json\n", encoding="utf-8")
    assert main(["label", "--config", str(config), "--in", str(mangled)]) == 2
    assert "error" in capsys.readouterr().err


def test_backend_errors_exit_3(tmp_path, atomic_toy_path, anion_toy_path,
                               monkeypatch, capsys):
    config = _config(
        tmp_path, atomic_toy_path, anion_toy_path,
        backend="http", base_url="http://127.0.0.1:9", retry_limit=0,
    )
    assert main(["ingest", "--config", str(config)]) == 0
    monkeypatch.setenv("NEGKIT_API_KEY", "sk-local-test")
    assert main(["judge-build", "--config", str(config)]) == 3
    assert "BackendUnavailable" in capsys.readouterr().err


def test_missing_credential_exits_1(tmp_path, atomic_toy_path, anion_toy_path,
                                    monkeypatch, capsys):
    config = _config(
        tmp_path, atomic_toy_path, anion_toy_path,
        backend="http", base_url="http://127.0.0.1:9", retry_limit=0,
    )
    monkeypatch.delenv("NEGKIT_API_KEY", raising=False)
    assert main(["ingest", "--config", str(config)]) == 0
    assert main(["judge-build", "--config", str(config)]) == 1
    assert "NEGKIT_API_KEY" in capsys.readouterr().err


# --- the toy pipeline, stage by stage ----------------------------------------------

def test_pipeline_stages(tmp_path, config, capsys):
    out = tmp_path / "out"

    assert main(["ingest", "--config", str(config)]) == 0
    atomic = read_jsonl(out / "atomic.orig.jsonl")
    anion = read_jsonl(out / "anion.orig.jsonl")
    assert len(atomic) == 36 and len(anion) == 14
    manifest = json.loads((out / "ingest.manifest.json").read_text())
    assert set(manifest) == {"command", "config_hash", "seeds", "inputs",
                             "outputs", "extra"}
    assert manifest["extra"]["atomic"]["written"] == 36

    assert main(["negate", "--config", str(config)]) == 0
    augmented = read_jsonl(out / "atomic.augmented.jsonl")
    assert len(augmented) == 36 * 4
    assert len(read_jsonl(out / "anion.augmented.jsonl")) == 14 * 2

    assert main(["judge-build", "--config", str(config)]) == 0
    judge_train = read_labeled_jsonl(out / "judge_train.jsonl")
    assert len(judge_train) == 2 * 9 * 3  # per_relation_per_label * relations * labels
    instruct = (out / "judge_train.instruct.jsonl").read_text(encoding="utf-8")
    first = json.loads(instruct.splitlines()[0])
    assert first["output"] in ("Valid", "Invalid", "Ambiguous")
    assert "Answer Valid, Invalid, or Ambiguous" in first["instruction"]

    for name in ("atomic", "anion"):
        assert main(["label", "--config", str(config),
                     "--in", str(out / f"{name}.augmented.jsonl")]) == 0
    labeled_atomic = read_labeled_jsonl(out / "atomic.labeled.jsonl")
    assert len(labeled_atomic) == 36 * 4
    assert all(item.label_source == "judge:mock-oracle" for item in labeled_atomic)

    capsys.readouterr()  # drain pipeline chatter before parsing stats output
    assert main(["stats", "--in", str(out / "atomic.labeled.jsonl"), "--json"]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["total"] == 144
    assert sum(stats["counts"]["ORIG"].values()) == 36

    assert main(["build", "--config", str(config),
                 "--atomic", str(out / "atomic.labeled.jsonl"),
                 "--anion", str(out / "anion.labeled.jsonl")]) == 0
    contrastive = (out / "contrastive.instruct.jsonl").read_text().splitlines()
    baseline = (out / "baseline.instruct.jsonl").read_text().splitlines()
    assert len(baseline) == len(contrastive) > 0
    record = json.loads(contrastive[0])
    assert set(record) == {"instruction", "input", "output"}

    build_manifest = json.loads((out / "build.manifest.json").read_text())
    assert build_manifest["extra"]["baseline_size"] == build_manifest["extra"]["contrastive_size"]


def test_build_ablations(tmp_path, config):
    out = tmp_path / "out"
    assert main(["ingest", "--config", str(config)]) == 0
    assert main(["negate", "--config", str(config)]) == 0
    assert main(["label", "--config", str(config),
                 "--in", str(out / "atomic.augmented.jsonl")]) == 0

    assert main(["build", "--config", str(config), "--no-baseline",
                 "--atomic", str(out / "atomic.labeled.jsonl")]) == 0
    full = (out / "contrastive.instruct.jsonl").read_text().splitlines()
    assert not (out / "baseline.instruct.jsonl").exists()

    assert main(["build", "--config", str(config), "--no-baseline",
                 "--atomic", str(out / "atomic.labeled.jsonl"),
                 "--keep-variants", "ORIG,NEG_IF"]) == 0
    trimmed = (out / "contrastive.instruct.jsonl").read_text().splitlines()
    assert len(trimmed) == len(full) // 3 * 2

    assert main(["build", "--config", str(config), "--no-baseline",
                 "--atomic", str(out / "atomic.labeled.jsonl"),
                 "--subset", "6"]) == 0
    subset = (out / "contrastive.instruct.jsonl").read_text().splitlines()
    assert len(subset) == 6  # two whole groups of three

    assert main(["build", "--config", str(config), "--no-baseline",
                 "--atomic", str(out / "atomic.labeled.jsonl"),
                 "--randomize"]) == 0
    randomized = (out / "contrastive.instruct.jsonl").read_text().splitlines()
    assert len(randomized) == len(full)
    inputs = [json.loads(line)["input"] for line in randomized]
    assert inputs == [json.loads(line)["input"] for line in full]


def test_bench_sample(tmp_path, atomic_toy_path, anion_toy_path):
    config = _config(tmp_path, atomic_toy_path, anion_toy_path, split="test")
    out = tmp_path / "out"
    assert main(["ingest", "--config", str(config)]) == 0
    assert main(["negate", "--config", str(config)]) == 0
    assert main(["bench-sample", "--config", str(config),
                 "--in", str(out / "atomic.augmented.jsonl")]) == 0
    bench = read_jsonl(out / "benchmark.jsonl")
    assert len(bench) == 9 * 4  # one group per relation, four variants each


def test_judge_eval_command(tmp_path, config, capsys):
    out = tmp_path / "out"
    assert main(["ingest", "--config", str(config)]) == 0
    assert main(["judge-build", "--config", str(config)]) == 0
    gold_path = out / "judge_train.jsonl"
    gold = read_labeled_jsonl(gold_path)
    pred_path = tmp_path / "verdicts.jsonl"
    with open(pred_path, "w", encoding="utf-8") as fh:
        for item in gold:
            fh.write(json.dumps({"triple_id": item.triple.id,
                                 "raw_output": f"[{item.label.value}]"}) + "\n")
    report_path = tmp_path / "judge_report.json"
    assert main(["judge-eval", "--gold", str(gold_path), "--pred", str(pred_path),
                 "--out", str(report_path)]) == 0
    report = json.loads(report_path.read_text())
    assert report["headline"]["accuracy"] == 100.0
    assert report["n"] == len(gold)


def test_eval_and_significance_commands(tmp_path, capsys):
    gold_path = tmp_path / "rte.jsonl"
    rows = [
        {"instance_id": f"i{k}", "premise": f"p{k}", "hypothesis": f"h{k}",
         "gold": "entailment" if k % 2 else "not_entailment"}
        for k in range(8)
    ]
    gold_path.write_text("\n".join(json.dumps(r) for r in rows) + "\n",
                         encoding="utf-8")

    perfect = tmp_path / "a.jsonl"
    perfect.write_text("\n".join(
        json.dumps({"instance_id": r["instance_id"], "prediction": r["gold"]})
        for r in rows) + "\n", encoding="utf-8")
    constant = tmp_path / "b.jsonl"
    constant.write_text("\n".join(
        json.dumps({"instance_id": r["instance_id"], "prediction": "entailment"})
        for r in rows) + "\n", encoding="utf-8")

    out_path = tmp_path / "report.json"
    assert main(["eval", "--task", "rte", "--gold", str(gold_path),
                 "--pred", str(perfect), "--baseline-pred", str(constant),
                 "--out", str(out_path)]) == 0
    report = json.loads(out_path.read_text())
    assert report["headline"]["accuracy"] == 100.0
    # 50% -> 100% is a +100% relative change
    assert report["delta"]["accuracy"] == pytest.approx(100.0)

    sig_path = tmp_path / "sig.json"
    assert main(["significance", "--task", "rte", "--gold", str(gold_path),
                 "--pred-a", str(perfect), "--pred-b", str(constant),
                 "--out", str(sig_path)]) == 0
    sig = json.loads(sig_path.read_text())
    assert sig["b"] == 4 and sig["c"] == 0
    assert sig["method"] == "exact"
    assert 0.0 <= sig["p_value"] <= 1.0


def test_manifests_have_no_timestamps(tmp_path, config):
    out = tmp_path / "out"
    assert main(["ingest", "--config", str(config)]) == 0
    manifest = json.loads((out / "ingest.manifest.json").read_text())
    flattened = json.dumps(manifest)
    assert "20" not in json.dumps(list(manifest))  # no date-bearing keys
    for path_str in list(manifest["inputs"]) + list(manifest["outputs"]):
        assert "/" not in path_str  # basenames only, keeps runs relocatable
