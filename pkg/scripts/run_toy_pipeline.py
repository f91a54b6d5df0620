#!/usr/bin/env python3
"""Drive the bundled toy corpus through every pipeline stage.

Everything runs against the offline mock backend, so no credentials or
network access are needed; a full run takes about a second. Artifacts land
under --out, stage by stage:

    ingest -> *.orig.jsonl          canonical triples per source corpus
    negate -> *.augmented.jsonl     originals plus their negated variants
    judge-build -> judge_train.*    three-way judge supervision set
    label  -> *.labeled.jsonl       validity labels from the mock judge
    build  -> contrastive/baseline  instruction-tuning exports
    build --randomize               random-label control corpus
    bench-sample -> benchmark.jsonl human-annotation benchmark (test split)
"""

import argparse
import json
import sys
from pathlib import Path

import negkit
from negkit.cli import main as negkit_main

TOY_DIR = Path(negkit.__file__).parent / "assets" / "toy"


def write_config(path: Path, **overrides) -> Path:
    payload = {
        "atomic_path": str(TOY_DIR / "atomic_toy.csv"),
        "anion_path": str(TOY_DIR / "anion_toy.csv"),
        "backend": "mock",
        "per_relation_per_label": 2,
        "benchmark_per_relation": 1,
    }
    payload.update(overrides)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
    return path


def run(step: list[str]) -> None:
    print(f"$ negkit {' '.join(step)}")
    code = negkit_main(step)
    if code != 0:
        sys.exit(code)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="toy_out", help="artifact directory")
    args = parser.parse_args()

    out = Path(args.out).resolve()
    out.mkdir(parents=True, exist_ok=True)
    train_cfg = write_config(out / "config.train.json",
                             split="train", output_dir=str(out / "train"))
    random_cfg = write_config(out / "config.random.json",
                              split="train", output_dir=str(out / "random"))
    test_cfg = write_config(out / "config.test.json",
                            split="test", output_dir=str(out / "test"))

    train, test = out / "train", out / "test"
    run(["ingest", "--config", str(train_cfg)])
    run(["negate", "--config", str(train_cfg)])
    run(["judge-build", "--config", str(train_cfg)])
    run(["label", "--config", str(train_cfg), "--in", str(train / "atomic.augmented.jsonl")])
    run(["label", "--config", str(train_cfg), "--in", str(train / "anion.augmented.jsonl")])
    run(["stats", "--in", str(train / "atomic.labeled.jsonl"),
         "--out", str(train / "atomic.stats.json")])
    run(["build", "--config", str(train_cfg),
         "--atomic", str(train / "atomic.labeled.jsonl"),
         "--anion", str(train / "anion.labeled.jsonl")])
    run(["build", "--config", str(random_cfg), "--randomize",
         "--atomic", str(train / "atomic.labeled.jsonl"),
         "--anion", str(train / "anion.labeled.jsonl")])
    run(["ingest", "--config", str(test_cfg)])
    run(["negate", "--config", str(test_cfg)])
    run(["bench-sample", "--config", str(test_cfg),
         "--in", str(test / "atomic.augmented.jsonl")])

    print("\nartifacts:")
    for path in sorted(out.rglob("*.jsonl")):
        lines = sum(1 for _ in open(path, encoding="utf-8"))
        print(f"  {path.relative_to(out)}  ({lines} rows)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
