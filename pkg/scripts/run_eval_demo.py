#!/usr/bin/env python3
"""Score two mock systems on a synthetic entailment set, with significance.

Shows the inference-to-report path without any real model: predictions come
from the offline chat backend (system A answers from the gold key, system B
answers by prompt hash), then the CLI scores both and runs the paired
McNemar test between them.
"""

import argparse
import json
from pathlib import Path

from negkit import chat, evaluation
from negkit.cli import main as negkit_main

LABELS = ("entailment", "not_entailment")


def build_gold(path: Path, n: int) -> list[evaluation.ClassificationInstance]:
    instances = [
        evaluation.ClassificationInstance(
            instance_id=f"rte{k}",
            premise=f"premise sentence {k} holds",
            hypothesis=f"hypothesis sentence {k} follows",
            gold=LABELS[k % 2],
        )
        for k in range(n)
    ]
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(inst.__dict__, ensure_ascii=False) + "\n")
    return instances


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="eval_demo_out")
    parser.add_argument("--n", type=int, default=40)
    args = parser.parse_args()

    out = Path(args.out).resolve()
    out.mkdir(parents=True, exist_ok=True)
    gold_path = out / "rte.gold.jsonl"
    instances = build_gold(gold_path, args.n)
    by_hypothesis = {inst.hypothesis: inst.gold for inst in instances}
    template = chat.load_prompt_asset("rte_fewshot")
    items = evaluation.classification_items(instances)

    def oracle_script(request: chat.ChatRequest) -> str:
        # read the hypothesis back out of the rendered prompt; the few-shot
        # block also contains "## Hypothesis:" lines, the query is the last
        for line in reversed(request.messages[-1].content.splitlines()):
            if line.startswith("## Hypothesis: "):
                return f"[{by_hypothesis[line.removeprefix('## Hypothesis: ')]}]"
        return "[not_entailment]"

    runs = {
        "system_a": chat.MockChatBackend(oracle_script),
        "system_b": chat.MockChatBackend(chat.hashed_choice_script(
            [f"[{label}]" for label in LABELS]
        )),
    }
    pred_paths = {}
    for name, backend in runs.items():
        client = chat.ChatClient(backend, model_name=name)
        pred_paths[name] = out / f"{name}.pred.jsonl"
        pred_paths[name].unlink(missing_ok=True)
        written = evaluation.run_inference(
            items, client, template, pred_paths[name],
            parse=lambda raw: evaluation.parse_choice(raw, LABELS),
        )
        print(f"{name}: wrote {written} predictions")

    for name in runs:
        print(f"\n=== {name} ===")
        code = negkit_main([
            "eval", "--task", "rte", "--gold", str(gold_path),
            "--pred", str(pred_paths[name]),
            "--out", str(out / f"{name}.report.json"),
        ])
        assert code == 0

    print("\n=== McNemar: system_a vs system_b ===")
    return negkit_main([
        "significance", "--task", "rte", "--gold", str(gold_path),
        "--pred-a", str(pred_paths["system_a"]),
        "--pred-b", str(pred_paths["system_b"]),
        "--out", str(out / "significance.json"),
    ])


if __name__ == "__main__":
    raise SystemExit(main())
