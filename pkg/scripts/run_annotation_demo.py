#!/usr/bin/env python3
"""Exercise the annotation service end to end with two scripted annotators.

Builds a small benchmark from the toy corpus, serves it over HTTP, then has
two deterministic "annotators" label every task through the API exactly as
the browser UI would: GET /api/tasks/next until done, POST /api/labels for
each task. Finishes by printing the agreement report and the AGREE_ONLY
adjudication summary.
"""

import argparse
import hashlib
import threading
import time
from pathlib import Path

import requests
import uvicorn

import negkit
from negkit.annotation import AnnotationStore, sample_benchmark
from negkit.corpus import IngestReport, load_atomic
from negkit.negation import augment_corpus
from negkit.service import create_app

TOY_ATOMIC = Path(negkit.__file__).parent / "assets" / "toy" / "atomic_toy.csv"


def scripted_label(triple_id: str, annotator: str, flip_every: int) -> str:
    """Deterministic label; the second annotator disagrees on a fixed cadence."""
    digest = hashlib.sha256(triple_id.encode("utf-8")).digest()
    labels = ("Valid", "Invalid", "Ambiguous")
    label = labels[digest[0] % 3]
    if annotator == "ann-b" and digest[1] % flip_every == 0:
        label = labels[(digest[0] + 1) % 3]
    return label


def annotate(base: str, annotator: str, flip_every: int) -> int:
    done = 0
    while True:
        task = requests.get(f"{base}/api/tasks/next", params={"annotator": annotator}).json()
        if task["done"]:
            return done
        requests.post(
            f"{base}/api/labels",
            json={
                "annotator_id": annotator,
                "triple_id": task["triple_id"],
                "label": scripted_label(task["triple_id"], annotator, flip_every),
            },
        ).raise_for_status()
        done += 1


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--data-dir", default="annotation_demo_data")
    parser.add_argument("--port", type=int, default=8766)
    parser.add_argument("--per-relation", type=int, default=1)
    parser.add_argument("--flip-every", type=int, default=4,
                        help="ann-b disagrees roughly every Nth task")
    args = parser.parse_args()

    report = IngestReport()
    originals = load_atomic(TOY_ATOMIC, "test", report)
    augmented, _ = augment_corpus(originals)
    benchmark = sample_benchmark(augmented, args.per_relation, seed=17)
    store = AnnotationStore(args.data_dir, benchmark, adjudicator="ann-c")
    print(f"benchmark: {len(benchmark)} tasks in {args.data_dir}/")

    server = uvicorn.Server(uvicorn.Config(
        create_app(store), host="127.0.0.1", port=args.port, log_level="warning"
    ))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    while not server.started:
        time.sleep(0.05)
    base = f"http://127.0.0.1:{args.port}"

    for annotator in ("ann-a", "ann-b"):
        n = annotate(base, annotator, args.flip_every)
        print(f"{annotator}: labeled {n} tasks")

    agreement = requests.get(
        f"{base}/api/agreement", params={"a": "ann-a", "b": "ann-b"}
    ).json()
    print(f"observed agreement: {agreement['observed_agreement']:.3f}  "
          f"kappa: {agreement['kappa']:.3f}")

    export = requests.get(
        f"{base}/api/benchmark/export", params={"adjudicate": "AGREE_ONLY"}
    ).json()
    print(f"AGREE_ONLY: {len(export['gold'])} gold labels, "
          f"{len(export['disagreements'])} items left to a third pass")

    server.should_exit = True
    thread.join(timeout=5)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
