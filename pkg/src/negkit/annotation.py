"""Benchmark sampling, annotation storage, and inter-annotator agreement.

The store is an append-only JSONL log over a fixed benchmark file. Replaying
the log gives last-write-wins labels per (annotator, triple); a snapshot file
compacts the log without changing any record. Everything the HTTP service
exposes is implemented here so it stays testable without a server.
"""

from __future__ import annotations

import json
import random
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import (
    LabeledTriple,
    RELATIONS,
    Triple,
    ValidityLabel,
    Variant,
    dump_record,
    read_jsonl,
    triple_to_record,
    write_jsonl,
)
from .errors import (
    EmptyOverlap,
    IncompleteAnnotation,
    SessionError,
    ShortfallError,
    UnknownInstance,
    ValidationError,
)
from .verbalize import verbalize


def sample_benchmark(
    triples: Sequence[Triple], per_relation: int, seed: int
) -> list[Triple]:
    """Draw a human-annotation benchmark from an augmented test corpus.

    per_relation counts variant groups per relation; each sampled group
    contributes its original and all three negated variants, so every
    variant kind fills exactly a quarter of the benchmark. Only complete
    groups are eligible.
    """
    by_parent: dict[str, dict[Variant, Triple]] = {}
    originals: dict[str, Triple] = {}
    for triple in triples:
        if triple.variant is Variant.ORIG:
            originals[triple.id] = triple
        else:
            by_parent.setdefault(triple.parent_id, {})[triple.variant] = triple

    complete: dict = {relation: [] for relation in RELATIONS}
    for orig_id in sorted(originals):
        slots = by_parent.get(orig_id, {})
        if len(slots) == 3:
            orig = originals[orig_id]
            complete[orig.relation].append(
                (
                    orig,
                    slots[Variant.NEG_IF],
                    slots[Variant.NEG_THEN],
                    slots[Variant.NEG_BOTH],
                )
            )

    out: list[Triple] = []
    for relation in RELATIONS:
        pool = complete[relation]
        if len(pool) < per_relation:
            raise ShortfallError(
                f"benchmark: {relation.value} has {len(pool)} complete groups, "
                f"need {per_relation}"
            )
        rng = random.Random(f"{seed}:benchmark:{relation.value}")
        for group in sorted(rng.sample(pool, per_relation), key=lambda g: g[0].id):
            out.extend(group)
    return out


# --- agreement --------------------------------------------------------------


@dataclass(frozen=True)
class AgreementReport:
    n_items: int
    observed_agreement: float
    expected_agreement: float
    kappa: float
    confusion: tuple[tuple[int, ...], ...]  # rows = annotator a, cols = b
    labels: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "n_items": self.n_items,
            "observed_agreement": self.observed_agreement,
            "expected_agreement": self.expected_agreement,
            "kappa": self.kappa,
            "confusion": [list(row) for row in self.confusion],
            "labels": list(self.labels),
        }


def cohen_kappa(pairs: Sequence[tuple[ValidityLabel, ValidityLabel]]) -> AgreementReport:
    """Chance-corrected agreement over paired labels.

    If expected agreement is exactly 1, both marginals sit on one shared
    label, observed agreement is already 1, and kappa is defined as 1.0.
    """
    if not pairs:
        raise EmptyOverlap("no paired labels to compare")
    labels = tuple(label.value for label in ValidityLabel)
    index = {label: i for i, label in enumerate(ValidityLabel)}
    matrix = [[0] * len(labels) for _ in labels]
    for a, b in pairs:
        matrix[index[a]][index[b]] += 1
    n = len(pairs)
    po = sum(matrix[i][i] for i in range(len(labels))) / n
    pe = sum(
        (sum(matrix[i]) / n) * (sum(row[i] for row in matrix) / n)
        for i in range(len(labels))
    )
    kappa = 1.0 if pe == 1.0 else (po - pe) / (1.0 - pe)
    return AgreementReport(
        n_items=n,
        observed_agreement=po,
        expected_agreement=pe,
        kappa=kappa,
        confusion=tuple(tuple(row) for row in matrix),
        labels=labels,
    )


# --- the store ---------------------------------------------------------------


@dataclass(frozen=True)
class AnnotationRecord:
    annotator_id: str
    triple_id: str
    label: ValidityLabel
    at: str  # ISO-8601 UTC, audit only; replay order decides conflicts

    def to_record(self) -> dict:
        return {
            "annotator_id": self.annotator_id,
            "triple_id": self.triple_id,
            "label": self.label.value,
            "at": self.at,
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "AnnotationRecord":
        return cls(
            annotator_id=record["annotator_id"],
            triple_id=record["triple_id"],
            label=ValidityLabel(record["label"]),
            at=record["at"],
        )


@dataclass(frozen=True)
class TaskView:
    triple_id: str
    statement: str
    position: int  # 1-based index of this task in the annotator's queue
    total: int


@dataclass
class AdjudicationResult:
    gold: list[LabeledTriple]
    disagreements: list[str]
    pending: list[str] = field(default_factory=list)


POLICIES = ("AGREE_ONLY", "THIRD_PASS")


class AnnotationStore:
    """Annotation state over one benchmark, persisted in a directory.

    Layout: benchmark.jsonl (the fixed task list), labels.log.jsonl
    (append-only submissions), snapshot.json (optional compaction). A store
    reopened on the same directory replays to identical state.
    """

    BENCHMARK = "benchmark.jsonl"
    LOG = "labels.log.jsonl"
    SNAPSHOT = "snapshot.json"

    def __init__(self, data_dir: str | Path, benchmark: Sequence[Triple] | None = None,
                 *, adjudicator: str | None = None):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.adjudicator = adjudicator
        self._lock = threading.Lock()

        bench_path = self.data_dir / self.BENCHMARK
        if benchmark is not None:
            if bench_path.exists():
                existing = [t.id for t in read_jsonl(bench_path)]
                if existing != [t.id for t in benchmark]:
                    raise ValidationError(
                        f"{bench_path} already holds a different benchmark"
                    )
            else:
                write_jsonl(benchmark, bench_path)
            self.benchmark = list(benchmark)
        else:
            if not bench_path.exists():
                raise ValidationError(f"no benchmark at {bench_path}")
            self.benchmark = read_jsonl(bench_path)
        self._by_id = {t.id: t for t in self.benchmark}
        self._order = [t.id for t in self.benchmark]

        # latest[annotator][triple_id] -> AnnotationRecord
        self._latest: dict[str, dict[str, AnnotationRecord]] = {}
        self._replay()

    # -- persistence --

    def _replay(self) -> None:
        snapshot = self.data_dir / self.SNAPSHOT
        if snapshot.exists():
            for record in json.loads(snapshot.read_text(encoding="utf-8"))["entries"]:
                self._replay_one(record)
        log = self.data_dir / self.LOG
        if log.exists():
            with open(log, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self._replay_one(json.loads(line))

    def _replay_one(self, record: Mapping) -> None:
        if record.get("label") is None:  # retraction tombstone
            self._latest.get(record["annotator_id"], {}).pop(record["triple_id"], None)
        else:
            self._apply(AnnotationRecord.from_record(record))

    def _apply(self, record: AnnotationRecord) -> bool:
        slot = self._latest.setdefault(record.annotator_id, {})
        overwritten = record.triple_id in slot
        slot[record.triple_id] = record
        return overwritten

    def compact(self) -> None:
        """Fold the log into the snapshot; latest records are kept verbatim."""
        with self._lock:
            entries = [
                self._latest[annotator][triple_id].to_record()
                for annotator in sorted(self._latest)
                for triple_id in sorted(self._latest[annotator])
            ]
            snapshot = self.data_dir / self.SNAPSHOT
            snapshot.write_text(
                json.dumps({"entries": entries}, ensure_ascii=False, indent=1) + "\n",
                encoding="utf-8",
            )
            (self.data_dir / self.LOG).unlink(missing_ok=True)

    # -- core operations --

    def submit(self, annotator_id: str, triple_id: str, label: str | ValidityLabel,
               at: str | None = None) -> bool:
        """Record a label; returns True when it overwrites an earlier one."""
        annotator_id = (annotator_id or "").strip()
        if not annotator_id:
            raise SessionError("annotator id required")
        if triple_id not in self._by_id:
            raise UnknownInstance(f"not a benchmark triple: {triple_id}")
        try:
            parsed = label if isinstance(label, ValidityLabel) else ValidityLabel.parse(str(label))
        except ValueError:
            raise ValidationError(f"not a validity label: {label!r}") from None
        record = AnnotationRecord(
            annotator_id=annotator_id,
            triple_id=triple_id,
            label=parsed,
            at=at or datetime.now(timezone.utc).isoformat(timespec="seconds"),
        )
        with self._lock:
            with open(self.data_dir / self.LOG, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(dump_record(record.to_record()) + "\n")
            return self._apply(record)

    def retract(self, annotator_id: str, triple_id: str) -> None:
        """Drop an annotator's label so the task re-enters their queue.

        The log keeps history; a retraction is recorded as a tombstone line.
        """
        annotator_id = (annotator_id or "").strip()
        if not annotator_id:
            raise SessionError("annotator id required")
        with self._lock:
            slot = self._latest.get(annotator_id, {})
            if triple_id not in slot:
                raise UnknownInstance(f"no label by {annotator_id} on {triple_id}")
            with open(self.data_dir / self.LOG, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(
                    dump_record(
                        {
                            "annotator_id": annotator_id,
                            "triple_id": triple_id,
                            "label": None,
                            "at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                        }
                    )
                    + "\n"
                )
            del slot[triple_id]

    def labels_of(self, annotator_id: str) -> dict[str, ValidityLabel]:
        return {
            triple_id: record.label
            for triple_id, record in self._latest.get(annotator_id, {}).items()
        }

    def _queue_for(self, annotator_id: str) -> list[str]:
        if self.adjudicator is not None and annotator_id == self.adjudicator:
            return self._disagreed_ids()
        return list(self._order)

    def next_task(self, annotator_id: str) -> TaskView | None:
        annotator_id = (annotator_id or "").strip()
        if not annotator_id:
            raise SessionError("annotator id required")
        queue = self._queue_for(annotator_id)
        done = self.labels_of(annotator_id)
        total = len(queue)
        for position, triple_id in enumerate(queue, start=1):
            if triple_id not in done:
                return TaskView(
                    triple_id=triple_id,
                    statement=verbalize(self._by_id[triple_id]).text,
                    position=position,
                    total=total,
                )
        return None

    def progress(self) -> dict:
        totals = {
            annotator: len(self._latest[annotator]) for annotator in sorted(self._latest)
        }
        return {
            "total_items": len(self._order),
            "labeled": totals,
            "complete": [a for a, n in totals.items() if n >= len(self._order)],
        }

    # -- agreement and adjudication --

    def _primary_annotators(self) -> list[str]:
        return [a for a in sorted(self._latest) if a != self.adjudicator]

    def agreement(self, a: str, b: str) -> AgreementReport:
        labels_a, labels_b = self.labels_of(a), self.labels_of(b)
        shared = [tid for tid in self._order if tid in labels_a and tid in labels_b]
        if not shared:
            raise EmptyOverlap(f"annotators {a!r} and {b!r} share no labeled items")
        return cohen_kappa([(labels_a[tid], labels_b[tid]) for tid in shared])

    def _disagreed_ids(self, annotators: tuple[str, str] | None = None) -> list[str]:
        pair = annotators or self._annotator_pair(strict=False)
        if pair is None:
            return []
        labels_a, labels_b = self.labels_of(pair[0]), self.labels_of(pair[1])
        return [
            tid
            for tid in self._order
            if tid in labels_a and tid in labels_b and labels_a[tid] is not labels_b[tid]
        ]

    def _annotator_pair(self, strict: bool = True) -> tuple[str, str] | None:
        primaries = self._primary_annotators()
        if len(primaries) != 2:
            if strict:
                raise IncompleteAnnotation(
                    f"adjudication needs exactly two primary annotators, have {primaries}"
                )
            return None
        return (primaries[0], primaries[1])

    def adjudicate(self, policy: str, *, annotators: tuple[str, str] | None = None,
                   require_complete: bool = True) -> AdjudicationResult:
        """Resolve the double-annotated benchmark into gold labels.

        AGREE_ONLY keeps agreed items and quarantines the rest. THIRD_PASS
        additionally resolves disagreements with the adjudicator's label.
        """
        if policy not in POLICIES:
            raise ValidationError(f"unknown adjudication policy {policy!r}")
        pair = annotators or self._annotator_pair()
        labels_a, labels_b = self.labels_of(pair[0]), self.labels_of(pair[1])
        missing = [
            tid for tid in self._order if tid not in labels_a or tid not in labels_b
        ]
        if missing and require_complete:
            raise IncompleteAnnotation(
                f"{len(missing)} benchmark items lack double annotation"
            )
        adjudicator_labels = (
            self.labels_of(self.adjudicator) if self.adjudicator else {}
        )

        gold: list[LabeledTriple] = []
        disagreements: list[str] = []
        pending: list[str] = []
        for tid in self._order:
            if tid not in labels_a or tid not in labels_b:
                continue
            if labels_a[tid] is labels_b[tid]:
                gold.append(
                    LabeledTriple(self._by_id[tid], labels_a[tid], "gold:agreement")
                )
                continue
            disagreements.append(tid)
            if policy == "THIRD_PASS":
                if tid in adjudicator_labels:
                    gold.append(
                        LabeledTriple(
                            self._by_id[tid],
                            adjudicator_labels[tid],
                            f"gold:adjudicated:{self.adjudicator}",
                        )
                    )
                else:
                    pending.append(tid)
        if policy == "THIRD_PASS" and pending and require_complete:
            raise IncompleteAnnotation(
                f"{len(pending)} disagreements await the adjudicator"
            )
        return AdjudicationResult(gold=gold, disagreements=disagreements, pending=pending)

    def export_benchmark(self) -> list[dict]:
        return [triple_to_record(t) for t in self.benchmark]
