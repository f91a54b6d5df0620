"""Assembling training corpora out of labeled variant groups.

The contrastive corpora keep only variant groups whose validity labels flip
when one side of the rule is negated; everything here is group-atomic so a
selected original always travels with its negated variants.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .corpus import (
    LabeledTriple,
    Source,
    Triple,
    ValidityLabel,
    Variant,
    dump_record,
)
from .errors import (
    EmptyInput,
    ExportRejected,
    IncompleteGroup,
    LabelingAborted,
    ShortfallError,
)
from .judging import JudgeBackend, judge_label
from .verbalize import verbalize

V = ValidityLabel.VALID
I = ValidityLabel.INVALID

# Accepted (orig, neg_if, neg_then) label patterns. Out of the 27 possible
# three-label assignments these four are the ones where negating exactly one
# side of the rule flips its validity coherently.
ATOMIC_PATTERNS: frozenset[tuple[ValidityLabel, ValidityLabel, ValidityLabel]] = frozenset(
    {(V, I, V), (V, V, I), (I, V, I), (I, I, V)}
)

DEFAULT_INSTRUCTION = (
    "Determine whether the following if-then statement aligns with "
    "commonsense knowledge. Answer Valid or Invalid."
)


@dataclass(frozen=True)
class VariantGroup:
    """An original plus whichever negated variants were derived from it."""

    orig: LabeledTriple
    neg_if: LabeledTriple | None = None
    neg_then: LabeledTriple | None = None
    neg_both: LabeledTriple | None = None

    def __post_init__(self) -> None:
        if self.orig.triple.variant is not Variant.ORIG:
            raise ValueError("group root must be an ORIG triple")
        for slot, expected in (
            (self.neg_if, Variant.NEG_IF),
            (self.neg_then, Variant.NEG_THEN),
            (self.neg_both, Variant.NEG_BOTH),
        ):
            if slot is None:
                continue
            if slot.triple.variant is not expected:
                raise ValueError(f"{expected.value} slot holds {slot.triple.variant.value}")
            if slot.triple.parent_id != self.orig.triple.id:
                raise ValueError("variant in group does not descend from its original")

    def members(self) -> list[LabeledTriple]:
        return [
            item
            for item in (self.orig, self.neg_if, self.neg_then, self.neg_both)
            if item is not None
        ]


def group_variants(
    labeled: Iterable[LabeledTriple], *, strict: bool = False
) -> list[VariantGroup]:
    """Assemble groups by parent id, ordered by the original's id."""
    originals: dict[str, LabeledTriple] = {}
    children: dict[str, dict[Variant, LabeledTriple]] = {}
    orphans = []
    for item in labeled:
        if item.triple.variant is Variant.ORIG:
            originals[item.triple.id] = item
        else:
            children.setdefault(item.triple.parent_id, {})[item.triple.variant] = item
    groups = []
    for orig_id in sorted(originals):
        slots = children.pop(orig_id, {})
        groups.append(
            VariantGroup(
                orig=originals[orig_id],
                neg_if=slots.get(Variant.NEG_IF),
                neg_then=slots.get(Variant.NEG_THEN),
                neg_both=slots.get(Variant.NEG_BOTH),
            )
        )
    orphans = sorted(children)
    if orphans and strict:
        raise IncompleteGroup(f"variants without originals: {orphans[:5]}")
    return groups


def label_corpus(
    triples: Sequence[Triple],
    backend: JudgeBackend,
    *,
    max_quarantined: int | None = None,
) -> tuple[list[LabeledTriple], list[dict]]:
    """Label every triple; failures are quarantined rather than fatal.

    Quarantine records carry the triple id and the error text. If
    max_quarantined is given and exceeded, the run aborts: a labeling job
    that mostly fails usually means a broken prompt or backend, not data.
    """
    labeled: list[LabeledTriple] = []
    quarantine: list[dict] = []
    for triple in triples:
        try:
            labeled.append(judge_label(triple, backend))
        except Exception as exc:  # noqa: BLE001 - quarantine keeps the cause
            quarantine.append({"id": triple.id, "error": f"{type(exc).__name__}: {exc}"})
            if max_quarantined is not None and len(quarantine) > max_quarantined:
                raise LabelingAborted(
                    f"{len(quarantine)} failures exceeded the quarantine budget"
                ) from exc
    return labeled, quarantine


@dataclass
class CorpusStats:
    """Label-by-variant contingency counts for a labeled corpus."""

    counts: dict[str, dict[str, int]]
    total: int

    @classmethod
    def from_labeled(cls, labeled: Iterable[LabeledTriple]) -> "CorpusStats":
        counts = {
            variant.value: {label.value: 0 for label in ValidityLabel}
            for variant in Variant
        }
        total = 0
        for item in labeled:
            counts[item.triple.variant.value][item.label.value] += 1
            total += 1
        return cls(counts=counts, total=total)

    def variant_total(self, variant: str) -> int:
        return sum(self.counts[variant].values())

    def percentages(self) -> dict[str, dict[str, float]]:
        out: dict[str, dict[str, float]] = {}
        for variant, row in self.counts.items():
            denom = sum(row.values())
            out[variant] = {
                label: (100.0 * n / denom if denom else 0.0) for label, n in row.items()
            }
        return out

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "counts": {v: dict(row) for v, row in self.counts.items()},
            "percentages": self.percentages(),
        }

    def to_table(self) -> str:
        header = f"{'variant':<10} {'n':>8} " + " ".join(
            f"{label.value:>12}" for label in ValidityLabel
        )
        lines = [header]
        pct = self.percentages()
        for variant in Variant:
            row = self.counts[variant.value]
            denom = sum(row.values())
            if not denom:
                continue
            cells = " ".join(
                f"{row[label.value]:>6} ({pct[variant.value][label.value]:4.1f}%)"
                for label in ValidityLabel
            )
            lines.append(f"{variant.value:<10} {denom:>8} {cells}")
        lines.append(f"{'total':<10} {self.total:>8}")
        return "\n".join(lines)


def corpus_stats(labeled: Iterable[LabeledTriple]) -> CorpusStats:
    return CorpusStats.from_labeled(labeled)


# --- contrastive selection ------------------------------------------------


def select_contrastive_atomic(groups: Iterable[VariantGroup]) -> list[VariantGroup]:
    """Keep groups whose (orig, neg_if, neg_then) labels form a contrast.

    NEG_BOTH labels never participate: with both sides negated the pattern
    carries no single-sided contrast, and those variants are not exported.
    """
    selected = []
    for group in groups:
        if group.neg_if is None or group.neg_then is None:
            raise IncompleteGroup(
                f"group {group.orig.triple.id} lacks NEG_IF/NEG_THEN labels"
            )
        pattern = (group.orig.label, group.neg_if.label, group.neg_then.label)
        if pattern in ATOMIC_PATTERNS:
            selected.append(group)
    return selected


def select_contrastive_anion(groups: Iterable[VariantGroup]) -> list[VariantGroup]:
    """Keep negated-premise pairs whose validity flips when the tail flips.

    Both labels must be decisive (Valid or Invalid) and different; Ambiguous
    on either side disqualifies the pair.
    """
    decisive = (ValidityLabel.VALID, ValidityLabel.INVALID)
    selected = []
    for group in groups:
        if group.neg_both is None:
            raise IncompleteGroup(f"group {group.orig.triple.id} lacks its NEG_BOTH pair")
        a, b = group.orig.label, group.neg_both.label
        if a in decisive and b in decisive and a is not b:
            selected.append(group)
    return selected


# --- training corpus ------------------------------------------------------


@dataclass(frozen=True)
class TrainingGroup:
    """Export unit: one group's members bound for the same training corpus."""

    dataset: str  # per-source bucket, e.g. "atomic" / "anion"
    members: tuple[LabeledTriple, ...]

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("empty training group")

    @property
    def key(self) -> str:
        return self.members[0].triple.id

    def size(self) -> int:
        return len(self.members)


@dataclass
class TrainingCorpus:
    groups: list[TrainingGroup] = field(default_factory=list)

    def size(self) -> int:
        return sum(group.size() for group in self.groups)

    def items(self) -> list[LabeledTriple]:
        return [member for group in self.groups for member in group.members]

    def by_dataset(self) -> dict[str, list[TrainingGroup]]:
        out: dict[str, list[TrainingGroup]] = {}
        for group in self.groups:
            out.setdefault(group.dataset, []).append(group)
        return out

    def sorted(self) -> "TrainingCorpus":
        return TrainingCorpus(groups=sorted(self.groups, key=lambda g: (g.dataset, g.key)))


def corpus_from_atomic_groups(selected: Iterable[VariantGroup],
                              dataset: str = "atomic") -> TrainingCorpus:
    groups = [
        TrainingGroup(dataset=dataset, members=(g.orig, g.neg_if, g.neg_then))
        for g in selected
    ]
    return TrainingCorpus(groups=groups).sorted()


def corpus_from_anion_groups(selected: Iterable[VariantGroup],
                             dataset: str = "anion") -> TrainingCorpus:
    groups = [
        TrainingGroup(dataset=dataset, members=(g.orig, g.neg_both)) for g in selected
    ]
    return TrainingCorpus(groups=groups).sorted()


def merge_corpora(*corpora: TrainingCorpus) -> TrainingCorpus:
    merged = TrainingCorpus(groups=[g for c in corpora for g in c.groups])
    return merged.sorted()


# --- baseline -------------------------------------------------------------


def baseline_targets(corpus: TrainingCorpus) -> dict[str, dict[ValidityLabel, int]]:
    """Per-dataset Valid/Invalid counts a size-matched baseline must hit."""
    targets: dict[str, dict[ValidityLabel, int]] = {}
    for group in corpus.groups:
        bucket = targets.setdefault(group.dataset, {V: 0, I: 0})
        for member in group.members:
            bucket[member.label] += 1
    return targets


def build_baseline(
    pools: Mapping[str, Mapping[ValidityLabel, Sequence[LabeledTriple]]],
    targets: Mapping[str, Mapping[ValidityLabel, int]],
    seed: int,
) -> TrainingCorpus:
    """Sample a non-contrastive corpus with the same size and label mix.

    pools[dataset][label] holds candidate labeled triples (typically the
    unselected originals plus generated invalids). Sampling is seeded and
    per (dataset, label), so the result is deterministic. Each pick becomes
    its own single-member group.
    """
    groups: list[TrainingGroup] = []
    for dataset in sorted(targets):
        for label in (V, I):
            need = targets[dataset].get(label, 0)
            if not need:
                continue
            pool = sorted(
                pools.get(dataset, {}).get(label, ()), key=lambda it: it.triple.id
            )
            if len(pool) < need:
                raise ShortfallError(
                    f"baseline: {dataset}/{label.value} pool has {len(pool)}, "
                    f"need {need}"
                )
            rng = random.Random(f"{seed}:baseline:{dataset}:{label.value}")
            for item in rng.sample(pool, need):
                groups.append(TrainingGroup(dataset=dataset, members=(item,)))
    return TrainingCorpus(groups=groups).sorted()


# --- ablation views --------------------------------------------------------


def subset_by_variant(corpus: TrainingCorpus, keep: Iterable[Variant]) -> TrainingCorpus:
    """Project each group onto a subset of variant slots (groups may shrink)."""
    wanted = set(keep)
    groups = []
    for group in corpus.groups:
        members = tuple(m for m in group.members if m.triple.variant in wanted)
        if members:
            groups.append(TrainingGroup(dataset=group.dataset, members=members))
    return TrainingCorpus(groups=groups).sorted()


def sample_subset(corpus: TrainingCorpus, per_dataset: int, seed: int) -> TrainingCorpus:
    """Cut the corpus down to about per_dataset triples from each dataset.

    Groups stay atomic: whole groups are accumulated in seeded-shuffle order
    while the running size is short of the target, then the last group is
    kept or dropped depending on which total lands closer. Asking for at
    least the dataset's full size returns that dataset unchanged.
    """
    result: list[TrainingGroup] = []
    for dataset, groups in sorted(corpus.by_dataset().items()):
        total = sum(g.size() for g in groups)
        if per_dataset >= total:
            result.extend(groups)
            continue
        rng = random.Random(f"{seed}:subset:{dataset}")
        order = sorted(groups, key=lambda g: g.key)
        rng.shuffle(order)
        chosen: list[TrainingGroup] = []
        running = 0
        for group in order:
            if running >= per_dataset:
                break
            chosen.append(group)
            running += group.size()
        if chosen and running > per_dataset:
            without_last = running - chosen[-1].size()
            if per_dataset - without_last < running - per_dataset:
                running = without_last
                chosen.pop()
        result.extend(chosen)
    return TrainingCorpus(groups=result).sorted()


def randomize_labels(corpus: TrainingCorpus, seed: int) -> TrainingCorpus:
    """Control condition: same triples, labels redrawn uniformly from {V, I}."""
    rng = random.Random(f"{seed}:randomized")
    groups = []
    for group in corpus.sorted().groups:
        members = tuple(
            LabeledTriple(m.triple, rng.choice((V, I)), "random") for m in group.members
        )
        groups.append(TrainingGroup(dataset=group.dataset, members=members))
    return TrainingCorpus(groups=groups)


# --- export ----------------------------------------------------------------


@dataclass(frozen=True)
class TrainingRecord:
    instruction: str
    input: str
    output: str


def training_records(
    corpus: TrainingCorpus, instruction: str = DEFAULT_INSTRUCTION
) -> list[TrainingRecord]:
    """Flatten to instruction-tuning records, ordered by triple id."""
    flat = sorted(corpus.items(), key=lambda item: item.triple.id)
    records = []
    for item in flat:
        if item.label not in (V, I):
            raise ExportRejected(
                f"triple {item.triple.id} is {item.label.value}; only decisive "
                "labels are exportable"
            )
        records.append(
            TrainingRecord(
                instruction=instruction,
                input=verbalize(item.triple).text,
                output=item.label.value,
            )
        )
    return records


def export_instruction_jsonl(
    corpus: TrainingCorpus,
    path: str | Path,
    instruction: str = DEFAULT_INSTRUCTION,
) -> int:
    records = training_records(corpus, instruction)
    if not records:
        raise EmptyInput("refusing to export an empty corpus")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(
                dump_record(
                    {
                        "instruction": record.instruction,
                        "input": record.input,
                        "output": record.output,
                    }
                )
                + "\n"
            )
    return len(records)
