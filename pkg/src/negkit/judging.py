"""Validity judging: verdict parsing, judge backends, and the three-way
training-set recipe (equal Valid / Invalid / Ambiguous counts per relation).

Valid examples are sampled originals, Ambiguous ones are novel head/tail
recombinations, and Invalid ones come from a generation prompt that asks for
a then-event that contradicts the if-event.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Protocol, Sequence

from . import inflect
from .chat import ChatClient, PromptTemplate, render_template
from .corpus import (
    EventText,
    LabeledTriple,
    Relation,
    RELATIONS,
    Source,
    Triple,
    ValidityLabel,
    Variant,
    make_triple,
)
from .errors import (
    EmptyInput,
    GenerationRejected,
    RecombinationExhausted,
    ShortfallError,
    UnknownInstance,
    UnparseableVerdict,
)
from .reports import EvalReport
from .verbalize import verbalize

_LABEL_WORDS = (
    ("invalid", ValidityLabel.INVALID),
    ("ambiguous", ValidityLabel.AMBIGUOUS),
    ("valid", ValidityLabel.VALID),
)

_STRIP = str.maketrans("", "", "[](){}<>.,:;!?\"'`*")


def parse_verdict(raw: str) -> ValidityLabel:
    """Find the judge's label in free-form output.

    The earliest label mention wins. The word order in _LABEL_WORDS breaks
    exact position ties in favor of "invalid" over "valid"; note that every
    occurrence of "invalid" also contains "valid" two characters later, so
    earliest-position matching already keeps "invalid" intact.
    """
    text = raw.lower().translate(_STRIP)
    best: tuple[int, ValidityLabel] | None = None
    for word, label in _LABEL_WORDS:
        at = text.find(word)
        if at >= 0 and (best is None or at < best[0]):
            best = (at, label)
    if best is None:
        raise UnparseableVerdict(f"no validity label in {raw!r}")
    return best[1]


@dataclass(frozen=True)
class JudgeVerdict:
    triple_id: str
    label: ValidityLabel
    raw_output: str
    backend_id: str


class JudgeBackend(Protocol):
    def verdict(self, triple: Triple) -> JudgeVerdict: ...


def judge_label(triple: Triple, backend: JudgeBackend) -> LabeledTriple:
    verdict = backend.verdict(triple)
    return LabeledTriple(
        triple=triple, label=verdict.label, label_source=f"judge:{verdict.backend_id}"
    )


class RemoteJudge:
    """Judge backed by a chat model through the shared client."""

    def __init__(self, client: ChatClient, template: PromptTemplate,
                 *, max_output_tokens: int = 16):
        self.client = client
        self.template = template
        self.max_output_tokens = max_output_tokens

    def verdict(self, triple: Triple) -> JudgeVerdict:
        request = render_template(
            self.template,
            {"statement": verbalize(triple).text},
            model_name=self.client.model_name,
            max_output_tokens=self.max_output_tokens,
        )
        reply = self.client.complete(request)
        return JudgeVerdict(
            triple_id=triple.id,
            label=parse_verdict(reply.content),
            raw_output=reply.content,
            backend_id=self.client.model_name,
        )


class MockJudgeOracle:
    """Deterministic pseudo-judge for offline runs and tests.

    The lineage key of a triple is (source, relation, stem sequence of head
    plus tail with negation machinery tokens removed), so an original and
    its negated variants share a key. From sha256 of that key:

      key_hash % 5 == 4          -> Ambiguous for the whole lineage
      (key_hash >> 3) % 2 == 0   -> the original is Valid, else Invalid
      per-slot bits               -> negating the head (or tail) flips the
                                     lineage's validity iff that slot's bit
                                     is set

    Independent head/tail bits mean all four contrastive label patterns
    occur, alongside lineages that no pattern accepts.
    """

    backend_id = "mock-oracle"
    _MACHINERY = frozenset(("not", "do", "does", "did"))

    def _key(self, triple: Triple) -> str:
        stems = [
            inflect.stem(token)
            for token in f"{triple.head.text} {triple.tail.text}".split()
        ]
        content = " ".join(s for s in stems if s and s not in self._MACHINERY)
        return f"{triple.source.value}|{triple.relation.value}|{content}"

    @staticmethod
    def _bit(seed: str) -> int:
        return hashlib.sha256(seed.encode("utf-8")).digest()[0] & 1

    def label(self, triple: Triple) -> ValidityLabel:
        key = self._key(triple)
        key_hash = int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:8], "big")
        if key_hash % 5 == 4:
            return ValidityLabel.AMBIGUOUS
        valid = (key_hash >> 3) % 2 == 0
        if triple.head.negated and self._bit(key + "|head"):
            valid = not valid
        if triple.tail.negated and self._bit(key + "|tail"):
            valid = not valid
        return ValidityLabel.VALID if valid else ValidityLabel.INVALID

    def verdict(self, triple: Triple) -> JudgeVerdict:
        label = self.label(triple)
        return JudgeVerdict(
            triple_id=triple.id,
            label=label,
            raw_output=f"[{label.value}]",
            backend_id=self.backend_id,
        )


# --- training-set construction -------------------------------------------


@dataclass(frozen=True)
class JudgeTrainingSpec:
    """Recipe for the judge's supervision set.

    per_relation_per_label is the total per (relation, label) cell and is
    split evenly across the provided source corpora, e.g. 200 with two
    corpora means 100 from each, giving 3 x 9 x 200 = 5400 overall.
    """

    sources: tuple[Source, ...]
    per_relation_per_label: int
    seed: int

    def __post_init__(self) -> None:
        if not self.sources:
            raise ValueError("at least one source corpus required")
        if self.per_relation_per_label <= 0:
            raise ValueError("per_relation_per_label must be positive")

    @property
    def per_source(self) -> int:
        if self.per_relation_per_label % len(self.sources):
            raise ShortfallError(
                f"{self.per_relation_per_label} per relation does not divide "
                f"evenly across {len(self.sources)} sources"
            )
        return self.per_relation_per_label // len(self.sources)

    @property
    def total(self) -> int:
        return self.per_relation_per_label * len(RELATIONS) * 3


def _originals_by_relation(
    corpora: Mapping[Source, Sequence[Triple]], source: Source
) -> dict[Relation, list[Triple]]:
    pools: dict[Relation, list[Triple]] = {rel: [] for rel in RELATIONS}
    for triple in corpora[source]:
        if triple.variant is Variant.ORIG:
            pools[triple.relation].append(triple)
    for pool in pools.values():
        pool.sort(key=lambda t: t.id)
    return pools


def build_valid_set(
    corpora: Mapping[Source, Sequence[Triple]], spec: JudgeTrainingSpec
) -> list[LabeledTriple]:
    """Sample existing originals as Valid supervision."""
    take = spec.per_source
    out: list[LabeledTriple] = []
    for source in spec.sources:
        rng = random.Random(f"{spec.seed}:valid:{source.value}")
        pools = _originals_by_relation(corpora, source)
        for relation in RELATIONS:
            pool = pools[relation]
            if len(pool) < take:
                raise ShortfallError(
                    f"valid set: {source.value}/{relation.value} has {len(pool)} "
                    f"originals, need {take}"
                )
            for triple in rng.sample(pool, take):
                out.append(LabeledTriple(triple, ValidityLabel.VALID, "synthetic"))
    return out


def build_ambiguous_set(
    corpora: Mapping[Source, Sequence[Triple]], spec: JudgeTrainingSpec
) -> list[LabeledTriple]:
    """Recombine heads and tails into novel, unsupported triples.

    A head donor and a tail donor are drawn from the same source; the
    candidate is rejected if that (head, relation, tail) combination exists
    anywhere in the input corpora or was already generated.
    """
    take = spec.per_source
    existing = {
        (t.head.text, t.relation, t.tail.text)
        for pool in corpora.values()
        for t in pool
    }
    out: list[LabeledTriple] = []
    for source in spec.sources:
        rng = random.Random(f"{spec.seed}:ambiguous:{source.value}")
        pools = _originals_by_relation(corpora, source)
        all_originals = sorted(
            (t for t in corpora[source] if t.variant is Variant.ORIG),
            key=lambda t: t.id,
        )
        if not all_originals:
            raise ShortfallError(f"ambiguous set: {source.value} has no originals")
        for relation in RELATIONS:
            tail_pool = pools[relation]
            if not tail_pool:
                raise ShortfallError(
                    f"ambiguous set: {source.value}/{relation.value} has no tails"
                )
            made = 0
            budget = max(200, take * 50)
            while made < take and budget:
                budget -= 1
                head_donor = rng.choice(all_originals)
                tail_donor = rng.choice(tail_pool)
                key = (head_donor.head.text, relation, tail_donor.tail.text)
                if head_donor.id == tail_donor.id or key in existing:
                    continue
                existing.add(key)
                triple = make_triple(
                    Source.GENERATED,
                    head_donor.split,
                    relation,
                    head_donor.head,
                    tail_donor.tail,
                )
                out.append(LabeledTriple(triple, ValidityLabel.AMBIGUOUS, "synthetic"))
                made += 1
            if made < take:
                raise RecombinationExhausted(
                    f"{source.value}/{relation.value}: built {made} of {take} "
                    "recombinations before the attempt budget ran out"
                )
    return out


def build_invalid_set(
    corpora: Mapping[Source, Sequence[Triple]],
    spec: JudgeTrainingSpec,
    client: ChatClient,
    template: PromptTemplate,
) -> list[LabeledTriple]:
    """Generate contradicting then-events for sampled if-events."""
    take = spec.per_source
    out: list[LabeledTriple] = []
    for source in spec.sources:
        rng = random.Random(f"{spec.seed}:invalid:{source.value}")
        pools = _originals_by_relation(corpora, source)
        for relation in RELATIONS:
            pool = pools[relation]
            if len(pool) < take:
                raise ShortfallError(
                    f"invalid set: {source.value}/{relation.value} has {len(pool)} "
                    f"candidates, need {take}"
                )
            donors = rng.sample(pool, take)
            donor_ids = {t.id for t in donors}
            extras = [t for t in pool if t.id not in donor_ids]
            rng.shuffle(extras)
            for donor in donors:
                tail_text = _generate_invalid_tail(client, template, donor)
                while tail_text is None:
                    if not extras:
                        raise GenerationRejected(
                            f"invalid set: {source.value}/{relation.value} ran out "
                            "of donor events with usable generations"
                        )
                    donor = extras.pop()
                    tail_text = _generate_invalid_tail(client, template, donor)
                triple = make_triple(
                    Source.GENERATED,
                    donor.split,
                    relation,
                    donor.head,
                    EventText(tail_text),
                )
                out.append(LabeledTriple(triple, ValidityLabel.INVALID, "synthetic"))
    return out


def _generate_invalid_tail(
    client: ChatClient, template: PromptTemplate, donor: Triple
) -> str | None:
    request = render_template(
        template,
        {"event": donor.head.text, "relation": donor.relation.template.replace(
            "{object}", "others")},
        model_name=client.model_name,
    )
    lines = client.complete(request).content.strip().splitlines()
    candidate = lines[0].strip().strip('"') if lines else ""
    if not candidate or len(candidate.split()) > 24:
        return None
    return candidate


def build_judge_training_set(
    corpora: Mapping[Source, Sequence[Triple]],
    spec: JudgeTrainingSpec,
    client: ChatClient,
    template: PromptTemplate,
) -> list[LabeledTriple]:
    """The full recipe: equal thirds of Valid / Invalid / Ambiguous."""
    items = (
        build_valid_set(corpora, spec)
        + build_invalid_set(corpora, spec, client, template)
        + build_ambiguous_set(corpora, spec)
    )
    assert len(items) == spec.total
    return items


# --- judge evaluation ----------------------------------------------------


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def _macro_f1(pairs: Iterable[tuple[ValidityLabel, ValidityLabel]]) -> float:
    pairs = list(pairs)
    scores = []
    for label in ValidityLabel:
        tp = sum(1 for g, p in pairs if g is label and p is label)
        fp = sum(1 for g, p in pairs if g is not label and p is label)
        fn = sum(1 for g, p in pairs if g is label and p is not label)
        scores.append(_prf(tp, fp, fn)[2])
    return sum(scores) / len(scores)


def evaluate_judge(
    verdicts: Sequence[JudgeVerdict], gold: Sequence[LabeledTriple]
) -> EvalReport:
    """Score judge verdicts against gold labels.

    Headline precision/recall/F1 are macro over the three labels (fractions,
    matching how judge quality is usually tabulated); accuracy is a percent.
    Breakdowns carry per-label P/R/F1 and per-relation macro-F1.
    """
    if not verdicts:
        raise EmptyInput("no verdicts to score")
    by_id = {item.triple.id: item for item in gold}
    pairs: list[tuple[ValidityLabel, ValidityLabel, Relation]] = []
    seen: set[str] = set()
    for verdict in verdicts:
        if verdict.triple_id not in by_id:
            raise UnknownInstance(f"verdict for unknown triple {verdict.triple_id}")
        if verdict.triple_id in seen:
            continue
        seen.add(verdict.triple_id)
        item = by_id[verdict.triple_id]
        pairs.append((item.label, verdict.label, item.triple.relation))

    correct = sum(1 for g, p, _ in pairs if g is p)
    per_label: dict[str, dict[str, float]] = {}
    for label in ValidityLabel:
        tp = sum(1 for g, p, _ in pairs if g is label and p is label)
        fp = sum(1 for g, p, _ in pairs if g is not label and p is label)
        fn = sum(1 for g, p, _ in pairs if g is label and p is not label)
        precision, recall, f1 = _prf(tp, fp, fn)
        per_label[label.value] = {
            "precision": precision, "recall": recall, "f1": f1,
            "support": float(tp + fn),
        }

    per_relation = {}
    for relation in RELATIONS:
        subset = [(g, p) for g, p, r in pairs if r is relation]
        if subset:
            per_relation[relation.value] = _macro_f1(subset)

    labels = list(ValidityLabel)
    macro = {
        metric: sum(per_label[l.value][metric] for l in labels) / len(labels)
        for metric in ("precision", "recall", "f1")
    }
    return EvalReport(
        task="judge_validation",
        n=len(pairs),
        headline={
            "accuracy": 100.0 * correct / len(pairs),
            "precision": macro["precision"],
            "recall": macro["recall"],
            "f1": macro["f1"],
        },
        breakdowns={"per_label": per_label, "per_relation_f1": per_relation},
    )
