"""Scoring negation-understanding evaluations.

Covers plain label-accuracy tasks (NLI-style), the passage-QA benchmark with
its group-consistency metrics, the contrastive-retrieval pairwise metric,
paired significance via McNemar, and negation-cue categorization for
breakdowns. Inference over a chat backend lives here too so every task
shares the resumable prediction-file format.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .chat import ChatClient, PromptTemplate, render_template
from .errors import (
    CoverageError,
    DuplicatePrediction,
    EmptyInput,
    MalformedRow,
    UnknownInstance,
)
from .reports import EvalReport

# --- instances and predictions ----------------------------------------------

EDIT_KINDS = ("ORIGINAL", "PARAPHRASE", "SCOPE", "AFFIRMATIVE")


@dataclass(frozen=True)
class ClassificationInstance:
    instance_id: str
    premise: str
    hypothesis: str
    gold: str


@dataclass(frozen=True)
class CondaQAInstance:
    instance_id: str
    passage: str
    question: str
    gold: str
    question_id: str
    bundle_id: str  # groups an original passage with its three edits
    edit_kind: str  # one of EDIT_KINDS
    negation_cue: str | None = None

    def __post_init__(self) -> None:
        if self.edit_kind not in EDIT_KINDS:
            raise ValueError(f"bad edit kind {self.edit_kind!r}")


@dataclass(frozen=True)
class NevIRPair:
    pair_id: str
    doc1: str
    doc2: str
    query1: str  # relevant to doc1
    query2: str  # relevant to doc2


@dataclass(frozen=True)
class PredictionRecord:
    instance_id: str
    prediction: str
    raw_output: str = ""


def _read_jsonl(path: str | Path) -> Iterable[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRow(f"{path}:{lineno}: not JSON: {exc}") from None


def load_predictions(path: str | Path) -> list[PredictionRecord]:
    records = []
    seen = set()
    for record in _read_jsonl(path):
        instance_id = str(record["instance_id"])
        if instance_id in seen:
            raise DuplicatePrediction(f"{path}: repeated instance {instance_id}")
        seen.add(instance_id)
        records.append(
            PredictionRecord(
                instance_id=instance_id,
                prediction=str(record.get("prediction", "")),
                raw_output=str(record.get("raw_output", "")),
            )
        )
    return records


_EDIT_ALIASES = {
    "original": "ORIGINAL",
    "paraphrase": "PARAPHRASE",
    "paraphrase edit": "PARAPHRASE",
    "scope": "SCOPE",
    "scope edit": "SCOPE",
    "affirmative": "AFFIRMATIVE",
    "affirmative edit": "AFFIRMATIVE",
}


def load_condaqa(path: str | Path) -> list[CondaQAInstance]:
    instances = []
    for record in _read_jsonl(path):
        kind = str(record["edit_kind"]).strip().lower()
        instances.append(
            CondaQAInstance(
                instance_id=str(record["instance_id"]),
                passage=record["passage"],
                question=record["question"],
                gold=str(record["gold"]),
                question_id=str(record["question_id"]),
                bundle_id=str(record["bundle_id"]),
                edit_kind=_EDIT_ALIASES.get(kind, kind.upper()),
                negation_cue=record.get("negation_cue"),
            )
        )
    return instances


def load_classification(path: str | Path) -> list[ClassificationInstance]:
    return [
        ClassificationInstance(
            instance_id=str(r["instance_id"]),
            premise=r.get("premise", r.get("passage", "")),
            hypothesis=r.get("hypothesis", r.get("question", "")),
            gold=str(r["gold"]),
        )
        for r in _read_jsonl(path)
    ]


def load_nevir(path: str | Path) -> list[NevIRPair]:
    return [
        NevIRPair(
            pair_id=str(r["pair_id"]),
            doc1=r["doc1"],
            doc2=r["doc2"],
            query1=r["query1"],
            query2=r["query2"],
        )
        for r in _read_jsonl(path)
    ]


# --- answer normalization -----------------------------------------------------

_PUNCT = re.compile(r"[\[\](){}<>.,:;!?\"'`*]")
_DONT_KNOW = {"dont know", "do not know", "dont no", "unknown"}


def normalize_answer(text: str) -> str:
    """Fold case, brackets, punctuation, and whitespace; canonicalize the
    hedged QA answer so "DON'T KNOW", "dont know" and "do not know" match."""
    folded = _PUNCT.sub("", text.lower())
    folded = " ".join(folded.split())
    if folded in _DONT_KNOW:
        return "dont know"
    return folded


def normalize_label(text: str) -> str:
    """Label-set normalization; keeps underscores so tags like
    not_entailment survive."""
    return " ".join(_PUNCT.sub("", text.lower()).split())


def parse_answer_line(raw: str) -> str:
    """First non-empty line, unbracketed; for free-phrase answers."""
    for line in raw.splitlines():
        line = line.strip()
        if line:
            return line.strip("[]").strip()
    return ""


def parse_choice(raw: str, options: Sequence[str]) -> str:
    """Earliest-mentioned option wins, mirroring how bracketed tags are read.

    Options are compared on their normalized forms; an option that is a
    prefix of another (entailment vs not_entailment) is resolved by the
    longer match starting earlier or at the same position. Returns "" when
    nothing matches.
    """
    text = normalize_label(raw)
    best: tuple[int, int, str] | None = None
    for option in options:
        needle = normalize_label(option)
        at = text.find(needle)
        if at < 0:
            continue
        key = (at, -len(needle))
        if best is None or key < (best[0], best[1]):
            best = (at, -len(needle), option)
    return best[2] if best else ""


# --- plain classification ------------------------------------------------------


def score_classification(
    predictions: Sequence[PredictionRecord],
    instances: Sequence[ClassificationInstance],
    label_set: Sequence[str],
    *,
    task: str = "classification",
) -> EvalReport:
    """Accuracy over a fixed label set; off-set predictions count as wrong."""
    if not instances:
        raise EmptyInput("no gold instances")
    gold = {inst.instance_id: inst.gold for inst in instances}
    _check_ids(predictions, gold)
    allowed = {normalize_label(label) for label in label_set}
    by_id = {p.instance_id: p for p in predictions}

    correct = invalid_output = missing = 0
    for instance_id, gold_label in gold.items():
        prediction = by_id.get(instance_id)
        if prediction is None:
            missing += 1
            continue
        norm = normalize_label(prediction.prediction)
        if norm not in allowed:
            invalid_output += 1
            continue
        if norm == normalize_label(gold_label):
            correct += 1
    return EvalReport(
        task=task,
        n=len(gold),
        headline={"accuracy": 100.0 * correct / len(gold)},
        extras={"invalid_output": invalid_output, "missing": missing},
    )


def _check_ids(predictions: Sequence[PredictionRecord], gold: Mapping[str, object]) -> None:
    seen = set()
    for prediction in predictions:
        if prediction.instance_id in seen:
            raise DuplicatePrediction(f"repeated instance {prediction.instance_id}")
        seen.add(prediction.instance_id)
        if prediction.instance_id not in gold:
            raise UnknownInstance(f"prediction for unknown id {prediction.instance_id}")


# --- passage QA with consistency ------------------------------------------------


def score_condaqa(
    predictions: Sequence[PredictionRecord],
    instances: Sequence[CondaQAInstance],
) -> EvalReport:
    """Accuracy plus group consistency.

    A (question_id, bundle_id) group is consistent when every instance in it
    is answered correctly; unanswered instances make their group inconsistent.
    consistency_all is over full groups, the par/sco/aff variants over the
    original paired with just that edit.
    """
    if not instances:
        raise EmptyInput("no gold instances")
    _check_ids(predictions, {i.instance_id: i for i in instances})
    by_id = {p.instance_id: p for p in predictions}

    def is_correct(instance: CondaQAInstance) -> bool:
        prediction = by_id.get(instance.instance_id)
        if prediction is None:
            return False
        return normalize_answer(prediction.prediction) == normalize_answer(instance.gold)

    outcomes = {inst.instance_id: is_correct(inst) for inst in instances}
    correct = sum(outcomes.values())
    missing = sum(1 for inst in instances if inst.instance_id not in by_id)

    groups: dict[tuple[str, str], list[CondaQAInstance]] = {}
    for inst in instances:
        groups.setdefault((inst.question_id, inst.bundle_id), []).append(inst)

    def consistency(kinds: set[str] | None) -> float:
        hit = total = 0
        for members in groups.values():
            subset = (
                members
                if kinds is None
                else [m for m in members if m.edit_kind in kinds]
            )
            if kinds is not None:
                # edit-specific consistency only counts groups that contain
                # both the original and that edit
                present = {m.edit_kind for m in subset}
                if present != kinds:
                    continue
            if not subset:
                continue
            total += 1
            hit += all(outcomes[m.instance_id] for m in subset)
        return 100.0 * hit / total if total else 0.0

    per_edit: dict[str, dict[str, float]] = {}
    for kind in EDIT_KINDS:
        members = [i for i in instances if i.edit_kind == kind]
        if members:
            per_edit[kind] = {
                "accuracy": 100.0
                * sum(outcomes[m.instance_id] for m in members)
                / len(members),
                "n": float(len(members)),
            }

    by_cue: dict[str, dict[str, float]] = {}
    cued = [i for i in instances if i.negation_cue]
    if cued:
        tally: dict[str, list[bool]] = {}
        for inst in cued:
            category = categorize_negation_cue(inst.negation_cue)
            tally.setdefault(category, []).append(outcomes[inst.instance_id])
        by_cue = {
            category: {
                "accuracy": 100.0 * sum(flags) / len(flags),
                "n": float(len(flags)),
            }
            for category, flags in tally.items()
        }

    breakdowns = {"per_edit": per_edit}
    if by_cue:
        breakdowns["per_cue_category"] = by_cue
    return EvalReport(
        task="condaqa",
        n=len(instances),
        headline={
            "accuracy": 100.0 * correct / len(instances),
            "consistency_all": consistency(None),
            "consistency_par": consistency({"ORIGINAL", "PARAPHRASE"}),
            "consistency_sco": consistency({"ORIGINAL", "SCOPE"}),
            "consistency_aff": consistency({"ORIGINAL", "AFFIRMATIVE"}),
        },
        breakdowns=breakdowns,
        extras={"groups": len(groups), "missing": missing},
    )


# --- contrastive retrieval -------------------------------------------------------


def score_nevir(
    predictions: Sequence[PredictionRecord], pairs: Sequence[NevIRPair]
) -> EvalReport:
    """Pairwise accuracy: both queries of a pair must pick their own document.

    Predictions are per query, ids "<pair_id>:q1" / "<pair_id>:q2"; gold is
    Doc1 for q1 and Doc2 for q2 by construction.
    """
    if not pairs:
        raise EmptyInput("no gold pairs")
    gold: dict[str, str] = {}
    for pair in pairs:
        gold[f"{pair.pair_id}:q1"] = "Doc1"
        gold[f"{pair.pair_id}:q2"] = "Doc2"
    _check_ids(predictions, gold)
    by_id = {p.instance_id: normalize_label(p.prediction) for p in predictions}

    def correct(query_id: str) -> bool:
        return by_id.get(query_id, "") == normalize_label(gold[query_id])

    q1 = [correct(f"{p.pair_id}:q1") for p in pairs]
    q2 = [correct(f"{p.pair_id}:q2") for p in pairs]
    both = [a and b for a, b in zip(q1, q2)]
    missing = sum(1 for key in gold if key not in by_id)
    return EvalReport(
        task="nevir",
        n=len(pairs),
        headline={
            "pairwise_accuracy": 100.0 * sum(both) / len(pairs),
            "q1_accuracy": 100.0 * sum(q1) / len(pairs),
            "q2_accuracy": 100.0 * sum(q2) / len(pairs),
        },
        extras={"missing": missing},
    )


# --- paired significance ------------------------------------------------------------


@dataclass(frozen=True)
class McNemarResult:
    statistic: float
    p_value: float
    b: int  # A correct, B wrong
    c: int  # A wrong, B correct
    method: str  # "exact" | "chi2"

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "b": self.b,
            "c": self.c,
            "method": self.method,
        }


def _chi2_sf_1df(x: float) -> float:
    # survival of chi-square with one dof: P(X >= x) = erfc(sqrt(x/2))
    return math.erfc(math.sqrt(x / 2.0))


def mcnemar(
    correct_a: Mapping[str, bool], correct_b: Mapping[str, bool]
) -> McNemarResult:
    """Paired McNemar test over per-instance correctness of two systems.

    Both systems must cover exactly the same instances. Discordant counts of
    25 or more use the continuity-corrected chi-square approximation; fewer
    use the exact two-sided binomial. No discordant pairs means no evidence:
    statistic 0, p 1.
    """
    if not correct_a:
        raise EmptyInput("no paired instances")
    if set(correct_a) != set(correct_b):
        only_a = set(correct_a) - set(correct_b)
        only_b = set(correct_b) - set(correct_a)
        raise CoverageError(
            f"systems cover different instances ({len(only_a)} only in A, "
            f"{len(only_b)} only in B)"
        )
    b = sum(1 for key, ok in correct_a.items() if ok and not correct_b[key])
    c = sum(1 for key, ok in correct_a.items() if not ok and correct_b[key])
    n = b + c
    if n == 0:
        return McNemarResult(statistic=0.0, p_value=1.0, b=b, c=c, method="exact")
    if n >= 25:
        statistic = (abs(b - c) - 1) ** 2 / n
        return McNemarResult(
            statistic=statistic, p_value=_chi2_sf_1df(statistic), b=b, c=c, method="chi2"
        )
    tail = sum(math.comb(n, k) for k in range(max(b, c), n + 1)) * 0.5**n
    return McNemarResult(
        statistic=float(min(b, c)), p_value=min(1.0, 2.0 * tail), b=b, c=c, method="exact"
    )


def correctness_from_predictions(
    predictions: Sequence[PredictionRecord],
    gold: Mapping[str, str],
    *,
    normalizer: Callable[[str], str] = normalize_answer,
) -> dict[str, bool]:
    """Per-instance correctness map for mcnemar(); unanswered ids are wrong."""
    by_id = {p.instance_id: p.prediction for p in predictions}
    unknown = set(by_id) - set(gold)
    if unknown:
        raise UnknownInstance(f"predictions for unknown ids: {sorted(unknown)[:5]}")
    return {
        instance_id: normalizer(by_id.get(instance_id, "")) == normalizer(answer)
        for instance_id, answer in gold.items()
    }


# --- negation cue categories -----------------------------------------------------


VERBAL_CUES = frozenset(
    "not never no none nobody nothing nowhere neither nor cannot".split()
)
IMPLICIT_CUES = frozenset(
    "lack lacks lacked lacking without prevent prevents prevented preventing "
    "fail fails failed failing absence absent deny denies denied refuse "
    "refuses refused unless exclude excludes excluded".split()
)
DIMINISHER_CUES = frozenset(
    "rarely barely few hardly scarcely seldom little".split()
)
_AFFIXAL_PREFIXES = ("un", "in", "im", "il", "ir", "dis", "non")
_AFFIXAL_SUFFIX = "less"

CUE_CATEGORIES = ("VERBAL", "AFFIXAL", "IMPLICIT", "DIMINISHER", "OTHER")


def categorize_negation_cue(cue: str) -> str:
    """Bucket a surface cue: exact lexicon lookups first, then affix shape.

    Multi-word cues are categorized by their first word that matches any
    rule; a cue matching nothing is OTHER.
    """
    for token in cue.lower().split():
        word = token.strip(".,;:!?\"'()")
        if not word:
            continue
        if word in VERBAL_CUES or word.endswith("n't"):
            return "VERBAL"
        if word in IMPLICIT_CUES:
            return "IMPLICIT"
        if word in DIMINISHER_CUES:
            return "DIMINISHER"
        if len(word) > len(_AFFIXAL_SUFFIX) + 1 and word.endswith(_AFFIXAL_SUFFIX):
            return "AFFIXAL"
        for prefix in _AFFIXAL_PREFIXES:
            # affix rule needs a plausible stem, not just the prefix letters
            if len(word) >= len(prefix) + 3 and word.startswith(prefix):
                return "AFFIXAL"
    return "OTHER"


# --- inference ---------------------------------------------------------------------


@dataclass(frozen=True)
class InferenceItem:
    instance_id: str
    bindings: tuple[tuple[str, str], ...]


def classification_items(
    instances: Sequence[ClassificationInstance],
) -> list[InferenceItem]:
    return [
        InferenceItem(
            instance_id=i.instance_id,
            bindings=(("premise", i.premise), ("hypothesis", i.hypothesis)),
        )
        for i in instances
    ]


def condaqa_items(
    instances: Sequence[CondaQAInstance], exemplars: str
) -> list[InferenceItem]:
    return [
        InferenceItem(
            instance_id=i.instance_id,
            bindings=(
                ("exemplars", exemplars),
                ("passage", i.passage),
                ("question", i.question),
            ),
        )
        for i in instances
    ]


def nevir_items(pairs: Sequence[NevIRPair]) -> list[InferenceItem]:
    items = []
    for pair in pairs:
        for query_slot, query in (("q1", pair.query1), ("q2", pair.query2)):
            items.append(
                InferenceItem(
                    instance_id=f"{pair.pair_id}:{query_slot}",
                    bindings=(
                        ("doc1", pair.doc1),
                        ("doc2", pair.doc2),
                        ("query", query),
                    ),
                )
            )
    return items


def run_inference(
    items: Sequence[InferenceItem],
    client: ChatClient,
    template: PromptTemplate,
    out_path: str | Path,
    *,
    parse: Callable[[str], str] = lambda raw: raw.strip(),
    max_output_tokens: int = 64,
) -> int:
    """Predict every item into a JSONL file, skipping ids already present.

    Appending keyed records makes reruns resumable after a crash; the
    response cache additionally dedupes identical prompts. Returns how many
    new predictions were written.
    """
    out_path = Path(out_path)
    done = set()
    if out_path.exists():
        done = {record.instance_id for record in load_predictions(out_path)}

    written = 0
    with open(out_path, "a", encoding="utf-8", newline="\n") as fh:
        for item in items:
            if item.instance_id in done:
                continue
            request = render_template(
                template,
                dict(item.bindings),
                model_name=client.model_name,
                max_output_tokens=max_output_tokens,
            )
            raw = client.complete(request).content
            record = {
                "instance_id": item.instance_id,
                "prediction": parse(raw),
                "raw_output": raw,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            fh.flush()
            written += 1
    return written
