"""Corpus data model and ingestion for if-then commonsense triples.

Two source corpora are supported: the event-centric one whose rows carry an
affirmative base event plus per-relation annotation lists ("atomic" layout),
and the negated-premise one shipped as flat event/relation/tail rows ("anion"
layout). Both can also round-trip through the canonical JSONL produced here.
"""

from __future__ import annotations

import ast
import csv
import hashlib
import io
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping, TextIO

from .errors import MalformedRow, UnknownRelation

BLANK = "___"

# Verbalization fragments per relation; {object} is resolved against the head.
RELATION_TEMPLATES: Mapping[str, str] = {
    "oEffect": "the effect of {object} is",
    "oReact": "the reaction of {object} is",
    "oWant": "{object} want",
    "xAttr": "the attribute of PersonX is",
    "xEffect": "the effect of PersonX is",
    "xIntent": "the intention of PersonX is",
    "xNeed": "PersonX needs",
    "xReact": "the reaction of PersonX is",
    "xWant": "PersonX wants",
}


class Relation(str, Enum):
    """The closed set of nine if-then relations."""

    oEffect = "oEffect"
    oReact = "oReact"
    oWant = "oWant"
    xAttr = "xAttr"
    xEffect = "xEffect"
    xIntent = "xIntent"
    xNeed = "xNeed"
    xReact = "xReact"
    xWant = "xWant"

    @property
    def template(self) -> str:
        return RELATION_TEMPLATES[self.value]

    @classmethod
    def parse(cls, code: str) -> "Relation":
        try:
            return cls(code)
        except ValueError:
            raise UnknownRelation(f"unknown relation code {code!r}") from None


RELATIONS: tuple[Relation, ...] = tuple(Relation)


class Source(str, Enum):
    ATOMIC = "ATOMIC"
    ANION = "ANION"
    GENERATED = "GENERATED"


class Variant(str, Enum):
    ORIG = "ORIG"
    NEG_IF = "NEG_IF"
    NEG_THEN = "NEG_THEN"
    NEG_BOTH = "NEG_BOTH"


class Polarity(str, Enum):
    AFFIRMATIVE = "affirmative"
    NEGATED = "negated"


class ValidityLabel(str, Enum):
    VALID = "Valid"
    INVALID = "Invalid"
    AMBIGUOUS = "Ambiguous"

    @classmethod
    def parse(cls, text: str) -> "ValidityLabel":
        for member in cls:
            if member.value.lower() == text.strip().lower():
                return member
        raise ValueError(f"not a validity label: {text!r}")


@dataclass(frozen=True)
class EventText:
    """A head or tail surface string plus its polarity."""

    text: str
    polarity: Polarity = Polarity.AFFIRMATIVE

    def __post_init__(self) -> None:
        trimmed = " ".join(self.text.split())
        if not trimmed:
            raise ValueError("event text must be non-empty")
        object.__setattr__(self, "text", trimmed)

    @property
    def contains_blank(self) -> bool:
        return BLANK in self.text

    @property
    def negated(self) -> bool:
        return self.polarity is Polarity.NEGATED


def triple_id(
    source: Source,
    split: str,
    relation: Relation,
    head_text: str,
    tail_text: str,
    variant: Variant,
) -> str:
    """Content hash identifying a triple; stable across runs and machines."""
    payload = "\x1f".join(
        (source.value, split, relation.value, head_text, tail_text, variant.value)
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class Triple:
    id: str
    source: Source
    split: str
    variant: Variant
    parent_id: str | None
    relation: Relation
    head: EventText
    tail: EventText

    def __post_init__(self) -> None:
        if (self.variant is Variant.ORIG) != (self.parent_id is None):
            raise ValueError(
                f"triple {self.id}: parent_id must be absent exactly for ORIG"
            )


def make_triple(
    source: Source,
    split: str,
    relation: Relation,
    head: EventText,
    tail: EventText,
    variant: Variant = Variant.ORIG,
    parent_id: str | None = None,
) -> Triple:
    return Triple(
        id=triple_id(source, split, relation, head.text, tail.text, variant),
        source=source,
        split=split,
        variant=variant,
        parent_id=parent_id,
        relation=relation,
        head=head,
        tail=tail,
    )


@dataclass(frozen=True)
class LabeledTriple:
    triple: Triple
    label: ValidityLabel
    label_source: str  # e.g. "synthetic", "judge:<model>", "annotator:<id>", "random"


@dataclass
class IngestReport:
    """Counts of what a loader kept and dropped, for the ingest manifest."""

    rows_read: int = 0
    triples_kept: int = 0
    duplicates_collapsed: int = 0
    skipped_other_split: int = 0
    skipped_none_tail: int = 0
    skipped_empty: int = 0
    skipped_nonlogical: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


# --- canonical serialization -------------------------------------------

_CANONICAL_KEYS = (
    "id",
    "source",
    "split",
    "variant",
    "parent_id",
    "relation",
    "head",
    "tail",
    "head_negated",
    "tail_negated",
)


def triple_to_record(triple: Triple) -> dict:
    return {
        "id": triple.id,
        "source": triple.source.value,
        "split": triple.split,
        "variant": triple.variant.value,
        "parent_id": triple.parent_id,
        "relation": triple.relation.value,
        "head": triple.head.text,
        "tail": triple.tail.text,
        "head_negated": triple.head.negated,
        "tail_negated": triple.tail.negated,
    }


def triple_from_record(record: Mapping) -> Triple:
    missing = [k for k in _CANONICAL_KEYS if k not in record]
    if missing:
        raise MalformedRow(f"record missing keys {missing}: {record!r}")
    head = EventText(
        record["head"],
        Polarity.NEGATED if record["head_negated"] else Polarity.AFFIRMATIVE,
    )
    tail = EventText(
        record["tail"],
        Polarity.NEGATED if record["tail_negated"] else Polarity.AFFIRMATIVE,
    )
    return Triple(
        id=record["id"],
        source=Source(record["source"]),
        split=record["split"],
        variant=Variant(record["variant"]),
        parent_id=record["parent_id"],
        relation=Relation.parse(record["relation"]),
        head=head,
        tail=tail,
    )


def dump_record(record: Mapping) -> str:
    # ensure_ascii off so ids stay stable across locales; key order is fixed
    # by construction of the record dicts (3.7+ preserves insertion order).
    return json.dumps(record, ensure_ascii=False)


def write_jsonl(triples: Iterable[Triple], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for triple in triples:
            fh.write(dump_record(triple_to_record(triple)) + "\n")


def read_jsonl(path: str | Path) -> list[Triple]:
    triples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRow(f"{path}:{lineno}: not JSON: {exc}") from None
            triples.append(triple_from_record(record))
    return triples


def labeled_to_record(item: LabeledTriple) -> dict:
    record = triple_to_record(item.triple)
    record["label"] = item.label.value
    record["label_source"] = item.label_source
    return record


def labeled_from_record(record: Mapping) -> LabeledTriple:
    return LabeledTriple(
        triple=triple_from_record(record),
        label=ValidityLabel(record["label"]),
        label_source=record.get("label_source", "unknown"),
    )


def write_labeled_jsonl(items: Iterable[LabeledTriple], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for item in items:
            fh.write(dump_record(labeled_to_record(item)) + "\n")


def read_labeled_jsonl(path: str | Path) -> list[LabeledTriple]:
    items = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRow(f"{path}:{lineno}: not JSON: {exc}") from None
            items.append(labeled_from_record(record))
    return items


# --- loaders ------------------------------------------------------------

_SPLIT_ALIASES = {
    "train": {"train", "trn"},
    "test": {"test", "tst"},
    "dev": {"dev", "val"},
}


def _split_matches(value: str, requested: str) -> bool:
    return value.strip().lower() in _SPLIT_ALIASES.get(requested, {requested})


def _looks_like_jsonl(path: Path) -> bool:
    if path.suffix == ".jsonl":
        return True
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                return line.lstrip().startswith("{")
    return False


def _from_canonical(path: Path, source: Source, split: str, report: IngestReport) -> list[Triple]:
    kept = []
    for triple in read_jsonl(path):
        report.rows_read += 1
        if triple.source is not source:
            raise MalformedRow(
                f"{path}: expected {source.value} records, found {triple.source.value}"
            )
        if not _split_matches(triple.split, split):
            report.skipped_other_split += 1
            continue
        kept.append(triple)
    report.triples_kept = len(kept)
    return kept


def _parse_tail_cell(cell: str, where: str) -> list[str]:
    cell = cell.strip()
    if not cell:
        return []
    try:
        value = json.loads(cell)
    except json.JSONDecodeError:
        try:
            value = ast.literal_eval(cell)
        except (ValueError, SyntaxError) as exc:
            raise MalformedRow(f"{where}: cannot parse annotation cell: {exc}") from None
    if not isinstance(value, list):
        raise MalformedRow(f"{where}: annotation cell is not a list")
    return [str(v) for v in value]


def _open_rows(path: Path) -> Iterator[list[str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        sample = fh.read(4096)
        fh.seek(0)
        delimiter = "\t" if sample.count("\t") > sample.count(",") else ","
        yield from csv.reader(fh, delimiter=delimiter)


def load_atomic(
    path: str | Path, split: str = "train", report: IngestReport | None = None
) -> list[Triple]:
    """Read the event-per-row corpus into ORIG triples for one split.

    Rows explode into one triple per (relation, tail) pair. Tails equal to
    the literal string "none" are annotation placeholders and are dropped.
    Duplicate (relation, head, tail) combinations collapse to the first
    occurrence; file order is otherwise preserved so identical input bytes
    give identical output order.
    """
    path = Path(path)
    report = report if report is not None else IngestReport()
    if _looks_like_jsonl(path):
        return _from_canonical(path, Source.ATOMIC, split, report)

    rows = _open_rows(path)
    try:
        header = next(rows)
    except StopIteration:
        raise MalformedRow(f"{path}: empty file") from None

    relation_cols: dict[int, Relation] = {}
    event_col = split_col = None
    for idx, name in enumerate(header):
        name = name.strip()
        if name == "event":
            event_col = idx
        elif name == "split":
            split_col = idx
        elif name == "prefix":
            continue
        elif name in RELATION_TEMPLATES:
            relation_cols[idx] = Relation(name)
        else:
            raise UnknownRelation(f"{path}: unknown relation column {name!r}")
    if event_col is None:
        raise MalformedRow(f"{path}: no 'event' column")
    if not relation_cols:
        raise MalformedRow(f"{path}: no relation columns")

    seen: set[str] = set()
    kept: list[Triple] = []
    for rownum, row in enumerate(rows, start=2):
        if not any(cell.strip() for cell in row):
            continue
        report.rows_read += 1
        if len(row) < len(header):
            raise MalformedRow(f"{path}:{rownum}: expected {len(header)} cells, got {len(row)}")
        if split_col is not None and not _split_matches(row[split_col], split):
            report.skipped_other_split += 1
            continue
        head_text = row[event_col].strip()
        if not head_text:
            report.skipped_empty += 1
            continue
        head = EventText(head_text)
        for idx, relation in relation_cols.items():
            for tail_text in _parse_tail_cell(row[idx], f"{path}:{rownum}:{relation.value}"):
                tail_text = " ".join(tail_text.split())
                if not tail_text:
                    report.skipped_empty += 1
                    continue
                if tail_text.lower() == "none":
                    report.skipped_none_tail += 1
                    continue
                triple = make_triple(Source.ATOMIC, split, relation, head, EventText(tail_text))
                if triple.id in seen:
                    report.duplicates_collapsed += 1
                    continue
                seen.add(triple.id)
                kept.append(triple)
    report.triples_kept = len(kept)
    return kept


_ANION_EVENT_COLS = ("event", "head")
_ANION_TYPE_COLS = ("negation_type", "type")


def load_anion(
    path: str | Path, split: str = "train", report: IngestReport | None = None
) -> list[Triple]:
    """Read the negated-premise corpus (flat event/relation/tail rows).

    Heads arrive already negated, so their polarity is trusted as NEGATED.
    When a negation-type column is present, only logical-negation rows are
    kept; the other guide styles are out of scope here.
    """
    path = Path(path)
    report = report if report is not None else IngestReport()
    if _looks_like_jsonl(path):
        return _from_canonical(path, Source.ANION, split, report)

    rows = _open_rows(path)
    try:
        header = [name.strip() for name in next(rows)]
    except StopIteration:
        raise MalformedRow(f"{path}: empty file") from None

    def col(names: tuple[str, ...]) -> int | None:
        for name in names:
            if name in header:
                return header.index(name)
        return None

    event_col = col(_ANION_EVENT_COLS)
    relation_col = col(("relation",))
    tail_col = col(("tail",))
    split_col = col(("split",))
    type_col = col(_ANION_TYPE_COLS)
    if event_col is None or relation_col is None or tail_col is None:
        raise MalformedRow(f"{path}: need event/relation/tail columns, have {header}")

    seen: set[str] = set()
    kept: list[Triple] = []
    for rownum, row in enumerate(rows, start=2):
        if not any(cell.strip() for cell in row):
            continue
        report.rows_read += 1
        if len(row) < len(header):
            raise MalformedRow(f"{path}:{rownum}: expected {len(header)} cells, got {len(row)}")
        if split_col is not None and not _split_matches(row[split_col], split):
            report.skipped_other_split += 1
            continue
        if type_col is not None:
            kind = row[type_col].strip().lower().replace(" ", "_")
            if kind not in ("logical", "logical_negation", ""):
                report.skipped_nonlogical += 1
                continue
        head_text = row[event_col].strip()
        tail_text = " ".join(row[tail_col].split())
        if not head_text or not tail_text:
            report.skipped_empty += 1
            continue
        if tail_text.lower() == "none":
            report.skipped_none_tail += 1
            continue
        relation = Relation.parse(row[relation_col].strip())
        triple = make_triple(
            Source.ANION,
            split,
            relation,
            EventText(head_text, Polarity.NEGATED),
            EventText(tail_text),
        )
        if triple.id in seen:
            report.duplicates_collapsed += 1
            continue
        seen.add(triple.id)
        kept.append(triple)
    report.triples_kept = len(kept)
    return kept


def filter_underspecified(triples: Iterable[Triple]) -> tuple[list[Triple], int]:
    """Drop triples whose head or tail still contains a placeholder blank."""
    kept, dropped = [], 0
    for triple in triples:
        if triple.head.contains_blank or triple.tail.contains_blank:
            dropped += 1
        else:
            kept.append(triple)
    return kept, dropped
