"""negkit: negation augmentation, validation, and evaluation for if-then
commonsense corpora."""

from .corpus import (
    EventText,
    LabeledTriple,
    Polarity,
    Relation,
    RELATIONS,
    Source,
    Triple,
    ValidityLabel,
    Variant,
    load_anion,
    load_atomic,
    make_triple,
    read_jsonl,
    write_jsonl,
)
from .negation import generate_variants, negate_head, negate_tail
from .verbalize import Statement, verbalize

__all__ = [
    "EventText",
    "LabeledTriple",
    "Polarity",
    "Relation",
    "RELATIONS",
    "Source",
    "Statement",
    "Triple",
    "ValidityLabel",
    "Variant",
    "generate_variants",
    "load_anion",
    "load_atomic",
    "make_triple",
    "negate_head",
    "negate_tail",
    "read_jsonl",
    "verbalize",
    "write_jsonl",
]

__version__ = "0.1.0"
