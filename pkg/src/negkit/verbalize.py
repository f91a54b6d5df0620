"""Render triples as single-sentence if-then statements.

The statement form is fixed: "If {head}, then {fragment} {tail}." where the
fragment comes from the relation. Relations about the other participant
resolve {object} from the head: an explicit PersonY wins, then PersonZ,
otherwise the generic "others".
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import EventText, Triple
from .inflect import split_token

_TERMINALS = (".", "!", "?")


@dataclass(frozen=True)
class Statement:
    text: str
    triple_id: str


def extract_object(head: EventText) -> str:
    mentions = {split_token(token)[0].lower() for token in head.text.split()}
    if "persony" in mentions:
        return "PersonY"
    if "personz" in mentions:
        return "PersonZ"
    return "others"


def verbalize(triple: Triple) -> Statement:
    fragment = triple.relation.template
    if "{object}" in fragment:
        fragment = fragment.replace("{object}", extract_object(triple.head))
    text = f"If {triple.head.text}, then {fragment} {triple.tail.text}"
    if not text.endswith(_TERMINALS):
        text += "."
    return Statement(text=text, triple_id=triple.id)
