import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for oracles.py

from negkit.corpus import (
    EventText,
    Polarity,
    Relation,
    RELATIONS,
    Source,
    Triple,
    make_triple,
)

TOY_DIR = Path(__file__).parent.parent / "src" / "negkit" / "assets" / "toy"
ATOMIC_TOY = TOY_DIR / "atomic_toy.csv"
ANION_TOY = TOY_DIR / "anion_toy.csv"


@pytest.fixture(scope="session")
def atomic_toy_path() -> Path:
    return ATOMIC_TOY


@pytest.fixture(scope="session")
def anion_toy_path() -> Path:
    return ANION_TOY


def make_originals(
    source: Source, per_relation: int, split: str = "train", tag: str = ""
) -> list[Triple]:
    """Deterministic synthetic ORIG triples, per_relation for every relation.

    Heads are guaranteed negatable (simple 3sg clauses); text is unique per
    (relation, index) so ids never collide.
    """
    negated = source is Source.ANION
    triples = []
    for relation in RELATIONS:
        for i in range(per_relation):
            noun = f"{tag}item{i}"
            if negated:
                head = EventText(
                    f"PersonX does not trade the {noun} of {relation.value.lower()}",
                    polarity=Polarity.NEGATED,
                )
            else:
                head = EventText(f"PersonX trades the {noun} of {relation.value.lower()}")
            tail = EventText(f"to inspect the {noun} carefully")
            triples.append(make_triple(source, split, relation, head, tail))
    return triples


@pytest.fixture(scope="session")
def synthetic_originals():
    return make_originals
