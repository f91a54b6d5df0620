"""Negation of event texts and construction of negated triple variants.

Three surface rules cover the corpora:

  AUX_INSERT   "not" goes right after the first auxiliary or modal
               ("PersonX is happy" -> "PersonX is not happy")
  DO_SUPPORT   finite lexical verbs take do-support with the verb
               de-inflected ("PersonX takes a picture" ->
               "PersonX does not take a picture")
  CUE_PREFIX   verbless tail phrases get a leading cue
               ("look at the picture" -> "not look at the picture")

Heads are finite clauses so they use the first two rules; tails fall back to
the cue prefix. An optional generative rewriter can replace the rule engine,
gated by a cue-presence and token-overlap acceptance check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from . import inflect
from .corpus import EventText, Polarity, Source, Triple, Variant, make_triple
from .errors import AlreadyNegated, NotAnOriginal, RewriteRejected, UnnegatableEvent

CUE = "not"

# Closed auxiliary/modal list. do/have forms are conditional: they count as
# auxiliaries only when actually auxiliating (see _aux_index).
AUX_ALWAYS = frozenset(
    "am is are was were be been being can could will would may might must should shall".split()
)
AUX_HAVE = frozenset(("have", "has", "had"))
AUX_DO = frozenset(("do", "does", "did"))

Negator = Callable[[EventText], tuple[EventText, "NegationRuleTrace"]]


@dataclass(frozen=True)
class NegationRuleTrace:
    """Audit record of one rule application."""

    rule: str  # AUX_INSERT | DO_SUPPORT | CUE_PREFIX | GENERATIVE
    cue_index: int  # token position of the inserted cue
    before: tuple[str, ...]
    after: tuple[str, ...]


def _check_not_already_negated(event: EventText) -> None:
    if event.polarity is Polarity.NEGATED:
        raise AlreadyNegated(f"event is already negated: {event.text!r}")
    for token in event.text.split():
        core, _ = inflect.split_token(token)
        low = core.lower()
        if low == CUE or low.endswith("n't"):
            raise AlreadyNegated(f"negation cue already present in {event.text!r}")


def _next_content_index(tokens: list[str], start: int) -> int | None:
    for j in range(start, len(tokens)):
        if not inflect.is_adverbish(tokens[j]):
            return j
    return None


def _aux_index(tokens: list[str]) -> int | None:
    for i, token in enumerate(tokens):
        core, _ = inflect.split_token(token)
        low = core.lower()
        if low in AUX_ALWAYS:
            return i
        if low in AUX_HAVE:
            j = _next_content_index(tokens, i + 1)
            if j is not None and inflect.is_past_participle(tokens[j]):
                return i
        if low in AUX_DO:
            j = _next_content_index(tokens, i + 1)
            if j is not None:
                classified = inflect.classify_verb(tokens[j])
                if classified is not None and classified[1] == "base":
                    return i
    return None


def _finite_verb_index(tokens: list[str]) -> tuple[int, str, str] | None:
    for i, token in enumerate(tokens):
        classified = inflect.classify_verb(token)
        if classified is not None:
            lemma, form = classified
            return i, lemma, form
    return None


def _negate_clause(event: EventText) -> tuple[EventText, NegationRuleTrace]:
    _check_not_already_negated(event)
    tokens = event.text.split()

    aux = _aux_index(tokens)
    if aux is not None:
        after = tokens[: aux + 1] + [CUE] + tokens[aux + 1 :]
        return (
            EventText(" ".join(after), Polarity.NEGATED),
            NegationRuleTrace("AUX_INSERT", aux + 1, tuple(tokens), tuple(after)),
        )

    found = _finite_verb_index(tokens)
    if found is None:
        raise UnnegatableEvent(f"no auxiliary or recognizable verb in {event.text!r}")
    verb_at, lemma, form = found

    # do-support attaches before any adverb run modifying the verb
    insert_at = verb_at
    while insert_at > 0 and inflect.is_adverbish(tokens[insert_at - 1]):
        insert_at -= 1

    do_form = {"3sg": "does", "past": "did", "base": "do"}[form]
    _, trailing = inflect.split_token(tokens[verb_at])
    after = (
        tokens[:insert_at]
        + [do_form, CUE]
        + tokens[insert_at:verb_at]
        + [lemma + trailing]
        + tokens[verb_at + 1 :]
    )
    return (
        EventText(" ".join(after), Polarity.NEGATED),
        NegationRuleTrace("DO_SUPPORT", insert_at + 1, tuple(tokens), tuple(after)),
    )


def negate_head(event: EventText) -> tuple[EventText, NegationRuleTrace]:
    """Negate a full-clause if-event."""
    return _negate_clause(event)


def negate_tail(event: EventText) -> tuple[EventText, NegationRuleTrace]:
    """Negate a then-event; phrases without an auxiliary get the cue prefix."""
    _check_not_already_negated(event)
    tokens = event.text.split()
    if _aux_index(tokens) is not None:
        return _negate_clause(event)
    after = [CUE] + tokens
    return (
        EventText(" ".join(after), Polarity.NEGATED),
        NegationRuleTrace("CUE_PREFIX", 0, tuple(tokens), tuple(after)),
    )


def generate_variants(
    triple: Triple,
    head_negator: Negator = negate_head,
    tail_negator: Negator = negate_tail,
) -> list[Triple]:
    """Build the negated variants of an ORIG triple.

    Affirmative-head originals yield NEG_IF, NEG_THEN and NEG_BOTH. Originals
    whose head is already negated (the negated-premise corpus) yield only
    NEG_BOTH, keeping the head verbatim: re-negating it would cancel the
    premise rather than deepen the contrast.
    """
    if triple.variant is not Variant.ORIG:
        raise NotAnOriginal(f"cannot derive variants from {triple.variant.value}")

    variants: list[Triple] = []
    if triple.head.negated:
        neg_tail, _ = tail_negator(triple.tail)
        variants.append(_variant_of(triple, Variant.NEG_BOTH, triple.head, neg_tail))
        return variants

    neg_head, _ = head_negator(triple.head)
    neg_tail, _ = tail_negator(triple.tail)
    variants.append(_variant_of(triple, Variant.NEG_IF, neg_head, triple.tail))
    variants.append(_variant_of(triple, Variant.NEG_THEN, triple.head, neg_tail))
    variants.append(_variant_of(triple, Variant.NEG_BOTH, neg_head, neg_tail))
    return variants


def _variant_of(parent: Triple, variant: Variant, head: EventText, tail: EventText) -> Triple:
    return make_triple(
        parent.source, parent.split, parent.relation, head, tail, variant, parent.id
    )


@dataclass
class AugmentReport:
    originals: int = 0
    variants: int = 0
    skipped_unnegatable: int = 0
    skipped_already_negated: int = 0
    generative_fallbacks: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def augment_corpus(
    triples: Iterable[Triple],
    head_negator: Negator = negate_head,
    tail_negator: Negator = negate_tail,
) -> tuple[list[Triple], AugmentReport]:
    """Expand ORIG triples with their variants, skipping unnegatable events.

    Output keeps each original immediately followed by its variants, so the
    order is a pure function of the input order.
    """
    report = AugmentReport()
    out: list[Triple] = []
    for triple in triples:
        report.originals += 1
        out.append(triple)
        try:
            variants = generate_variants(triple, head_negator, tail_negator)
        except UnnegatableEvent:
            report.skipped_unnegatable += 1
            continue
        except AlreadyNegated:
            report.skipped_already_negated += 1
            continue
        report.variants += len(variants)
        out.extend(variants)
    return out, report


# --- generative rewriting ------------------------------------------------


def parse_exemplar_pairs(text: str) -> list[tuple[str, str]]:
    """Parse a plain-text asset of blank-line-separated input/output pairs."""
    pairs = []
    for block in text.strip().split("\n\n"):
        lines = [line.strip() for line in block.splitlines() if line.strip()]
        if len(lines) != 2:
            raise ValueError(f"exemplar block must be two lines, got {lines!r}")
        pairs.append((lines[0], lines[1]))
    return pairs


def retained_fraction(original: str, rewrite: str) -> float:
    """Share of the original's unique content stems that survive the rewrite."""
    orig = {inflect.stem(t) for t in original.split()} - {"", CUE}
    if not orig:
        return 0.0
    new = {inflect.stem(t) for t in rewrite.split()}
    return len(orig & new) / len(orig)


def is_acceptable_rewrite(original: str, rewrite: str, min_overlap: float = 0.8) -> bool:
    """A rewrite must add a cue token and keep >= min_overlap of the content."""
    has_cue = any(
        inflect.split_token(t)[0].lower() == CUE or t.lower().endswith("n't")
        for t in rewrite.split()
    )
    return has_cue and retained_fraction(original, rewrite) >= min_overlap


_REWRITE_INSTRUCTION = (
    "Rewrite the event with its meaning negated. Keep the wording as close "
    "to the original as possible and change nothing else."
)


class GenerativeNegator:
    """LLM-backed drop-in for the rule negators.

    Each call renders few-shot rewrite exemplars plus the event, then applies
    the acceptance check. One retry on rejection; after that either fall back
    to the rule engine (default) or raise RewriteRejected.
    """

    def __init__(self, client, exemplars: list[tuple[str, str]], *, fallback: bool = True,
                 min_overlap: float = 0.8):
        self.client = client
        self.exemplars = list(exemplars)
        self.fallback = fallback
        self.min_overlap = min_overlap
        self.fallback_count = 0

    def _prompt(self, event_text: str) -> str:
        shots = "\n\n".join(f"Event: {a}\nNegated: {b}" for a, b in self.exemplars)
        return f"{_REWRITE_INSTRUCTION}\n\n{shots}\n\nEvent: {event_text}\nNegated:"

    def _rewrite(self, event: EventText, rule_negator: Negator) -> tuple[EventText, NegationRuleTrace]:
        _check_not_already_negated(event)
        from .chat import ChatMessage, ChatRequest  # local import avoids a cycle

        request = ChatRequest(
            model_name=self.client.model_name,
            messages=(ChatMessage("user", self._prompt(event.text)),),
            temperature=0.0,
        )
        for _ in range(2):
            reply = self.client.complete(request).content.strip().splitlines()
            candidate = reply[0].strip() if reply else ""
            if candidate and is_acceptable_rewrite(event.text, candidate, self.min_overlap):
                tokens = tuple(candidate.split())
                cue_index = next(
                    (i for i, t in enumerate(tokens)
                     if inflect.split_token(t)[0].lower() == CUE or t.lower().endswith("n't")),
                    0,
                )
                trace = NegationRuleTrace("GENERATIVE", cue_index, tuple(event.text.split()), tokens)
                return EventText(candidate, Polarity.NEGATED), trace
        if self.fallback:
            self.fallback_count += 1
            return rule_negator(event)
        raise RewriteRejected(f"no acceptable rewrite for {event.text!r}")

    def negate_head(self, event: EventText) -> tuple[EventText, NegationRuleTrace]:
        return self._rewrite(event, negate_head)

    def negate_tail(self, event: EventText) -> tuple[EventText, NegationRuleTrace]:
        return self._rewrite(event, negate_tail)


def negate_generative(event: EventText, client, exemplars: list[tuple[str, str]],
                      *, side: str = "head", min_overlap: float = 0.8) -> EventText:
    """One-shot generative negation without rule fallback."""
    negator = GenerativeNegator(client, exemplars, fallback=False, min_overlap=min_overlap)
    method = negator.negate_head if side == "head" else negator.negate_tail
    return method(event)[0]
