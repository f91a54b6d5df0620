import pytest
from hypothesis import given, strategies as st

import oracles
from negkit.chat import ChatClient, MockChatBackend, load_prompt_asset
from negkit.corpus import (
    Relation,
    Source,
    ValidityLabel,
    Variant,
)
from negkit.errors import (
    EmptyInput,
    RecombinationExhausted,
    ShortfallError,
    UnknownInstance,
    UnparseableVerdict,
)
from negkit.judging import (
    JudgeTrainingSpec,
    JudgeVerdict,
    MockJudgeOracle,
    RemoteJudge,
    build_ambiguous_set,
    build_invalid_set,
    build_judge_training_set,
    build_valid_set,
    evaluate_judge,
    judge_label,
    parse_verdict,
)
from negkit.negation import generate_variants


# --- verdict parsing -------------------------------------------------------

@pytest.mark.parametrize(
    ("raw", "expected"),
    [
        ("[Valid]", ValidityLabel.VALID),
        ("Valid", ValidityLabel.VALID),
        ("  [Invalid]\n", ValidityLabel.INVALID),
        ("[Ambiguous]", ValidityLabel.AMBIGUOUS),
        ("The statement is invalid.", ValidityLabel.INVALID),
        ("INVALID", ValidityLabel.INVALID),
        ("I'd call this ambiguous, not invalid", ValidityLabel.AMBIGUOUS),
        ("valid, though one could argue it is ambiguous", ValidityLabel.VALID),
        ("Answer: [Valid] because people usually do this", ValidityLabel.VALID),
    ],
)
def test_parse_verdict(raw, expected):
    assert parse_verdict(raw) is expected


def test_parse_verdict_rejects_unlabeled_text():
    for raw in ("", "no judgement here", "VALUED contribution"):
        with pytest.raises(UnparseableVerdict):
            parse_verdict(raw)


@given(st.sampled_from(["Valid", "Invalid", "Ambiguous"]),
       st.sampled_from(["", " ", "[", "Answer: ", "I think "]),
       st.sampled_from(["", "]", ".", "!", " overall"]))
def test_parse_verdict_ignores_wrapping(label, prefix, suffix):
    assert parse_verdict(f"{prefix}{label}{suffix}").value == label


# --- remote judge ----------------------------------------------------------

def _client(script):
    return ChatClient(MockChatBackend(script), model_name="judge-model",
                      retry_limit=0, backoff=0)


def test_remote_judge_renders_statement_and_parses(synthetic_originals):
    triple = synthetic_originals(Source.ATOMIC, per_relation=1)[0]
    backend = MockChatBackend("[Invalid]")
    judge = RemoteJudge(ChatClient(backend, model_name="judge-model", backoff=0),
                        load_prompt_asset("judge_validation"))
    verdict = judge.verdict(triple)
    assert verdict.label is ValidityLabel.INVALID
    assert verdict.triple_id == triple.id
    sent = backend.calls[0].messages[-1].content
    assert f"If {triple.head.text}, then" in sent


def test_judge_label_records_backend():
    oracle = MockJudgeOracle()

    class _One:
        pass

    import negkit.corpus as c
    triple = c.make_triple(Source.ATOMIC, "train", Relation.xWant,
                           c.EventText("PersonX naps"), c.EventText("to rest"))
    labeled = judge_label(triple, oracle)
    assert labeled.label_source == "judge:mock-oracle"
    assert labeled.label is oracle.label(triple)


# --- mock oracle properties --------------------------------------------------

def test_oracle_is_deterministic_and_lineage_aware(synthetic_originals):
    oracle = MockJudgeOracle()
    originals = synthetic_originals(Source.ATOMIC, per_relation=12)
    labels = [oracle.label(t) for t in originals]
    assert labels == [oracle.label(t) for t in originals]
    assert len(set(labels)) == 3  # all three labels occur at this pool size

    # an ambiguous lineage stays ambiguous for every variant
    for orig in originals:
        if oracle.label(orig) is ValidityLabel.AMBIGUOUS:
            for variant in generate_variants(orig):
                assert oracle.label(variant) is ValidityLabel.AMBIGUOUS
            break
    else:
        pytest.fail("expected at least one ambiguous lineage")


def test_oracle_produces_all_contrastive_patterns(synthetic_originals):
    oracle = MockJudgeOracle()
    patterns = set()
    for orig in synthetic_originals(Source.ATOMIC, per_relation=30):
        trio = [orig] + list(generate_variants(orig))
        labels = tuple(oracle.label(t).value[0] for t in trio[:3])  # orig, neg_if, neg_then
        if "A" not in labels:
            patterns.add(labels)
    assert {("V", "I", "V"), ("V", "V", "I"), ("I", "V", "I"), ("I", "I", "V")} <= patterns


# --- training-set construction ----------------------------------------------

@pytest.fixture
def corpora(synthetic_originals):
    return {
        Source.ATOMIC: synthetic_originals(Source.ATOMIC, per_relation=12),
        Source.ANION: synthetic_originals(Source.ANION, per_relation=12),
    }


SPEC2 = JudgeTrainingSpec(sources=(Source.ATOMIC, Source.ANION),
                          per_relation_per_label=8, seed=13)


def test_spec_arithmetic():
    assert SPEC2.per_source == 4
    assert SPEC2.total == 8 * 9 * 3
    lone = JudgeTrainingSpec(sources=(Source.ATOMIC,), per_relation_per_label=8, seed=13)
    assert lone.per_source == 8
    odd = JudgeTrainingSpec(sources=(Source.ATOMIC, Source.ANION),
                            per_relation_per_label=7, seed=13)
    with pytest.raises(ShortfallError):
        _ = odd.per_source


def test_valid_set_counts_and_determinism(corpora):
    first = build_valid_set(corpora, SPEC2)
    second = build_valid_set(corpora, SPEC2)
    assert [t.triple.id for t in first] == [t.triple.id for t in second]
    assert len(first) == SPEC2.per_relation_per_label * 9
    assert all(t.label is ValidityLabel.VALID for t in first)
    by_cell = {}
    for item in first:
        cell = (item.triple.source, item.triple.relation)
        by_cell[cell] = by_cell.get(cell, 0) + 1
    assert set(by_cell.values()) == {SPEC2.per_source}
    assert len(by_cell) == 18


def test_valid_set_shortfall(corpora):
    spec = JudgeTrainingSpec(sources=(Source.ATOMIC,), per_relation_per_label=500, seed=1)
    with pytest.raises(ShortfallError):
        build_valid_set(corpora, spec)


def test_ambiguous_set_is_novel_and_source_tagged(corpora):
    items = build_ambiguous_set(corpora, SPEC2)
    assert len(items) == SPEC2.per_relation_per_label * 9
    existing = {(t.head.text, t.relation, t.tail.text)
                for pool in corpora.values() for t in pool}
    seen = set()
    for item in items:
        key = (item.triple.head.text, item.triple.relation, item.triple.tail.text)
        assert key not in existing
        assert key not in seen
        seen.add(key)
        assert item.triple.source is Source.GENERATED
        assert item.label is ValidityLabel.AMBIGUOUS


def test_ambiguous_set_exhaustion():
    # one original per relation: every recombination collides with itself
    tiny = {Source.ATOMIC: []}
    import negkit.corpus as c
    tiny[Source.ATOMIC] = [
        c.make_triple(Source.ATOMIC, "train", rel,
                      c.EventText("PersonX trades the solo item"),
                      c.EventText(f"unique tail of {rel.value}"))
        for rel in Relation
    ]
    spec = JudgeTrainingSpec(sources=(Source.ATOMIC,), per_relation_per_label=5, seed=7)
    with pytest.raises(RecombinationExhausted):
        build_ambiguous_set(tiny, spec)


def test_invalid_set_uses_generator(corpora):
    client = _client("to instantly become the moon")
    items = build_invalid_set(corpora, SPEC2, client,
                              load_prompt_asset("invalid_generation"))
    assert len(items) == SPEC2.per_relation_per_label * 9
    assert all(t.label is ValidityLabel.INVALID for t in items)
    assert all(t.triple.source is Source.GENERATED for t in items)
    assert all(t.triple.tail.text == "to instantly become the moon" for t in items)


def test_invalid_set_redraws_on_rejected_generation(corpora):
    # empty first reply forces a redraw from the extras queue
    replies = iter([""] + ["to levitate the ocean"] * 10_000)
    client = _client(lambda request: next(replies))
    items = build_invalid_set(corpora, SPEC2, client,
                              load_prompt_asset("invalid_generation"))
    assert len(items) == SPEC2.per_relation_per_label * 9


def test_full_training_set_shape(corpora):
    client = _client("to grow a second shadow")
    items = build_judge_training_set(corpora, SPEC2, client,
                                     load_prompt_asset("invalid_generation"))
    assert len(items) == SPEC2.total
    per_label = {}
    for item in items:
        per_label[item.label] = per_label.get(item.label, 0) + 1
    assert per_label == {
        ValidityLabel.VALID: SPEC2.total // 3,
        ValidityLabel.INVALID: SPEC2.total // 3,
        ValidityLabel.AMBIGUOUS: SPEC2.total // 3,
    }
    # ids are pairwise distinct across the whole set
    ids = [item.triple.id for item in items]
    assert len(set(ids)) == len(ids)


# --- judge evaluation ---------------------------------------------------------

def _gold_and_verdicts(synthetic_originals, n_flip=5):
    oracle = MockJudgeOracle()
    triples = synthetic_originals(Source.ATOMIC, per_relation=4)
    gold = [judge_label(t, oracle) for t in triples]
    cycle = {
        ValidityLabel.VALID: ValidityLabel.INVALID,
        ValidityLabel.INVALID: ValidityLabel.AMBIGUOUS,
        ValidityLabel.AMBIGUOUS: ValidityLabel.VALID,
    }
    verdicts = []
    for i, item in enumerate(gold):
        label = cycle[item.label] if i < n_flip else item.label
        verdicts.append(JudgeVerdict(item.triple.id, label, label.value, "test"))
    return gold, verdicts


def test_evaluate_judge_matches_oracles(synthetic_originals):
    gold, verdicts = _gold_and_verdicts(synthetic_originals)
    report = evaluate_judge(verdicts, gold)
    gold_labels = [g.label.value for g in gold]
    pred_labels = [v.label.value for v in verdicts]
    assert report.n == len(gold)
    assert report.headline["accuracy"] == pytest.approx(
        100.0 * oracles.accuracy_oracle(gold_labels, pred_labels), rel=1e-9)
    labels = [l.value for l in ValidityLabel]
    _, _, macro_f1 = oracles.macro_oracle(gold_labels, pred_labels, labels)
    assert report.headline["f1"] == pytest.approx(macro_f1, rel=1e-9)
    for label in labels:
        p, r, f1 = oracles.prf_oracle(gold_labels, pred_labels, label)
        got = report.breakdowns["per_label"][label]
        assert got["precision"] == pytest.approx(p, rel=1e-9)
        assert got["recall"] == pytest.approx(r, rel=1e-9)
        assert got["f1"] == pytest.approx(f1, rel=1e-9)


def test_evaluate_judge_frozen_confusion(synthetic_originals):
    """Hand-checked 2-label confusion.

    gold: V V V V I I -> preds: V V I I I I
    Valid:   P=1.0 (2/2), R=0.5 (2/4)
    Invalid: P=0.5 (2/4), R=1.0 (2/2)
    accuracy = 4/6
    """
    triples = synthetic_originals(Source.ATOMIC, per_relation=1)[:6]
    gold_labels = [ValidityLabel.VALID] * 4 + [ValidityLabel.INVALID] * 2
    pred_labels = [ValidityLabel.VALID] * 2 + [ValidityLabel.INVALID] * 4
    from negkit.corpus import LabeledTriple
    gold = [LabeledTriple(t, g, "synthetic") for t, g in zip(triples, gold_labels)]
    verdicts = [JudgeVerdict(t.id, p, p.value, "test")
                for t, p in zip(triples, pred_labels)]
    report = evaluate_judge(verdicts, gold)
    assert report.headline["accuracy"] == pytest.approx(100.0 * 4 / 6, rel=1e-12)
    per = report.breakdowns["per_label"]
    assert per["Valid"]["precision"] == 1.0
    assert per["Valid"]["recall"] == 0.5
    assert per["Invalid"]["precision"] == 0.5
    assert per["Invalid"]["recall"] == 1.0
    assert per["Ambiguous"]["support"] == 0.0


def test_evaluate_judge_errors(synthetic_originals):
    gold, verdicts = _gold_and_verdicts(synthetic_originals)
    with pytest.raises(EmptyInput):
        evaluate_judge([], gold)
    stray = JudgeVerdict("f" * 16, ValidityLabel.VALID, "Valid", "test")
    with pytest.raises(UnknownInstance):
        evaluate_judge(verdicts + [stray], gold)
    # duplicate verdicts for one id are collapsed, not double counted
    report = evaluate_judge(verdicts + [verdicts[0]], gold)
    assert report.n == len(gold)
