from collections import Counter
from itertools import product

import pytest

from negkit.corpus import (
    EventText,
    LabeledTriple,
    Relation,
    Source,
    ValidityLabel,
    Variant,
    make_triple,
)
from negkit.corpus_build import (
    ATOMIC_PATTERNS,
    CorpusStats,
    TrainingGroup,
    VariantGroup,
    baseline_targets,
    build_baseline,
    corpus_from_anion_groups,
    corpus_from_atomic_groups,
    export_instruction_jsonl,
    group_variants,
    label_corpus,
    merge_corpora,
    randomize_labels,
    sample_subset,
    select_contrastive_anion,
    select_contrastive_atomic,
    subset_by_variant,
    training_records,
)
from negkit.errors import (
    ExportRejected,
    IncompleteGroup,
    LabelingAborted,
    ShortfallError,
)
from negkit.judging import MockJudgeOracle
from negkit.negation import generate_variants

V, I, A = ValidityLabel.VALID, ValidityLabel.INVALID, ValidityLabel.AMBIGUOUS


def _atomic_group(labels, noun="lamp"):
    """Build a full ATOMIC variant group with the given 4 labels."""
    orig = make_triple(Source.ATOMIC, "train", Relation.xWant,
                       EventText(f"PersonX trades the {noun}"),
                       EventText(f"to inspect the {noun}"))
    variants = generate_variants(orig)
    members = [orig] + variants
    labeled = [LabeledTriple(t, lab, "synthetic") for t, lab in zip(members, labels)]
    return VariantGroup(orig=labeled[0], neg_if=labeled[1],
                        neg_then=labeled[2], neg_both=labeled[3])


def _anion_group(labels, noun="kite"):
    orig = make_triple(Source.ANION, "train", Relation.xWant,
                       EventText(f"PersonX does not trade the {noun}",
                                 polarity=__import__("negkit.corpus", fromlist=["Polarity"]).Polarity.NEGATED),
                       EventText(f"to keep the {noun}"))
    neg_both = generate_variants(orig)[0]
    return VariantGroup(
        orig=LabeledTriple(orig, labels[0], "synthetic"),
        neg_both=LabeledTriple(neg_both, labels[1], "synthetic"),
    )


# --- grouping ---------------------------------------------------------------

def test_group_variants_assembles_by_parent():
    g1 = _atomic_group([V, I, V, I], "lamp")
    g2 = _atomic_group([V, V, I, I], "rope")
    flat = [m for g in (g1, g2) for m in g.members()]
    flat.reverse()  # input order must not matter
    groups = group_variants(flat)
    assert len(groups) == 2
    assert [g.orig.triple.id for g in groups] == sorted(g.orig.triple.id for g in groups)
    assert all(g.neg_if and g.neg_then and g.neg_both for g in groups)


def test_group_variants_orphan_policy():
    g = _atomic_group([V, I, V, I])
    orphan_only = [m for m in g.members() if m.triple.variant is not Variant.ORIG]
    assert group_variants(orphan_only) == []
    with pytest.raises(IncompleteGroup):
        group_variants(orphan_only, strict=True)


def test_variant_group_validates_slots():
    g = _atomic_group([V, I, V, I])
    with pytest.raises(ValueError):
        VariantGroup(orig=g.neg_if)
    with pytest.raises(ValueError):
        VariantGroup(orig=g.orig, neg_if=g.neg_then)
    other = _atomic_group([V, I, V, I], "bell")
    with pytest.raises(ValueError):
        VariantGroup(orig=g.orig, neg_if=other.neg_if)


# --- labeling ----------------------------------------------------------------

class _FlakyJudge:
    """Oracle that blows up on every second triple."""

    def __init__(self):
        self.oracle = MockJudgeOracle()
        self.n = 0

    def verdict(self, triple):
        self.n += 1
        if self.n % 2 == 0:
            raise RuntimeError("backend hiccup")
        return self.oracle.verdict(triple)


def test_label_corpus_quarantines_failures(synthetic_originals):
    triples = synthetic_originals(Source.ATOMIC, per_relation=2)
    labeled, quarantine = label_corpus(triples, _FlakyJudge())
    assert len(labeled) + len(quarantine) == len(triples)
    assert len(quarantine) == len(triples) // 2
    assert all("RuntimeError" in q["error"] for q in quarantine)


def test_label_corpus_aborts_over_budget(synthetic_originals):
    triples = synthetic_originals(Source.ATOMIC, per_relation=2)
    with pytest.raises(LabelingAborted):
        label_corpus(triples, _FlakyJudge(), max_quarantined=2)


def test_corpus_stats_counts(synthetic_originals):
    oracle = MockJudgeOracle()
    triples = synthetic_originals(Source.ATOMIC, per_relation=3)
    labeled, _ = label_corpus(triples, oracle)
    stats = CorpusStats.from_labeled(labeled)
    assert stats.total == len(triples)
    assert stats.variant_total(Variant.ORIG.value) == len(triples)
    pct = stats.percentages()[Variant.ORIG.value]
    assert sum(pct.values()) == pytest.approx(100.0)
    assert Variant.ORIG.value in stats.to_table()


# --- contrastive selection: the full 27-pattern truth table --------------------

def test_atomic_selection_truth_table():
    accepted = set()
    for pattern in product((V, I, A), repeat=3):
        group = _atomic_group(list(pattern) + [V])
        if select_contrastive_atomic([group]):
            accepted.add(pattern)
    assert accepted == {(V, I, V), (V, V, I), (I, V, I), (I, I, V)}
    assert accepted == set(ATOMIC_PATTERNS)
    # every accepted pattern is a contrast: exactly one single-negation flip
    for orig, neg_if, neg_then in accepted:
        assert {orig, neg_if, neg_then} == {V, I}
        assert (neg_if is not orig) != (neg_then is not orig)


def test_atomic_selection_ignores_neg_both_label():
    for both in (V, I, A):
        group = _atomic_group([V, I, V, both])
        assert select_contrastive_atomic([group]) == [group]


def test_atomic_selection_requires_complete_groups():
    group = _atomic_group([V, I, V, V])
    partial = VariantGroup(orig=group.orig, neg_if=group.neg_if)
    with pytest.raises(IncompleteGroup):
        select_contrastive_atomic([partial])


def test_anion_selection():
    assert select_contrastive_anion([_anion_group([V, I])])
    assert select_contrastive_anion([_anion_group([I, V])])
    assert not select_contrastive_anion([_anion_group([V, V])])
    assert not select_contrastive_anion([_anion_group([I, I])])
    assert not select_contrastive_anion([_anion_group([A, I])])
    assert not select_contrastive_anion([_anion_group([V, A])])
    with pytest.raises(IncompleteGroup):
        select_contrastive_anion([VariantGroup(orig=_anion_group([V, I]).orig)])


# --- corpus assembly ------------------------------------------------------------

def _selected_corpora():
    atomic = [
        _atomic_group([V, I, V, A], "lamp"),
        _atomic_group([I, I, V, V], "rope"),
        _atomic_group([V, V, I, I], "bell"),
    ]
    anion = [_anion_group([V, I], "kite"), _anion_group([I, V], "drum")]
    return (corpus_from_atomic_groups(select_contrastive_atomic(atomic)),
            corpus_from_anion_groups(select_contrastive_anion(anion)))


def test_atomic_corpus_excludes_neg_both():
    atomic, _ = _selected_corpora()
    variants = {m.triple.variant for m in atomic.items()}
    assert variants == {Variant.ORIG, Variant.NEG_IF, Variant.NEG_THEN}
    assert all(g.size() == 3 for g in atomic.groups)
    # each group's label multiset is 2-vs-1 between Valid and Invalid
    for group in atomic.groups:
        counts = Counter(m.label for m in group.members)
        assert sorted(counts.values()) == [1, 2]
        assert set(counts) == {V, I}


def test_anion_corpus_pairs():
    _, anion = _selected_corpora()
    assert all(g.size() == 2 for g in anion.groups)
    for group in anion.groups:
        assert Counter(m.label for m in group.members) == {V: 1, I: 1}
        assert {m.triple.variant for m in group.members} == {Variant.ORIG, Variant.NEG_BOTH}


def test_merge_is_sorted_and_stable():
    atomic, anion = _selected_corpora()
    merged = merge_corpora(atomic, anion)
    assert merged.size() == atomic.size() + anion.size()
    keys = [(g.dataset, g.key) for g in merged.groups]
    assert keys == sorted(keys)
    assert merge_corpora(anion, atomic).groups == merged.groups


# --- baseline -------------------------------------------------------------------

def _label_pool(synthetic_originals, dataset, n, label, tag):
    source = Source.ATOMIC if dataset == "atomic" else Source.ANION
    triples = synthetic_originals(source, per_relation=max(1, n // 9 + 1), tag=tag)
    return [LabeledTriple(t, label, "synthetic") for t in triples[:n]]


def test_baseline_matches_size_and_mix(synthetic_originals):
    atomic, anion = _selected_corpora()
    merged = merge_corpora(atomic, anion)
    targets = baseline_targets(merged)
    assert sum(sum(b.values()) for b in targets.values()) == merged.size()

    pools = {
        ds: {
            V: _label_pool(synthetic_originals, ds, 30, V, f"{ds}v"),
            I: _label_pool(synthetic_originals, ds, 30, I, f"{ds}i"),
        }
        for ds in targets
    }
    baseline = build_baseline(pools, targets, seed=23)
    assert baseline.size() == merged.size()
    assert baseline_targets(baseline) == targets
    assert all(g.size() == 1 for g in baseline.groups)
    again = build_baseline(pools, targets, seed=23)
    assert [g.key for g in again.groups] == [g.key for g in baseline.groups]
    shifted = build_baseline(pools, targets, seed=24)
    assert [g.key for g in shifted.groups] != [g.key for g in baseline.groups]


def test_baseline_shortfall(synthetic_originals):
    atomic, _ = _selected_corpora()
    targets = baseline_targets(atomic)
    pools = {"atomic": {V: _label_pool(synthetic_originals, "atomic", 1, V, "tiny")}}
    with pytest.raises(ShortfallError):
        build_baseline(pools, targets, seed=23)


# --- ablation views ------------------------------------------------------------

def test_subset_by_variant():
    atomic, _ = _selected_corpora()
    only_orig = subset_by_variant(atomic, [Variant.ORIG])
    assert all(g.size() == 1 for g in only_orig.groups)
    assert len(only_orig.groups) == len(atomic.groups)
    none = subset_by_variant(atomic, [Variant.NEG_BOTH])
    assert none.groups == []


def test_sample_subset_group_atomicity(synthetic_originals):
    groups = [
        TrainingGroup(dataset="atomic", members=tuple(
            LabeledTriple(t, V, "synthetic") for t in
            synthetic_originals(Source.ATOMIC, per_relation=1, tag=f"g{i}")[:3]
        ))
        for i in range(8)
    ]
    from negkit.corpus_build import TrainingCorpus
    corpus = TrainingCorpus(groups=groups)  # 24 triples in 8 groups of 3
    subset = sample_subset(corpus, per_dataset=7, seed=29)
    # whole groups only: size is a multiple of 3, closest multiple to 7 is 6
    assert subset.size() == 6
    kept = {g.key for g in subset.groups}
    assert kept <= {g.key for g in corpus.groups}
    assert sample_subset(corpus, per_dataset=7, seed=29).size() == 6
    assert sample_subset(corpus, per_dataset=999, seed=29).size() == corpus.size()
    # 8 at target lands between 6 and 9; 9-8 < 8-6 keeps the last group
    assert sample_subset(corpus, per_dataset=8, seed=29).size() == 9


def test_sample_subset_is_per_dataset(synthetic_originals):
    atomic, anion = _selected_corpora()
    merged = merge_corpora(atomic, anion)
    subset = sample_subset(merged, per_dataset=3, seed=29)
    per = {ds: sum(g.size() for g in gs) for ds, gs in subset.by_dataset().items()}
    assert set(per) == {"atomic", "anion"}
    assert per["atomic"] == 3  # one atomic group
    assert per["anion"] in (2, 4)  # whole pairs


def test_randomize_labels():
    atomic, _ = _selected_corpora()
    shuffled = randomize_labels(atomic, seed=31)
    assert [m.triple.id for m in shuffled.items()] == [m.triple.id for m in atomic.items()]
    assert all(m.label in (V, I) for m in shuffled.items())
    assert all(m.label_source == "random" for m in shuffled.items())
    again = randomize_labels(atomic, seed=31)
    assert [m.label for m in again.items()] == [m.label for m in shuffled.items()]


# --- export -----------------------------------------------------------------------

def test_training_records_sorted_and_decisive():
    atomic, anion = _selected_corpora()
    records = training_records(merge_corpora(atomic, anion))
    inputs = [r.input for r in records]
    assert len(records) == atomic.size() + anion.size()
    assert all(r.output in ("Valid", "Invalid") for r in records)
    assert all(r.input.startswith("If ") for r in records)
    assert all("then" in r.input for r in records)
    assert inputs == [r.input for r in training_records(merge_corpora(anion, atomic))]


def test_export_rejects_ambiguous():
    group = _atomic_group([V, A, I, V])
    from negkit.corpus_build import TrainingCorpus
    corpus = TrainingCorpus(groups=[
        TrainingGroup(dataset="atomic", members=tuple(group.members()[:3]))
    ])
    with pytest.raises(ExportRejected):
        training_records(corpus)


def test_export_bytes_are_stable(tmp_path):
    atomic, anion = _selected_corpora()
    merged = merge_corpora(atomic, anion)
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    n1 = export_instruction_jsonl(merged, p1)
    n2 = export_instruction_jsonl(merged, p2)
    assert n1 == n2 == merged.size()
    assert p1.read_bytes() == p2.read_bytes()
    first = p1.read_text(encoding="utf-8").splitlines()[0]
    import json
    record = json.loads(first)
    assert set(record) == {"instruction", "input", "output"}
    assert record["instruction"].startswith("Determine whether")
