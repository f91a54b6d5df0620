"""Independent brute-force metric implementations used only by tests.

Deliberately written against the metric definitions, not against the package
code, so they can catch implementation drift. Where a well-known library
implements the same statistic (scipy, statsmodels, sklearn) the oracle
delegates or cross-checks against it.
"""

from __future__ import annotations

import math
from collections import Counter


def prf_oracle(gold: list[str], pred: list[str], label: str) -> tuple[float, float, float]:
    tp = sum(1 for g, p in zip(gold, pred) if g == label and p == label)
    fp = sum(1 for g, p in zip(gold, pred) if g != label and p == label)
    fn = sum(1 for g, p in zip(gold, pred) if g == label and p != label)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def accuracy_oracle(gold: list[str], pred: list[str]) -> float:
    return sum(1 for g, p in zip(gold, pred) if g == p) / len(gold)


def macro_oracle(gold: list[str], pred: list[str], labels: list[str]) -> tuple[float, float, float]:
    scores = [prf_oracle(gold, pred, label) for label in labels]
    return tuple(sum(s[i] for s in scores) / len(labels) for i in range(3))


def kappa_oracle(a: list[str], b: list[str]) -> float:
    n = len(a)
    po = sum(1 for x, y in zip(a, b) if x == y) / n
    counts_a, counts_b = Counter(a), Counter(b)
    labels = set(a) | set(b)
    pe = sum((counts_a[l] / n) * (counts_b[l] / n) for l in labels)
    if pe == 1.0:
        return 1.0
    return (po - pe) / (1.0 - pe)


def kappa_sklearn(a: list[str], b: list[str]) -> float:
    from sklearn.metrics import cohen_kappa_score

    return float(cohen_kappa_score(a, b))


def mcnemar_oracle(b: int, c: int) -> tuple[float, float, str]:
    """(statistic, p, method) straight from the definition."""
    n = b + c
    if n == 0:
        return 0.0, 1.0, "exact"
    if n >= 25:
        statistic = (abs(b - c) - 1) ** 2 / n
        import scipy.stats

        return statistic, float(scipy.stats.chi2.sf(statistic, df=1)), "chi2"
    tail = sum(math.comb(n, k) for k in range(max(b, c), n + 1)) / 2**n
    return float(min(b, c)), min(1.0, 2.0 * tail), "exact"


def mcnemar_statsmodels(b: int, c: int) -> float:
    """p-value from statsmodels for cross-checking."""
    from statsmodels.stats.contingency_tables import mcnemar as sm_mcnemar

    table = [[0, b], [c, 0]]
    exact = (b + c) < 25
    result = sm_mcnemar(table, exact=exact, correction=True)
    return float(result.pvalue)


def condaqa_consistency_oracle(
    instances: list[dict], correct: dict[str, bool], kinds: set[str] | None
) -> float:
    """Group enumeration from scratch: instances are dicts with keys
    instance_id, question_id, bundle_id, edit_kind."""
    groups: dict[tuple, list[dict]] = {}
    for inst in instances:
        groups.setdefault((inst["question_id"], inst["bundle_id"]), []).append(inst)
    hit = total = 0
    for members in groups.values():
        if kinds is None:
            subset = members
        else:
            subset = [m for m in members if m["edit_kind"] in kinds]
            if {m["edit_kind"] for m in subset} != kinds:
                continue
        if not subset:
            continue
        total += 1
        hit += all(correct[m["instance_id"]] for m in subset)
    return 100.0 * hit / total if total else 0.0


def pairwise_oracle(q1: list[bool], q2: list[bool]) -> float:
    return 100.0 * sum(1 for a, b in zip(q1, q2) if a and b) / len(q1)
