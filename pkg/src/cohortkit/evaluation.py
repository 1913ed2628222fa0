"""Retrieval evaluation: case-set metrics, query similarity, per-sample
scoring, aggregation, and paired significance tests.

Systems are compared on the cases their filters retrieve, not on filter
text: sensitivity (TPR), Jaccard overlap (IoU), an exact-set indicator,
and a query-similarity score computed by reverse-translating the predicted
filter. A prediction that fails validation counts as the empty retrieval,
which pins all set metrics to zero because evaluation corpora never
contain empty actual cohorts.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

from scipy.special import stdtr

from .caseindex import CaseIndex, execute
from .catalog import FieldCatalog
from .filters import Conjunction, FilterParseError, validate
from .nlparse import InvalidGenerationError, TransportError
from .synth import PairedSample
from .verbalize import verbalize_canonical

_WORD_RE = re.compile(r"[a-z0-9]+(?:\.[0-9]+)?")

TranslationSystem = Callable[[str], Conjunction]


@dataclass(frozen=True)
class SampleMetrics:
    tpr: float
    iou: float
    exact: bool
    qsim: float


@dataclass(frozen=True)
class TestOutcome:
    name: str
    p: float
    p_adj: float


@dataclass(frozen=True)
class EvalSummary:
    n: int
    tpr: float
    iou: float
    exact: float
    qsim: float
    tests: tuple[TestOutcome, ...] = ()

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "metrics": {"tpr": self.tpr, "iou": self.iou, "exact": self.exact, "qsim": self.qsim},
            "tests": [{"name": t.name, "p": t.p, "p_adj": t.p_adj} for t in self.tests],
        }


def set_metrics(predicted: set[str], actual: set[str]) -> tuple[float, float, bool]:
    """(TPR, IoU, exact) over retrieved case sets; actual must be non-empty."""
    if not actual:
        raise ValueError("actual case set is empty; evaluation splits must exclude empty cohorts")
    inter = len(predicted & actual)
    union = len(predicted | actual)
    tpr = inter / len(actual)
    iou = inter / union
    return tpr, iou, predicted == actual


def token_f1(candidate: str, reference: str) -> float:
    """Bag-of-tokens F1 (lowercase, punctuation-blind, multiset overlap).

    Stands in the query-similarity slot; embedding scorers can be plugged
    behind the same (candidate, reference) -> fraction signature.
    """
    cand = Counter(_WORD_RE.findall(candidate.lower()))
    ref = Counter(_WORD_RE.findall(reference.lower()))
    overlap = sum((cand & ref).values())
    if overlap == 0:
        return 0.0
    precision = overlap / sum(cand.values())
    recall = overlap / sum(ref.values())
    return 2 * precision * recall / (precision + recall)


def evaluate_pair(
    sample: PairedSample,
    system: TranslationSystem,
    index: CaseIndex,
    catalog: FieldCatalog,
) -> SampleMetrics:
    """Score one (query, filter) pair under a translation system.

    The system sees only the query. Translation failures and invalid
    outputs are scored as the empty retrieval with empty reverse text.
    """
    if sample.query is None:
        raise ValueError("sample has no query; run the verbalizer first")
    actual = execute(sample.filter, index)
    if not actual:
        raise ValueError(f"sample {sample.hash} retrieves an empty cohort; bad evaluation split")

    predicted_filter: Conjunction | None
    try:
        predicted_filter = system(sample.query)
        if not validate(predicted_filter, catalog).valid:
            predicted_filter = None
    except (InvalidGenerationError, TransportError, FilterParseError, ValueError):
        predicted_filter = None

    if predicted_filter is None:
        return SampleMetrics(tpr=0.0, iou=0.0, exact=False, qsim=token_f1("", sample.query))

    predicted = execute(predicted_filter, index)
    tpr, iou, exact = set_metrics(predicted, actual)
    qsim = token_f1(verbalize_canonical(predicted_filter, catalog), sample.query)
    return SampleMetrics(tpr=tpr, iou=iou, exact=exact, qsim=qsim)


def eligible_samples(
    samples: Sequence[PairedSample],
    index: CaseIndex,
    max_chars: int | None = None,
) -> list[PairedSample]:
    """Evaluation-split filter: drop samples that retrieve empty cohorts and,
    when a cap is set, samples whose query plus canonical filter exceed it
    (length eligibility stands in for model context limits)."""
    from .filters import serialize_canonical

    out = []
    for sample in samples:
        if max_chars is not None:
            length = len(sample.query or "") + len(serialize_canonical(sample.filter))
            if length > max_chars:
                continue
        if not execute(sample.filter, index):
            continue
        out.append(sample)
    return out


def summarize(per_sample: Sequence[SampleMetrics], tests: Sequence[TestOutcome] = ()) -> EvalSummary:
    if not per_sample:
        raise ValueError("nothing to summarize")
    n = len(per_sample)
    return EvalSummary(
        n=n,
        tpr=sum(m.tpr for m in per_sample) / n,
        iou=sum(m.iou for m in per_sample) / n,
        exact=sum(1.0 for m in per_sample if m.exact) / n,
        qsim=sum(m.qsim for m in per_sample) / n,
        tests=tuple(tests),
    )


def evaluate_corpus(
    samples: Sequence[PairedSample],
    system: TranslationSystem,
    index: CaseIndex,
    catalog: FieldCatalog,
) -> tuple[list[SampleMetrics], EvalSummary]:
    per_sample = [evaluate_pair(s, system, index, catalog) for s in samples]
    return per_sample, summarize(per_sample)


# ---------------------------------------------------------------------------
# Significance testing
# ---------------------------------------------------------------------------


def paired_t_test(diffs: Sequence[float]) -> float:
    """Two-sided paired t-test p-value over per-sample differences.

    Degenerate inputs take their limit values: all-zero differences give
    p=1; zero variance around a non-zero mean gives p=0.
    """
    n = len(diffs)
    if n < 2:
        raise ValueError("paired t-test needs at least 2 differences")
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    sd = math.sqrt(var)
    if sd == 0.0:
        return 1.0 if mean == 0.0 else 0.0
    t = mean / (sd / math.sqrt(n))
    return 2.0 * (1.0 - float(stdtr(n - 1, abs(t))))


def mcnemar_statistic(b: int, c: int) -> float:
    """(b - c)^2 / (b + c) over discordant counts; 0 when none exist."""
    if b < 0 or c < 0:
        raise ValueError("discordant counts must be non-negative")
    if b + c == 0:
        return 0.0
    return (b - c) ** 2 / (b + c)


def mcnemar(b: int, c: int) -> float:
    """McNemar p-value from the chi-square(1) survival of the statistic."""
    if b + c == 0:
        return 1.0
    stat = mcnemar_statistic(b, c)
    return float(math.erfc(math.sqrt(stat / 2.0)))


def bonferroni(p: float, k: int) -> float:
    """Multiply by the comparison count, clamped to 1."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    if k < 1:
        raise ValueError("comparison count must be >= 1")
    return min(1.0, p * k)


def compare_systems(
    samples: Sequence[PairedSample],
    system_a: TranslationSystem,
    system_b: TranslationSystem,
    index: CaseIndex,
    catalog: FieldCatalog,
) -> tuple[EvalSummary, EvalSummary]:
    """Evaluate two systems on the same split and attach paired tests.

    t-tests cover tpr/iou/qsim; McNemar covers the exact indicator; all
    four p-values carry a Bonferroni adjustment for k=4 comparisons.
    """
    metrics_a = [evaluate_pair(s, system_a, index, catalog) for s in samples]
    metrics_b = [evaluate_pair(s, system_b, index, catalog) for s in samples]
    tests: list[TestOutcome] = []
    k = 4
    for name in ("tpr", "iou", "qsim"):
        diffs = [getattr(a, name) - getattr(b, name) for a, b in zip(metrics_a, metrics_b)]
        p = paired_t_test(diffs)
        tests.append(TestOutcome(name=name, p=p, p_adj=bonferroni(p, k)))
    b_count = sum(1 for a, b in zip(metrics_a, metrics_b) if a.exact and not b.exact)
    c_count = sum(1 for a, b in zip(metrics_a, metrics_b) if b.exact and not a.exact)
    p = mcnemar(b_count, c_count)
    tests.append(TestOutcome(name="exact", p=p, p_adj=bonferroni(p, k)))
    summary_a = summarize(metrics_a, tests)
    summary_b = summarize(metrics_b)
    return summary_a, summary_b
