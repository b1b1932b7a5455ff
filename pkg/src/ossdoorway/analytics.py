"""Nonparametric statistics over pre/post Likert questionnaires.

Implements the evaluation pipeline: per-question summaries, the paired
Wilcoxon signed-rank test with Bonferroni correction across the seven
questions, and Mann-Whitney U for a two-segment demographic comparison.

Conventions (documented because alternatives exist):

* Zero differences are discarded before ranking (Rosner-style handling).
* Ties receive midranks.
* All p-values are two-sided. The test statistic is the smaller of the two
  one-sided sums (W = min(W+, W-); U = min(U1, U2)), and the exact p-value
  is the fraction of equally-likely reassignments whose statistic is at
  most the observed one.
* Exact enumeration runs for small samples (Wilcoxon n <= 20, Mann-Whitney
  n+m <= 14, both under ~1M cases); larger samples use the normal
  approximation with tie and continuity corrections. The result records
  which path ran.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from statistics import mean, median
from typing import Sequence

QUESTION_COUNT = 7
WILCOXON_EXACT_LIMIT = 20
MANN_WHITNEY_EXACT_LIMIT = 14
DEFAULT_ALPHA = 0.05


class AnalyticsError(ValueError):
    """Bad input to the statistics pipeline."""


class Phase(Enum):
    PRE = "pre"
    POST = "post"


class PValueMethod(Enum):
    EXACT_ENUMERATION = "exact_enumeration"
    NORMAL_APPROXIMATION = "normal_approximation"


@dataclass(frozen=True)
class StatTestResult:
    statistic: float
    p_value: float
    method: PValueMethod
    n_effective: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value out of range: {self.p_value}")


@dataclass(frozen=True)
class LikertResponse:
    participant_id: str
    segment: str
    phase: Phase
    answers: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.answers) != QUESTION_COUNT:
            raise AnalyticsError(
                f"expected {QUESTION_COUNT} answers, got {len(self.answers)}"
            )
        for value in self.answers:
            if value not in (1, 2, 3, 4, 5):
                raise AnalyticsError(f"answers must be integers 1..5, got {value!r}")


@dataclass(frozen=True)
class QuestionnaireDataset:
    responses: tuple[LikertResponse, ...]
    question_labels: tuple[str, ...] = tuple(f"Q{i}" for i in range(1, QUESTION_COUNT + 1))

    def __post_init__(self) -> None:
        if len(self.question_labels) != QUESTION_COUNT:
            raise AnalyticsError(f"expected {QUESTION_COUNT} question labels")
        seen: set[tuple[str, Phase]] = set()
        for response in self.responses:
            key = (response.participant_id, response.phase)
            if key in seen:
                raise AnalyticsError(
                    f"participant {response.participant_id!r} has more than one "
                    f"{response.phase.value} record"
                )
            seen.add(key)


# ---------------------------------------------------------------------------
# Rank machinery


def _midranks(values: Sequence[float]) -> list[float]:
    """Ranks 1..n with tied values sharing the mean of their rank range."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        shared = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = shared
        i = j + 1
    return ranks


def _tie_sizes(values: Sequence[float]) -> list[int]:
    counts: dict[float, int] = {}
    for value in values:
        counts[value] = counts.get(value, 0) + 1
    return [c for c in counts.values() if c > 1]


def _normal_two_sided(statistic: float, mean_: float, sd: float) -> float:
    """2*Phi(z) with a 0.5 continuity correction; statistic <= mean here."""
    if sd == 0:
        return 1.0
    z = (statistic - mean_ + 0.5) / sd
    p = 2 * 0.5 * math.erfc(-z / math.sqrt(2))
    return min(1.0, max(0.0, p))


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank (paired)


def wilcoxon_signed_rank(
    pre: Sequence[int | float],
    post: Sequence[int | float],
    method: str = "auto",
) -> StatTestResult:
    """Two-sided paired test of post vs pre.

    ``method`` is "auto", "exact", or "approx"; auto picks exact enumeration
    when at most :data:`WILCOXON_EXACT_LIMIT` nonzero differences remain.
    All-zero differences yield n_effective 0 and p = 1.0 by convention.
    """
    if len(pre) != len(post):
        raise AnalyticsError(f"paired vectors differ in length: {len(pre)} vs {len(post)}")
    if not pre:
        raise AnalyticsError("paired vectors must be non-empty")
    if method not in ("auto", "exact", "approx"):
        raise AnalyticsError(f"unknown method {method!r}")

    diffs = [b - a for a, b in zip(pre, post) if b - a != 0]
    n = len(diffs)
    if n == 0:
        return StatTestResult(0.0, 1.0, PValueMethod.EXACT_ENUMERATION, 0)

    abs_diffs = [abs(d) for d in diffs]
    ranks = _midranks(abs_diffs)
    w_plus = sum(r for r, d in zip(ranks, diffs) if d > 0)
    w_minus = sum(r for r, d in zip(ranks, diffs) if d < 0)
    w = min(w_plus, w_minus)

    use_exact = method == "exact" or (method == "auto" and n <= WILCOXON_EXACT_LIMIT)
    if use_exact:
        p = _wilcoxon_exact_p(ranks, w)
        return StatTestResult(w, p, PValueMethod.EXACT_ENUMERATION, n)

    mean_w = n * (n + 1) / 4
    variance = n * (n + 1) * (2 * n + 1) / 24
    variance -= sum(t**3 - t for t in _tie_sizes(abs_diffs)) / 48
    p = _normal_two_sided(w, mean_w, math.sqrt(variance) if variance > 0 else 0.0)
    return StatTestResult(w, p, PValueMethod.NORMAL_APPROXIMATION, n)


def _wilcoxon_exact_p(ranks: Sequence[float], w_observed: float) -> float:
    """Exact null distribution of min(W+, W-) over all 2^n sign assignments.

    Midranks are halves, so doubling makes every rank an integer; the
    distribution of the doubled negative-rank sum is built by subset-sum
    counting, which tallies exactly the same 2^n assignments a literal
    enumeration would.
    """
    doubled = [round(2 * r) for r in ranks]
    total = sum(doubled)
    counts = [0] * (total + 1)
    counts[0] = 1
    for rank in doubled:
        for s in range(total, rank - 1, -1):
            if counts[s - rank]:
                counts[s] += counts[s - rank]
    w2 = round(2 * w_observed)
    favorable = sum(c for s, c in enumerate(counts) if min(s, total - s) <= w2)
    return favorable / 2 ** len(doubled)


# ---------------------------------------------------------------------------
# Mann-Whitney U (independent samples)


def mann_whitney_u(
    group_a: Sequence[int | float],
    group_b: Sequence[int | float],
    method: str = "auto",
) -> StatTestResult:
    """Two-sided rank test on two independent samples.

    ``method`` as in :func:`wilcoxon_signed_rank`; auto enumerates all
    C(n+m, n) group assignments when n+m <= :data:`MANN_WHITNEY_EXACT_LIMIT`.
    """
    if not group_a or not group_b:
        raise AnalyticsError("both groups must be non-empty")
    if method not in ("auto", "exact", "approx"):
        raise AnalyticsError(f"unknown method {method!r}")

    n1, n2 = len(group_a), len(group_b)
    pooled = list(group_a) + list(group_b)
    ranks = _midranks(pooled)
    r1 = sum(ranks[:n1])
    u1 = n1 * n2 + n1 * (n1 + 1) / 2 - r1
    u2 = n1 * n2 - u1
    u = min(u1, u2)
    n = n1 + n2

    use_exact = method == "exact" or (method == "auto" and n <= MANN_WHITNEY_EXACT_LIMIT)
    if use_exact:
        p = _mann_whitney_exact_p(ranks, n1, u)
        return StatTestResult(u, p, PValueMethod.EXACT_ENUMERATION, n)

    mean_u = n1 * n2 / 2
    tie_term = sum(t**3 - t for t in _tie_sizes(pooled)) / (n * (n - 1))
    variance = n1 * n2 / 12 * (n + 1 - tie_term)
    p = _normal_two_sided(u, mean_u, math.sqrt(variance) if variance > 0 else 0.0)
    return StatTestResult(u, p, PValueMethod.NORMAL_APPROXIMATION, n)


def _mann_whitney_exact_p(ranks: Sequence[float], n1: int, u_observed: float) -> float:
    """Exact null distribution of min(U1, U2): every C(n, n1) way to assign
    pooled ranks to group A is equally likely under the null."""
    doubled = [round(2 * r) for r in ranks]
    n2 = len(ranks) - n1
    base = 2 * n1 * n2 + n1 * (n1 + 1)  # doubled n1*n2 + n1(n1+1)/2
    u2_obs = round(2 * u_observed)
    favorable = 0
    total = 0
    for combo in combinations(range(len(doubled)), n1):
        total += 1
        r1_doubled = sum(doubled[i] for i in combo)
        u1_doubled = base - r1_doubled
        if min(u1_doubled, 2 * n1 * n2 - u1_doubled) <= u2_obs:
            favorable += 1
    return favorable / total


# ---------------------------------------------------------------------------
# Multiple-comparison correction and flagging


def bonferroni(p_values: Sequence[float], m: int) -> list[float]:
    """min(1, p*m) for each p; family size m must cover the vector."""
    if m < len(p_values):
        raise AnalyticsError(f"family size {m} smaller than {len(p_values)} p-values")
    for p in p_values:
        if not 0.0 <= p <= 1.0:
            raise AnalyticsError(f"p-value out of range: {p}")
    return [min(1.0, p * m) for p in p_values]


def significance_flags(p_values: Sequence[float], alpha: float = DEFAULT_ALPHA) -> list[bool]:
    """True where an (already adjusted) p-value is below alpha."""
    return [p < alpha for p in p_values]


# ---------------------------------------------------------------------------
# Dataset loading


CSV_COLUMNS = ("participant_id", "segment", "phase") + tuple(
    f"q{i}" for i in range(1, QUESTION_COUNT + 1)
)


def load_dataset_csv(path: str, segment_column: str = "segment") -> QuestionnaireDataset:
    """Read ``participant_id,segment,phase,q1..q7`` rows.

    Extra columns are allowed; ``segment_column`` selects which one feeds the
    segmented comparison. Errors carry the 1-based row number.
    """
    responses: list[LikertResponse] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        required = ["participant_id", "phase", segment_column] + [
            f"q{i}" for i in range(1, QUESTION_COUNT + 1)
        ]
        for column in required:
            if column not in header:
                raise AnalyticsError(f"row 1: missing column {column!r}")
        for row_number, row in enumerate(reader, start=2):
            try:
                phase = Phase(row["phase"].strip().lower())
            except ValueError:
                raise AnalyticsError(
                    f"row {row_number}: phase must be 'pre' or 'post', "
                    f"got {row['phase']!r}"
                ) from None
            try:
                answers = tuple(
                    int(row[f"q{i}"]) for i in range(1, QUESTION_COUNT + 1)
                )
            except (TypeError, ValueError):
                raise AnalyticsError(
                    f"row {row_number}: q1..q{QUESTION_COUNT} must be integers"
                ) from None
            try:
                responses.append(
                    LikertResponse(
                        participant_id=row["participant_id"].strip(),
                        segment=row[segment_column].strip(),
                        phase=phase,
                        answers=answers,
                    )
                )
            except AnalyticsError as exc:
                raise AnalyticsError(f"row {row_number}: {exc}") from None
    try:
        return QuestionnaireDataset(responses=tuple(responses))
    except AnalyticsError as exc:
        raise AnalyticsError(str(exc)) from None


# ---------------------------------------------------------------------------
# Report


@dataclass(frozen=True)
class QuestionRow:
    label: str
    pre_mean: float
    pre_median: float
    post_mean: float
    post_median: float
    p_adjusted: float
    significant: bool
    method: PValueMethod


@dataclass(frozen=True)
class SegmentComparison:
    segment_a: str
    segment_b: str
    phase: Phase
    mean_a: float
    mean_b: float
    n_a: int
    n_b: int
    result: StatTestResult


@dataclass(frozen=True)
class SummaryReport:
    rows: tuple[QuestionRow, ...]
    n_pairs: int
    unpaired_excluded: int
    alpha: float
    segments: tuple[SegmentComparison, ...]  # empty when segmentation skipped
    segmentation_note: str | None

    def to_markdown(self) -> str:
        lines = ["## Self-efficacy: pre vs post", ""]
        lines.append(
            f"Paired participants: {self.n_pairs}"
            + (
                f" (excluded {self.unpaired_excluded} without both phases)"
                if self.unpaired_excluded
                else ""
            )
        )
        lines.append("")
        lines.append("| Question | Pre mean | Pre median | Post mean | Post median | p-value* |")
        lines.append("| --- | ---: | ---: | ---: | ---: | ---: |")
        for row in self.rows:
            p_text = f"**{row.p_adjusted:.3f}**" if row.significant else f"{row.p_adjusted:.3f}"
            lines.append(
                f"| {row.label} | {row.pre_mean:.2f} | {_fmt_median(row.pre_median)} "
                f"| {row.post_mean:.2f} | {_fmt_median(row.post_median)} | {p_text} |"
            )
        lines.append("")
        lines.append(
            f"\\* Bonferroni-adjusted (m = {QUESTION_COUNT}); "
            f"**bold** marks p < {self.alpha:g}."
        )
        lines.append("")
        lines.append("## Segmented comparison")
        lines.append("")
        if self.segmentation_note:
            lines.append(self.segmentation_note)
        else:
            a = self.segments[0].segment_a
            b = self.segments[0].segment_b
            lines.append(f"Per-participant mean scores, {a} vs {b}.")
            lines.append("")
            lines.append(f"| Phase | {a} mean | {b} mean | U | p-value |")
            lines.append("| --- | ---: | ---: | ---: | ---: |")
            for seg in self.segments:
                lines.append(
                    f"| {seg.phase.value} | {seg.mean_a:.2f} ({seg.n_a}) "
                    f"| {seg.mean_b:.2f} ({seg.n_b}) "
                    f"| {seg.result.statistic:g} | {seg.result.p_value:.3f} |"
                )
        lines.append("")
        return "\n".join(lines)


def _fmt_median(value: float) -> str:
    return f"{value:g}"


def summarize(dataset: QuestionnaireDataset, alpha: float = DEFAULT_ALPHA) -> SummaryReport:
    """Per-question paired tests plus the two-segment comparison.

    Participants lacking either phase are excluded from the paired tests and
    counted; raises :class:`AnalyticsError` when no paired data remains.
    """
    by_participant: dict[str, dict[Phase, LikertResponse]] = {}
    for response in dataset.responses:
        by_participant.setdefault(response.participant_id, {})[response.phase] = response

    paired_ids = sorted(
        pid for pid, phases in by_participant.items() if len(phases) == 2
    )
    unpaired = len(by_participant) - len(paired_ids)
    if not paired_ids:
        raise AnalyticsError("no paired data: no participant has both pre and post")

    pre_rows = [by_participant[pid][Phase.PRE].answers for pid in paired_ids]
    post_rows = [by_participant[pid][Phase.POST].answers for pid in paired_ids]

    raw_p: list[float] = []
    methods: list[PValueMethod] = []
    for question in range(QUESTION_COUNT):
        result = wilcoxon_signed_rank(
            [row[question] for row in pre_rows],
            [row[question] for row in post_rows],
        )
        raw_p.append(result.p_value)
        methods.append(result.method)
    adjusted = bonferroni(raw_p, QUESTION_COUNT)
    flags = significance_flags(adjusted, alpha)

    rows = tuple(
        QuestionRow(
            label=dataset.question_labels[q],
            pre_mean=mean(row[q] for row in pre_rows),
            pre_median=median(row[q] for row in pre_rows),
            post_mean=mean(row[q] for row in post_rows),
            post_median=median(row[q] for row in post_rows),
            p_adjusted=adjusted[q],
            significant=flags[q],
            method=methods[q],
        )
        for q in range(QUESTION_COUNT)
    )

    segments, note = _segment_comparisons(dataset, by_participant)
    return SummaryReport(
        rows=rows,
        n_pairs=len(paired_ids),
        unpaired_excluded=unpaired,
        alpha=alpha,
        segments=segments,
        segmentation_note=note,
    )


def _segment_comparisons(
    dataset: QuestionnaireDataset,
    by_participant: dict[str, dict[Phase, LikertResponse]],
) -> tuple[tuple[SegmentComparison, ...], str | None]:
    segments = sorted({r.segment for r in dataset.responses})
    if len(segments) != 2:
        return (), (
            f"Segmentation skipped: need exactly 2 segments, found {len(segments)}."
        )
    seg_a, seg_b = segments
    comparisons: list[SegmentComparison] = []
    for phase in (Phase.PRE, Phase.POST):
        scores_a: list[float] = []
        scores_b: list[float] = []
        for phases in by_participant.values():
            response = phases.get(phase)
            if response is None:
                continue
            score = mean(response.answers)
            if response.segment == seg_a:
                scores_a.append(score)
            else:
                scores_b.append(score)
        if not scores_a or not scores_b:
            return (), (
                f"Segmentation skipped: a segment has no {phase.value} responses."
            )
        result = mann_whitney_u(scores_a, scores_b)
        comparisons.append(
            SegmentComparison(
                segment_a=seg_a,
                segment_b=seg_b,
                phase=phase,
                mean_a=mean(scores_a),
                mean_b=mean(scores_b),
                n_a=len(scores_a),
                n_b=len(scores_b),
                result=result,
            )
        )
    return tuple(comparisons), None
