"""Test assembly and grading.

Question selection honors three hard constraints: never repeat a question
the learner has already seen for the concept, cover every section, and hit
the requested difficulty mix exactly. Grading weights each question by its
section's weight under the learner's style and maps the result onto the
five knowledge bands.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum

from .content import Concept, Dimension, Level, Question
from .errors import BankExhausted, OutOfRange, UnansweredQuestion, UnknownChoice
from .profiler import LearningStyle

HINT_PENALTY = 0.2  # fraction of a question's points forfeited per hint


class Phase(str, Enum):
    PRETEST = "pretest"
    POSTTEST = "posttest"


class KnowledgeBand(str, Enum):
    """Mastery categories, ordered Weak < Average < Good < VeryGood < Excellent."""

    WEAK = "Weak"
    AVERAGE = "Average"
    GOOD = "Good"
    VERY_GOOD = "Very good"
    EXCELLENT = "Excellent"

    @property
    def rank(self) -> int:
        return _BAND_RANK[self]

    def __lt__(self, other):
        if isinstance(other, KnowledgeBand):
            return self.rank < other.rank
        return NotImplemented

    def __le__(self, other):
        if isinstance(other, KnowledgeBand):
            return self.rank <= other.rank
        return NotImplemented

    def __gt__(self, other):
        if isinstance(other, KnowledgeBand):
            return self.rank > other.rank
        return NotImplemented

    def __ge__(self, other):
        if isinstance(other, KnowledgeBand):
            return self.rank >= other.rank
        return NotImplemented


_BAND_RANK = {
    KnowledgeBand.WEAK: 0,
    KnowledgeBand.AVERAGE: 1,
    KnowledgeBand.GOOD: 2,
    KnowledgeBand.VERY_GOOD: 3,
    KnowledgeBand.EXCELLENT: 4,
}

# Integer score bounds per band: (low, high) inclusive.
BAND_CUTS = (
    (KnowledgeBand.EXCELLENT, 86, 100),
    (KnowledgeBand.VERY_GOOD, 71, 85),
    (KnowledgeBand.GOOD, 51, 70),
    (KnowledgeBand.AVERAGE, 31, 50),
    (KnowledgeBand.WEAK, 0, 30),
)


def band(score: float) -> KnowledgeBand:
    """Map a 0-100 score to its knowledge band (half-up integer rounding first)."""
    if not 0.0 <= score <= 100.0:
        raise OutOfRange(f"score {score} outside [0, 100]", value=score)
    rounded = math.floor(score + 0.5)
    for b, lo, hi in BAND_CUTS:
        if lo <= rounded <= hi:
            return b
    raise OutOfRange(f"score {score} unbandable", value=score)  # pragma: no cover


@dataclass(frozen=True)
class TestSpec:
    __test__ = False  # not a pytest class

    phase: Phase
    count: int
    level_mix: dict[Level, int]

    def __post_init__(self):
        total = sum(self.level_mix.get(level, 0) for level in Level)
        if self.count < 1 or total != self.count:
            raise ValueError(
                f"level mix {self.level_mix} must sum to count {self.count}"
            )


@dataclass(frozen=True)
class TestInstance:
    __test__ = False  # not a pytest class

    questions: tuple[str, ...]
    seed: int


@dataclass(frozen=True)
class GradeReport:
    raw_score: float
    band: KnowledgeBand
    per_dimension: dict[Dimension, float]
    per_section: dict[str, float]
    misconceptions: tuple[str, ...]
    hint_penalty_applied: float


def select_questions(
    concept: Concept,
    spec: TestSpec,
    used: set[str],
    seed: int,
) -> TestInstance:
    """Pick ``spec.count`` fresh questions covering all sections at the exact level mix.

    A seeded shuffle fixes the candidate order, then a depth-first search with
    backtracking finds the first feasible assignment, so the result is
    deterministic given the seed. Raises BankExhausted when no assignment
    exists; constraints are never relaxed.
    """
    available = [q for q in concept.questions if q.id not in used]
    rng = random.Random(seed)
    rng.shuffle(available)

    quota = {level: spec.level_mix.get(level, 0) for level in Level}
    section_ids = set(concept.section_ids())

    # suffix[i][level] = candidates of that level left in available[i:]
    n = len(available)
    suffix = [dict.fromkeys(Level, 0) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for lv in Level:
            suffix[i][lv] = suffix[i + 1][lv]
        suffix[i][available[i].level] += 1

    chosen: list[Question] = []

    def search(start: int, covered: set[str]) -> bool:
        if len(chosen) == spec.count:
            return covered == section_ids
        # Sound prunes only, so the search stays complete.
        if any(quota[lv] > suffix[start][lv] for lv in Level):
            return False
        if len(section_ids - covered) > spec.count - len(chosen):
            return False
        for idx in range(start, n):
            q = available[idx]
            if quota[q.level] == 0:
                continue
            quota[q.level] -= 1
            chosen.append(q)
            if search(idx + 1, covered | {q.section}):
                return True
            chosen.pop()
            quota[q.level] += 1
        return False

    if not search(0, set()):
        raise BankExhausted(
            f"no unused question set for concept {concept.id!r} satisfies "
            f"count={spec.count}, mix={{{', '.join(f'{l.value}:{n}' for l, n in spec.level_mix.items())}}}, "
            f"coverage of {len(section_ids)} sections",
            concept=concept.id,
            phase=spec.phase.value,
        )

    return TestInstance(questions=tuple(q.id for q in chosen), seed=seed)


def grade(
    concept: Concept,
    instance: TestInstance,
    answers: dict[str, str],
    style: LearningStyle,
    hints_used: dict[str, int] | None = None,
) -> GradeReport:
    """Grade an answer sheet with section weights under the learner's style.

    earned(q) = points * correct * max(0, 1 - 0.2 * hints), and
    raw = 100 * sum(earned * w) / sum(points * w) over the instance,
    with w the question's section weight under ``style``. Per-dimension and
    per-section scores apply the same formula to the matching subsets.
    """
    hints_used = hints_used or {}
    questions = []
    for qid in instance.questions:
        q = concept.question_by_id(qid)
        if q is None:
            raise UnknownChoice(f"instance names unknown question {qid!r}", question=qid)
        questions.append(q)

    weight_of = {
        s.id: s.weights for s in concept.sections
    }

    earned_w = 0.0
    possible_w = 0.0
    unpenalized_w = 0.0
    dim_earned: dict[Dimension, float] = {}
    dim_possible: dict[Dimension, float] = {}
    sec_earned: dict[str, float] = {}
    sec_possible: dict[str, float] = {}
    misconceptions: list[str] = []

    for q in questions:
        if q.id not in answers:
            raise UnansweredQuestion(f"question {q.id!r} not answered", question=q.id)
        choice_id = answers[q.id]
        choice = next((c for c in q.choices if c.id == choice_id), None)
        if choice is None:
            raise UnknownChoice(
                f"question {q.id!r} has no choice {choice_id!r}",
                question=q.id,
                choice=choice_id,
            )

        w = weight_of[q.section][style]
        correct = 1.0 if choice.correct else 0.0
        penalty_factor = max(0.0, 1.0 - HINT_PENALTY * hints_used.get(q.id, 0))
        earned = q.points * correct * penalty_factor

        earned_w += earned * w
        possible_w += q.points * w
        unpenalized_w += q.points * correct * w

        dim_earned[q.dimension] = dim_earned.get(q.dimension, 0.0) + earned * w
        dim_possible[q.dimension] = dim_possible.get(q.dimension, 0.0) + q.points * w
        sec_earned[q.section] = sec_earned.get(q.section, 0.0) + earned * w
        sec_possible[q.section] = sec_possible.get(q.section, 0.0) + q.points * w

        if not choice.correct and choice.misconception_tag:
            misconceptions.append(choice.misconception_tag)

    def pct(numerator: float, denominator: float) -> float:
        # exact arithmetic keeps this in [0, 100]; clamp away float residue
        return min(100.0, max(0.0, 100.0 * numerator / denominator))

    raw = pct(earned_w, possible_w)
    return GradeReport(
        raw_score=raw,
        band=band(raw),
        per_dimension={d: pct(dim_earned[d], dim_possible[d]) for d in dim_earned},
        per_section={s: pct(sec_earned[s], sec_possible[s]) for s in sec_earned},
        misconceptions=tuple(misconceptions),
        hint_penalty_applied=max(
            0.0, 100.0 * (unpenalized_w - earned_w) / possible_w
        ),
    )


def grade_report_to_dict(report: GradeReport) -> dict:
    return {
        "raw_score": report.raw_score,
        "band": report.band.value,
        "per_dimension": {d.value: v for d, v in report.per_dimension.items()},
        "per_section": dict(report.per_section),
        "misconceptions": list(report.misconceptions),
        "hint_penalty_applied": report.hint_penalty_applied,
    }


def scaled_mix(base: dict[Level, int], count: int) -> dict[Level, int]:
    """Distribute ``count`` slots across levels proportionally to ``base``.

    Largest-remainder apportionment; leftover slots go to the easier levels
    first so shortened tests stay bottom-heavy. Deterministic.
    """
    total = sum(base.values())
    raw = {level: count * base.get(level, 0) / total for level in Level}
    mix = {level: int(raw[level]) for level in Level}
    leftover = count - sum(mix.values())
    by_remainder = sorted(
        Level, key=lambda lv: (-(raw[lv] - mix[lv]), list(Level).index(lv))
    )
    for level in by_remainder[:leftover]:
        mix[level] += 1
    return mix
