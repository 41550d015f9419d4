"""Experiment harness comparing sequencing policies on synthetic learners.

Each simulated learner has a true style and answers a question correctly
with probability clamp(aptitude + sensitivity * match - penalty(level)
+ noise, 0, 1), where match is 1 exactly when the presented variant hits
the true style. All random draws are keyed by (seed, learner, question),
never by policy, so policies are compared under common random numbers and
a style-blind learner produces bit-identical trajectories everywhere.
"""

from __future__ import annotations

import hashlib
import json
import random
import statistics
from dataclasses import dataclass

from .assessment import Phase
from .content import CoursePack, Level
from .errors import BankExhausted
from .expert import Rulebook
from .model import EventKind, Stage
from .profiler import STYLE_ORDER, Instrument, LearningStyle
from .session import TutorEngine
from .store import RecordStore

DIFFICULTY_PENALTY = {Level.L1: 0.0, Level.L2: 0.15, Level.L3: 0.3}

POLICIES = ("adaptive", "fixed-variant", "random-variant", "oracle")
DEFAULT_POLICIES = ("adaptive", "fixed-variant", "random-variant")


@dataclass(frozen=True)
class SimLearner:
    learner_id: str
    true_style: LearningStyle
    aptitude: float
    style_sensitivity: float
    noise: float
    seed: int


def _h(*parts) -> int:
    key = ":".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big")


def _rng(*parts) -> random.Random:
    return random.Random(_h(*parts))


def make_population(
    count: int, sensitivity: float, noise: float, seed: int
) -> list[SimLearner]:
    """Balanced true styles, aptitude uniform in [0.45, 0.9]."""
    learners = []
    for i in range(count):
        style = STYLE_ORDER[i % len(STYLE_ORDER)]
        aptitude = _rng(seed, i, "aptitude").uniform(0.45, 0.9)
        learners.append(
            SimLearner(
                learner_id=f"sim{i:04d}",
                true_style=style,
                aptitude=aptitude,
                style_sensitivity=sensitivity,
                noise=noise,
                seed=seed,
            )
        )
    return learners


def questionnaire_answers(learner: SimLearner, instrument: Instrument) -> dict[str, int]:
    """Answers that make the true style dominate the profile."""
    answers = {}
    for item in instrument.items:
        high = item.style == learner.true_style
        if item.reverse_scored:
            answers[item.id] = instrument.scale_min if high else instrument.scale_max - 1
        else:
            answers[item.id] = instrument.scale_max if high else instrument.scale_min + 1
    return answers


def answer_probability(learner: SimLearner, level: Level, match: bool) -> float:
    base = (
        learner.aptitude
        + learner.style_sensitivity * (1.0 if match else 0.0)
        - DIFFICULTY_PENALTY[level]
    )
    return base


def simulate_answer(learner: SimLearner, question, match: bool) -> bool:
    """Correctness draw, keyed so every policy sees the same luck."""
    noise_draw = _rng(learner.seed, learner.learner_id, question.id, "noise").gauss(
        0.0, learner.noise
    )
    p = max(0.0, min(1.0, answer_probability(learner, question.level, match) + noise_draw))
    u = _rng(learner.seed, learner.learner_id, question.id, "u").random()
    return u < p


def pick_answer(learner: SimLearner, question, match: bool) -> str:
    if simulate_answer(learner, question, match):
        return question.correct_choice.id
    wrong = [c.id for c in question.choices if not c.correct]
    picker = _rng(learner.seed, learner.learner_id, question.id, "wrong")
    return picker.choice(wrong)


def variant_policy_for(policy: str, learner: SimLearner):
    """Engine hook overriding the variant choice; None keeps the engine's own."""
    if policy == "adaptive":
        return None
    if policy == "fixed-variant":
        return lambda lid, cid, attempt: LearningStyle.SS
    if policy == "oracle":
        return lambda lid, cid, attempt: learner.true_style
    if policy == "random-variant":
        def rnd(lid, cid, attempt):
            return _rng(learner.seed, lid, cid, attempt, "random-variant").choice(
                list(STYLE_ORDER)
            )
        return rnd
    raise ValueError(f"unknown policy {policy!r}")


@dataclass
class RunOutcome:
    gains: list[float]
    attempts_per_concept: list[int]
    final_bands: list[str]
    completed: bool
    bank_exhausted_at: str | None = None

    def mean_gain(self) -> float:
        return statistics.fmean(self.gains) if self.gains else 0.0


def run_learner(
    learner: SimLearner,
    policy: str,
    pack: CoursePack,
    rulebook: Rulebook,
    instrument: Instrument,
    max_attempts: int = 3,
    max_steps: int = 200,
    on_bank_exhausted: str = "abandon",
) -> RunOutcome:
    """Drive one learner through a fresh engine under one policy.

    A drained question bank abandons the run and is reported on the outcome;
    pass on_bank_exhausted="raise" to surface it as the engine error instead.
    """
    engine = TutorEngine(
        pack=pack,
        rulebook=rulebook,
        instrument=instrument,
        store=RecordStore(None),
        seed=_h(learner.seed, learner.learner_id, "engine"),
        variant_policy=variant_policy_for(policy, learner),
    )
    lid = learner.learner_id
    engine.submit_profile(lid, questionnaire_answers(learner, instrument))

    completed = False
    exhausted_at: str | None = None
    current_variant: LearningStyle | None = None
    for _ in range(max_steps):
        state = engine.state(lid)
        if state.stage is Stage.COURSE_COMPLETE:
            completed = True
            break

        record = engine._record(lid)
        concept_state = record.model.concept_state.get(state.concept)
        if concept_state and concept_state.attempts >= max_attempts:
            break  # stuck learner: stop instead of burning the bank

        concept = engine.pack.concept_by_id(state.concept)
        try:
            if state.stage is Stage.CONCEPT_PRETEST:
                issued = engine.begin_test(lid, state.concept, Phase.PRETEST)
                match = False
            else:
                if state.stage is Stage.CONCEPT_LEARNING:
                    _, plan = engine.content_for(lid, state.concept)
                    current_variant = plan.variant_style
                issued = engine.begin_test(lid, state.concept, Phase.POSTTEST)
                match = current_variant == learner.true_style
        except BankExhausted:
            if on_bank_exhausted == "raise":
                raise
            exhausted_at = state.concept
            break

        answers = {
            qid: pick_answer(learner, concept.question_by_id(qid), match)
            for qid in issued.instance.questions
        }
        engine.submit_answers(lid, issued.test_id, answers)

    model = engine._record(lid).model
    gains = [
        e.payload["post_score"] - e.payload["pre_score"]
        for e in model.event_log
        if e.kind is EventKind.MODEL_UPDATED
    ]
    attempts = [cs.attempts for cs in model.concept_state.values()]
    bands = [
        cs.band.value if cs.band else "none" for cs in model.concept_state.values()
    ]
    return RunOutcome(
        gains=gains,
        attempts_per_concept=attempts,
        final_bands=bands,
        completed=completed,
        bank_exhausted_at=exhausted_at,
    )


def paired_interval(diffs: list[float]) -> tuple[float, float, float]:
    """Mean paired difference with a 95% normal-approximation interval."""
    mean = statistics.fmean(diffs)
    if len(diffs) < 2:
        return mean, mean, mean
    sd = statistics.stdev(diffs)
    half = 1.96 * sd / (len(diffs) ** 0.5)
    return mean, mean - half, mean + half


def run_experiment(
    pack: CoursePack,
    rulebook: Rulebook,
    instrument: Instrument,
    population: int,
    sensitivity: float,
    seed: int,
    policies: tuple[str, ...] = DEFAULT_POLICIES,
    noise: float = 0.1,
    max_attempts: int = 3,
    on_bank_exhausted: str = "abandon",
) -> dict:
    """Run every learner under every policy and aggregate a report.

    Deterministic: the same configuration and seed produce a byte-identical
    report (no timestamps, sorted keys).
    """
    if population < 1:
        raise ValueError("population must be at least 1")
    learners = make_population(population, sensitivity, noise, seed)

    per_policy: dict[str, list[RunOutcome]] = {}
    for policy in policies:
        per_policy[policy] = [
            run_learner(
                learner,
                policy,
                pack,
                rulebook,
                instrument,
                max_attempts=max_attempts,
                on_bank_exhausted=on_bank_exhausted,
            )
            for learner in learners
        ]

    report: dict = {
        "config": {
            "pack_id": pack.id,
            "rulebook_id": rulebook.id,
            "population": population,
            "style_sensitivity": sensitivity,
            "noise": noise,
            "seed": seed,
            "policies": list(policies),
            "max_attempts": max_attempts,
        },
        "policies": {},
        "comparisons": {},
    }

    for policy in policies:
        outcomes = per_policy[policy]
        all_attempts = [a for o in outcomes for a in o.attempts_per_concept]
        band_counts: dict[str, int] = {}
        for o in outcomes:
            for b in o.final_bands:
                band_counts[b] = band_counts.get(b, 0) + 1
        report["policies"][policy] = {
            "mean_gain": statistics.fmean([o.mean_gain() for o in outcomes]),
            "mean_attempts_per_concept": (
                statistics.fmean(all_attempts) if all_attempts else 0.0
            ),
            "band_distribution": dict(sorted(band_counts.items())),
            "completion_rate": statistics.fmean(
                [1.0 if o.completed else 0.0 for o in outcomes]
            ),
            "bank_exhausted_runs": sorted(
                o.bank_exhausted_at for o in outcomes if o.bank_exhausted_at
            ),
            "per_learner_gains": [o.mean_gain() for o in outcomes],
        }

    if "adaptive" in policies:
        adaptive = [o.mean_gain() for o in per_policy["adaptive"]]
        for policy in policies:
            if policy == "adaptive":
                continue
            other = [o.mean_gain() for o in per_policy[policy]]
            diffs = [a - b for a, b in zip(adaptive, other)]
            mean, lo, hi = paired_interval(diffs)
            report["comparisons"][f"adaptive_vs_{policy}"] = {
                "mean_diff": mean,
                "ci95": [lo, hi],
                "n": population,
            }

    return report


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def summary_table(report: dict) -> str:
    """Plain-text summary of the per-policy aggregates."""
    lines = []
    cfg = report["config"]
    lines.append(
        f"pack={cfg['pack_id']} population={cfg['population']} "
        f"sensitivity={cfg['style_sensitivity']} seed={cfg['seed']}"
    )
    header = f"{'policy':<16} {'mean gain':>10} {'attempts':>9} {'completed':>10}"
    lines.append(header)
    lines.append("-" * len(header))
    for policy, stats in report["policies"].items():
        lines.append(
            f"{policy:<16} {stats['mean_gain']:>10.2f} "
            f"{stats['mean_attempts_per_concept']:>9.2f} "
            f"{stats['completion_rate']:>9.0%}"
        )
    for name, cmp in report.get("comparisons", {}).items():
        lo, hi = cmp["ci95"]
        lines.append(
            f"{name}: mean diff {cmp['mean_diff']:+.2f}, 95% CI [{lo:+.2f}, {hi:+.2f}]"
        )
    return "\n".join(lines)
