"""Per-learner session engine.

Drives profiling and the pre-test / learning / post-test loop for one
course pack, updating the learner model from measured outcomes. Every
mutation is an event; the engine folds events through ``SessionRecord.apply``
both when they happen and when a record is replayed, so a replayed log
always reconstructs the same model.

State machine (stage level):

    AwaitingProfile -> ConceptPretest
    ConceptPretest  -> ConceptLearning          (gate: present)
    ConceptPretest  -> ConceptPosttest          (gate: skip; rule: skip/remove)
    ConceptPretest  -> ConceptPretest           (remediation redirect)
    ConceptLearning -> ConceptPosttest          (learner starts the post-test)
    ConceptPosttest -> ConceptPretest           (advance or retry)
    ConceptPosttest -> CourseComplete

A skipped or removed concept completes its post-test phase from existing
evidence (the pre-test report, or none), which keeps every observed
transition inside the legal set.
"""

from __future__ import annotations

import hashlib
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Callable

from .assessment import (
    GradeReport,
    KnowledgeBand,
    Level,
    Phase,
    TestInstance,
    TestSpec,
    grade,
    grade_report_to_dict,
    select_questions,
)
from .content import Concept, CoursePack, topological_order
from .errors import InvalidState, OutOfRange, UnknownEntity, UnknownPack
from .expert import (
    FlowDirective,
    FlowKind,
    LessonPlan,
    Rulebook,
    plan_concept,
    untried_styles,
    weakest_prereq_below,
)
from .model import (
    Event,
    EventKind,
    LearnerModel,
    SessionState,
    Stage,
    apply_event,
    blend_argmax,
)
from .profiler import Instrument, LearningStyle, StyleVector, score_questionnaire
from .store import RecordStore

EFFECTIVENESS_ALPHA = 0.3
ESCALATION_ATTEMPTS = 3


def modeler_gain(pre_score: float, post_score: float) -> float:
    """Normalized learning gain g in [0, 1]; 0.5 means no change."""
    for score in (pre_score, post_score):
        if not 0.0 <= score <= 100.0:
            raise OutOfRange(f"score {score} outside [0, 100]", value=score)
    gain = max(-1.0, min(1.0, (post_score - pre_score) / 100.0))
    return (gain + 1.0) / 2.0


def updated_effectiveness(
    current: float, pre_score: float, post_score: float, alpha: float = EFFECTIVENESS_ALPHA
) -> float:
    """EMA update toward the normalized gain: (1-a)*current + a*g."""
    return (1.0 - alpha) * current + alpha * modeler_gain(pre_score, post_score)


def pretest_gate(
    report: GradeReport,
    plan: LessonPlan,
    model: LearnerModel,
    concept: Concept,
    pack: CoursePack,
) -> tuple[FlowDirective, LearningStyle | None]:
    """Flow decision after a graded pre-test, plus a forced variant if any.

    Default mapping: Excellent skips the concept (mastered at the pre-test
    band), Good and Very good present it, lower bands remediate the weakest
    prerequisite below mastery or, failing that, present with an untried
    variant. A rule-set flow overrides the default.
    """
    if plan.flow_from_rule:
        return plan.flow, None

    if report.band is KnowledgeBand.EXCELLENT:
        return FlowDirective(FlowKind.SKIP), None
    if report.band >= KnowledgeBand.GOOD:
        return FlowDirective(FlowKind.PRESENT), None

    # "Weak prerequisite" always means below Good, whatever the pack's
    # configured mastery threshold is.
    weakest = weakest_prereq_below(model, concept, pack, KnowledgeBand.GOOD)
    if weakest is not None:
        return FlowDirective(FlowKind.REMEDIATE, target=weakest), None

    remaining = untried_styles(model, concept.id)
    forced = None
    if remaining and plan.variant_style not in remaining:
        forced = blend_argmax(model, among=remaining)
    return FlowDirective(FlowKind.PRESENT), forced


def plan_from_dict(doc: dict) -> LessonPlan:
    def spec(phase: Phase, raw: dict) -> TestSpec:
        return TestSpec(
            phase=phase,
            count=int(raw["count"]),
            level_mix={Level(k): int(v) for k, v in raw["level_mix"].items()},
        )

    flow = doc["flow"]
    return LessonPlan(
        concept=doc["concept"],
        variant_style=LearningStyle(doc["variant_style"]),
        pretest=spec(Phase.PRETEST, doc["pretest"]),
        posttest=spec(Phase.POSTTEST, doc["posttest"]),
        flow=FlowDirective(kind=FlowKind(flow["kind"]), target=flow.get("target")),
        hint_budget=int(doc["hint_budget"]),
        teacher_flags=tuple(doc.get("teacher_flags", [])),
        flow_from_rule=bool(doc.get("flow_from_rule", False)),
    )


class SessionRecord:
    """A learner's folded state: model, session stage, and planning context."""

    def __init__(self, learner_id: str):
        self.model = LearnerModel(learner_id=learner_id)
        self.state = SessionState(stage=Stage.AWAITING_PROFILE)
        self.plans: dict[str, dict] = {}
        self.pretest_reports: dict[str, dict] = {}
        self.seq = 0

    def apply(self, event: Event) -> None:
        apply_event(self.model, event)
        payload = event.payload

        if event.kind is EventKind.PROFILED:
            self.state = SessionState.from_dict(payload["state"])
        elif event.kind is EventKind.PLAN_ISSUED:
            self.plans[payload["concept"]] = payload["plan"]
        elif event.kind is EventKind.TEST_GRADED and payload["phase"] == "pretest":
            self.pretest_reports[payload["concept"]] = payload["report"]
        elif event.kind is EventKind.FLOW_DECIDED:
            self.state = SessionState.from_dict(payload["to_state"])
            if payload["decision"] in ("present", "repeat") and payload.get("variant"):
                plan = self.plans.get(payload["concept"])
                if plan:
                    plan["variant_style"] = payload["variant"]

        self.seq = event.seq

    def snapshot(self, pack_id: str, rulebook_id: str) -> dict:
        return {
            "pack_id": pack_id,
            "rulebook_id": rulebook_id,
            "seq": self.seq,
            "state": self.state.to_dict(),
            "model": self.model.to_dict(),
        }


@dataclass
class IssuedTest:
    """An in-flight test; regenerated deterministically if the engine restarts."""

    test_id: str
    learner_id: str
    concept_id: str
    phase: Phase
    instance: TestInstance
    hint_budget: int
    hints_served: dict[str, int] = field(default_factory=dict)

    def hints_remaining(self) -> int:
        return self.hint_budget - sum(self.hints_served.values())


@dataclass(frozen=True)
class SubmitResult:
    report: GradeReport
    state: SessionState
    flow: str
    concept_id: str
    phase: Phase
    correct_choices: dict[str, str] | None = None  # revealed after post-tests only


class TutorEngine:
    """One engine per (pack, rulebook); safe for concurrent distinct learners."""

    def __init__(
        self,
        pack: CoursePack,
        rulebook: Rulebook,
        instrument: Instrument | None = None,
        store: RecordStore | None = None,
        seed: int | None = 0,
        mastery_band: KnowledgeBand = KnowledgeBand.GOOD,
        escalation_attempts: int = ESCALATION_ATTEMPTS,
        variant_policy: Callable[[str, str, int], LearningStyle] | None = None,
    ):
        if not pack.concepts:
            raise ValueError("course pack has no concepts")
        self.pack = pack
        self.rulebook = rulebook
        self.instrument = instrument
        self.store = store or RecordStore(None)
        self.seed = seed  # None switches test seeds to entropy
        self.mastery_band = mastery_band
        self.escalation_attempts = escalation_attempts
        self.variant_policy = variant_policy
        self.topo_order = topological_order(pack)

        self._records: dict[str, SessionRecord] = {}
        self._active_tests: dict[str, IssuedTest] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    # --- record access -----------------------------------------------------

    def _lock_for(self, learner_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(learner_id, threading.Lock())

    def _record(self, learner_id: str) -> SessionRecord:
        record = self._records.get(learner_id)
        if record is None:
            record = SessionRecord(learner_id)
            for event in self.store.read_events(learner_id):
                record.apply(event)
            stored = self.store.read_snapshot(learner_id)
            if stored is not None and stored.get("pack_id") != self.pack.id:
                raise UnknownPack(
                    f"records for {learner_id!r} belong to pack "
                    f"{stored.get('pack_id')!r}, engine serves {self.pack.id!r}",
                    learner=learner_id,
                )
            self._records[learner_id] = record
        return record

    def _emit(self, record: SessionRecord, kind: EventKind, payload: dict) -> Event:
        event = Event(
            seq=record.seq + 1,
            timestamp=time.time(),
            kind=kind,
            payload=payload,
        )
        record.apply(event)
        self.store.append_event(record.model.learner_id, event)
        self.store.write_snapshot(
            record.model.learner_id, record.snapshot(self.pack.id, self.rulebook.id)
        )
        return event

    def _concept(self, concept_id: str) -> Concept:
        concept = self.pack.concept_by_id(concept_id)
        if concept is None:
            raise UnknownEntity(f"unknown concept {concept_id!r}", concept=concept_id)
        return concept

    # --- seeds and test ids --------------------------------------------------

    def _test_serial(self, record: SessionRecord) -> int:
        return sum(
            1 for e in record.model.event_log if e.kind is EventKind.TEST_GRADED
        )

    def _seed_for(self, learner_id: str, concept_id: str, phase: Phase, serial: int) -> int:
        if self.seed is None:
            return uuid.uuid4().int & ((1 << 63) - 1)
        key = f"{self.seed}:{learner_id}:{concept_id}:{phase.value}:{serial}"
        return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big") >> 1

    # --- session flow ----------------------------------------------------------

    def state(self, learner_id: str) -> SessionState:
        with self._lock_for(learner_id):
            return self._record(learner_id).state

    def start_session(self, learner_id: str) -> SessionState:
        """Resume or begin: profiling first, then the first open concept."""
        with self._lock_for(learner_id):
            return self._record(learner_id).state

    def progress(self, learner_id: str) -> dict:
        with self._lock_for(learner_id):
            record = self._record(learner_id)
            concepts = []
            for cid in self.topo_order:
                cs = record.model.concept_state.get(cid)
                concepts.append(
                    {
                        "concept": cid,
                        "title": self._concept(cid).title,
                        "band": cs.band.value if cs and cs.band else None,
                        "attempts": cs.attempts if cs else 0,
                        "removed": bool(cs.removed) if cs else False,
                    }
                )
            return {
                "state": record.state.to_dict(),
                "concepts": concepts,
                "profiled": record.model.style_vector is not None,
            }

    def submit_profile(
        self, learner_id: str, responses: dict[str, int]
    ) -> tuple[StyleVector, SessionState]:
        if self.instrument is None:
            raise InvalidState("engine has no questionnaire instrument configured")
        with self._lock_for(learner_id):
            record = self._record(learner_id)
            if record.state.stage is not Stage.AWAITING_PROFILE:
                raise InvalidState(
                    f"profile already submitted; state is {record.state.stage.value}",
                    state=record.state.to_dict(),
                )
            vector = score_questionnaire(self.instrument, responses)
            first = self._first_open_concept(record)
            state = SessionState(stage=Stage.CONCEPT_PRETEST, concept=first)
            self._emit(
                record,
                EventKind.PROFILED,
                {"style_vector": vector.to_dict(), "state": state.to_dict()},
            )
            self._enter_concept(record, first, visited=set())
            return vector, record.state

    def _first_open_concept(self, record: SessionRecord) -> str:
        for cid in self.topo_order:
            if self._is_open(record, cid):
                return cid
        # Engines refuse empty packs, so a fresh learner always has one.
        raise InvalidState("no open concept remains", learner=record.model.learner_id)

    def _is_open(self, record: SessionRecord, concept_id: str) -> bool:
        cs = record.model.concept_state.get(concept_id)
        if cs is None:
            return True
        if cs.removed:
            return False
        return cs.band is None or cs.band.rank < self.mastery_band.rank

    def _issue_plan(self, record: SessionRecord, concept: Concept) -> LessonPlan:
        plan = plan_concept(record.model, concept, self.rulebook, self.pack)
        if self.variant_policy is not None:
            cs = record.model.concept_state.get(concept.id)
            forced = self.variant_policy(
                record.model.learner_id, concept.id, cs.attempts if cs else 0
            )
            plan = LessonPlan(
                concept=plan.concept,
                variant_style=forced,
                pretest=plan.pretest,
                posttest=plan.posttest,
                flow=plan.flow,
                hint_budget=plan.hint_budget,
                teacher_flags=plan.teacher_flags,
                flow_from_rule=plan.flow_from_rule,
            )
        cs = record.model.concept_state.get(concept.id)
        self._emit(
            record,
            EventKind.PLAN_ISSUED,
            {
                "concept": concept.id,
                "attempt": cs.attempts if cs else 0,
                "plan": plan.to_dict(),
            },
        )
        return plan

    def _enter_concept(self, record: SessionRecord, concept_id: str, visited: set[str]) -> None:
        """Issue a plan on pre-test entry and apply any rule-set routing."""
        concept = self._concept(concept_id)
        plan = self._issue_plan(record, concept)
        if not plan.flow_from_rule:
            return

        here = SessionState(stage=Stage.CONCEPT_PRETEST, concept=concept_id)
        if (
            plan.flow.kind is FlowKind.REMEDIATE
            and plan.flow.target
            and plan.flow.target != concept_id
            and plan.flow.target not in visited
            and self._is_open(record, plan.flow.target)
        ):
            target = plan.flow.target
            self._emit(
                record,
                EventKind.FLOW_DECIDED,
                {
                    "concept": concept_id,
                    "decision": "remediate",
                    "target": target,
                    "source": "rule",
                    "from_state": here.to_dict(),
                    "to_state": SessionState(
                        stage=Stage.CONCEPT_PRETEST, concept=target
                    ).to_dict(),
                },
            )
            self._enter_concept(record, target, visited | {concept_id})
        elif plan.flow.kind in (FlowKind.SKIP, FlowKind.REMOVE):
            # Rule-set drop before any test. Removal always closes the
            # concept, otherwise a skip rule on an unmastered concept would
            # re-select it forever.
            self._emit(
                record,
                EventKind.FLOW_DECIDED,
                {
                    "concept": concept_id,
                    "decision": plan.flow.kind.value,
                    "source": "rule",
                    "removed": True,
                    "from_state": here.to_dict(),
                    "to_state": SessionState(
                        stage=Stage.CONCEPT_POSTTEST, concept=concept_id
                    ).to_dict(),
                },
            )
            self._advance(record, concept_id, visited)
        # present / repeat / self-remediation: stay in the pre-test stage.

    def _advance(self, record: SessionRecord, from_concept: str, visited: set[str]) -> None:
        here = SessionState(stage=Stage.CONCEPT_POSTTEST, concept=from_concept)
        next_cid = next(
            (cid for cid in self.topo_order if self._is_open(record, cid)), None
        )
        if next_cid is None:
            self._emit(
                record,
                EventKind.FLOW_DECIDED,
                {
                    "concept": from_concept,
                    "decision": "complete",
                    "source": "engine",
                    "from_state": here.to_dict(),
                    "to_state": SessionState(stage=Stage.COURSE_COMPLETE).to_dict(),
                },
            )
            return
        self._emit(
            record,
            EventKind.FLOW_DECIDED,
            {
                "concept": from_concept,
                "decision": "advance",
                "target": next_cid,
                "source": "engine",
                "from_state": here.to_dict(),
                "to_state": SessionState(
                    stage=Stage.CONCEPT_PRETEST, concept=next_cid
                ).to_dict(),
            },
        )
        self._enter_concept(record, next_cid, visited)

    # --- tests ---------------------------------------------------------------

    def begin_test(self, learner_id: str, concept_id: str, phase: Phase) -> IssuedTest:
        with self._lock_for(learner_id):
            record = self._record(learner_id)
            concept = self._concept(concept_id)
            state = record.state

            if phase is Phase.PRETEST:
                if not (
                    state.stage is Stage.CONCEPT_PRETEST and state.concept == concept_id
                ):
                    raise InvalidState(
                        f"pre-test for {concept_id!r} not available in state "
                        f"{state.stage.value}",
                        state=state.to_dict(),
                    )
            else:
                if state.stage is Stage.CONCEPT_LEARNING and state.concept == concept_id:
                    here = SessionState(stage=Stage.CONCEPT_LEARNING, concept=concept_id)
                    self._emit(
                        record,
                        EventKind.FLOW_DECIDED,
                        {
                            "concept": concept_id,
                            "decision": "start_posttest",
                            "source": "learner",
                            "from_state": here.to_dict(),
                            "to_state": SessionState(
                                stage=Stage.CONCEPT_POSTTEST, concept=concept_id
                            ).to_dict(),
                        },
                    )
                elif not (
                    state.stage is Stage.CONCEPT_POSTTEST and state.concept == concept_id
                ):
                    raise InvalidState(
                        f"post-test for {concept_id!r} not available in state "
                        f"{state.stage.value}",
                        state=state.to_dict(),
                    )

            active = self._active_tests.get(learner_id)
            if (
                active is not None
                and active.concept_id == concept_id
                and active.phase is phase
            ):
                return active  # idempotent re-issue of the in-flight test

            plan = self._current_plan(record, concept_id)
            spec = plan.pretest if phase is Phase.PRETEST else plan.posttest
            serial = self._test_serial(record)
            seed = self._seed_for(learner_id, concept_id, phase, serial)
            cs = record.model.concept_state.get(concept_id)
            used = set(cs.used_questions) if cs else set()
            instance = select_questions(concept, spec, used, seed)
            issued = IssuedTest(
                test_id=f"{concept_id}.{phase.value}.{serial}",
                learner_id=learner_id,
                concept_id=concept_id,
                phase=phase,
                instance=instance,
                hint_budget=plan.hint_budget,
            )
            self._active_tests[learner_id] = issued
            return issued

    def _current_plan(self, record: SessionRecord, concept_id: str) -> LessonPlan:
        doc = record.plans.get(concept_id)
        if doc is None:
            raise InvalidState(
                f"no plan issued for concept {concept_id!r}", concept=concept_id
            )
        return plan_from_dict(doc)

    def active_test(self, learner_id: str, test_id: str) -> IssuedTest:
        with self._lock_for(learner_id):
            active = self._active_tests.get(learner_id)
            if active is None or active.test_id != test_id:
                raise UnknownEntity(f"no active test {test_id!r}", test=test_id)
            return active

    def request_hint(self, learner_id: str, test_id: str, question_id: str) -> tuple[str, int]:
        from .errors import HintBudgetExhausted

        with self._lock_for(learner_id):
            active = self._active_tests.get(learner_id)
            if active is None or active.test_id != test_id:
                raise UnknownEntity(f"no active test {test_id!r}", test=test_id)
            if question_id not in active.instance.questions:
                raise UnknownEntity(
                    f"question {question_id!r} not in test {test_id!r}",
                    question=question_id,
                )
            if active.hints_remaining() <= 0:
                raise HintBudgetExhausted("hint budget exhausted", test=test_id)
            concept = self._concept(active.concept_id)
            question = concept.question_by_id(question_id)
            served = active.hints_served.get(question_id, 0)
            if served >= len(question.hints):
                raise HintBudgetExhausted(
                    f"no further hints for question {question_id!r}",
                    question=question_id,
                )
            active.hints_served[question_id] = served + 1
            return question.hints[served], active.hints_remaining()

    def submit_answers(
        self, learner_id: str, test_id: str, answers: dict[str, str]
    ) -> SubmitResult:
        with self._lock_for(learner_id):
            record = self._record(learner_id)
            active = self._active_tests.get(learner_id)
            if active is None or active.test_id != test_id:
                raise UnknownEntity(f"no active test {test_id!r}", test=test_id)

            concept = self._concept(active.concept_id)
            plan = self._current_plan(record, active.concept_id)
            report = grade(
                concept,
                active.instance,
                answers,
                style=plan.variant_style,
                hints_used=dict(active.hints_served),
            )
            self._emit(
                record,
                EventKind.TEST_GRADED,
                {
                    "test_id": test_id,
                    "concept": active.concept_id,
                    "phase": active.phase.value,
                    "instance": {
                        "questions": list(active.instance.questions),
                        "seed": active.instance.seed,
                    },
                    "answers": dict(answers),
                    "hints_used": dict(active.hints_served),
                    "report": grade_report_to_dict(report),
                    "mastery_band": self.mastery_band.value,
                },
            )
            del self._active_tests[learner_id]

            if active.phase is Phase.PRETEST:
                flow = self._apply_pretest_gate(record, concept, plan, report)
                return SubmitResult(
                    report=report,
                    state=record.state,
                    flow=flow,
                    concept_id=concept.id,
                    phase=active.phase,
                )

            flow = self._complete_posttest(record, concept, plan, report)
            reveal = {
                qid: concept.question_by_id(qid).correct_choice.id
                for qid in active.instance.questions
            }
            return SubmitResult(
                report=report,
                state=record.state,
                flow=flow,
                concept_id=concept.id,
                phase=active.phase,
                correct_choices=reveal,
            )

    # --- gate and completion ----------------------------------------------------

    def _apply_pretest_gate(
        self,
        record: SessionRecord,
        concept: Concept,
        plan: LessonPlan,
        report: GradeReport,
    ) -> str:
        directive, forced = pretest_gate(report, plan, record.model, concept, self.pack)
        if self.variant_policy is not None:
            forced = None  # experiment policies own the variant choice
        here = SessionState(stage=Stage.CONCEPT_PRETEST, concept=concept.id)
        source = "rule" if plan.flow_from_rule else "gate"

        if directive.kind is FlowKind.SKIP:
            self._emit(
                record,
                EventKind.FLOW_DECIDED,
                {
                    "concept": concept.id,
                    "decision": "skip",
                    "source": source,
                    "band": report.band.value,
                    "from_state": here.to_dict(),
                    "to_state": SessionState(
                        stage=Stage.CONCEPT_POSTTEST, concept=concept.id
                    ).to_dict(),
                },
            )
            self._advance(record, concept.id, visited={concept.id})
            return "skip"

        if (
            directive.kind is FlowKind.REMEDIATE
            and directive.target
            and directive.target != concept.id
        ):
            self._emit(
                record,
                EventKind.FLOW_DECIDED,
                {
                    "concept": concept.id,
                    "decision": "remediate",
                    "target": directive.target,
                    "source": source,
                    "from_state": here.to_dict(),
                    "to_state": SessionState(
                        stage=Stage.CONCEPT_PRETEST, concept=directive.target
                    ).to_dict(),
                },
            )
            self._enter_concept(record, directive.target, visited={concept.id})
            return "remediate"

        if directive.kind is FlowKind.REMOVE:
            self._emit(
                record,
                EventKind.FLOW_DECIDED,
                {
                    "concept": concept.id,
                    "decision": "remove",
                    "source": source,
                    "removed": True,
                    "from_state": here.to_dict(),
                    "to_state": SessionState(
                        stage=Stage.CONCEPT_POSTTEST, concept=concept.id
                    ).to_dict(),
                },
            )
            self._advance(record, concept.id, visited={concept.id})
            return "remove"

        # present (or repeat): move into the learning phase.
        variant = forced if forced is not None else plan.variant_style
        self._emit(
            record,
            EventKind.FLOW_DECIDED,
            {
                "concept": concept.id,
                "decision": "present",
                "variant": variant.value,
                "source": source if forced is None else "gate-rotation",
                "from_state": here.to_dict(),
                "to_state": SessionState(
                    stage=Stage.CONCEPT_LEARNING, concept=concept.id
                ).to_dict(),
            },
        )
        return "present"

    def _complete_posttest(
        self,
        record: SessionRecord,
        concept: Concept,
        plan: LessonPlan,
        report: GradeReport,
    ) -> str:
        pre_doc = record.pretest_reports.get(concept.id)
        pre_score = float(pre_doc["raw_score"]) if pre_doc else 0.0
        style = plan.variant_style
        before = record.model.effectiveness[style]
        after = updated_effectiveness(before, pre_score, report.raw_score)
        self._emit(
            record,
            EventKind.MODEL_UPDATED,
            {
                "concept": concept.id,
                "style": style.value,
                "before": before,
                "after": after,
                "pre_score": pre_score,
                "post_score": report.raw_score,
            },
        )

        cs = record.model.concept_state.get(concept.id)
        here = SessionState(stage=Stage.CONCEPT_POSTTEST, concept=concept.id)

        if report.band.rank >= self.mastery_band.rank:
            self._advance(record, concept.id, visited={concept.id})
            return "advance"

        if cs and cs.attempts == self.escalation_attempts:
            self._emit(
                record,
                EventKind.MESSAGE_POSTED,
                {
                    "channel": "ToTeacher",
                    "flag": "FlagForTeacher",
                    "reason": f"{cs.attempts} failed attempts on {concept.id}",
                    "concept": concept.id,
                },
            )

        self._emit(
            record,
            EventKind.FLOW_DECIDED,
            {
                "concept": concept.id,
                "decision": "retry",
                "source": "engine",
                "from_state": here.to_dict(),
                "to_state": SessionState(
                    stage=Stage.CONCEPT_PRETEST, concept=concept.id
                ).to_dict(),
            },
        )
        self._enter_concept(record, concept.id, visited={concept.id})
        return "retry"

    # --- content --------------------------------------------------------------

    def content_for(self, learner_id: str, concept_id: str) -> tuple[Concept, LessonPlan]:
        with self._lock_for(learner_id):
            record = self._record(learner_id)
            state = record.state
            if not (
                state.stage is Stage.CONCEPT_LEARNING and state.concept == concept_id
            ):
                raise InvalidState(
                    f"content for {concept_id!r} not available in state "
                    f"{state.stage.value}",
                    state=state.to_dict(),
                )
            return self._concept(concept_id), self._current_plan(record, concept_id)

    # --- messaging ---------------------------------------------------------------

    def post_message(self, to: str, channel: str, body: str) -> dict:
        if channel not in ("ToLearner", "ToModel"):
            raise UnknownEntity(f"unknown message channel {channel!r}", channel=channel)
        with self._lock_for(to):
            record = self._record(to)
            message = {
                "id": f"msg-{record.seq + 1}",
                "to": to,
                "channel": channel,
                "body": body,
                "read": False,
                "timestamp": time.time(),
            }
            self._emit(record, EventKind.MESSAGE_POSTED, {"message": message})
            if channel == "ToLearner":
                inbox = self.store.read_inbox(to)
                inbox.append(message)
                self.store.write_inbox(to, inbox)
            return message

    def inbox(self, learner_id: str) -> list[dict]:
        with self._lock_for(learner_id):
            return self.store.read_inbox(learner_id)

    def mark_read(self, learner_id: str, message_id: str) -> dict:
        with self._lock_for(learner_id):
            inbox = self.store.read_inbox(learner_id)
            for message in inbox:
                if message["id"] == message_id:
                    message["read"] = True
                    self.store.write_inbox(learner_id, inbox)
                    return message
            raise UnknownEntity(f"no message {message_id!r}", message=message_id)
