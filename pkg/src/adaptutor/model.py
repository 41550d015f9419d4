"""Learner model, session states, and the append-only event record.

The event log is the source of truth: every model mutation corresponds to
one event, and ``apply_event`` is the single fold function used both when
events happen live and when a record is replayed from disk.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .assessment import KnowledgeBand
from .profiler import STYLE_ORDER, LearningStyle, StyleVector


class Stage(str, Enum):
    AWAITING_PROFILE = "AwaitingProfile"
    CONCEPT_PRETEST = "ConceptPretest"
    CONCEPT_LEARNING = "ConceptLearning"
    CONCEPT_POSTTEST = "ConceptPosttest"
    COURSE_COMPLETE = "CourseComplete"


@dataclass(frozen=True)
class SessionState:
    stage: Stage
    concept: str | None = None

    def to_dict(self) -> dict:
        return {"stage": self.stage.value, "concept": self.concept}

    @staticmethod
    def from_dict(doc: dict) -> "SessionState":
        return SessionState(stage=Stage(doc["stage"]), concept=doc.get("concept"))


# Legal stage transitions; remediation and skip-advance reuse the
# pretest->pretest and pretest->posttest edges respectively.
LEGAL_TRANSITIONS: frozenset[tuple[Stage, Stage]] = frozenset(
    {
        (Stage.AWAITING_PROFILE, Stage.CONCEPT_PRETEST),
        (Stage.CONCEPT_PRETEST, Stage.CONCEPT_LEARNING),
        (Stage.CONCEPT_PRETEST, Stage.CONCEPT_POSTTEST),
        (Stage.CONCEPT_PRETEST, Stage.CONCEPT_PRETEST),
        (Stage.CONCEPT_LEARNING, Stage.CONCEPT_POSTTEST),
        (Stage.CONCEPT_POSTTEST, Stage.CONCEPT_PRETEST),
        (Stage.CONCEPT_POSTTEST, Stage.COURSE_COMPLETE),
    }
)


class EventKind(str, Enum):
    PROFILED = "Profiled"
    PLAN_ISSUED = "PlanIssued"
    TEST_GRADED = "TestGraded"
    MODEL_UPDATED = "ModelUpdated"
    FLOW_DECIDED = "FlowDecided"
    MESSAGE_POSTED = "MessagePosted"


@dataclass(frozen=True)
class Event:
    seq: int
    timestamp: float
    kind: EventKind
    payload: dict

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "timestamp": self.timestamp,
            "kind": self.kind.value,
            "payload": self.payload,
        }

    @staticmethod
    def from_dict(doc: dict) -> "Event":
        return Event(
            seq=int(doc["seq"]),
            timestamp=float(doc["timestamp"]),
            kind=EventKind(doc["kind"]),
            payload=doc["payload"],
        )


@dataclass
class ConceptState:
    """Per-concept learner status; attempts and used_questions only grow."""

    band: KnowledgeBand | None = None
    attempts: int = 0
    used_questions: set[str] = field(default_factory=set)
    last_variant: LearningStyle | None = None
    tried_variants: set[LearningStyle] = field(default_factory=set)
    removed: bool = False

    def to_dict(self) -> dict:
        return {
            "band": self.band.value if self.band else None,
            "attempts": self.attempts,
            "used_questions": sorted(self.used_questions),
            "last_variant": self.last_variant.value if self.last_variant else None,
            "tried_variants": sorted(s.value for s in self.tried_variants),
            "removed": self.removed,
        }


@dataclass
class LearnerModel:
    learner_id: str
    style_vector: StyleVector | None = None
    effectiveness: dict[LearningStyle, float] = field(
        default_factory=lambda: {s: 0.5 for s in STYLE_ORDER}
    )
    concept_state: dict[str, ConceptState] = field(default_factory=dict)
    misconceptions: set[str] = field(default_factory=set)
    event_log: list[Event] = field(default_factory=list)

    def concept(self, cid: str) -> ConceptState:
        return self.concept_state.setdefault(cid, ConceptState())

    def to_dict(self) -> dict:
        """Snapshot form; the event log itself lives in the .log file."""
        return {
            "learner_id": self.learner_id,
            "style_vector": self.style_vector.to_dict() if self.style_vector else None,
            "effectiveness": {s.value: self.effectiveness[s] for s in STYLE_ORDER},
            "concept_state": {
                cid: cs.to_dict() for cid, cs in sorted(self.concept_state.items())
            },
            "misconceptions": sorted(self.misconceptions),
            "events_applied": len(self.event_log),
        }


def blend_scores(model: LearnerModel) -> dict[LearningStyle, float]:
    """Questionnaire profile and measured effectiveness blended half and half.

    blend(s) = 0.5 * style_vector[s] / 100 + 0.5 * effectiveness[s].
    Without a profile, effectiveness alone decides.
    """
    out: dict[LearningStyle, float] = {}
    for style in STYLE_ORDER:
        profile = model.style_vector.scores[style] / 100.0 if model.style_vector else 0.5
        out[style] = 0.5 * profile + 0.5 * model.effectiveness[style]
    return out


def blend_argmax(
    model: LearnerModel, among: set[LearningStyle] | None = None
) -> LearningStyle:
    """Highest blended style, canonical order breaking ties."""
    pool = [s for s in STYLE_ORDER if among is None or s in among]
    scores = blend_scores(model)
    best = pool[0]
    for style in pool[1:]:
        if scores[style] > scores[best]:
            best = style
    return best


def overall_band(model: LearnerModel) -> KnowledgeBand | None:
    """Band whose rank is the half-up rounded mean rank over banded concepts."""
    ranks = [cs.band.rank for cs in model.concept_state.values() if cs.band]
    if not ranks:
        return None
    mean_rank = int((sum(ranks) / len(ranks)) + 0.5)
    for b in KnowledgeBand:
        if b.rank == mean_rank:
            return b
    return None


def apply_event(model: LearnerModel, event: Event) -> None:
    """Fold one event into the model. All model mutations go through here."""
    payload = event.payload
    kind = event.kind

    if kind is EventKind.PROFILED:
        model.style_vector = StyleVector(
            scores={
                LearningStyle(k): float(v)
                for k, v in payload["style_vector"].items()
            }
        )
    elif kind is EventKind.TEST_GRADED:
        cs = model.concept(payload["concept"])
        cs.used_questions.update(payload["instance"]["questions"])
        if payload["phase"] == "posttest":
            cs.band = KnowledgeBand(payload["report"]["band"])
            model.misconceptions.update(payload["report"]["misconceptions"])
            if cs.band.rank < KnowledgeBand(payload["mastery_band"]).rank:
                cs.attempts += 1
    elif kind is EventKind.FLOW_DECIDED:
        cs = model.concept(payload["concept"])
        if payload.get("variant"):
            style = LearningStyle(payload["variant"])
            cs.last_variant = style
            cs.tried_variants.add(style)
        if payload.get("band"):
            cs.band = KnowledgeBand(payload["band"])
        if payload.get("removed"):
            cs.removed = True
    elif kind is EventKind.MODEL_UPDATED:
        style = LearningStyle(payload["style"])
        model.effectiveness[style] = float(payload["after"])
    # PlanIssued and MessagePosted carry no model mutation; they are part of
    # the durable history only.

    model.event_log.append(event)


def replay(learner_id: str, events: list[Event]) -> LearnerModel:
    """Rebuild a model purely from its event history."""
    model = LearnerModel(learner_id=learner_id)
    for event in events:
        apply_event(model, event)
    return model
