"""Adaptive tutoring engine: style profiling, rule-based planning, banded assessment."""

from .assessment import (
    GradeReport,
    KnowledgeBand,
    Phase,
    TestInstance,
    TestSpec,
    band,
    grade,
    select_questions,
)
from .content import (
    Concept,
    ContentVariant,
    CoursePack,
    Dimension,
    Level,
    Question,
    Section,
    load_course_pack,
    load_course_pack_file,
    section_weight_table,
    topological_order,
)
from .expert import (
    Action,
    Condition,
    Fact,
    FlowDirective,
    FlowKind,
    LessonPlan,
    Rule,
    Rulebook,
    infer,
    parse_rulebook,
    plan_concept,
)
from .model import (
    Event,
    EventKind,
    LearnerModel,
    SessionState,
    Stage,
    blend_scores,
    replay,
)
from .profiler import (
    Instrument,
    Item,
    LearningStyle,
    StyleVector,
    dominant_style,
    score_questionnaire,
    validate_instrument,
)
from .session import TutorEngine, pretest_gate, updated_effectiveness
from .store import RecordStore

__version__ = "0.1.0"
