"""Forward-chaining production rules that turn learner facts into a lesson plan.

Rules never assert new facts, so inference is a single pass over the
rulebook. When several fired rules set the same plan setting, the winner is
picked by priority, then condition count (specificity), then rulebook
position. Everything a rule leaves unset falls back to documented defaults,
so planning is total.

Fact vocabulary (closed). Facts are scoped to the concept being planned:

    dominant_style(style)          questionnaire argmax
    style_score(style, score)      0-100 per style
    effectiveness(style, value)    0-1 learned weight per style
    prior_band(concept, band)      this concept's stored band, if any
    overall_band(band)             rounded mean band across attempted concepts
    attempt_count(concept, n)      failed attempts on this concept
    prereq_band(concept, band)     band per prerequisite that has one
    misconception(tag)             accumulated distractor tags
    phase(name)                    planning phase ("pretest")

Conditions compare a fact's final argument against an operand; leading
arguments are selectors matched literally or by the "*" wildcard. Bands
compare by their order, numbers numerically; "=" against "*" tests bare
existence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .assessment import KnowledgeBand, Level, Phase, TestSpec, scaled_mix
from .content import Concept, CoursePack
from .errors import EmptyRule, RulebookError, UnknownAction, UnknownPredicate
from .model import LearnerModel, blend_argmax, overall_band
from .profiler import STYLE_ORDER, LearningStyle

FACT_ARITY: dict[str, int] = {
    "dominant_style": 1,
    "style_score": 2,
    "effectiveness": 2,
    "prior_band": 2,
    "overall_band": 1,
    "attempt_count": 2,
    "prereq_band": 2,
    "misconception": 1,
    "phase": 1,
}

COMPARATORS = ("=", "!=", "<", "<=", ">", ">=")
_COMPARATOR_ALIASES = {"==": "=", "≠": "!=", "≤": "<=", "≥": ">="}

DEFAULT_PRETEST_COUNT = 4
DEFAULT_PRETEST_MIX = {Level.L1: 2, Level.L2: 1, Level.L3: 1}
DEFAULT_POSTTEST_COUNT = 6
DEFAULT_POSTTEST_MIX = {Level.L1: 2, Level.L2: 2, Level.L3: 2}
DEFAULT_HINT_BUDGET = 2


@dataclass(frozen=True)
class Fact:
    predicate: str
    arguments: tuple

    def __post_init__(self):
        if self.predicate not in FACT_ARITY:
            raise UnknownPredicate(f"unknown fact predicate {self.predicate!r}")


@dataclass(frozen=True)
class Condition:
    predicate: str
    args: tuple
    comparator: str = "="


class FlowKind(str, Enum):
    SKIP = "skip"
    PRESENT = "present"
    REPEAT = "repeat"
    REMEDIATE = "remediate"
    REMOVE = "remove"


class ActionKind(str, Enum):
    SET_VARIANT = "set_variant"
    SET_QUESTION_COUNT = "set_question_count"
    SET_LEVEL_MIX = "set_level_mix"
    SET_FLOW = "set_flow"
    SET_HINT_BUDGET = "set_hint_budget"
    FLAG_FOR_TEACHER = "flag_for_teacher"


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    style: LearningStyle | None = None
    phase: Phase | None = None
    count: int | None = None
    mix: tuple[tuple[Level, int], ...] | None = None
    flow: FlowKind | None = None
    concept: str | None = None
    reason: str | None = None

    def setting_key(self) -> tuple:
        """Plan setting this action writes; conflicts are resolved per key."""
        if self.kind is ActionKind.SET_VARIANT:
            return ("variant",)
        if self.kind is ActionKind.SET_QUESTION_COUNT:
            return ("count", self.phase)
        if self.kind is ActionKind.SET_LEVEL_MIX:
            return ("mix", self.phase)
        if self.kind is ActionKind.SET_FLOW:
            return ("flow",)
        if self.kind is ActionKind.SET_HINT_BUDGET:
            return ("hints",)
        return ("flag", self.reason)

    def mix_dict(self) -> dict[Level, int]:
        return dict(self.mix or ())


@dataclass(frozen=True)
class Rule:
    id: str
    priority: int
    conditions: tuple[Condition, ...]
    actions: tuple[Action, ...]


@dataclass(frozen=True)
class Rulebook:
    id: str
    rules: tuple[Rule, ...]


@dataclass(frozen=True)
class FlowDirective:
    kind: FlowKind
    target: str | None = None  # remediation target concept

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "target": self.target}


@dataclass(frozen=True)
class LessonPlan:
    concept: str
    variant_style: LearningStyle
    pretest: TestSpec
    posttest: TestSpec
    flow: FlowDirective
    hint_budget: int
    teacher_flags: tuple[str, ...] = ()
    flow_from_rule: bool = False

    def to_dict(self) -> dict:
        return {
            "concept": self.concept,
            "variant_style": self.variant_style.value,
            "pretest": {
                "count": self.pretest.count,
                "level_mix": {l.value: n for l, n in self.pretest.level_mix.items()},
            },
            "posttest": {
                "count": self.posttest.count,
                "level_mix": {l.value: n for l, n in self.posttest.level_mix.items()},
            },
            "flow": self.flow.to_dict(),
            "hint_budget": self.hint_budget,
            "teacher_flags": list(self.teacher_flags),
            "flow_from_rule": self.flow_from_rule,
        }


# --- rulebook parsing -----------------------------------------------------------

def parse_rulebook(doc: dict) -> Rulebook:
    """Parse and statically check a rulebook document."""
    rules: list[Rule] = []
    for raw in doc.get("rules", []):
        rule_id = str(raw.get("id", f"rule-{len(rules)}"))
        conditions = tuple(
            _parse_condition(c, rule_id) for c in raw.get("conditions", [])
        )
        actions = tuple(_parse_action(a, rule_id) for a in raw.get("actions", []))
        if not conditions or not actions:
            raise EmptyRule(
                f"rule {rule_id!r} needs at least one condition and one action",
                rule=rule_id,
            )
        rules.append(
            Rule(
                id=rule_id,
                priority=int(raw.get("priority", 0)),
                conditions=conditions,
                actions=actions,
            )
        )
    return Rulebook(id=str(doc.get("id", "rulebook")), rules=tuple(rules))


def _parse_condition(raw: dict, rule_id: str) -> Condition:
    predicate = str(raw.get("predicate", ""))
    if predicate not in FACT_ARITY:
        raise UnknownPredicate(
            f"rule {rule_id!r} tests unknown predicate {predicate!r}",
            rule=rule_id,
            predicate=predicate,
        )
    args = tuple(raw.get("args", []))
    if len(args) != FACT_ARITY[predicate]:
        raise RulebookError(
            f"rule {rule_id!r}: predicate {predicate!r} takes "
            f"{FACT_ARITY[predicate]} argument(s), got {len(args)}",
            rule=rule_id,
        )
    comparator = _COMPARATOR_ALIASES.get(
        str(raw.get("comparator", "=")), str(raw.get("comparator", "="))
    )
    if comparator not in COMPARATORS:
        raise RulebookError(
            f"rule {rule_id!r}: unknown comparator {comparator!r}", rule=rule_id
        )
    return Condition(predicate=predicate, args=args, comparator=comparator)


def _parse_action(raw: dict, rule_id: str) -> Action:
    kind_name = str(raw.get("kind", ""))
    try:
        kind = ActionKind(kind_name)
    except ValueError:
        raise UnknownAction(
            f"rule {rule_id!r} uses unknown action {kind_name!r}",
            rule=rule_id,
            action=kind_name,
        ) from None

    if kind is ActionKind.SET_VARIANT:
        return Action(kind=kind, style=LearningStyle(raw["style"]))
    if kind is ActionKind.SET_QUESTION_COUNT:
        count = int(raw["count"])
        if count < 1:
            raise RulebookError(
                f"rule {rule_id!r}: question count must be >= 1", rule=rule_id
            )
        return Action(kind=kind, phase=Phase(raw["phase"]), count=count)
    if kind is ActionKind.SET_LEVEL_MIX:
        mix = tuple((Level(k), int(v)) for k, v in raw["mix"].items())
        if sum(n for _, n in mix) < 1 or any(n < 0 for _, n in mix):
            raise RulebookError(
                f"rule {rule_id!r}: level mix must be non-negative and non-empty",
                rule=rule_id,
            )
        return Action(kind=kind, phase=Phase(raw["phase"]), mix=mix)
    if kind is ActionKind.SET_FLOW:
        flow = FlowKind(raw["flow"])
        concept = raw.get("concept")
        if flow is FlowKind.REMEDIATE and not concept:
            raise RulebookError(
                f"rule {rule_id!r}: remediate needs a concept (or \"*\")", rule=rule_id
            )
        return Action(kind=kind, flow=flow, concept=concept)
    if kind is ActionKind.SET_HINT_BUDGET:
        count = int(raw["count"])
        if count < 0:
            raise RulebookError(
                f"rule {rule_id!r}: hint budget must be >= 0", rule=rule_id
            )
        return Action(kind=kind, count=count)
    return Action(kind=kind, reason=str(raw.get("reason", "flagged")))


def rulebook_to_dict(rulebook: Rulebook) -> dict:
    def action_dict(a: Action) -> dict:
        out: dict = {"kind": a.kind.value}
        if a.style is not None:
            out["style"] = a.style.value
        if a.phase is not None:
            out["phase"] = a.phase.value
        if a.count is not None:
            out["count"] = a.count
        if a.mix is not None:
            out["mix"] = {l.value: n for l, n in a.mix}
        if a.flow is not None:
            out["flow"] = a.flow.value
        if a.concept is not None:
            out["concept"] = a.concept
        if a.reason is not None:
            out["reason"] = a.reason
        return out

    return {
        "id": rulebook.id,
        "rules": [
            {
                "id": r.id,
                "priority": r.priority,
                "conditions": [
                    {"predicate": c.predicate, "args": list(c.args), "comparator": c.comparator}
                    for c in r.conditions
                ],
                "actions": [action_dict(a) for a in r.actions],
            }
            for r in rulebook.rules
        ],
    }


# --- inference ------------------------------------------------------------------

_BAND_NAMES = {b.value for b in KnowledgeBand}


def _as_number(value) -> float | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return None
    return None


def _compare(value, comparator: str, operand) -> bool:
    if operand == "*":
        return comparator == "="

    v_num, o_num = _as_number(value), _as_number(operand)
    if v_num is not None and o_num is not None:
        v, o = v_num, o_num
    elif (
        isinstance(value, str)
        and value in _BAND_NAMES
        and isinstance(operand, str)
        and operand in _BAND_NAMES
    ):
        v, o = KnowledgeBand(value).rank, KnowledgeBand(operand).rank
    else:
        if comparator == "=":
            return value == operand
        if comparator == "!=":
            return value != operand
        return False  # no order defined for plain strings

    if comparator == "=":
        return v == o
    if comparator == "!=":
        return v != o
    if comparator == "<":
        return v < o
    if comparator == "<=":
        return v <= o
    if comparator == ">":
        return v > o
    return v >= o


def condition_matches(condition: Condition, facts: set[Fact]) -> bool:
    """True if any fact matches the selectors and satisfies the comparison."""
    *selectors, operand = condition.args
    for fact in facts:
        if fact.predicate != condition.predicate:
            continue
        if len(fact.arguments) != len(condition.args):
            continue
        if all(
            sel == "*" or sel == arg
            for sel, arg in zip(selectors, fact.arguments[:-1])
        ):
            if _compare(fact.arguments[-1], condition.comparator, operand):
                return True
    return False


def rule_fires(rule: Rule, facts: set[Fact]) -> bool:
    return all(condition_matches(c, facts) for c in rule.conditions)


def infer(facts: set[Fact], rulebook: Rulebook) -> list[Action]:
    """Evaluate every rule once; return the winning action per plan setting.

    Winners are ordered by the position of their rule in the rulebook, so the
    output depends only on (facts, rules), never on fact iteration order.
    """
    winners: dict[tuple, tuple[tuple, Action]] = {}
    for position, rule in enumerate(rulebook.rules):
        if not rule_fires(rule, facts):
            continue
        for action_index, action in enumerate(rule.actions):
            key = action.setting_key()
            rank = (-rule.priority, -len(rule.conditions), position, action_index)
            if key not in winners or rank < winners[key][0]:
                winners[key] = (rank, action)

    ordered = sorted(winners.values(), key=lambda pair: (pair[0][2], pair[0][3]))
    return [action for _, action in ordered]


# --- planning -------------------------------------------------------------------

def build_facts(
    model: LearnerModel,
    concept: Concept,
    pack: CoursePack,
    phase: str = "pretest",
) -> set[Fact]:
    """Fact set describing the learner relative to the concept being planned."""
    facts: set[Fact] = set()
    if model.style_vector is not None:
        from .profiler import dominant_style

        facts.add(Fact("dominant_style", (dominant_style(model.style_vector).value,)))
        for style in STYLE_ORDER:
            facts.add(Fact("style_score", (style.value, model.style_vector.scores[style])))
    for style in STYLE_ORDER:
        facts.add(Fact("effectiveness", (style.value, model.effectiveness[style])))

    state = model.concept_state.get(concept.id)
    if state and state.band:
        facts.add(Fact("prior_band", (concept.id, state.band.value)))
    facts.add(Fact("attempt_count", (concept.id, state.attempts if state else 0)))

    for prereq_id in pack.prereqs_of(concept.id):
        prereq_state = model.concept_state.get(prereq_id)
        if prereq_state and prereq_state.band:
            facts.add(Fact("prereq_band", (prereq_id, prereq_state.band.value)))

    for tag in sorted(model.misconceptions):
        facts.add(Fact("misconception", (tag,)))

    overall = overall_band(model)
    if overall is not None:
        facts.add(Fact("overall_band", (overall.value,)))

    facts.add(Fact("phase", (phase,)))
    return facts


def weakest_prereq_below(
    model: LearnerModel, concept: Concept, pack: CoursePack, threshold: KnowledgeBand
) -> str | None:
    """Prerequisite with the lowest band below threshold; declaration order tie-break."""
    weakest: str | None = None
    weakest_rank: int | None = None
    for prereq_id in pack.prereqs_of(concept.id):
        state = model.concept_state.get(prereq_id)
        band_rank = state.band.rank if state and state.band else None
        if band_rank is None or band_rank >= threshold.rank:
            continue
        if weakest_rank is None or band_rank < weakest_rank:
            weakest, weakest_rank = prereq_id, band_rank
    return weakest


def untried_styles(model: LearnerModel, concept_id: str) -> set[LearningStyle]:
    state = model.concept_state.get(concept_id)
    tried = state.tried_variants if state else set()
    return {s for s in STYLE_ORDER if s not in tried}


def plan_concept(
    model: LearnerModel,
    concept: Concept,
    rulebook: Rulebook,
    pack: CoursePack,
    phase: str = "pretest",
) -> LessonPlan:
    """Run inference over the learner's facts and assemble a complete plan.

    Defaults when no rule decides: variant from the blended style scores,
    pretest 4 questions {L1:2, L2:1, L3:1}, posttest 6 questions
    {L1:2, L2:2, L3:2}, flow present, hint budget 2. After a failed attempt
    the variant rotates to the best untried style.
    """
    facts = build_facts(model, concept, pack, phase=phase)
    actions = infer(facts, rulebook)
    by_key = {action.setting_key(): action for action in actions}

    variant_action = by_key.get(("variant",))
    variant = variant_action.style if variant_action else blend_argmax(model)

    # Try-and-error rotation: a retry must switch to an untried style
    # while any remain, even over a rule's choice.
    state = model.concept_state.get(concept.id)
    if state and state.attempts > 0:
        remaining = untried_styles(model, concept.id)
        if remaining and variant not in remaining:
            variant = blend_argmax(model, among=remaining)

    pretest = _phase_spec(
        by_key, Phase.PRETEST, DEFAULT_PRETEST_COUNT, DEFAULT_PRETEST_MIX
    )
    posttest = _phase_spec(
        by_key, Phase.POSTTEST, DEFAULT_POSTTEST_COUNT, DEFAULT_POSTTEST_MIX
    )

    flow_action = by_key.get(("flow",))
    if flow_action:
        flow = _resolve_flow(flow_action, model, concept, pack)
        flow_from_rule = True
    else:
        flow = FlowDirective(FlowKind.PRESENT)
        flow_from_rule = False

    hints_action = by_key.get(("hints",))
    hint_budget = hints_action.count if hints_action else DEFAULT_HINT_BUDGET

    flags = tuple(
        action.reason
        for action in actions
        if action.kind is ActionKind.FLAG_FOR_TEACHER and action.reason
    )

    return LessonPlan(
        concept=concept.id,
        variant_style=variant,
        pretest=pretest,
        posttest=posttest,
        flow=flow,
        hint_budget=hint_budget,
        teacher_flags=flags,
        flow_from_rule=flow_from_rule,
    )


def _phase_spec(
    by_key: dict[tuple, Action],
    phase: Phase,
    default_count: int,
    default_mix: dict[Level, int],
) -> TestSpec:
    mix_action = by_key.get(("mix", phase))
    count_action = by_key.get(("count", phase))
    if mix_action:
        # An explicit mix pins the exact multiset; it also fixes the count.
        given = mix_action.mix_dict()
        mix = {level: given.get(level, 0) for level in Level}
        return TestSpec(phase=phase, count=sum(mix.values()), level_mix=mix)
    if count_action:
        count = count_action.count
        return TestSpec(phase=phase, count=count, level_mix=scaled_mix(default_mix, count))
    return TestSpec(phase=phase, count=default_count, level_mix=dict(default_mix))


def _resolve_flow(
    action: Action,
    model: LearnerModel,
    concept: Concept,
    pack: CoursePack,
) -> FlowDirective:
    if action.flow is not FlowKind.REMEDIATE:
        return FlowDirective(action.flow)
    target = action.concept
    if target == "*":
        # "*" means the weakest prerequisite below Good, matching the
        # prereq_band < Good conditions rulebooks pair it with.
        target = weakest_prereq_below(model, concept, pack, KnowledgeBand.GOOD)
        if target is None:
            # Nothing to remediate; fall back to presenting the concept.
            return FlowDirective(FlowKind.PRESENT)
    elif pack.concept_by_id(target) is None:
        return FlowDirective(FlowKind.PRESENT)
    return FlowDirective(FlowKind.REMEDIATE, target=target)
