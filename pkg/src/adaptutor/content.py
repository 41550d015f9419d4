"""Course pack loading and validation.

A pack is a JSON document of concepts; each concept carries weighted
sections, one content variant per learning style, and a question bank.
Packs are immutable after load and safe to share across sessions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import (
    CyclicPrerequisites,
    DanglingLink,
    DuplicateId,
    KeySectionNotMaximal,
    MissingVariant,
    PackError,
    UncoveredSection,
)
from .profiler import STYLE_ORDER, LearningStyle


class Level(str, Enum):
    """Question difficulty, ordered L1 < L2 < L3."""

    L1 = "L1"
    L2 = "L2"
    L3 = "L3"


class Dimension(str, Enum):
    CONCEPTUAL = "Conceptual"
    OBJECTIVE = "Objective"


class BlockKind(str, Enum):
    TEXT = "text"
    IMAGE_REF = "image-ref"
    VIDEO_REF = "video-ref"
    EXERCISE = "exercise"


@dataclass(frozen=True)
class Choice:
    id: str
    body: str
    correct: bool = False
    misconception_tag: str | None = None


@dataclass(frozen=True)
class Question:
    id: str
    section: str
    level: Level
    dimension: Dimension
    points: float
    body: str
    choices: tuple[Choice, ...]
    hints: tuple[str, ...] = ()

    @property
    def correct_choice(self) -> Choice:
        return next(c for c in self.choices if c.correct)


@dataclass(frozen=True)
class Block:
    kind: BlockKind
    body: str
    links: tuple[str, ...] = ()


@dataclass(frozen=True)
class ContentVariant:
    style: LearningStyle
    blocks: tuple[Block, ...]


@dataclass(frozen=True)
class Section:
    id: str
    title: str
    weights: dict[LearningStyle, float]


@dataclass(frozen=True)
class Concept:
    id: str
    title: str
    sections: tuple[Section, ...]
    key_section: str
    variants: dict[LearningStyle, ContentVariant]
    questions: tuple[Question, ...]

    def section_ids(self) -> list[str]:
        return [s.id for s in self.sections]

    def question_by_id(self, qid: str) -> Question | None:
        for q in self.questions:
            if q.id == qid:
                return q
        return None


@dataclass(frozen=True)
class CoursePack:
    id: str
    title: str
    concepts: tuple[Concept, ...]
    prerequisites: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def concept_by_id(self, cid: str) -> Concept | None:
        for c in self.concepts:
            if c.id == cid:
                return c
        return None

    def prereqs_of(self, cid: str) -> tuple[str, ...]:
        return self.prerequisites.get(cid, ())


def _is_external_link(target: str) -> bool:
    return "://" in target


def load_course_pack(doc: dict) -> CoursePack:
    """Build a CoursePack from a parsed document, enforcing every invariant.

    Raises exactly one diagnostic error naming the offending entity on the
    first violation found; a returned pack satisfies all invariants.
    """
    concepts: list[Concept] = []
    concept_ids: set[str] = set()
    all_ids: set[str] = set()

    for raw in doc.get("concepts", []):
        concept = _parse_concept(raw, all_ids)
        if concept.id in concept_ids:
            raise DuplicateId(f"duplicate concept id {concept.id!r}", entity=concept.id)
        concept_ids.add(concept.id)
        concepts.append(concept)

    prerequisites: dict[str, tuple[str, ...]] = {}
    for cid, reqs in doc.get("prerequisites", {}).items():
        if cid not in concept_ids:
            raise DanglingLink(f"prerequisite entry for unknown concept {cid!r}", entity=cid)
        for req in reqs:
            if req not in concept_ids:
                raise DanglingLink(
                    f"concept {cid!r} requires unknown concept {req!r}", entity=req
                )
        prerequisites[cid] = tuple(reqs)

    _check_acyclic(concept_ids, prerequisites)

    for concept in concepts:
        _check_concept_invariants(concept, concept_ids)

    return CoursePack(
        id=str(doc.get("id", "pack")),
        title=str(doc.get("title", "")),
        concepts=tuple(concepts),
        prerequisites=prerequisites,
    )


def load_course_pack_file(path: str | Path) -> CoursePack:
    with open(path, encoding="utf-8") as f:
        return load_course_pack(json.load(f))


def _parse_concept(raw: dict, all_ids: set[str]) -> Concept:
    cid = str(raw["id"])

    sections: list[Section] = []
    for s in raw.get("sections", []):
        sec_id = str(s["id"])
        if sec_id in all_ids:
            raise DuplicateId(f"duplicate section id {sec_id!r}", entity=sec_id)
        all_ids.add(sec_id)
        weights = {LearningStyle(k): float(v) for k, v in s.get("weights", {}).items()}
        for style in STYLE_ORDER:
            if weights.get(style, 0.0) <= 0.0:
                raise PackError(
                    f"section {sec_id!r} needs a positive weight for style {style.value}",
                    entity=sec_id,
                    style=style.value,
                )
        sections.append(Section(id=sec_id, title=str(s.get("title", "")), weights=weights))

    questions: list[Question] = []
    for q in raw.get("questions", []):
        qid = str(q["id"])
        if qid in all_ids:
            raise DuplicateId(f"duplicate question id {qid!r}", entity=qid)
        all_ids.add(qid)
        choices = tuple(
            Choice(
                id=str(c["id"]),
                body=str(c.get("body", "")),
                correct=bool(c.get("correct", False)),
                misconception_tag=c.get("misconception_tag"),
            )
            for c in q.get("choices", [])
        )
        questions.append(
            Question(
                id=qid,
                section=str(q["section"]),
                level=Level(q["level"]),
                dimension=Dimension(q["dimension"]),
                points=float(q["points"]),
                body=str(q.get("body", "")),
                choices=choices,
                hints=tuple(q.get("hints", [])),
            )
        )

    variants: dict[LearningStyle, ContentVariant] = {}
    for style_name, v in raw.get("variants", {}).items():
        style = LearningStyle(style_name)
        blocks = tuple(
            Block(
                kind=BlockKind(b.get("kind", "text")),
                body=str(b.get("body", "")),
                links=tuple(b.get("links", [])),
            )
            for b in v.get("blocks", [])
        )
        variants[style] = ContentVariant(style=style, blocks=blocks)

    return Concept(
        id=cid,
        title=str(raw.get("title", "")),
        sections=tuple(sections),
        key_section=str(raw["key_section"]),
        variants=variants,
        questions=tuple(questions),
    )


def _check_concept_invariants(concept: Concept, concept_ids: set[str]) -> None:
    section_ids = set(concept.section_ids())

    if concept.key_section not in section_ids:
        raise DanglingLink(
            f"concept {concept.id!r} names unknown key section {concept.key_section!r}",
            entity=concept.key_section,
        )

    # The key section must carry the strictly maximal weight under every style.
    key = next(s for s in concept.sections if s.id == concept.key_section)
    for style in STYLE_ORDER:
        key_weight = key.weights.get(style, 0.0)
        for section in concept.sections:
            if section.id == key.id:
                continue
            if section.weights.get(style, 0.0) >= key_weight:
                raise KeySectionNotMaximal(
                    f"section {section.id!r} outweighs key section {key.id!r} "
                    f"under style {style.value} in concept {concept.id!r}",
                    concept=concept.id,
                    section=section.id,
                    style=style.value,
                )

    for style in STYLE_ORDER:
        variant = concept.variants.get(style)
        if variant is None or not variant.blocks:
            raise MissingVariant(
                f"concept {concept.id!r} has no content variant for style {style.value}",
                concept=concept.id,
                style=style.value,
            )

    for question in concept.questions:
        if question.section not in section_ids:
            raise DanglingLink(
                f"question {question.id!r} references unknown section {question.section!r}",
                entity=question.section,
            )
        correct = [c for c in question.choices if c.correct]
        if len(correct) != 1:
            raise PackError(
                f"question {question.id!r} must have exactly one correct choice",
                entity=question.id,
            )
        if question.points <= 0:
            raise PackError(
                f"question {question.id!r} must have positive points", entity=question.id
            )
        for choice in question.choices:
            if choice.correct and choice.misconception_tag:
                raise PackError(
                    f"correct choice {choice.id!r} of question {question.id!r} "
                    "carries a misconception tag",
                    entity=choice.id,
                )

    # Selection rule: every section must be askable.
    covered = {q.section for q in concept.questions}
    for section in concept.sections:
        if section.id not in covered:
            raise UncoveredSection(
                f"section {section.id!r} of concept {concept.id!r} has no questions",
                concept=concept.id,
                section=section.id,
            )

    for variant in concept.variants.values():
        for block in variant.blocks:
            for target in block.links:
                if not _is_external_link(target) and target not in concept_ids:
                    raise DanglingLink(
                        f"variant block in concept {concept.id!r} links to "
                        f"unknown concept {target!r}",
                        entity=target,
                    )


def _check_acyclic(concept_ids: set[str], prerequisites: dict[str, tuple[str, ...]]) -> None:
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {cid: WHITE for cid in concept_ids}

    def visit(cid: str, trail: list[str]) -> None:
        color[cid] = GRAY
        trail.append(cid)
        for req in prerequisites.get(cid, ()):
            if color[req] == GRAY:
                cycle = trail[trail.index(req):] + [req]
                raise CyclicPrerequisites(
                    f"prerequisite cycle: {' -> '.join(cycle)}", cycle=cycle
                )
            if color[req] == WHITE:
                visit(req, trail)
        trail.pop()
        color[cid] = BLACK

    for cid in concept_ids:
        if color[cid] == WHITE:
            visit(cid, [])


def section_weight_table(concept: Concept) -> dict[tuple[str, LearningStyle], float]:
    """Full (section, style) -> weight table; key section is maximal per style."""
    return {
        (section.id, style): section.weights[style]
        for section in concept.sections
        for style in STYLE_ORDER
    }


def topological_order(pack: CoursePack) -> list[str]:
    """Concept ids with prerequisites first; declaration order breaks ties.

    Kahn's algorithm over the prerequisite graph, always taking the earliest
    declared ready concept, so the order is deterministic.
    """
    order: list[str] = []
    declared = [c.id for c in pack.concepts]
    remaining_reqs = {cid: set(pack.prereqs_of(cid)) for cid in declared}
    done: set[str] = set()

    while len(order) < len(declared):
        ready = next(
            cid for cid in declared
            if cid not in done and not (remaining_reqs[cid] - done)
        )
        order.append(ready)
        done.add(ready)
    return order


def pack_to_dict(pack: CoursePack) -> dict:
    """Serialize a pack back to its document form (round-trip safe)."""
    return {
        "id": pack.id,
        "title": pack.title,
        "concepts": [
            {
                "id": c.id,
                "title": c.title,
                "key_section": c.key_section,
                "sections": [
                    {
                        "id": s.id,
                        "title": s.title,
                        "weights": {st.value: s.weights[st] for st in STYLE_ORDER},
                    }
                    for s in c.sections
                ],
                "variants": {
                    st.value: {
                        "blocks": [
                            {"kind": b.kind.value, "body": b.body, "links": list(b.links)}
                            for b in c.variants[st].blocks
                        ]
                    }
                    for st in STYLE_ORDER
                },
                "questions": [
                    {
                        "id": q.id,
                        "section": q.section,
                        "level": q.level.value,
                        "dimension": q.dimension.value,
                        "points": q.points,
                        "body": q.body,
                        "choices": [
                            {
                                "id": ch.id,
                                "body": ch.body,
                                "correct": ch.correct,
                                **(
                                    {"misconception_tag": ch.misconception_tag}
                                    if ch.misconception_tag
                                    else {}
                                ),
                            }
                            for ch in q.choices
                        ],
                        "hints": list(q.hints),
                    }
                    for q in c.questions
                ],
            }
            for c in pack.concepts
        ],
        "prerequisites": {cid: list(reqs) for cid, reqs in pack.prerequisites.items()},
    }
