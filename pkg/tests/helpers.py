"""Factories for small synthetic packs, instruments, and rulebooks."""

from __future__ import annotations

from adaptutor import load_course_pack, validate_instrument

STYLES = ["SS", "GOA", "EIA", "CA", "DLA"]
LEVELS = ["L1", "L2", "L3"]


def instrument_doc(items_per_style=2, scale_min=1, scale_max=5, reverse=()):
    """Instrument document with uniform coverage; ``reverse`` lists item ids."""
    items = []
    for style in STYLES:
        for i in range(items_per_style):
            item_id = f"{style.lower()}{i}"
            items.append(
                {
                    "id": item_id,
                    "prompt": f"prompt {item_id}",
                    "style": style,
                    "reverse_scored": item_id in reverse,
                }
            )
    return {
        "id": "test-instrument",
        "scale_min": scale_min,
        "scale_max": scale_max,
        "items": items,
    }


def make_instrument(**kwargs):
    return validate_instrument(instrument_doc(**kwargs))


def question(qid, section, level, points=10.0, dimension="Conceptual",
             tags=(None, None), hints=("hint one", "hint two")):
    """A 3-choice question whose correct choice is always 'a'."""
    choices = [{"id": "a", "body": "right", "correct": True}]
    for i, tag in enumerate(tags):
        choice = {"id": "bc"[i], "body": f"wrong {i}", "correct": False}
        if tag:
            choice["misconception_tag"] = tag
        choices.append(choice)
    return {
        "id": qid,
        "section": section,
        "level": level,
        "dimension": dimension,
        "points": points,
        "body": f"question {qid}",
        "choices": choices,
        "hints": list(hints),
    }


def full_bank(cid, sections, copies=1):
    """One question per (section, level) pair, ``copies`` times over."""
    bank = []
    for n in range(copies):
        for s_idx, section in enumerate(sections):
            for level in LEVELS:
                bank.append(
                    question(f"{cid}-{section}-{level}-{n}", section, level)
                )
    return bank


def concept_doc(cid, sections=("s1", "s2"), key=None, weights=None, questions=None,
                links=(), question_copies=1):
    """Concept document with per-style variants and a default full bank."""
    sections = [f"{cid}-{s}" for s in sections]
    key = key or sections[0]
    if weights is None:
        weights = {}
        for idx, section in enumerate(sections):
            base = 9.0 if section == key else 4.0 - idx
            weights[section] = {style: base for style in STYLES}
    variants = {
        style: {
            "blocks": [
                {"kind": "text", "body": f"{cid} for {style}", "links": list(links)}
            ]
        }
        for style in STYLES
    }
    return {
        "id": cid,
        "title": f"Concept {cid}",
        "key_section": key,
        "sections": [
            {"id": s, "title": s, "weights": weights[s]} for s in sections
        ],
        "variants": variants,
        "questions": questions
        if questions is not None
        else full_bank(cid, sections, copies=question_copies),
    }


def pack_doc(concepts=None, prerequisites=None, pack_id="test-pack"):
    return {
        "id": pack_id,
        "title": "Test pack",
        "concepts": concepts if concepts is not None else [concept_doc("c1")],
        "prerequisites": prerequisites or {},
    }


def make_pack(concepts=None, prerequisites=None, pack_id="test-pack"):
    return load_course_pack(pack_doc(concepts, prerequisites, pack_id))


def answers_hitting_band(concept, issued, style, target_band):
    """Answer sheet whose grade lands in ``target_band``.

    Enumerates correct/incorrect patterns over the instance (small tests
    only) and grades each with the real grader, so the sheet is exact by
    construction.
    """
    import itertools

    from adaptutor import grade

    questions = [concept.question_by_id(qid) for qid in issued.instance.questions]
    for pattern in itertools.product([True, False], repeat=len(questions)):
        answers = {}
        for q, right in zip(questions, pattern):
            if right:
                answers[q.id] = q.correct_choice.id
            else:
                answers[q.id] = next(c.id for c in q.choices if not c.correct)
        report = grade(concept, issued.instance, answers, style)
        if report.band == target_band:
            return answers
    raise AssertionError(f"no answer sheet reaches band {target_band}")


def correct_answers(concept, issued):
    return {
        qid: concept.question_by_id(qid).correct_choice.id
        for qid in issued.instance.questions
    }


def random_answers(concept, issued, rng):
    """Each question answered right or wrong by a coin flip."""
    answers = {}
    for qid in issued.instance.questions:
        q = concept.question_by_id(qid)
        if rng.random() < 0.5:
            answers[qid] = q.correct_choice.id
        else:
            answers[qid] = rng.choice([c.id for c in q.choices if not c.correct])
    return answers
