"""Learning-style questionnaire: instrument format, scoring, dominant style.

Scoring maps Likert responses onto a 0-100 scale per style: each item is
normalized into [0, 1] (reverse-scored items are flipped), per-style scores
are the mean of the style's normalized items times 100.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import (
    BadScaleBounds,
    DuplicateItemId,
    MissingResponse,
    MissingStyleCoverage,
    OutOfRangeResponse,
)


class LearningStyle(str, Enum):
    """The five learner types. Declaration order is the canonical tie-break order."""

    SS = "SS"    # sensation seeking: learns by doing and exploring
    GOA = "GOA"  # goal oriented achiever: learns toward explicit targets
    EIA = "EIA"  # emotionally intelligent achiever: learns from problem logic
    CA = "CA"    # conscientious achiever: learns by collecting and analyzing
    DLA = "DLA"  # deep learning achiever: learns when the practical value is clear


STYLE_ORDER: tuple[LearningStyle, ...] = tuple(LearningStyle)


@dataclass(frozen=True)
class Item:
    id: str
    prompt: str
    style: LearningStyle
    reverse_scored: bool = False


@dataclass(frozen=True)
class Instrument:
    id: str
    items: tuple[Item, ...]
    scale_min: int = 1
    scale_max: int = 5


@dataclass(frozen=True)
class StyleVector:
    """Per-style scores on a 0-100 scale; all five styles always present."""

    scores: dict[LearningStyle, float] = field(default_factory=dict)

    def __post_init__(self):
        missing = [s for s in STYLE_ORDER if s not in self.scores]
        if missing:
            raise ValueError(f"style vector missing styles: {missing}")
        for style, value in self.scores.items():
            if not 0.0 <= value <= 100.0:
                raise ValueError(f"score for {style.value} outside [0, 100]: {value}")

    def __getitem__(self, style: LearningStyle) -> float:
        return self.scores[style]

    def to_dict(self) -> dict[str, float]:
        return {s.value: self.scores[s] for s in STYLE_ORDER}


def validate_instrument(doc: dict) -> Instrument:
    """Check an instrument document and return the typed Instrument.

    Raises BadScaleBounds, DuplicateItemId, or MissingStyleCoverage on the
    first violated invariant.
    """
    scale_min = int(doc.get("scale_min", 1))
    scale_max = int(doc.get("scale_max", 5))
    if scale_min >= scale_max:
        raise BadScaleBounds(
            f"scale_min must be below scale_max, got [{scale_min}, {scale_max}]"
        )

    items: list[Item] = []
    seen: set[str] = set()
    for raw in doc.get("items", []):
        item = Item(
            id=str(raw["id"]),
            prompt=str(raw.get("prompt", "")),
            style=LearningStyle(raw["style"]),
            reverse_scored=bool(raw.get("reverse_scored", False)),
        )
        if item.id in seen:
            raise DuplicateItemId(f"duplicate item id {item.id!r}", item=item.id)
        seen.add(item.id)
        items.append(item)

    covered = {item.style for item in items}
    uncovered = [s.value for s in STYLE_ORDER if s not in covered]
    if uncovered:
        raise MissingStyleCoverage(
            f"no items target styles: {', '.join(uncovered)}", styles=uncovered
        )

    return Instrument(
        id=str(doc.get("id", "instrument")),
        items=tuple(items),
        scale_min=scale_min,
        scale_max=scale_max,
    )


def instrument_to_dict(instrument: Instrument) -> dict:
    return {
        "id": instrument.id,
        "scale_min": instrument.scale_min,
        "scale_max": instrument.scale_max,
        "items": [
            {
                "id": i.id,
                "prompt": i.prompt,
                "style": i.style.value,
                "reverse_scored": i.reverse_scored,
            }
            for i in instrument.items
        ],
    }


def score_questionnaire(instrument: Instrument, responses: dict[str, int]) -> StyleVector:
    """Score Likert responses into a StyleVector.

    score(style) = 100 * mean over the style's items of norm(item), where
    norm = (r - min) / (max - min), flipped for reverse-scored items.
    """
    lo, hi = instrument.scale_min, instrument.scale_max
    width = hi - lo
    sums: dict[LearningStyle, float] = {s: 0.0 for s in STYLE_ORDER}
    counts: dict[LearningStyle, int] = {s: 0 for s in STYLE_ORDER}

    for item in instrument.items:
        if item.id not in responses:
            raise MissingResponse(f"no response for item {item.id!r}", item=item.id)
        r = int(responses[item.id])
        if not lo <= r <= hi:
            raise OutOfRangeResponse(
                f"response {r} for item {item.id!r} outside [{lo}, {hi}]",
                item=item.id,
                value=r,
            )
        norm = (hi - r) / width if item.reverse_scored else (r - lo) / width
        sums[item.style] += norm
        counts[item.style] += 1

    return StyleVector(
        scores={s: 100.0 * sums[s] / counts[s] for s in STYLE_ORDER}
    )


def dominant_style(vector: StyleVector) -> LearningStyle:
    """Argmax over the five scores; ties go to the earliest style in canonical order."""
    best = STYLE_ORDER[0]
    for style in STYLE_ORDER[1:]:
        if vector.scores[style] > vector.scores[best]:
            best = style
    return best
