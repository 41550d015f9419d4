import pytest
from hypothesis import given, strategies as st

from adaptutor import (
    LearningStyle,
    StyleVector,
    dominant_style,
    score_questionnaire,
    validate_instrument,
)
from adaptutor.errors import (
    BadScaleBounds,
    DuplicateItemId,
    MissingResponse,
    MissingStyleCoverage,
    OutOfRangeResponse,
)

from helpers import STYLES, instrument_doc, make_instrument


def brute_force_scores(doc, responses):
    """Independent re-implementation of the scoring rule for cross-checks."""
    lo, hi = doc["scale_min"], doc["scale_max"]
    per_style = {s: [] for s in STYLES}
    for item in doc["items"]:
        r = responses[item["id"]]
        norm = (hi - r) / (hi - lo) if item["reverse_scored"] else (r - lo) / (hi - lo)
        per_style[item["style"]].append(norm)
    return {s: 100.0 * sum(v) / len(v) for s, v in per_style.items()}


class TestValidateInstrument:
    def test_well_formed_ten_items(self):
        instrument = validate_instrument(instrument_doc(items_per_style=2))
        assert len(instrument.items) == 10
        assert instrument.scale_min == 1 and instrument.scale_max == 5

    def test_missing_style_coverage(self):
        doc = instrument_doc()
        doc["items"] = [i for i in doc["items"] if i["style"] in ("SS", "GOA")]
        with pytest.raises(MissingStyleCoverage):
            validate_instrument(doc)

    def test_duplicate_item_id(self):
        doc = instrument_doc()
        doc["items"][1]["id"] = doc["items"][0]["id"]
        with pytest.raises(DuplicateItemId):
            validate_instrument(doc)

    def test_bad_scale_bounds(self):
        with pytest.raises(BadScaleBounds):
            validate_instrument(instrument_doc(scale_min=5, scale_max=5))


class TestScoreQuestionnaire:
    def test_all_midpoint_gives_fifty_everywhere(self):
        instrument = make_instrument()
        responses = {i.id: 3 for i in instrument.items}
        vector = score_questionnaire(instrument, responses)
        assert all(vector.scores[s] == 50.0 for s in LearningStyle)

    def test_all_max_gives_hundred(self):
        instrument = make_instrument()
        responses = {i.id: 5 for i in instrument.items}
        vector = score_questionnaire(instrument, responses)
        assert all(vector.scores[s] == 100.0 for s in LearningStyle)

    def test_reverse_scored_item_hand_worked(self):
        # Two SS items, one reverse-scored, both answered 5:
        # normal normalizes to 1.0, reverse to 0.0, mean 0.5 -> 50.0.
        doc = instrument_doc(items_per_style=2, reverse=("ss1",))
        instrument = validate_instrument(doc)
        responses = {i.id: 5 for i in instrument.items}
        vector = score_questionnaire(instrument, responses)
        assert vector.scores[LearningStyle.SS] == 50.0
        oracle = brute_force_scores(doc, responses)
        assert vector.scores[LearningStyle.SS] == oracle["SS"]

    def test_matches_brute_force_on_random_sheets(self):
        import random

        rng = random.Random(7)
        doc = instrument_doc(items_per_style=3, reverse=("ss0", "ca1", "dla2"))
        instrument = validate_instrument(doc)
        for _ in range(200):
            responses = {i.id: rng.randint(1, 5) for i in instrument.items}
            vector = score_questionnaire(instrument, responses)
            oracle = brute_force_scores(doc, responses)
            for style in LearningStyle:
                assert vector.scores[style] == pytest.approx(oracle[style.value], abs=1e-12)

    def test_missing_response(self):
        instrument = make_instrument()
        responses = {i.id: 3 for i in instrument.items}
        responses.pop("ss0")
        with pytest.raises(MissingResponse):
            score_questionnaire(instrument, responses)

    def test_out_of_range_response(self):
        instrument = make_instrument()
        responses = {i.id: 3 for i in instrument.items}
        responses["goa1"] = 6
        with pytest.raises(OutOfRangeResponse):
            score_questionnaire(instrument, responses)

    def test_pure_function_bitwise_identical(self):
        instrument = make_instrument()
        responses = {i.id: (hash(i.id) % 5) + 1 for i in instrument.items}
        a = score_questionnaire(instrument, responses)
        b = score_questionnaire(instrument, responses)
        assert a.scores == b.scores

    def test_translation_of_one_style_shifts_only_that_style(self):
        # Raising every SS response by c moves SS by 100*c/(max-min)
        # and touches nothing else.
        instrument = make_instrument(items_per_style=2)
        base = {i.id: 2 for i in instrument.items}
        shifted = {
            i.id: base[i.id] + (2 if i.style == LearningStyle.SS else 0)
            for i in instrument.items
        }
        before = score_questionnaire(instrument, base)
        after = score_questionnaire(instrument, shifted)
        assert after.scores[LearningStyle.SS] == pytest.approx(
            before.scores[LearningStyle.SS] + 100.0 * 2 / 4
        )
        for style in LearningStyle:
            if style is not LearningStyle.SS:
                assert after.scores[style] == before.scores[style]

    @given(st.integers(min_value=1, max_value=4))
    def test_reverse_flip_equivalence(self, r):
        # Reversing an item while replacing r with (min + max - r) is a no-op.
        plain = validate_instrument(instrument_doc(items_per_style=1))
        flipped = validate_instrument(instrument_doc(items_per_style=1, reverse=("ss0",)))
        base = {i.id: 3 for i in plain.items}
        base["ss0"] = r
        mirrored = dict(base)
        mirrored["ss0"] = 1 + 5 - r
        assert (
            score_questionnaire(plain, base).scores
            == score_questionnaire(flipped, mirrored).scores
        )


class TestDominantStyle:
    def test_full_tie_resolves_to_first_canonical(self):
        vector = StyleVector(scores={s: 50.0 for s in LearningStyle})
        assert dominant_style(vector) == LearningStyle.SS

    def test_unique_maximum(self):
        scores = {s: 20.0 for s in LearningStyle}
        scores[LearningStyle.GOA] = 90.0
        scores[LearningStyle.SS] = 10.0
        assert dominant_style(StyleVector(scores=scores)) == LearningStyle.GOA

    def test_two_way_tie_canonical_order(self):
        scores = {s: 30.0 for s in LearningStyle}
        scores[LearningStyle.SS] = 70.0
        scores[LearningStyle.GOA] = 70.0
        assert dominant_style(StyleVector(scores=scores)) == LearningStyle.SS

    @given(
        st.lists(st.floats(min_value=0, max_value=100), min_size=5, max_size=5),
        st.floats(min_value=0.1, max_value=3.0),
    )
    def test_argmax_invariant_under_monotone_transform(self, values, power):
        scores = dict(zip(LearningStyle, values))
        transformed = {s: (v / 100.0) ** power * 100.0 for s, v in scores.items()}
        assert dominant_style(StyleVector(scores=scores)) == dominant_style(
            StyleVector(scores=transformed)
        )

    def test_style_vector_rejects_missing_style(self):
        with pytest.raises(ValueError):
            StyleVector(scores={LearningStyle.SS: 50.0})

    def test_style_vector_rejects_out_of_range(self):
        scores = {s: 50.0 for s in LearningStyle}
        scores[LearningStyle.CA] = 101.0
        with pytest.raises(ValueError):
            StyleVector(scores=scores)
