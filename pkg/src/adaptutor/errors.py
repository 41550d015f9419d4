"""Exception hierarchy shared by every engine module.

Each error carries a stable ``code`` string so the HTTP layer can map it
to a structured error body without string-matching messages.
"""

from __future__ import annotations


class AdaptutorError(Exception):
    """Base class for all engine errors."""

    code = "engine_error"

    def __init__(self, message: str, **detail):
        super().__init__(message)
        self.message = message
        self.detail = detail


# --- instrument / questionnaire ---------------------------------------------

class InstrumentError(AdaptutorError):
    code = "instrument_error"


class MissingStyleCoverage(InstrumentError):
    code = "missing_style_coverage"


class DuplicateItemId(InstrumentError):
    code = "duplicate_item_id"


class BadScaleBounds(InstrumentError):
    code = "bad_scale_bounds"


class MissingResponse(AdaptutorError):
    code = "missing_response"


class OutOfRangeResponse(AdaptutorError):
    code = "out_of_range_response"


# --- course pack --------------------------------------------------------------

class PackError(AdaptutorError):
    code = "pack_error"


class DuplicateId(PackError):
    code = "duplicate_id"


class CyclicPrerequisites(PackError):
    code = "cyclic_prerequisites"


class MissingVariant(PackError):
    code = "missing_variant"


class KeySectionNotMaximal(PackError):
    code = "key_section_not_maximal"


class UncoveredSection(PackError):
    code = "uncovered_section"


class DanglingLink(PackError):
    code = "dangling_link"


# --- rulebook ------------------------------------------------------------------

class RulebookError(AdaptutorError):
    code = "rulebook_error"


class UnknownPredicate(RulebookError):
    code = "unknown_predicate"


class UnknownAction(RulebookError):
    code = "unknown_action"


class EmptyRule(RulebookError):
    code = "empty_rule"


# --- assessment ------------------------------------------------------------------

class BankExhausted(AdaptutorError):
    code = "bank_exhausted"


class UnansweredQuestion(AdaptutorError):
    code = "unanswered_question"


class UnknownChoice(AdaptutorError):
    code = "unknown_choice"


class OutOfRange(AdaptutorError):
    code = "out_of_range"


# --- session ------------------------------------------------------------------

class InvalidState(AdaptutorError):
    code = "invalid_state"


class UnknownPack(AdaptutorError):
    code = "unknown_pack"


class UnknownEntity(AdaptutorError):
    """Lookup failure for a learner, concept, test, question, or message id."""

    code = "unknown_entity"


class HintBudgetExhausted(AdaptutorError):
    code = "hint_budget_exhausted"
