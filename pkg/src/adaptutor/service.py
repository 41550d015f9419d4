"""HTTP facade over the tutoring engine.

Routes mirror the engine operations one-to-one; every error body is
``{"code", "message", "detail"}`` with 4xx for caller faults and 5xx for
engine faults. Responses issued before a test is graded never contain
correct-answer flags or misconception tags. Mutating routes accept an
``Idempotency-Key`` header; a retried key replays the stored response.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from pathlib import Path

from fastapi import Depends, FastAPI, Header, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .assessment import Phase, grade_report_to_dict
from .content import Concept, load_course_pack_file
from .errors import (
    AdaptutorError,
    BankExhausted,
    HintBudgetExhausted,
    InstrumentError,
    InvalidState,
    MissingResponse,
    OutOfRange,
    OutOfRangeResponse,
    PackError,
    RulebookError,
    UnansweredQuestion,
    UnknownChoice,
    UnknownEntity,
    UnknownPack,
)
from .expert import LessonPlan, parse_rulebook
from .profiler import dominant_style, instrument_to_dict, validate_instrument
from .session import IssuedTest, SubmitResult, TutorEngine
from .store import RecordStore

STATUS_BY_ERROR: list[tuple[type[AdaptutorError], int]] = [
    (HintBudgetExhausted, 409),
    (InvalidState, 409),
    (UnknownEntity, 404),
    (UnknownPack, 404),
    (MissingResponse, 422),
    (OutOfRangeResponse, 422),
    (UnansweredQuestion, 422),
    (UnknownChoice, 422),
    (OutOfRange, 422),
    (BankExhausted, 500),
    (InstrumentError, 500),
    (PackError, 500),
    (RulebookError, 500),
]


@dataclass
class ApiConfig:
    pack_path: Path
    rules_path: Path
    instrument_path: Path
    records_dir: Path | None = None
    bind: str = "127.0.0.1:8000"
    seed: int | None = 0  # None means entropy
    teacher_token: str = "teach-me"

    def __post_init__(self):
        for path in (self.pack_path, self.rules_path, self.instrument_path):
            if not Path(path).exists():
                raise FileNotFoundError(f"configured file does not exist: {path}")


class ProfileBody(BaseModel):
    responses: dict[str, int]


class AnswersBody(BaseModel):
    answers: dict[str, str]


class MessageBody(BaseModel):
    to: str
    channel: str
    body: str


def learner_token(teacher_token: str, learner_id: str) -> str:
    """Opaque per-learner bearer token, derivable only with the teacher token."""
    digest = hashlib.sha256(f"{teacher_token}:{learner_id}".encode()).hexdigest()
    return digest[:20]


class Unauthorized(Exception):
    pass


def create_app(config: ApiConfig) -> FastAPI:
    pack = load_course_pack_file(config.pack_path)
    with open(config.rules_path, encoding="utf-8") as f:
        rulebook = parse_rulebook(json.load(f))
    with open(config.instrument_path, encoding="utf-8") as f:
        instrument = validate_instrument(json.load(f))

    engine = TutorEngine(
        pack=pack,
        rulebook=rulebook,
        instrument=instrument,
        store=RecordStore(config.records_dir),
        seed=config.seed,
    )

    app = FastAPI(title="adaptutor", version="0.1.0")
    app.state.engine = engine
    app.state.config = config
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    replay_cache: dict[tuple[str, str, str], tuple[int, dict]] = {}
    cache_lock = threading.Lock()

    def error_body(code: str, message: str, detail: dict | None = None) -> dict:
        return {"code": code, "message": message, "detail": detail or {}}

    @app.exception_handler(AdaptutorError)
    async def engine_error(request: Request, exc: AdaptutorError):
        status = 500
        for cls, mapped in STATUS_BY_ERROR:
            if isinstance(exc, cls):
                status = mapped
                break
        return JSONResponse(
            status_code=status,
            content=error_body(exc.code, exc.message, exc.detail),
        )

    @app.exception_handler(Unauthorized)
    async def auth_error(request: Request, exc: Unauthorized):
        return JSONResponse(
            status_code=401, content=error_body("unauthorized", "bad or missing token")
        )

    def bearer(authorization: str | None) -> str:
        if not authorization or not authorization.startswith("Bearer "):
            raise Unauthorized()
        return authorization.removeprefix("Bearer ")

    def require_teacher(authorization: str | None = Header(default=None)) -> None:
        if bearer(authorization) != config.teacher_token:
            raise Unauthorized()

    def learner_guard(learner_id: str, authorization: str | None) -> None:
        token = bearer(authorization)
        if token == config.teacher_token:
            return
        if token != learner_token(config.teacher_token, learner_id):
            raise Unauthorized()

    def replay_or_store(request: Request, key: str | None, compute):
        """Run ``compute`` once per idempotency key and replay its response."""
        if key is None:
            return compute()
        cache_key = (request.method, request.url.path, key)
        with cache_lock:
            hit = replay_cache.get(cache_key)
        if hit is not None:
            status, body = hit
            return JSONResponse(status_code=status, content=body)
        result = compute()
        status, body = (
            (result.status_code, json.loads(result.body))
            if isinstance(result, Response)
            else (200, result)
        )
        with cache_lock:
            replay_cache[cache_key] = (status, body)
        return result

    # --- response shaping ----------------------------------------------------

    def sanitized_question(concept: Concept, qid: str) -> dict:
        q = concept.question_by_id(qid)
        return {
            "id": q.id,
            "body": q.body,
            "section": q.section,
            "level": q.level.value,
            "dimension": q.dimension.value,
            "points": q.points,
            "choices": [{"id": c.id, "body": c.body} for c in q.choices],
            "hints_available": len(q.hints),
        }

    def issued_test_body(learner_id: str, issued: IssuedTest) -> dict:
        concept = engine.pack.concept_by_id(issued.concept_id)
        return {
            "test_id": issued.test_id,
            "concept": issued.concept_id,
            "phase": issued.phase.value,
            "hint_budget": issued.hints_remaining(),
            "questions": [
                sanitized_question(concept, qid) for qid in issued.instance.questions
            ],
        }

    def state_body(learner_id: str) -> dict:
        progress = engine.progress(learner_id)
        state = progress["state"]
        concept_meta = None
        if state.get("concept"):
            concept = engine.pack.concept_by_id(state["concept"])
            concept_meta = {"id": concept.id, "title": concept.title}
        return {
            "state": state,
            "concept": concept_meta,
            "profiled": progress["profiled"],
            "progress": progress["concepts"],
        }

    def submit_body(learner_id: str, result: SubmitResult) -> dict:
        report = grade_report_to_dict(result.report)
        body = {
            "report": report,
            "flow": result.flow,
            "phase": result.phase.value,
            "concept": result.concept_id,
            "state": state_body(learner_id)["state"],
        }
        if result.correct_choices is not None:
            body["correct_choices"] = result.correct_choices
        return body

    def resolve_links(learner_id: str, targets) -> list[dict]:
        resolved = []
        for target in targets:
            if "://" in target:
                resolved.append({"kind": "external", "target": target, "href": target})
            else:
                resolved.append(
                    {
                        "kind": "concept",
                        "target": target,
                        "href": f"/learners/{learner_id}/concepts/{target}/content",
                    }
                )
        return resolved

    def content_body(learner_id: str, concept: Concept, plan: LessonPlan) -> dict:
        variant = concept.variants[plan.variant_style]
        return {
            "concept": concept.id,
            "title": concept.title,
            "variant_style": plan.variant_style.value,
            "blocks": [
                {
                    "kind": block.kind.value,
                    "body": block.body,
                    "links": resolve_links(learner_id, block.links),
                }
                for block in variant.blocks
            ],
        }

    # --- routes ------------------------------------------------------------------

    @app.get("/health")
    def health():
        return {"status": "ok", "pack_id": pack.id, "rulebook_id": rulebook.id}

    @app.get("/instrument")
    def get_instrument():
        return instrument_to_dict(instrument)

    @app.post("/learners/{learner_id}/profile")
    def post_profile(
        learner_id: str,
        body: ProfileBody,
        request: Request,
        authorization: str | None = Header(default=None),
        idempotency_key: str | None = Header(default=None),
    ):
        learner_guard(learner_id, authorization)

        def compute():
            vector, state = engine.submit_profile(learner_id, body.responses)
            return {
                "style_vector": vector.to_dict(),
                "dominant_style": dominant_style(vector).value,
                "state": state.to_dict(),
            }

        return replay_or_store(request, idempotency_key, compute)

    @app.get("/learners/{learner_id}/state")
    def get_state(
        learner_id: str, authorization: str | None = Header(default=None)
    ):
        learner_guard(learner_id, authorization)
        return state_body(learner_id)

    @app.post("/learners/{learner_id}/concepts/{concept_id}/pretest")
    def post_pretest(
        learner_id: str,
        concept_id: str,
        request: Request,
        authorization: str | None = Header(default=None),
        idempotency_key: str | None = Header(default=None),
    ):
        learner_guard(learner_id, authorization)

        def compute():
            issued = engine.begin_test(learner_id, concept_id, Phase.PRETEST)
            return issued_test_body(learner_id, issued)

        return replay_or_store(request, idempotency_key, compute)

    @app.post("/learners/{learner_id}/concepts/{concept_id}/posttest")
    def post_posttest(
        learner_id: str,
        concept_id: str,
        request: Request,
        authorization: str | None = Header(default=None),
        idempotency_key: str | None = Header(default=None),
    ):
        learner_guard(learner_id, authorization)

        def compute():
            issued = engine.begin_test(learner_id, concept_id, Phase.POSTTEST)
            return issued_test_body(learner_id, issued)

        return replay_or_store(request, idempotency_key, compute)

    @app.post("/learners/{learner_id}/tests/{test_id}/answers")
    def post_answers(
        learner_id: str,
        test_id: str,
        body: AnswersBody,
        request: Request,
        authorization: str | None = Header(default=None),
        idempotency_key: str | None = Header(default=None),
    ):
        learner_guard(learner_id, authorization)

        def compute():
            result = engine.submit_answers(learner_id, test_id, body.answers)
            return submit_body(learner_id, result)

        return replay_or_store(request, idempotency_key, compute)

    @app.get("/learners/{learner_id}/concepts/{concept_id}/content")
    def get_content(
        learner_id: str,
        concept_id: str,
        authorization: str | None = Header(default=None),
    ):
        learner_guard(learner_id, authorization)
        concept, plan = engine.content_for(learner_id, concept_id)
        return content_body(learner_id, concept, plan)

    @app.post("/learners/{learner_id}/tests/{test_id}/questions/{question_id}/hint")
    def post_hint(
        learner_id: str,
        test_id: str,
        question_id: str,
        request: Request,
        authorization: str | None = Header(default=None),
        idempotency_key: str | None = Header(default=None),
    ):
        learner_guard(learner_id, authorization)

        def compute():
            hint, remaining = engine.request_hint(learner_id, test_id, question_id)
            return {"hint": hint, "remaining_budget": remaining}

        return replay_or_store(request, idempotency_key, compute)

    @app.get("/learners/{learner_id}/inbox")
    def get_inbox(
        learner_id: str, authorization: str | None = Header(default=None)
    ):
        learner_guard(learner_id, authorization)
        return {"messages": engine.inbox(learner_id)}

    @app.post("/learners/{learner_id}/inbox/{message_id}/read")
    def mark_read(
        learner_id: str,
        message_id: str,
        authorization: str | None = Header(default=None),
    ):
        learner_guard(learner_id, authorization)
        return engine.mark_read(learner_id, message_id)

    @app.post("/teacher/messages", status_code=201)
    def teacher_message(
        body: MessageBody,
        request: Request,
        _: None = Depends(require_teacher),
        idempotency_key: str | None = Header(default=None),
    ):
        def compute():
            message = engine.post_message(body.to, body.channel, body.body)
            return JSONResponse(status_code=201, content=message)

        return replay_or_store(request, idempotency_key, compute)

    @app.get("/teacher/learners/{learner_id}/token")
    def get_learner_token(learner_id: str, _: None = Depends(require_teacher)):
        return {"learner_id": learner_id, "token": learner_token(config.teacher_token, learner_id)}

    return app
