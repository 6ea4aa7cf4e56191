"""HTTP play service for human experiment sessions.

JSON endpoints (static bearer-token auth, one token per participant)::

    POST /sessions                  {participant_id, request_id?}
    GET  /sessions/{id}
    GET  /sessions/{id}/book
    POST /sessions/{id}/action      {action, request_id?}
    POST /sessions/{id}/predict     {truth, request_id?}
    GET  /sessions/{id}/score

Mutations are idempotent under retry: repeating a request with the same
``request_id`` replays the cached response instead of re-applying the
move. Session state is updated under a per-session lock and persisted
after every mutation; the trajectory log is the scoring source of truth.
"""

from __future__ import annotations

import time

from fastapi import Depends, FastAPI, Header, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from ..errors import (
    AuthFailure,
    InsufficientTaskPool,
    KumoError,
    SessionTerminated,
    UnknownAction,
    UnknownEnvironment,
    UnknownTruth,
)
from ..simulator import PREDICT, SUCCESS, TAKE_ACTION, Move
from .model import open_slot, preamble_for_slot, quality_flag, session_view
from .store import DataStore

_STATUS = {
    "AuthFailure": 401,
    "UnknownEnvironment": 404,
    "UnknownAction": 400,
    "UnknownTruth": 400,
    "SessionTerminated": 409,
    "InsufficientTaskPool": 503,
}


class CreateSessionBody(BaseModel):
    participant_id: str
    request_id: str | None = None


class ActionBody(BaseModel):
    action: str
    request_id: str | None = None


class PredictBody(BaseModel):
    truth: str
    request_id: str | None = None


def _bearer(authorization: str | None) -> str | None:
    if authorization and authorization.lower().startswith("bearer "):
        return authorization[7:].strip()
    return authorization


def create_app(store: DataStore) -> FastAPI:
    app = FastAPI(title="kumo play service")

    def get_store() -> DataStore:
        return store

    @app.exception_handler(KumoError)
    async def kumo_error_handler(request: Request, exc: KumoError):
        code = type(exc).__name__
        return JSONResponse(
            status_code=_STATUS.get(code, 500),
            content={"error": code, "detail": str(exc)},
        )

    def _auth_session(store: DataStore, session_id: str, token: str | None):
        session = store.get_session(session_id)
        store.authenticate(session.participant_id, token)
        return session

    @app.post("/sessions")
    def create_session(
        body: CreateSessionBody,
        authorization: str | None = Header(default=None),
        store: DataStore = Depends(get_store),
    ):
        store.authenticate(body.participant_id, _bearer(authorization))
        session = store.create_session(body.participant_id)
        return session_view(session)

    @app.get("/sessions/{session_id}")
    def get_session(
        session_id: str,
        authorization: str | None = Header(default=None),
        store: DataStore = Depends(get_store),
    ):
        session = _auth_session(store, session_id, _bearer(authorization))
        with store.session_lock(session_id):
            return session_view(session)

    @app.get("/sessions/{session_id}/book")
    def get_book(
        session_id: str,
        authorization: str | None = Header(default=None),
        store: DataStore = Depends(get_store),
    ):
        session = _auth_session(store, session_id, _bearer(authorization))
        with store.session_lock(session_id):
            slot = session.active_slot
            if slot is None:
                raise SessionTerminated("task set is complete")
            return {
                "task_index": slot.index,
                "book": slot.book,
                "preamble": preamble_for_slot(slot),
            }

    @app.post("/sessions/{session_id}/action")
    def post_action(
        session_id: str,
        body: ActionBody,
        authorization: str | None = Header(default=None),
        store: DataStore = Depends(get_store),
    ):
        session = _auth_session(store, session_id, _bearer(authorization))
        with store.session_lock(session_id):
            if body.request_id and body.request_id in session.request_cache:
                return session.request_cache[body.request_id]
            slot = session.active_slot
            if slot is None or session.live is None:
                raise SessionTerminated("task set is complete")
            if body.action not in slot.task.actions:
                raise UnknownAction(f"{body.action!r} is not an action of this task")
            record = session.live.apply_move(Move(TAKE_ACTION, body.action))
            session.turn_times.append(time.time())
            response = {
                "action": body.action,
                "observation": record.observation,
                "action_count": session.live.action_count,
                "task_index": slot.index,
            }
            if body.request_id:
                session.request_cache[body.request_id] = response
            store.save_session(session)
            return response

    @app.post("/sessions/{session_id}/predict")
    def post_predict(
        session_id: str,
        body: PredictBody,
        authorization: str | None = Header(default=None),
        store: DataStore = Depends(get_store),
    ):
        session = _auth_session(store, session_id, _bearer(authorization))
        with store.session_lock(session_id):
            if body.request_id and body.request_id in session.request_cache:
                return session.request_cache[body.request_id]
            slot = session.active_slot
            if slot is None or session.live is None:
                raise SessionTerminated("task set is complete")
            if body.truth not in slot.task.truths:
                raise UnknownTruth(f"{body.truth!r} is not a candidate of this task")
            live = session.live
            live.apply_move(Move(PREDICT, body.truth))
            session.turn_times.append(time.time())
            slot.outcome = live.outcome
            slot.action_count = live.action_count
            traj = live.trajectory()
            store.record_trajectory(session, slot, traj)
            session.current += 1
            session.live = None
            if not session.finished:
                open_slot(session, store.config_for)
            else:
                session.low_quality = quality_flag(session, **store.quality_thresholds)
            response = {
                "task_index": slot.index,
                "correct": slot.outcome == SUCCESS,
                "outcome": slot.outcome,
                "finished": session.finished,
                "next_task_index": None if session.finished else session.current,
                "running_score": session.earnings().to_json(),
            }
            if body.request_id:
                session.request_cache[body.request_id] = response
            store.save_session(session)
            return response

    @app.get("/sessions/{session_id}/score")
    def get_score(
        session_id: str,
        authorization: str | None = Header(default=None),
        store: DataStore = Depends(get_store),
    ):
        session = _auth_session(store, session_id, _bearer(authorization))
        with store.session_lock(session_id):
            if session.finished:
                earnings = store.earnings_from_log(session_id)
                assert earnings is not None
                live = session.earnings()
                # No drift allowed between the live counters and the log.
                assert abs(earnings.total - live.total) < 1e-9
            else:
                earnings = session.earnings()
            return {
                "completed": session.finished,
                "tasks_done": sum(1 for s in session.slots if s.done),
                "success_rate": session.success_rate(),
                "action_count": session.total_actions(),
                "earnings": earnings.to_json(),
                "low_quality": session.low_quality,
            }

    return app
