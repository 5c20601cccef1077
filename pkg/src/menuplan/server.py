"""HTTP session service for live adaptive-menu sessions.

A session holds one interaction state.  Clients register clicks as the user
completes selection trials; ending a block recomputes interest from the
block's clicks, asks the planner (or a baseline policy) for an adaptation,
and returns the adapted menu with its predicted rewards.

Every mutating request is appended to a per-session JSONL log before it is
acknowledged, and a restarted server replays those logs, so session state
survives restarts.  Mutations are serialized per session.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .adaptation import adaptation_to_json, apply_adaptation, recompute_interest
from .harness import baseline_adapted
from .menu import (
    Click,
    ClickLog,
    InteractionState,
    UserState,
    emit_design,
    parse_design,
)
from .planner import OBJECTIVES, PlannerConfig, plan
from .user_model import ModelParams, reward
from .value_net import ValueModel

POLICIES = ("mcts", "frequency", "static")


class SessionConfig(BaseModel):
    iterations: int = 400
    horizon: int = 4
    objective: str = "average"
    seed: int = 0
    policy: str = "mcts"
    session_length: int = 20


class CreateSessionBody(BaseModel):
    menu: dict
    config: SessionConfig = SessionConfig()


class ClickBody(BaseModel):
    label: str
    timestamp: float | None = None
    latency_ms: float | None = None


class EndBlockBody(BaseModel):
    objective: str | None = None
    policy: str | None = None


@dataclass
class Session:
    session_id: str
    state: InteractionState
    config: SessionConfig
    block: int = 0
    block_click_count: int = 0
    trials: list[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    """In-memory sessions backed by append-only JSONL logs."""

    def __init__(self, log_dir, params: ModelParams, model: ValueModel | None = None):
        self.log_dir = Path(log_dir)
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self.params = params
        self.model = model
        self.sessions: dict[str, Session] = {}
        self._store_lock = threading.Lock()
        self._replay()

    # -- event log -------------------------------------------------------

    def _log_path(self, session_id: str) -> Path:
        return self.log_dir / f"{session_id}.jsonl"

    def _append(self, session_id: str, event: dict) -> None:
        with open(self._log_path(session_id), "a") as f:
            f.write(json.dumps(event, sort_keys=True) + "\n")

    def _replay(self) -> None:
        for path in sorted(self.log_dir.glob("*.jsonl")):
            session = None
            with open(path) as f:
                for line in f:
                    event = json.loads(line)
                    kind = event["event"]
                    if kind == "create":
                        session = self._build_session(
                            event["session_id"],
                            event["menu"],
                            SessionConfig(**event["config"]),
                        )
                    elif session is None:
                        break
                    elif kind == "click":
                        self._apply_click(session, event["label"], event.get("latency_ms"))
                    elif kind == "end_block":
                        self._apply_end_block(session, tuple(event["menu"]["items"]))
            if session is not None:
                self.sessions[session.session_id] = session

    # -- state transitions shared by handlers and replay -------------------

    def _build_session(self, session_id: str, menu: dict, config: SessionConfig) -> Session:
        design = parse_design(menu)
        user = UserState(
            log=ClickLog(),
            now=1,
            interest={label: 1.0 / len(design.items) for label in design.items},
        )
        return Session(session_id, InteractionState.fresh(design, user), config)

    def _apply_click(self, session: Session, label: str, latency_ms) -> None:
        state = session.state
        if label not in state.design.item_index:
            raise KeyError(label)
        user = state.user
        click = Click(label, state.design.item_index[label], user.now)
        session.state = InteractionState(
            state.design,
            UserState(user.log.extended([click]), user.now + 1, user.interest, user.decay),
            state.expected_design,
        )
        session.block_click_count += 1
        session.trials.append(
            {"label": label, "latency_ms": latency_ms, "block": session.block}
        )

    def _refreshed(self, session: Session) -> InteractionState:
        state = session.state
        if session.block_click_count:
            state = recompute_interest(state, session.block_click_count)
        return state

    def _apply_end_block(self, session: Session, new_entries: tuple[str, ...]) -> None:
        state = self._refreshed(session)
        design = state.design.with_entries(tuple(new_entries))
        session.state = InteractionState(design, state.user, design)
        session.block += 1
        session.block_click_count = 0

    # -- public operations --------------------------------------------------

    def create(self, body: CreateSessionBody) -> Session:
        if body.config.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if body.config.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}")
        session_id = uuid.uuid4().hex
        session = self._build_session(session_id, body.menu, body.config)
        with self._store_lock:
            self.sessions[session_id] = session
        self._append(
            session_id,
            {
                "event": "create",
                "session_id": session_id,
                "menu": emit_design(session.state.design),
                "config": body.config.model_dump(),
            },
        )
        return session

    def get(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session") from None

    def click(self, session_id: str, body: ClickBody) -> Session:
        session = self.get(session_id)
        with session.lock:
            try:
                self._apply_click(session, body.label, body.latency_ms)
            except KeyError:
                raise HTTPException(
                    status_code=422, detail=f"unknown label {body.label!r}"
                ) from None
            self._append(
                session_id,
                {
                    "event": "click",
                    "label": body.label,
                    "latency_ms": body.latency_ms,
                    "timestamp": body.timestamp,
                },
            )
        return session

    def end_block(self, session_id: str, body: EndBlockBody) -> dict:
        session = self.get(session_id)
        with session.lock:
            objective = body.objective or session.config.objective
            policy = body.policy or session.config.policy
            if objective not in OBJECTIVES:
                raise HTTPException(status_code=422, detail=f"unknown objective {objective!r}")
            if policy not in POLICIES:
                raise HTTPException(status_code=422, detail=f"unknown policy {policy!r}")
            state = self._refreshed(session)
            if policy == "mcts":
                config = PlannerConfig(
                    iterations=session.config.iterations,
                    horizon=session.config.horizon,
                    objective=objective,
                    rng_seed=session.config.seed + session.block,
                    session_length=session.config.session_length,
                    reward_source="simulation" if self.model is None else "value-net",
                )
                value_fn = self.model.value_fn() if self.model is not None else None
                outcome = plan(state, config, self.params, value_fn)
                chosen = outcome.chosen
                predicted = outcome.predicted
                new_design = state.design
                for adaptation in chosen:
                    new_design = apply_adaptation(new_design, adaptation)
            else:
                chosen = []
                new_design = baseline_adapted(policy, state)
                predicted = reward(state, new_design, self.params)
            adaptation_json = [adaptation_to_json(a) for a in chosen]
            self._apply_end_block(session, new_design.entries)
            self._append(
                session_id,
                {
                    "event": "end_block",
                    "adaptations": adaptation_json,
                    "menu": emit_design(session.state.design),
                    "objective": objective,
                    "policy": policy,
                },
            )
            return {
                "session_id": session_id,
                "menu": emit_design(session.state.design),
                "predicted_reward": predicted.as_dict(),
                "adaptations": adaptation_json,
                "block": session.block,
            }


def create_app(
    log_dir, params: ModelParams | None = None, model: ValueModel | None = None
) -> FastAPI:
    store = SessionStore(log_dir, params or ModelParams(), model)
    app = FastAPI(title="menuplan session service")
    app.state.store = store

    @app.get("/")
    def index():
        return {"service": "menuplan", "sessions": len(store.sessions)}

    @app.post("/session", status_code=201)
    def create_session(body: CreateSessionBody):
        try:
            session = store.create(body)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        return {
            "session_id": session.session_id,
            "menu": emit_design(session.state.design),
            "block": session.block,
        }

    @app.get("/session/{session_id}/menu")
    def get_menu(session_id: str):
        session = store.get(session_id)
        return {
            "session_id": session_id,
            "menu": emit_design(session.state.design),
            "block": session.block,
        }

    @app.post("/session/{session_id}/click")
    def post_click(session_id: str, body: ClickBody):
        session = store.click(session_id, body)
        return {
            "session_id": session_id,
            "recorded": True,
            "clicks": len(session.state.user.log),
            "block": session.block,
        }

    @app.post("/session/{session_id}/end-block")
    def post_end_block(session_id: str, body: EndBlockBody = EndBlockBody()):
        return store.end_block(session_id, body)

    @app.get("/session/{session_id}/stats")
    def get_stats(session_id: str):
        session = store.get(session_id)
        return {
            "session_id": session_id,
            "block": session.block,
            "clicks": len(session.state.user.log),
            "trials": session.trials,
            "menu": emit_design(session.state.design),
        }

    ui_dir = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if ui_dir.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def serve(
    host: str,
    port: int,
    log_dir,
    params: ModelParams | None = None,
    model: ValueModel | None = None,
) -> None:
    import uvicorn

    uvicorn.run(create_app(log_dir, params, model), host=host, port=port, log_level="warning")
