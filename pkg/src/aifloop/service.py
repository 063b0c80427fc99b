"""Live human-in-the-loop number entry over HTTP + WebSocket.

The planning agent from the number-entry environment serves a real user:
POST /session creates a session (JSON body of config overrides) and returns
{id, cutpoint, belief}; GET /session/{id}/ws streams the event log and
accepts {"type": "response", "bit": 0|1} answers; DELETE /session/{id}
aborts. GET /session/{id}/events returns the full ordered log, which is
also replayed on every fresh WebSocket connection, so clients can resume
after a drop.

Event types: created, query {cutpoint}, belief {dist, entropy}, efe
{actions: [{action, value, info_gain, pragmatic, label}]}, response {bit},
flipped {flipped}, commit {n}, aborted {reason}, error {code, msg}. Belief
arrays are the length-N marginal over candidate numbers. An optional
simulated channel (epsilon_true > 0) flips answer bits with a seeded
generator; the flip is disclosed in the event stream per response so a
client can reveal corruption after commit, never before.

Sessions are in-memory and single-node; one in-flight step per session
(guarded by a lock); idle sessions past the TTL become aborted; the session
count is bounded by config. Planning runs in a worker thread so the event
loop stays responsive.
"""
from __future__ import annotations

import asyncio
import dataclasses
import itertools
import json
import time
import uuid
from dataclasses import dataclass, field

import numpy as np
from aiohttp import WSMsgType, web

from .agent import Agent
from .envs.number_entry import (
    ABOVE,
    BELOW,
    NumberEntryConfig,
    build_model,
    entry_agent_config,
    target_marginal,
)
from .inference import Belief, ImpossibleObservationError
from .planning import efe_for_policy, enumerate_policies
from .probmath import Dist, entropy, make_rng

PHASE_AWAITING = "awaiting_response"
PHASE_QUERYING = "querying"
PHASE_COMMITTED = "committed"
PHASE_ABORTED = "aborted"


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8700
    static_dir: str | None = None
    ttl_seconds: float = 600.0
    max_sessions: int = 64
    sweep_interval: float = 5.0


class ServiceError(Exception):
    def __init__(self, status: int, code: str, msg: str):
        super().__init__(msg)
        self.status = status
        self.code = code
        self.msg = msg


# Live sessions default to the clean channel; overrides may turn on the
# simulated corruption and widen the agent's noise grid to match.
_SESSION_DEFAULTS = dict(N=16, epsilon_true=0.0, epsilon_grid=(0.0,), horizon=1, seed=0)


@dataclass
class Session:
    id: str
    cfg: NumberEntryConfig
    agent: Agent
    flip_rng: np.random.Generator
    phase: str = PHASE_AWAITING
    events: list[dict] = field(default_factory=list)
    queries: int = 0
    committed: int | None = None
    aborted_reason: str | None = None
    created_at: float = field(default_factory=time.monotonic)
    last_activity: float = field(default_factory=time.monotonic)
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    listeners: list[asyncio.Queue] = field(default_factory=list)

    def touch(self):
        self.last_activity = time.monotonic()


def _emit(session: Session, event: dict) -> dict:
    session.events.append(event)
    for q in session.listeners:
        q.put_nowait(event)
    return event


def _belief_event(session: Session) -> dict:
    # snapshot the decision-time posterior (after correction, before the
    # predict through the chosen action), which always lives on live states
    posterior = session.agent.trace.steps[-1].posterior
    marginal = target_marginal(posterior, session.cfg)
    dist = (marginal / marginal.sum()).tolist()
    return {"type": "belief", "dist": dist, "entropy": entropy(np.asarray(dist))}


def _action_label(cfg: NumberEntryConfig, action: int) -> str:
    if cfg.is_ask(action):
        return f"ask {cfg.ask_cutpoint(action)}"
    return f"commit {cfg.commit_target(action)}"


class SessionService:
    def __init__(self, cfg: ServiceConfig):
        self.cfg = cfg
        self.sessions: dict[str, Session] = {}

    # -- session lifecycle ---------------------------------------------------

    def _get(self, sid: str) -> Session:
        session = self.sessions.get(sid)
        if session is None:
            raise ServiceError(404, "unknown_session", f"no session {sid}")
        return session

    async def create_session(self, overrides: dict) -> Session:
        if len([s for s in self.sessions.values() if s.phase in (PHASE_AWAITING, PHASE_QUERYING)]) >= self.cfg.max_sessions:
            raise ServiceError(429, "too_many_sessions", "session limit reached")
        allowed = {f.name for f in dataclasses.fields(NumberEntryConfig)}
        params = dict(_SESSION_DEFAULTS)
        for key, value in (overrides or {}).items():
            if key not in allowed:
                raise ServiceError(400, "invalid_config", f"unknown config key {key!r}")
            params[key] = tuple(value) if key == "epsilon_grid" else value
        try:
            cfg = NumberEntryConfig(**params)
        except (TypeError, ValueError) as exc:
            raise ServiceError(400, "invalid_config", str(exc)) from exc

        agent = Agent(build_model(cfg), entry_agent_config(cfg, seed=cfg.seed, diagnostic=True))
        session = Session(
            id=uuid.uuid4().hex,
            cfg=cfg,
            agent=agent,
            flip_rng=make_rng(cfg.seed),
        )
        self.sessions[session.id] = session
        _emit(session, {"type": "created", "N": cfg.N, "epsilon": cfg.epsilon_true, "horizon": cfg.horizon})
        await self._advance(session, None)
        return session

    async def _advance(self, session: Session, observation: int | None) -> int:
        """Run one agent step off-loop and emit the resulting events."""
        loop = asyncio.get_running_loop()
        action = await loop.run_in_executor(None, session.agent.step, observation)
        _emit(session, _belief_event(session))
        pset = self._last_pset(session)
        if pset is not None:
            _emit(session, pset)
        if session.cfg.is_ask(action):
            session.queries += 1
            session.phase = PHASE_QUERYING
            _emit(session, {"type": "query", "cutpoint": session.cfg.ask_cutpoint(action)})
        else:
            session.committed = session.cfg.commit_target(action)
            session.phase = PHASE_COMMITTED
            _emit(session, {"type": "commit", "n": session.committed})
        session.touch()
        return action

    def _last_pset(self, session: Session) -> dict | None:
        """Per-opening-action EFE summary from the recorded policy table.

        For each opening action, take its best policy and split the score as
        value = −pragmatic − info_gain (pragmatic folds risk+ambiguity with a
        sign flip in state modes, so the identity holds across modes).
        """
        step = session.agent.trace.steps[-1]
        if step.efe_table is None:
            return None
        cfg = session.cfg
        agent = session.agent
        horizon = agent.cfg.horizon
        efes = step.efe_table
        best: dict[int, tuple[int, float]] = {}
        for i, policy in enumerate(itertools.product(range(cfg.num_actions), repeat=horizon)):
            first = policy[0]
            if first not in best or efes[i] < best[first][1]:
                best[first] = (i, efes[i])
        prior = Belief(Dist(step.posterior), agent.belief.timestep - 1)
        policies = None
        actions = []
        for first in sorted(best):
            idx, value = best[first]
            if policies is None:
                policies = enumerate_policies(cfg.num_actions, horizon, agent.cfg.policy_budget)
            breakdown = efe_for_policy(prior, policies[idx], agent.model, prior.timestep, agent.efe_mode)
            steps = max(1, horizon)
            ig = float(np.sum(breakdown.info_gain)) / steps if breakdown.info_gain else 0.0
            if breakdown.mode == "observation":
                pragmatic = float(np.sum(breakdown.pragmatic_value)) / steps
            else:
                pragmatic = -(float(np.sum(breakdown.risk)) + float(np.sum(breakdown.ambiguity))) / steps
            actions.append(
                {
                    "action": int(first),
                    "value": float(value),
                    "info_gain": ig,
                    "pragmatic": pragmatic,
                    "label": _action_label(cfg, first),
                }
            )
        return {"type": "efe", "actions": actions}

    async def post_response(self, sid: str, bit: int) -> Session:
        session = self._get(sid)
        async with session.lock:
            if session.phase == PHASE_ABORTED and session.aborted_reason == "idle timeout":
                raise ServiceError(410, "gone", "session expired")
            if session.phase != PHASE_QUERYING:
                raise ServiceError(409, "wrong_phase", f"session is {session.phase}, not awaiting an answer")
            if bit not in (BELOW, ABOVE):
                raise ServiceError(400, "bad_response", f"bit must be 0 (below) or 1 (above), got {bit!r}")
            session.phase = PHASE_AWAITING
            _emit(session, {"type": "response", "bit": int(bit)})
            observed = bit
            flipped = False
            if session.cfg.epsilon_true > 0:
                flipped = bool(session.flip_rng.random() < session.cfg.epsilon_true)
                if flipped:
                    observed = ABOVE if bit == BELOW else BELOW
            _emit(session, {"type": "flipped", "flipped": flipped})
            try:
                await self._advance(session, observed)
            except ImpossibleObservationError as exc:
                # the answer contradicts the agent's model: close the session
                # cleanly instead of leaving it wedged
                session.phase = PHASE_ABORTED
                session.aborted_reason = "model contradiction"
                _emit(session, {"type": "error", "code": "impossible_observation", "msg": str(exc)})
                _emit(session, {"type": "aborted", "reason": "model contradiction"})
        return session

    def abort(self, sid: str, reason: str) -> Session:
        session = self._get(sid)
        if session.phase not in (PHASE_COMMITTED, PHASE_ABORTED):
            session.phase = PHASE_ABORTED
            session.aborted_reason = reason
            _emit(session, {"type": "aborted", "reason": reason})
        session.touch()
        return session

    def sweep(self) -> None:
        now = time.monotonic()
        for session in list(self.sessions.values()):
            if session.phase in (PHASE_AWAITING, PHASE_QUERYING) and now - session.last_activity > self.cfg.ttl_seconds:
                session.phase = PHASE_ABORTED
                session.aborted_reason = "idle timeout"
                _emit(session, {"type": "aborted", "reason": "idle timeout"})


# -- HTTP layer ---------------------------------------------------------------


def _json_error(exc: ServiceError) -> web.Response:
    return web.json_response({"type": "error", "code": exc.code, "msg": exc.msg}, status=exc.status)


SERVICE_KEY = web.AppKey("service", "SessionService")


def build_app(service_cfg: ServiceConfig | None = None) -> web.Application:
    cfg = service_cfg or ServiceConfig()
    service = SessionService(cfg)
    app = web.Application()
    app[SERVICE_KEY] = service

    async def create(request: web.Request) -> web.Response:
        try:
            body = await request.json() if request.can_read_body else {}
        except json.JSONDecodeError:
            return web.json_response({"type": "error", "code": "bad_json", "msg": "body must be JSON"}, status=400)
        try:
            session = await service.create_session(body)
        except ServiceError as exc:
            return _json_error(exc)
        first_query = next(e for e in session.events if e["type"] == "query")
        belief = next(e for e in session.events if e["type"] == "belief")
        return web.json_response({"id": session.id, "cutpoint": first_query["cutpoint"], "belief": belief["dist"]})

    async def delete(request: web.Request) -> web.Response:
        try:
            service.abort(request.match_info["sid"], "client abort")
        except ServiceError as exc:
            return _json_error(exc)
        return web.json_response({"ok": True})

    async def events(request: web.Request) -> web.Response:
        try:
            session = service._get(request.match_info["sid"])
        except ServiceError as exc:
            return _json_error(exc)
        return web.json_response({"events": session.events})

    async def ws_handler(request: web.Request) -> web.WebSocketResponse:
        try:
            session = service._get(request.match_info["sid"])
        except ServiceError as exc:
            return _json_error(exc)
        ws = web.WebSocketResponse()
        await ws.prepare(request)
        queue: asyncio.Queue = asyncio.Queue()
        for event in list(session.events):
            await ws.send_json(event)
        session.listeners.append(queue)

        async def pump():
            while True:
                event = await queue.get()
                await ws.send_json(event)

        pump_task = asyncio.create_task(pump())
        try:
            async for msg in ws:
                if msg.type != WSMsgType.TEXT:
                    continue
                try:
                    doc = json.loads(msg.data)
                except json.JSONDecodeError:
                    await ws.send_json({"type": "error", "code": "bad_json", "msg": "messages must be JSON"})
                    continue
                if doc.get("type") != "response":
                    await ws.send_json({"type": "error", "code": "bad_type", "msg": "expected a response message"})
                    continue
                try:
                    await service.post_response(session.id, doc.get("bit"))
                except ServiceError as exc:
                    await ws.send_json({"type": "error", "code": exc.code, "msg": exc.msg})
        finally:
            pump_task.cancel()
            if queue in session.listeners:
                session.listeners.remove(queue)
        return ws

    async def sweeper(app: web.Application):
        async def loop():
            while True:
                await asyncio.sleep(cfg.sweep_interval)
                service.sweep()

        task = asyncio.create_task(loop())
        yield
        task.cancel()

    app.router.add_post("/session", create)
    app.router.add_delete("/session/{sid}", delete)
    app.router.add_get("/session/{sid}/events", events)
    app.router.add_get("/session/{sid}/ws", ws_handler)
    if cfg.static_dir:
        app.router.add_static("/app", cfg.static_dir, show_index=True)
    app.cleanup_ctx.append(sweeper)
    return app


def run_service(cfg: ServiceConfig) -> None:
    web.run_app(build_app(cfg), host=cfg.host, port=cfg.port)
