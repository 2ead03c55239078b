"""Authentication service: credential check, risk scoring, challenges.

JSON over HTTP, versioned paths:

    POST /v1/auth                    login with username/password
    POST /v1/auth/verify             submit the emailed passcode
    GET  /v1/rtt                     WebSocket echo channel for RTT
    GET  /v1/whoami                  resolve a session token
    POST /v1/admin/users             create a user
    POST /v1/admin/users/{u}/contact set the contact address
    POST /v1/admin/reputation/reload refresh the IP blocklist
    GET  /v1/admin/config            effective non-secret configuration

Every auth decision emits one structured audit line (user, score,
outcome).  Wrong password and unknown user return byte-identical
bodies, and a rejected attempt is indistinguishable from wrong
credentials; histories are written only for accepted attempts.
"""

from __future__ import annotations

import asyncio
import json
import logging
import math
import secrets
import threading
import time
from contextlib import asynccontextmanager
from dataclasses import dataclass

from fastapi import Depends, FastAPI, Header, HTTPException, Request, WebSocket
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel
from starlette.websockets import WebSocketDisconnect

from .accounts import DuplicateUserError, UnknownUserError, UserStore
from .config import ServiceConfig
from .engine import evaluate
from .features import (FeatureValidationError, IpResolver, RawLoginAttempt,
                       validate_and_normalize)
from .history import HistoryStore
from .model import Outcome
from .reputation import RefreshError, ReputationService
from .verification import (ChallengeService, MessengerError, OutboxMessenger,
                           SmtpMessenger)

audit_log = logging.getLogger("rba.audit")

RTT_ROUNDS = 5
RTT_CLAIM_TTL_S = 60.0

_FAILURE_BODY = {"status": "failure", "message": "invalid credentials"}
_VERIFY_FAILURE_BODY = {"status": "failure", "message": "verification failed"}
_PASSCODE_BODY = {
    "status": "passcode_required",
    "message": "A verification code has been sent to your registered contact address.",
}


class AuthRequest(BaseModel):
    username: str
    password: str
    rtt_nonce: str | None = None


class VerifyRequest(BaseModel):
    username: str
    passcode: str


class CreateUserRequest(BaseModel):
    username: str
    password: str
    contact: str = ""


class ContactRequest(BaseModel):
    contact: str


@dataclass
class Session:
    token: str
    username: str
    issued_at: float
    expires_at: float


class SessionStore:
    """Opaque CSPRNG tokens, single-user, in-memory."""

    def __init__(self, ttl_s: float):
        self._ttl = ttl_s
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}

    def issue(self, username: str) -> Session:
        now = time.time()
        session = Session(token=secrets.token_urlsafe(32), username=username,
                          issued_at=now, expires_at=now + self._ttl)
        with self._lock:
            self._sessions[session.token] = session
        return session

    def resolve(self, token: str) -> Session | None:
        with self._lock:
            session = self._sessions.get(token)
            if session is None:
                return None
            if time.time() >= session.expires_at:
                del self._sessions[token]
                return None
            return session


class RttRegistry:
    """Server-measured RTT samples keyed by short-lived attempt nonce."""

    def __init__(self, ttl_s: float = RTT_CLAIM_TTL_S):
        self._ttl = ttl_s
        self._lock = threading.Lock()
        self._samples: dict[str, tuple[list[float], float]] = {}

    def store(self, nonce: str, samples: list[float]) -> None:
        with self._lock:
            self._purge()
            self._samples[nonce] = (samples, time.time())

    def claim(self, nonce: str) -> list[float]:
        """Pop the samples bound to a nonce; [] if unknown or expired."""
        with self._lock:
            self._purge()
            entry = self._samples.pop(nonce, None)
            return entry[0] if entry else []

    def _purge(self) -> None:
        deadline = time.time() - self._ttl
        stale = [nonce for nonce, (_, at) in self._samples.items() if at < deadline]
        for nonce in stale:
            del self._samples[nonce]


def _score_repr(score: float | None) -> float | str | None:
    if score is None:
        return None
    return "inf" if math.isinf(score) else score


def _audit(username: str, score: float | None, outcome: str) -> None:
    audit_log.info(json.dumps(
        {"user": username, "score": _score_repr(score), "outcome": outcome},
        separators=(",", ":")))


def build_app(config: ServiceConfig | None = None) -> FastAPI:
    """Wire stores, engine, and routes into an application instance."""
    config = config or ServiceConfig()

    users = UserStore(config.users_path, scrypt_log2_n=config.scrypt_log2_n)
    history = HistoryStore(cap=config.risk.history_cap, log_path=config.history_path)
    if config.messenger == "smtp":
        messenger = SmtpMessenger(config.smtp_host, config.smtp_port, config.mail_from)
    else:
        messenger = OutboxMessenger(config.outbox_dir, config.mail_from)
    challenges = ChallengeService(messenger)
    sessions = SessionStore(config.session_ttl_s)
    rtt_registry = RttRegistry()
    reputation = ReputationService(config.reputation_path)
    if config.reputation_path:
        reputation.refresh()
    refresh_stop = threading.Event()
    if config.reputation_path and config.reputation_refresh_s > 0:
        def refresh_loop():
            while not refresh_stop.wait(config.reputation_refresh_s):
                try:
                    reputation.refresh()
                except RefreshError:
                    pass  # logged by the service; old set stays active
        threading.Thread(target=refresh_loop, name="reputation-refresh",
                         daemon=True).start()
    if config.resolver_path:
        resolver = IpResolver.from_file(config.resolver_path)
    else:
        resolver = IpResolver()

    if config.audit_log_path and not any(
            isinstance(h, logging.FileHandler)
            and h.baseFilename == config.audit_log_path  # type: ignore[union-attr]
            for h in audit_log.handlers):
        handler = logging.FileHandler(config.audit_log_path, encoding="utf-8")
        handler.setFormatter(logging.Formatter("%(asctime)s %(message)s"))
        audit_log.addHandler(handler)
    audit_log.setLevel(logging.INFO)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        refresh_stop.set()
        history.close()

    app = FastAPI(title="rba-engine", version="0.1.0", lifespan=lifespan)
    app.state.config = config
    app.state.users = users
    app.state.history = history
    app.state.challenges = challenges
    app.state.sessions = sessions
    app.state.rtt_registry = rtt_registry
    app.state.reputation = reputation
    app.state.resolver = resolver

    def client_ip(request: Request) -> str:
        if config.trust_proxy_header:
            forwarded = request.headers.get("x-forwarded-for")
            if forwarded:
                return forwarded.split(",")[0].strip()
        return request.client.host if request.client else ""

    def require_admin(authorization: str | None = Header(default=None)) -> None:
        if config.admin_token is None:
            raise HTTPException(status_code=503, detail="admin API disabled")
        expected = f"Bearer {config.admin_token}"
        if authorization is None or not secrets.compare_digest(authorization, expected):
            raise HTTPException(status_code=403, detail="admin authorization required")

    @app.post("/v1/auth")
    def auth(body: AuthRequest, request: Request):
        # verify_password burns a KDF run for unknown users too, and the
        # body matches the wrong-password case byte for byte.
        if not users.verify_password(body.username, body.password):
            _audit(body.username, None, Outcome.WRONG_CREDENTIALS.value)
            return JSONResponse(_FAILURE_BODY, status_code=401)

        samples = rtt_registry.claim(body.rtt_nonce) if body.rtt_nonce else []
        raw = RawLoginAttempt(
            username=body.username,
            password="",
            ip=client_ip(request),
            ua=request.headers.get("user-agent", ""),
            rtt_samples_ms=samples[:5],
        )
        try:
            features = validate_and_normalize(raw, resolver)
        except FeatureValidationError as exc:
            return JSONResponse({"status": "error", "message": str(exc)},
                                status_code=400)
        values = features.as_feature_values()

        snapshot = history.snapshot()
        score, outcome = evaluate(
            values, body.username,
            list(snapshot.user_history(body.username)), snapshot.counters,
            reputation.active, config.risk,
            include_rtt=config.include_rtt_feature)
        _audit(body.username, score, outcome.value)

        if outcome is Outcome.SUCCESS:
            history.append(body.username, values, ts=time.time())
            session = sessions.issue(body.username)
            return {"status": "success", "token": session.token,
                    "expires_at": session.expires_at}
        if outcome is Outcome.SUSPICIOUS:
            record = users.get(body.username)
            try:
                counter = users.advance_hotp(body.username)
                challenges.issue_challenge(body.username, record.contact,
                                           record.hotp_secret, counter, values)
            except (MessengerError, ValueError):
                return JSONResponse(
                    {"status": "error", "message": "verification unavailable"},
                    status_code=503)
            return _PASSCODE_BODY
        return JSONResponse(_FAILURE_BODY, status_code=401)

    @app.post("/v1/auth/verify")
    def verify(body: VerifyRequest):
        try:
            record = users.get(body.username)
        except UnknownUserError:
            _audit(body.username, None, "verification_failed")
            return JSONResponse(_VERIFY_FAILURE_BODY, status_code=401)
        bound = challenges.verify_code(body.username, body.passcode,
                                       record.hotp_secret)
        if bound is None:
            _audit(body.username, None, "verification_failed")
            return JSONResponse(_VERIFY_FAILURE_BODY, status_code=401)
        history.append(body.username, bound, ts=time.time())
        session = sessions.issue(body.username)
        _audit(body.username, None, "verified_" + Outcome.SUCCESS.value)
        return {"status": "success", "token": session.token,
                "expires_at": session.expires_at}

    @app.get("/v1/whoami")
    def whoami(authorization: str | None = Header(default=None)):
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(status_code=401, detail="missing bearer token")
        session = sessions.resolve(authorization.removeprefix("Bearer "))
        if session is None:
            raise HTTPException(status_code=401, detail="invalid session")
        return {"username": session.username, "expires_at": session.expires_at}

    @app.websocket("/v1/rtt")
    async def rtt_channel(websocket: WebSocket):
        """Five sequenced ping frames; echoes matched by sequence id."""
        await websocket.accept()
        nonce = secrets.token_urlsafe(16)
        await websocket.send_json({"type": "hello", "nonce": nonce})
        sent_at: dict[int, float] = {}
        elapsed_ms: dict[int, float] = {}
        try:
            for seq in range(RTT_ROUNDS):
                sent_at[seq] = time.perf_counter()
                await websocket.send_json({"type": "ping", "seq": seq})
                while seq not in elapsed_ms:
                    frame = await asyncio.wait_for(
                        websocket.receive_json(), timeout=config.rtt_timeout_s)
                    echoed = frame.get("seq")
                    if echoed in sent_at and echoed not in elapsed_ms:
                        elapsed_ms[echoed] = (time.perf_counter()
                                              - sent_at[echoed]) * 1000.0
        except (asyncio.TimeoutError, WebSocketDisconnect, ValueError):
            pass  # incomplete measurement; login proceeds without RTT
        # only a complete measurement binds to the attempt
        if len(elapsed_ms) == RTT_ROUNDS:
            samples = [elapsed_ms[seq] for seq in sorted(elapsed_ms)]
        else:
            samples = []
        rtt_registry.store(nonce, samples)
        try:
            await websocket.send_json({"type": "done", "count": len(samples)})
            await websocket.close()
        except (WebSocketDisconnect, RuntimeError):
            pass

    @app.post("/v1/admin/users", status_code=201,
              dependencies=[Depends(require_admin)])
    def create_user(body: CreateUserRequest):
        try:
            record = users.create_user(body.username, body.password, body.contact)
        except DuplicateUserError:
            raise HTTPException(status_code=409, detail="username already exists")
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"user_id": record.user_id, "username": record.username}

    @app.post("/v1/admin/users/{username}/contact",
              dependencies=[Depends(require_admin)])
    def set_contact(username: str, body: ContactRequest):
        try:
            users.set_contact(username, body.contact)
        except UnknownUserError:
            raise HTTPException(status_code=404, detail="unknown user")
        return {"status": "ok"}

    @app.post("/v1/admin/reputation/reload",
              dependencies=[Depends(require_admin)])
    def reload_reputation():
        try:
            new_set = reputation.refresh()
        except RefreshError as exc:
            return JSONResponse(
                {"status": "error", "message": str(exc),
                 "active_prefixes": len(reputation.active)},
                status_code=502)
        return {"status": "ok", "prefixes": len(new_set)}

    @app.get("/v1/admin/config", dependencies=[Depends(require_admin)])
    def get_config():
        risk = config.risk
        return {
            "risk": {
                "threshold_reauth": risk.threshold_reauth,
                "threshold_reject": _score_repr(risk.threshold_reject),
                "ip_weights": list(risk.ip_weights),
                "ua_weights": list(risk.ua_weights),
                "global_smoothing_alpha": risk.global_smoothing_alpha,
                "user_attack_prior": risk.user_attack_prior,
                "attack_data_enabled": risk.attack_data_enabled,
                "rep_hit_prob": risk.rep_hit_prob,
                "rep_miss_prob": risk.rep_miss_prob,
                "history_cap": risk.history_cap,
            },
            "include_rtt_feature": config.include_rtt_feature,
            "messenger": config.messenger,
            "reputation_path": config.reputation_path,
            "resolver_path": config.resolver_path,
        }

    if config.frontend_dir:
        app.mount("/", StaticFiles(directory=config.frontend_dir, html=True),
                  name="frontend")

    return app
