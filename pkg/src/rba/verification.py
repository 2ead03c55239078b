"""Verification codes for the re-authentication step.

A suspicious login opens a challenge: the user's HOTP counter advances,
the six-digit code goes out via the configured messenger with the code
in both subject line and body, and the suspicious attempt's features
stay bound to the challenge so a successful verification can store them
as already seen.  At most one challenge is active per user; expired or
exhausted challenges never verify.

The default messenger writes RFC-5322-style messages to a local outbox
directory; an SMTP client ships behind the same interface, and engine
behavior is independent of the delivery backend.
"""

from __future__ import annotations

import hmac
import os
import smtplib
import threading
import time
from dataclasses import dataclass, field
from email.message import EmailMessage
from email.utils import formatdate
from typing import Protocol

from .hotp import hotp
from .model import FeatureValues

DEFAULT_EXPIRY_S = 600
DEFAULT_MAX_ATTEMPTS = 3

SUBJECT_TEMPLATE = "Your verification code: {code}"
BODY_TEMPLATE = (
    "A sign-in attempt to your account needs verification.\n"
    "\n"
    "Your verification code: {code}\n"
    "\n"
    "Attempt context: IP {ip}, client {ua}\n"
    "\n"
    "If this was not you, consider changing your password.\n"
)


class MessengerError(RuntimeError):
    """Delivery failed; the challenge is canceled."""


class Messenger(Protocol):
    def send(self, contact: str, subject: str, body: str) -> None: ...


class OutboxMessenger:
    """Writes each message as an .eml file into a local directory."""

    def __init__(self, directory: str, sender: str = "no-reply@localhost"):
        self.directory = directory
        self.sender = sender
        self._counter = 0
        self._lock = threading.Lock()
        os.makedirs(directory, exist_ok=True)

    def send(self, contact: str, subject: str, body: str) -> None:
        message = EmailMessage()
        message["From"] = self.sender
        message["To"] = contact
        message["Subject"] = subject
        message["Date"] = formatdate(usegmt=True)
        message.set_content(body)
        with self._lock:
            self._counter += 1
            counter = self._counter
        name = f"{int(time.time() * 1000):013d}-{counter:04d}.eml"
        try:
            with open(os.path.join(self.directory, name), "wb") as fh:
                fh.write(message.as_bytes())
        except OSError as exc:
            raise MessengerError(f"outbox write failed: {exc}") from exc


class SmtpMessenger:
    """Delivers via a plain SMTP relay."""

    def __init__(self, host: str, port: int = 25, sender: str = "no-reply@localhost"):
        self.host = host
        self.port = port
        self.sender = sender

    def send(self, contact: str, subject: str, body: str) -> None:
        message = EmailMessage()
        message["From"] = self.sender
        message["To"] = contact
        message["Subject"] = subject
        message.set_content(body)
        try:
            with smtplib.SMTP(self.host, self.port, timeout=30) as client:
                client.send_message(message)
        except (OSError, smtplib.SMTPException) as exc:
            raise MessengerError(f"smtp delivery failed: {exc}") from exc


@dataclass
class PendingChallenge:
    """Outstanding verification state for one suspicious login."""

    user: str
    counter: int
    issued_at: float
    expiry_s: float = DEFAULT_EXPIRY_S
    attempts_left: int = DEFAULT_MAX_ATTEMPTS
    features: FeatureValues = field(default_factory=dict)

    def expired(self, now: float) -> bool:
        return now >= self.issued_at + self.expiry_s


class ChallengeService:
    """Issues and verifies HOTP challenges, one active per user."""

    def __init__(self, messenger: Messenger,
                 expiry_s: float = DEFAULT_EXPIRY_S,
                 max_attempts: int = DEFAULT_MAX_ATTEMPTS,
                 clock=time.time):
        self._messenger = messenger
        self._expiry_s = expiry_s
        self._max_attempts = max_attempts
        self._clock = clock
        self._pending: dict[str, PendingChallenge] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _user_lock(self, user: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(user, threading.Lock())

    def issue_challenge(self, user: str, contact: str, secret: bytes,
                        counter: int, features: FeatureValues) -> PendingChallenge:
        """Open a challenge and dispatch its code; replaces any active one.

        ``counter`` is the already-advanced HOTP counter for the user.
        A messenger failure cancels the challenge and surfaces the error.
        """
        if not contact:
            raise ValueError(f"user {user!r} has no registered contact address")
        code = hotp(secret, counter)
        with self._user_lock(user):
            previous = self._pending.pop(user, None)
            challenge = PendingChallenge(
                user=user, counter=counter, issued_at=self._clock(),
                expiry_s=self._expiry_s, attempts_left=self._max_attempts,
                features=dict(features))
            try:
                self._messenger.send(
                    contact,
                    SUBJECT_TEMPLATE.format(code=code),
                    BODY_TEMPLATE.format(code=code,
                                         ip=features.get("ip", "unknown"),
                                         ua=features.get("ua_full") or "unknown"),
                )
            except MessengerError:
                if previous is not None:
                    self._pending[user] = previous
                raise
            self._pending[user] = challenge
            return challenge

    def verify_code(self, user: str, code: str, secret: bytes) -> FeatureValues | None:
        """Consume the challenge on a correct code; None otherwise.

        Acceptance returns the bound features of the suspicious attempt.
        A wrong code burns one attempt; expiry or exhaustion drops the
        challenge entirely.
        """
        with self._user_lock(user):
            challenge = self._pending.get(user)
            if challenge is None:
                return None
            if challenge.expired(self._clock()) or challenge.attempts_left <= 0:
                del self._pending[user]
                return None
            expected = hotp(secret, challenge.counter)
            if hmac.compare_digest(expected, code):
                del self._pending[user]
                return challenge.features
            challenge.attempts_left -= 1
            if challenge.attempts_left <= 0:
                del self._pending[user]
            return None

    def active_challenge(self, user: str) -> PendingChallenge | None:
        with self._user_lock(user):
            challenge = self._pending.get(user)
            if challenge is not None and challenge.expired(self._clock()):
                del self._pending[user]
                return None
            return challenge
