"""User records: credentials, contact address, HOTP secret and counter.

Passwords are hashed with scrypt (memory-hard) under a per-user random
salt; records persist as a single JSON file written atomically.  The
password hash never leaves this module.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import os
import secrets
import threading
import uuid
from dataclasses import dataclass, field

_SCRYPT_R = 8
_SCRYPT_P = 1
_HOTP_SECRET_BYTES = 20


class DuplicateUserError(ValueError):
    """The username is already registered."""


class UnknownUserError(KeyError):
    """No record for that username."""


@dataclass
class UserRecord:
    user_id: str
    username: str
    contact: str
    pw_salt: bytes = field(repr=False)
    pw_hash: bytes = field(repr=False)
    scrypt_log2_n: int
    hotp_secret: bytes = field(repr=False)
    hotp_counter: int = 0


def _hash_password(password: str, salt: bytes, log2_n: int) -> bytes:
    return hashlib.scrypt(password.encode("utf-8"), salt=salt,
                          n=2 ** log2_n, r=_SCRYPT_R, p=_SCRYPT_P, dklen=32,
                          maxmem=2 ** 31 - 1)


class UserStore:
    """Username-keyed account storage with JSON persistence."""

    def __init__(self, path: str | None = None, scrypt_log2_n: int = 14):
        self._path = path
        self._log2_n = scrypt_log2_n
        self._lock = threading.Lock()
        self._users: dict[str, UserRecord] = {}
        # Fixed-cost compare target so unknown usernames take the same
        # KDF time as wrong passwords.
        self._dummy_salt = secrets.token_bytes(16)
        self._dummy_hash = _hash_password("*", self._dummy_salt, scrypt_log2_n)
        if path is not None and os.path.exists(path):
            self._load()

    def create_user(self, username: str, password: str, contact: str = "") -> UserRecord:
        if not username:
            raise ValueError("empty username")
        with self._lock:
            if username in self._users:
                raise DuplicateUserError(username)
            salt = secrets.token_bytes(16)
            record = UserRecord(
                user_id=str(uuid.uuid4()),
                username=username,
                contact=contact,
                pw_salt=salt,
                pw_hash=_hash_password(password, salt, self._log2_n),
                scrypt_log2_n=self._log2_n,
                hotp_secret=secrets.token_bytes(_HOTP_SECRET_BYTES),
            )
            self._users[username] = record
            self._save()
            return record

    def get(self, username: str) -> UserRecord:
        with self._lock:
            try:
                return self._users[username]
            except KeyError:
                raise UnknownUserError(username) from None

    def exists(self, username: str) -> bool:
        with self._lock:
            return username in self._users

    def set_contact(self, username: str, contact: str) -> None:
        with self._lock:
            if username not in self._users:
                raise UnknownUserError(username)
            self._users[username].contact = contact
            self._save()

    def verify_password(self, username: str, password: str) -> bool:
        """Constant-shape check: unknown users still cost one KDF run."""
        with self._lock:
            record = self._users.get(username)
        if record is None:
            candidate = _hash_password(password, self._dummy_salt, self._log2_n)
            hmac.compare_digest(candidate, self._dummy_hash)
            return False
        candidate = _hash_password(password, record.pw_salt, record.scrypt_log2_n)
        return hmac.compare_digest(candidate, record.pw_hash)

    def advance_hotp(self, username: str) -> int:
        """Increment and persist the user's HOTP counter; returns it."""
        with self._lock:
            if username not in self._users:
                raise UnknownUserError(username)
            record = self._users[username]
            record.hotp_counter += 1
            self._save()
            return record.hotp_counter

    def _save(self) -> None:
        if self._path is None:
            return
        payload = {
            "users": {
                name: {
                    "user_id": rec.user_id,
                    "username": rec.username,
                    "contact": rec.contact,
                    "pw_salt": rec.pw_salt.hex(),
                    "pw_hash": rec.pw_hash.hex(),
                    "scrypt_log2_n": rec.scrypt_log2_n,
                    "hotp_secret": rec.hotp_secret.hex(),
                    "hotp_counter": rec.hotp_counter,
                }
                for name, rec in self._users.items()
            }
        }
        tmp = self._path + ".tmp"
        fd = os.open(tmp, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
        os.replace(tmp, self._path)

    def _load(self) -> None:
        with open(self._path, encoding="utf-8") as fh:
            payload = json.load(fh)
        for name, raw in payload.get("users", {}).items():
            self._users[name] = UserRecord(
                user_id=raw["user_id"],
                username=raw["username"],
                contact=raw["contact"],
                pw_salt=bytes.fromhex(raw["pw_salt"]),
                pw_hash=bytes.fromhex(raw["pw_hash"]),
                scrypt_log2_n=raw["scrypt_log2_n"],
                hotp_secret=bytes.fromhex(raw["hotp_secret"]),
                hotp_counter=raw["hotp_counter"],
            )
