"""Per-user login histories with capped size and consistent counters.

Persistence is a single append-log file: one JSON object per line,
UTF-8, fields in the fixed order ``user, ts, seq, features`` (feature
values in canonical level order).  Loading replays the log through the
same append path, so cap evictions are re-derived deterministically and
counters are rebuilt rather than trusted.  ``save`` writes a compacted
log holding only the live entries.

Appends serialize through one lock (single writer); ``snapshot``
returns a copy observed between, never within, append transactions.
"""

from __future__ import annotations

import json
import os
import threading
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

from .counters import GlobalCounters
from .model import ALL_LEVELS, FeatureValues


class HistoryLoadError(ValueError):
    """The persisted log could not be parsed; the store stays empty."""


@dataclass(frozen=True)
class LoginHistoryEntry:
    """One stored login; immutable once written.

    ``seq`` is store-wide monotone, which makes it strictly increasing
    per user as well.  ``features`` holds every sub-feature value
    materialized at append time; treat it as read-only.
    """

    user: str
    ts: float
    seq: int
    features: FeatureValues


class HistorySnapshot(NamedTuple):
    """Consistent (histories, counters) pair for scoring."""

    histories: dict
    counters: GlobalCounters

    def user_history(self, user: str) -> tuple[LoginHistoryEntry, ...]:
        return self.histories.get(user, ())


def _entry_line(entry: LoginHistoryEntry) -> str:
    record = {
        "user": entry.user,
        "ts": entry.ts,
        "seq": entry.seq,
        "features": {level: entry.features.get(level) for level in ALL_LEVELS},
    }
    return json.dumps(record, separators=(",", ":"))


def _parse_line(line: str, lineno: int) -> LoginHistoryEntry:
    try:
        record = json.loads(line)
        return LoginHistoryEntry(
            user=record["user"],
            ts=record["ts"],
            seq=record["seq"],
            features=dict(record["features"]),
        )
    except (ValueError, KeyError, TypeError) as exc:
        raise HistoryLoadError(f"line {lineno}: corrupt history record") from exc


class HistoryStore:
    """Login history with oldest-first eviction beyond ``cap`` per user.

    ``cap=None`` disables eviction (used by the replay harness).
    """

    def __init__(self, cap: int | None = 100, log_path: str | None = None):
        if cap is not None and cap < 1:
            raise ValueError("cap must be a positive integer or None")
        self._cap = cap
        self._lock = threading.Lock()
        self._entries: dict[str, deque[LoginHistoryEntry]] = {}
        self._counters = GlobalCounters()
        self._seq = 0
        self._log = None
        if log_path is not None:
            if os.path.exists(log_path):
                self.load(log_path)
            self._log = open(log_path, "a", encoding="utf-8")

    @property
    def counters(self) -> GlobalCounters:
        """Live counters; read-only use, single-threaded callers only."""
        return self._counters

    def append(self, user: str, features: FeatureValues,
               ts: float = 0.0) -> LoginHistoryEntry | None:
        """Store one login; returns the evicted entry when the cap hit.

        The log line is flushed before any in-memory mutation, so an
        I/O failure aborts the append with no partial counter update.
        """
        with self._lock:
            entry = LoginHistoryEntry(user=user, ts=ts, seq=self._seq,
                                      features=dict(features))
            if self._log is not None:
                self._log.write(_entry_line(entry) + "\n")
                self._log.flush()
            return self._apply(entry)

    def _apply(self, entry: LoginHistoryEntry) -> LoginHistoryEntry | None:
        queue = self._entries.setdefault(entry.user, deque())
        queue.append(entry)
        self._counters.add(entry.user, entry.features)
        self._seq = max(self._seq, entry.seq) + 1
        evicted = None
        if self._cap is not None and len(queue) > self._cap:
            evicted = queue.popleft()
            self._counters.remove(evicted.user, evicted.features)
        return evicted

    def user_history(self, user: str) -> list[LoginHistoryEntry]:
        """The user's stored entries in sequence order; [] when unseen."""
        with self._lock:
            return list(self._entries.get(user, ()))

    def user_count(self, user: str) -> int:
        with self._lock:
            return len(self._entries.get(user, ()))

    def users(self) -> list[str]:
        with self._lock:
            return list(self._entries)

    def snapshot(self) -> HistorySnapshot:
        """Copy of the latest committed state, never a mid-append view."""
        with self._lock:
            histories = {user: tuple(queue) for user, queue in self._entries.items()}
            return HistorySnapshot(histories=histories, counters=self._counters.copy())

    def save(self, path: str) -> None:
        """Write a compacted log: live entries only, in append order."""
        with self._lock:
            entries = sorted(
                (entry for queue in self._entries.values() for entry in queue),
                key=lambda e: e.seq)
            tmp = path + ".tmp"
            with open(tmp, "w", encoding="utf-8") as fh:
                for entry in entries:
                    fh.write(_entry_line(entry) + "\n")
            os.replace(tmp, path)

    def load(self, path: str) -> None:
        """Replace state by replaying a log; corrupt file leaves it empty."""
        with self._lock:
            self._entries = {}
            self._counters = GlobalCounters()
            self._seq = 0
            with open(path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    if not line.strip():
                        continue
                    try:
                        entry = _parse_line(line, lineno)
                    except HistoryLoadError:
                        self._entries = {}
                        self._counters = GlobalCounters()
                        self._seq = 0
                        raise
                    self._apply(entry)

    def compact(self) -> None:
        """Rewrite the attached live log down to the live entries."""
        with self._lock:
            if self._log is None:
                return
            path = self._log.name
            entries = sorted(
                (entry for queue in self._entries.values() for entry in queue),
                key=lambda e: e.seq)
            tmp = path + ".tmp"
            with open(tmp, "w", encoding="utf-8") as fh:
                for entry in entries:
                    fh.write(_entry_line(entry) + "\n")
            self._log.close()
            os.replace(tmp, path)
            self._log = open(path, "a", encoding="utf-8")

    def close(self) -> None:
        if self._log is not None:
            self._log.close()
            self._log = None
