"""Occurrence counters over the whole stored login history.

Plain hash maps: one value->count dict per granularity level, plus
per-user login counts and the total.  Unknown (None) values are never
counted; they are absences, not values.  Zeroed entries are dropped so
two counter states over the same logins always compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import ALL_LEVELS, FeatureValues


@dataclass(eq=True)
class GlobalCounters:
    """Value occurrence counts maintained alongside the history store."""

    feature_counts: dict = field(
        default_factory=lambda: {level: {} for level in ALL_LEVELS})
    user_counts: dict = field(default_factory=dict)
    total: int = 0

    def add(self, user: str, features: FeatureValues) -> None:
        for level in ALL_LEVELS:
            value = features.get(level)
            if value is None:
                continue
            counts = self.feature_counts[level]
            counts[value] = counts.get(value, 0) + 1
        self.user_counts[user] = self.user_counts.get(user, 0) + 1
        self.total += 1

    def remove(self, user: str, features: FeatureValues) -> None:
        for level in ALL_LEVELS:
            value = features.get(level)
            if value is None:
                continue
            counts = self.feature_counts[level]
            remaining = counts[value] - 1
            if remaining:
                counts[value] = remaining
            else:
                del counts[value]
        remaining_user = self.user_counts[user] - 1
        if remaining_user:
            self.user_counts[user] = remaining_user
        else:
            del self.user_counts[user]
        self.total -= 1

    def count(self, level: str, value) -> int:
        return self.feature_counts[level].get(value, 0)

    def user_count(self, user: str) -> int:
        return self.user_counts.get(user, 0)

    def copy(self) -> "GlobalCounters":
        return GlobalCounters(
            feature_counts={level: dict(counts)
                            for level, counts in self.feature_counts.items()},
            user_counts=dict(self.user_counts),
            total=self.total,
        )
