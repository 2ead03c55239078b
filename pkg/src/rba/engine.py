"""Risk scoring over login histories.

The score for an attempt multiplies, over the monitored features, the
attack probability of the feature value times the ratio of its global
occurrence probability to its smoothed probability in the attempting
user's own history, scaled by the ratio of the user's attack prior to
the user's share of all logins.  Higher means further from the user's
usual context; a score of +inf means no interpolation level matched.

Per-user probabilities interpolate linearly across granularity levels
(exact IP down to country, exact UA string down to device type) so an
unseen-but-similar value does not zero the probability.  The global
probability consults only the most specific level, with additive
smoothing, over plain occurrence counters.

Scoring is a pure read over one consistent (history, counters) state;
callers provide a snapshot and serialize appends elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import RiskConfig
from .counters import GlobalCounters
from .history import LoginHistoryEntry
from .model import (IP_LEVELS, RTT_LEVELS, UA_LEVELS, FeatureValues, Outcome,
                    RiskScore, classify)

_WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class FeatureHierarchy:
    """Granularity levels of one feature, most to least specific."""

    name: str
    levels: tuple[str, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.levels) != len(self.weights):
            raise ValueError("one weight per level required")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be nonnegative")
        if abs(sum(self.weights) - 1.0) > _WEIGHT_TOL:
            raise ValueError("weights must sum to 1")


def hierarchies(config: RiskConfig, include_rtt: bool = True) -> tuple[FeatureHierarchy, ...]:
    """The monitored feature set under the given interpolation weights."""
    features = (
        FeatureHierarchy("ip", IP_LEVELS, tuple(config.ip_weights)),
        FeatureHierarchy("ua", UA_LEVELS, tuple(config.ua_weights)),
    )
    if include_rtt:
        features += (FeatureHierarchy("rtt", RTT_LEVELS, (1.0,)),)
    return features


def user_feature_prob(feature: FeatureHierarchy, attempt: FeatureValues,
                      user_history: list[LoginHistoryEntry]) -> float:
    """Interpolated probability of the attempt's value in the user history.

    Weighted sum over levels of the fraction of history entries whose
    value at that level equals the attempt's.  Unknown (None) values on
    either side never match.
    """
    if not user_history:
        raise ValueError("user history must be nonempty; first logins bypass scoring")
    n = len(user_history)
    prob = 0.0
    for level, weight in zip(feature.levels, feature.weights):
        value = attempt.get(level)
        if value is None:
            continue
        matches = sum(1 for entry in user_history
                      if entry.features.get(level) == value)
        prob += weight * (matches / n)
    return prob


def global_feature_prob(value, level: str, counters: GlobalCounters,
                        alpha: float) -> float:
    """Smoothed occurrence probability of a level-0 value over all logins.

    Only the originated (most specific) value is consulted on the
    global history; no smoothing across sub-features here.
    """
    if counters.total == 0:
        if alpha > 0:
            return 1.0
        raise ValueError("empty global history with alpha=0")
    return (counters.count(level, value) + alpha) / (counters.total + alpha)


def user_prior(user: str, counters: GlobalCounters) -> float:
    """The user's share of all stored logins, p(user | legitimate)."""
    if counters.total == 0:
        raise ValueError("no stored logins")
    count = counters.user_count(user)
    if count == 0:
        raise ValueError("user has no stored logins; first logins bypass scoring")
    return count / counters.total


def attack_prob(feature_name: str, value, reputation, config: RiskConfig) -> float:
    """p(attack | feature value); constant 1 when attack data is unused.

    With attack data enabled, the IP feature consults the reputation
    list; other features stay at 1.
    """
    if not config.attack_data_enabled or feature_name != "ip":
        return 1.0
    if reputation is not None and reputation.contains(value):
        return config.rep_hit_prob
    return config.rep_miss_prob


def risk_score(attempt: FeatureValues, user: str,
               history: list[LoginHistoryEntry], counters: GlobalCounters,
               reputation=None, config: RiskConfig = RiskConfig(),
               include_rtt: bool = True) -> RiskScore:
    """Score one attempt against the state strictly preceding it.

    Features whose level-0 value is absent (e.g. no RTT measurement)
    are excluded from the product; a zero user probability for any
    included feature yields +inf.
    """
    if not history:
        raise ValueError("risk_score requires at least one stored login")
    score = 1.0
    for feature in hierarchies(config, include_rtt):
        level0 = feature.levels[0]
        value = attempt.get(level0)
        if value is None:
            continue
        u_prob = user_feature_prob(feature, attempt, history)
        if u_prob == 0.0:
            return math.inf
        g_prob = global_feature_prob(value, level0, counters,
                                     config.global_smoothing_alpha)
        a_prob = attack_prob(feature.name, value, reputation, config)
        score *= a_prob * g_prob / u_prob
    return score * config.user_attack_prior / user_prior(user, counters)


def evaluate(attempt: FeatureValues, user: str,
             history: list[LoginHistoryEntry], counters: GlobalCounters,
             reputation=None, config: RiskConfig = RiskConfig(),
             include_rtt: bool = True) -> tuple[RiskScore, Outcome]:
    """Score and classify; a user's first-ever login passes with score 0."""
    if not history:
        return (0.0, Outcome.SUCCESS)
    score = risk_score(attempt, user, history, counters, reputation,
                       config, include_rtt)
    return (score, classify(score, config))
