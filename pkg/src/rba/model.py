"""Shared domain types: login feature vectors, risk scores, outcomes.

A risk score is a plain nonnegative float; ``math.inf`` is a legal value
and means the attempt matched the user's history at no interpolation
level.  Scores are computed and compared in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

# Granularity levels, ordered most to least specific within each feature.
IP_LEVELS = ("ip", "asn", "country")
UA_LEVELS = ("ua_full", "browser", "os", "device_type")
RTT_LEVELS = ("rtt",)

# Every level name tracked by history counters, in canonical order.
ALL_LEVELS = IP_LEVELS + UA_LEVELS + RTT_LEVELS

# A risk score: nonnegative, possibly +inf.
RiskScore = float

# One feature-value map: level name -> value, None when unknown/absent.
# Values are compared by equality only; None never equals anything,
# including another None (an unknown is not evidence of a match).
FeatureValues = dict


class DeviceType(str, Enum):
    """Coarsest user-agent sub-feature."""

    DESKTOP = "desktop"
    MOBILE = "mobile"
    TABLET = "tablet"
    BOT = "bot"
    OTHER = "other"
    UNKNOWN = "unknown"


class Outcome(str, Enum):
    """Result of one authentication attempt; exactly one per attempt."""

    SUCCESS = "success"
    SUSPICIOUS = "suspicious"
    REJECTED = "rejected"
    WRONG_CREDENTIALS = "wrong_credentials"


@dataclass(frozen=True)
class NormalizedFeatures:
    """Validated, sub-feature-expanded login context.

    ``asn``/``country`` are None unless IP resolution succeeded; the UA
    sub-fields are None unless parsing succeeded.  ``rtt_ms``, when
    present, is a nonnegative multiple of 10.
    """

    ip: str
    asn: int | None = None
    country: str | None = None
    ua_full: str = ""
    browser: str | None = None
    os: str | None = None
    device_type: DeviceType = DeviceType.UNKNOWN
    rtt_ms: int | None = None

    def __post_init__(self) -> None:
        if self.rtt_ms is not None:
            if self.rtt_ms < 0 or self.rtt_ms % 10 != 0:
                raise ValueError(
                    f"rtt_ms must be a nonnegative multiple of 10, got {self.rtt_ms}"
                )

    def as_feature_values(self) -> FeatureValues:
        """Materialize every sub-feature value, keyed by level name.

        The unknown device type maps to None so it never matches, like
        any other failed derivation.
        """
        device = None
        if self.device_type is not DeviceType.UNKNOWN:
            device = self.device_type.value
        return {
            "ip": self.ip,
            "asn": self.asn,
            "country": self.country,
            "ua_full": self.ua_full,
            "browser": self.browser,
            "os": self.os,
            "device_type": device,
            "rtt": self.rtt_ms,
        }


def classify(score: RiskScore, config) -> Outcome:
    """Map a risk score onto the three-outcome login flow.

    Below the lower threshold is a successful authentication (strict
    bound); at or above the upper threshold the attempt is rejected.
    An infinite rejection threshold makes REJECTED unreachable for every
    score, including +inf, which is how rejection is disabled.
    """
    if score < config.threshold_reauth:
        return Outcome.SUCCESS
    if math.isinf(config.threshold_reject) or score < config.threshold_reject:
        return Outcome.SUSPICIOUS
    return Outcome.REJECTED
