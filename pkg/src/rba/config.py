"""Engine and service configuration.

Config files are flat ``key = value`` text, UTF-8, one key per line.
Blank lines and lines starting with ``#`` are ignored.  Weight vectors
are comma-separated.  ``inf`` is accepted for ``threshold_reject`` to
disable rejection.  Unknown keys are rejected so typos fail loudly.

Risk keys (defaults in parentheses):

    threshold_reauth        lower threshold, scores below it pass (0.003)
    threshold_reject        upper threshold, scores at/above it are
                            rejected; ``inf`` disables rejection (0.018)
    ip_weights              interpolation weights ip,asn,country (0.6,0.3,0.1)
    ua_weights              weights ua_full,browser,os,device_type
                            (0.5,0.25,0.15,0.1)
    global_smoothing_alpha  additive smoothing on global counts (1.0)
    user_attack_prior       constant p(user | attack) estimate (1.0)
    attack_data_enabled     consult the IP reputation list (false)
    rep_hit_prob            attack probability for a listed IP (1.0)
    rep_miss_prob           attack probability for an unlisted IP (0.1)
    history_cap             stored logins per user before eviction (100)

Service keys are documented on :class:`ServiceConfig`.  One file may
carry both groups; each loader picks the keys it owns.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields

_WEIGHT_TOL = 1e-9


class ConfigError(ValueError):
    """Raised for unparseable files, unknown keys, or invalid values."""


@dataclass(frozen=True)
class RiskConfig:
    """Thresholds, interpolation weights, and smoothing constants."""

    threshold_reauth: float = 0.003
    threshold_reject: float = 0.018
    ip_weights: tuple[float, float, float] = (0.6, 0.3, 0.1)
    ua_weights: tuple[float, float, float, float] = (0.5, 0.25, 0.15, 0.1)
    global_smoothing_alpha: float = 1.0
    user_attack_prior: float = 1.0
    attack_data_enabled: bool = False
    rep_hit_prob: float = 1.0
    rep_miss_prob: float = 0.1
    history_cap: int = 100

    def __post_init__(self) -> None:
        if not self.threshold_reauth > 0 or not math.isfinite(self.threshold_reauth):
            raise ConfigError("threshold_reauth must be positive and finite")
        if not self.threshold_reject > 0:
            raise ConfigError("threshold_reject must be positive")
        if self.threshold_reauth > self.threshold_reject:
            raise ConfigError("threshold_reauth must not exceed threshold_reject")
        for name, weights, arity in (
            ("ip_weights", self.ip_weights, 3),
            ("ua_weights", self.ua_weights, 4),
        ):
            if len(weights) != arity:
                raise ConfigError(f"{name} needs {arity} entries, got {len(weights)}")
            if any(w < 0 for w in weights):
                raise ConfigError(f"{name} must be nonnegative")
            if abs(sum(weights) - 1.0) > _WEIGHT_TOL:
                raise ConfigError(f"{name} must sum to 1, got {sum(weights)!r}")
        if self.global_smoothing_alpha < 0:
            raise ConfigError("global_smoothing_alpha must be nonnegative")
        if not self.user_attack_prior > 0:
            raise ConfigError("user_attack_prior must be positive")
        for name, p in (("rep_hit_prob", self.rep_hit_prob),
                        ("rep_miss_prob", self.rep_miss_prob)):
            if not 0 < p <= 1:
                raise ConfigError(f"{name} must be in (0, 1]")
        if self.history_cap < 1:
            raise ConfigError("history_cap must be a positive integer")


@dataclass(frozen=True)
class ServiceConfig:
    """Authentication service settings wrapping a :class:`RiskConfig`.

    Keys: bind_host (127.0.0.1), bind_port (8080), users_path,
    history_path, outbox_dir, reputation_path,
    reputation_refresh_s (86400; 0 disables the periodic reload),
    resolver_path, admin_token, session_ttl_s (3600), scrypt_log2_n
    (14), messenger (outbox|smtp), smtp_host, smtp_port (25),
    mail_from, frontend_dir, audit_log_path, rtt_timeout_s (5.0),
    include_rtt_feature (true), trust_proxy_header (false; take the
    client IP from X-Forwarded-For when the service sits behind a
    reverse proxy).
    """

    risk: RiskConfig = field(default_factory=RiskConfig)
    bind_host: str = "127.0.0.1"
    bind_port: int = 8080
    users_path: str = "users.json"
    history_path: str = "history.log"
    outbox_dir: str = "outbox"
    reputation_path: str | None = None
    reputation_refresh_s: float = 86400.0
    resolver_path: str | None = None
    admin_token: str | None = None
    session_ttl_s: int = 3600
    scrypt_log2_n: int = 14
    messenger: str = "outbox"
    smtp_host: str = "localhost"
    smtp_port: int = 25
    mail_from: str = "no-reply@localhost"
    frontend_dir: str | None = None
    audit_log_path: str | None = None
    rtt_timeout_s: float = 5.0
    include_rtt_feature: bool = True
    trust_proxy_header: bool = False

    def __post_init__(self) -> None:
        if self.messenger not in ("outbox", "smtp"):
            raise ConfigError(f"messenger must be 'outbox' or 'smtp', got {self.messenger!r}")
        if self.scrypt_log2_n < 10 or self.scrypt_log2_n > 24:
            raise ConfigError("scrypt_log2_n out of sane range [10, 24]")


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines into a string map."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _parse_bool(key: str, raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def _parse_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from exc


def _parse_weights(key: str, raw: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in raw.split(","))
    except ValueError as exc:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {raw!r}") from exc


def risk_config_from_mapping(values: dict[str, str]) -> RiskConfig:
    """Build a RiskConfig from string key-values (risk keys only)."""
    kwargs: dict = {}
    for key, raw in values.items():
        if key in ("threshold_reauth", "threshold_reject", "global_smoothing_alpha",
                   "user_attack_prior", "rep_hit_prob", "rep_miss_prob"):
            kwargs[key] = _parse_float(key, raw)
        elif key in ("ip_weights", "ua_weights"):
            kwargs[key] = _parse_weights(key, raw)
        elif key == "attack_data_enabled":
            kwargs[key] = _parse_bool(key, raw)
        elif key == "history_cap":
            try:
                kwargs[key] = int(raw)
            except ValueError as exc:
                raise ConfigError(f"history_cap: expected an integer, got {raw!r}") from exc
        else:
            raise ConfigError(f"unknown risk config key {key!r}")
    return RiskConfig(**kwargs)


_RISK_KEYS = frozenset(f.name for f in fields(RiskConfig))


def service_config_from_mapping(values: dict[str, str]) -> ServiceConfig:
    """Build a ServiceConfig (including its RiskConfig) from key-values."""
    risk_values = {k: v for k, v in values.items() if k in _RISK_KEYS}
    kwargs: dict = {"risk": risk_config_from_mapping(risk_values)}
    for key, raw in values.items():
        if key in _RISK_KEYS:
            continue
        if key in ("bind_port", "session_ttl_s", "scrypt_log2_n", "smtp_port"):
            try:
                kwargs[key] = int(raw)
            except ValueError as exc:
                raise ConfigError(f"{key}: expected an integer, got {raw!r}") from exc
        elif key in ("rtt_timeout_s", "reputation_refresh_s"):
            kwargs[key] = _parse_float(key, raw)
        elif key in ("include_rtt_feature", "trust_proxy_header"):
            kwargs[key] = _parse_bool(key, raw)
        elif key in ("bind_host", "users_path", "history_path", "outbox_dir",
                     "reputation_path", "resolver_path", "admin_token",
                     "messenger", "smtp_host", "mail_from", "frontend_dir",
                     "audit_log_path"):
            kwargs[key] = raw
        else:
            raise ConfigError(f"unknown service config key {key!r}")
    return ServiceConfig(**kwargs)


def load_risk_config(path: str) -> RiskConfig:
    """Risk keys from a config file; service keys in it are ignored."""
    values = parse_config_text(open(path, encoding="utf-8").read())
    return risk_config_from_mapping(
        {k: v for k, v in values.items() if k in _RISK_KEYS})


def load_service_config(path: str | None = None) -> ServiceConfig:
    """Load service config; ``RBA_CONFIG`` overrides a missing path."""
    if path is None:
        path = os.environ.get("RBA_CONFIG")
    if path is None:
        return ServiceConfig()
    with open(path, encoding="utf-8") as fh:
        return service_config_from_mapping(parse_config_text(fh.read()))
