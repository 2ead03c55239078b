"""Feature validation and sub-feature derivation.

Turns a raw login attempt into :class:`~rba.model.NormalizedFeatures`:
the IP is resolved to ASN and country over an offline prefix table, the
user-agent string is parsed with the ordered rule table bundled at
``resources/ua_rules.json``, and the round-trip time is reduced to the
shortest sample rounded to the nearest ten milliseconds.

All functions here are pure; the resolver table is read-only after load
and can be shared across concurrent evaluations.
"""

from __future__ import annotations

import ipaddress
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources

from .iptrie import PrefixTrie
from .model import DeviceType, NormalizedFeatures


class FeatureValidationError(ValueError):
    """A raw attempt failed validation before scoring."""


class ResolverFormatError(ValueError):
    """A resolver table row was malformed."""


@dataclass
class RawLoginAttempt:
    """Login request as received, before validation.

    ``rtt_samples_ms`` carries up to five round-trip measurements;
    ``passcode`` is present only on the re-authentication round.
    """

    username: str
    password: str = field(repr=False, default="")
    ip: str = ""
    ua: str = ""
    rtt_samples_ms: list[float] = field(default_factory=list)
    passcode: str | None = None


def normalize_rtt(samples: list[float]) -> int | None:
    """Shortest sample, rounded to the nearest ten milliseconds.

    An empty list means no measurement was possible and yields None.
    Ties at a multiple of five round half away from zero.
    """
    if not samples:
        return None
    if any(s < 0 for s in samples):
        raise FeatureValidationError("negative RTT sample")
    shortest = min(samples)
    return int(math.floor(shortest / 10.0 + 0.5)) * 10


class IpResolver:
    """Longest-prefix IP attribute lookup over an offline CIDR table.

    Table rows are ``cidr,asn,country``; ``#`` starts a comment line.
    A row seen later for the same prefix overwrites the earlier one.
    Any object with the same ``resolve`` signature can stand in, e.g.
    to plug in a live GeoIP backend.
    """

    def __init__(self) -> None:
        self._trie = PrefixTrie()

    @classmethod
    def from_csv(cls, text: str) -> "IpResolver":
        resolver = cls()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [part.strip() for part in line.split(",")]
            if len(parts) != 3:
                raise ResolverFormatError(
                    f"line {lineno}: expected 'cidr,asn,country', got {raw!r}")
            cidr, asn_text, country = parts
            try:
                network = ipaddress.ip_network(cidr, strict=False)
            except ValueError as exc:
                raise ResolverFormatError(f"line {lineno}: bad CIDR {cidr!r}") from exc
            try:
                asn = int(asn_text.upper().removeprefix("AS"))
            except ValueError as exc:
                raise ResolverFormatError(f"line {lineno}: bad ASN {asn_text!r}") from exc
            if not country:
                raise ResolverFormatError(f"line {lineno}: empty country")
            resolver._trie.insert(network, (asn, country.upper()))
        return resolver

    @classmethod
    def from_file(cls, path: str) -> "IpResolver":
        with open(path, encoding="utf-8") as fh:
            return cls.from_csv(fh.read())

    def resolve(self, ip: str) -> tuple[int | None, str | None]:
        """(ASN, country) of the longest matching prefix, else (None, None)."""
        addr = ipaddress.ip_address(ip)
        hit = self._trie.longest_match(addr)
        if hit is None:
            return (None, None)
        return hit


def resolve_ip(ip: str, resolver: IpResolver) -> tuple[int | None, str | None]:
    """Functional wrapper over :meth:`IpResolver.resolve`."""
    return resolver.resolve(ip)


class _UaRules:
    """Compiled form of the bundled ordered rule table."""

    def __init__(self, spec: dict) -> None:
        self.browsers = [(re.compile(r["pattern"]), r["name"]) for r in spec["browsers"]]
        self.tools = [(re.compile(r["pattern"]), r["name"]) for r in spec["tools"]]
        self.os = [(re.compile(r["pattern"]), r["name"]) for r in spec["os"]]
        self.bot_markers = spec["bot_markers"]
        self.tablet_markers = spec["tablet_markers"]
        self.mobile_markers = spec["mobile_markers"]
        self.desktop_markers = spec["desktop_markers"]


def _load_default_rules() -> _UaRules:
    text = resources.files("rba").joinpath("resources/ua_rules.json").read_text("utf-8")
    return _UaRules(json.loads(text))


_DEFAULT_RULES = _load_default_rules()


def parse_user_agent(
    ua: str, rules: _UaRules = _DEFAULT_RULES
) -> tuple[str | None, str | None, DeviceType]:
    """Derive (browser name+major, os name+version, device type).

    Deterministic first-match evaluation of the ordered rule table; an
    unparseable string degrades to None fields and UNKNOWN, never an
    error.  Non-browser tools (curl, wget, ...) classify as bots.
    """
    if not ua or not ua.strip():
        return (None, None, DeviceType.UNKNOWN)
    lowered = ua.lower()

    browser = None
    is_tool = False
    for pattern, name in rules.tools:
        match = pattern.search(ua)
        if match:
            browser = f"{name} {match.group(1)}"
            is_tool = True
            break
    if browser is None:
        for pattern, name in rules.browsers:
            match = pattern.search(ua)
            if match:
                browser = f"{name} {match.group(1)}"
                break

    os_name = None
    for pattern, name in rules.os:
        match = pattern.search(ua)
        if match:
            if "{v}" in name:
                os_name = name.replace("{v}", match.group(1).replace("_", "."))
            else:
                os_name = name
            break

    if is_tool or any(marker in lowered for marker in rules.bot_markers):
        device = DeviceType.BOT
    elif any(marker in ua for marker in rules.tablet_markers) or \
            ("Android" in ua and "Mobi" not in ua):
        device = DeviceType.TABLET
    elif any(marker in ua for marker in rules.mobile_markers):
        device = DeviceType.MOBILE
    elif any(marker in ua for marker in rules.desktop_markers):
        device = DeviceType.DESKTOP
    elif browser is not None or os_name is not None:
        device = DeviceType.OTHER
    else:
        device = DeviceType.UNKNOWN
    return (browser, os_name, device)


def validate_and_normalize(raw: RawLoginAttempt, resolver: IpResolver) -> NormalizedFeatures:
    """Validate a raw attempt and derive every sub-feature.

    Raises :class:`FeatureValidationError` for an empty username, an
    unparseable IP, or invalid RTT samples; the attempt is refused
    before any scoring.  A missing RTT is not an error, the feature is
    simply absent.
    """
    if not raw.username:
        raise FeatureValidationError("empty username")
    try:
        addr = ipaddress.ip_address(raw.ip)
    except ValueError as exc:
        raise FeatureValidationError(f"invalid IP address {raw.ip!r}") from exc
    if len(raw.rtt_samples_ms) > 5:
        raise FeatureValidationError("more than five RTT samples")
    asn, country = resolver.resolve(str(addr))
    browser, os_name, device = parse_user_agent(raw.ua)
    return NormalizedFeatures(
        ip=str(addr),
        asn=asn,
        country=country,
        ua_full=raw.ua,
        browser=browser,
        os=os_name,
        device_type=device,
        rtt_ms=normalize_rtt(raw.rtt_samples_ms),
    )
