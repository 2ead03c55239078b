"""IP reputation blocklists for the attack-probability term.

Parses FireHOL-style ipset/netset text: one IP or CIDR per line, ``#``
comments and blank lines ignored, bare addresses treated as host
prefixes.  Membership runs over a binary prefix trie per address
family, O(address length) on the hot authentication path.

The active set is an immutable snapshot swapped atomically on refresh;
a failed refresh keeps the previous set, so the service is never left
without a usable list.
"""

from __future__ import annotations

import ipaddress
import logging
import time
import urllib.request

from .iptrie import PrefixTrie

logger = logging.getLogger(__name__)


class ReputationParseError(ValueError):
    """A non-comment line was not an IP or CIDR."""

    def __init__(self, lineno: int, line: str):
        super().__init__(f"line {lineno}: not an IP or CIDR: {line!r}")
        self.lineno = lineno


class RefreshError(RuntimeError):
    """A refresh failed; the previously active set remains in force."""


class ReputationSet:
    """Immutable set of blocklisted prefixes."""

    def __init__(self, networks=(), source: str | None = None):
        self._trie = PrefixTrie()
        for network in networks:
            self._trie.insert(network, True)
        self.source = source
        self.loaded_at = time.time()

    def __len__(self) -> int:
        return len(self._trie)

    def contains(self, ip: str) -> bool:
        """True iff some stored prefix contains the address."""
        return self._trie.contains(ipaddress.ip_address(ip))

    def networks(self) -> list:
        return [network for network, _ in self._trie.items()]


def parse_list(text: str, source: str | None = None) -> ReputationSet:
    """Parse ipset/netset text into a ReputationSet."""
    networks = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if "/" in line:
                networks.append(ipaddress.ip_network(line, strict=False))
            else:
                networks.append(ipaddress.ip_network(ipaddress.ip_address(line)))
        except ValueError as exc:
            raise ReputationParseError(lineno, raw) from exc
    return ReputationSet(networks, source=source)


def contains(rep_set: ReputationSet, ip: str) -> bool:
    """Functional wrapper over :meth:`ReputationSet.contains`."""
    return rep_set.contains(ip)


class ReputationService:
    """Holds the active set and refreshes it from a file or URL."""

    def __init__(self, source: str | None = None):
        self.source = source
        self._active = ReputationSet()

    @property
    def active(self) -> ReputationSet:
        return self._active

    def contains(self, ip: str) -> bool:
        return self._active.contains(ip)

    def refresh(self, source: str | None = None) -> ReputationSet:
        """Atomically replace the active set; failure retains the old one."""
        source = source or self.source
        if source is None:
            raise RefreshError("no reputation source configured")
        try:
            if source.startswith(("http://", "https://")):
                with urllib.request.urlopen(source, timeout=30) as resp:
                    text = resp.read().decode("utf-8")
            else:
                with open(source, encoding="utf-8") as fh:
                    text = fh.read()
            new_set = parse_list(text, source=source)
        except (OSError, ValueError) as exc:
            logger.warning("reputation refresh from %s failed, keeping %d prefixes: %s",
                           source, len(self._active), exc)
            raise RefreshError(str(exc)) from exc
        self._active = new_set
        logger.info("reputation list refreshed from %s: %d prefixes", source, len(new_set))
        return new_set
