"""Binary prefix trie over IPv4/IPv6 CIDR networks.

One trie per address family; a lookup walks the address bits from the
most significant end and is O(address length).  Used for both
longest-prefix attribute lookups (IP -> ASN/country) and membership
tests against reputation blocklists.
"""

from __future__ import annotations

import ipaddress
from typing import Any, Iterator

_NO_VALUE = object()


class _Node:
    __slots__ = ("zero", "one", "value")

    def __init__(self) -> None:
        self.zero: _Node | None = None
        self.one: _Node | None = None
        self.value: Any = _NO_VALUE


class PrefixTrie:
    """Maps CIDR prefixes of both families to arbitrary values."""

    def __init__(self) -> None:
        self._roots = {4: _Node(), 6: _Node()}
        self._len = 0

    def __len__(self) -> int:
        return self._len

    def insert(self, network: ipaddress.IPv4Network | ipaddress.IPv6Network,
               value: Any = True) -> None:
        """Insert a network; reinserting a prefix overwrites its value."""
        node = self._roots[network.version]
        bits = int(network.network_address)
        width = network.max_prefixlen
        for i in range(network.prefixlen):
            bit = (bits >> (width - 1 - i)) & 1
            if bit:
                if node.one is None:
                    node.one = _Node()
                node = node.one
            else:
                if node.zero is None:
                    node.zero = _Node()
                node = node.zero
        if node.value is _NO_VALUE:
            self._len += 1
        node.value = value

    def longest_match(self, ip: ipaddress.IPv4Address | ipaddress.IPv6Address):
        """Value of the most specific prefix containing ``ip``, else None."""
        node = self._roots[ip.version]
        bits = int(ip)
        width = ip.max_prefixlen
        best = None
        if node.value is not _NO_VALUE:
            best = node.value
        for i in range(width):
            bit = (bits >> (width - 1 - i)) & 1
            node = node.one if bit else node.zero
            if node is None:
                break
            if node.value is not _NO_VALUE:
                best = node.value
        return best

    def contains(self, ip: ipaddress.IPv4Address | ipaddress.IPv6Address) -> bool:
        """True iff some stored prefix contains ``ip``."""
        return self.longest_match(ip) is not None

    def _walk(self, node: _Node, prefix: int, depth: int, version: int) -> Iterator:
        if node.value is not _NO_VALUE:
            width = 32 if version == 4 else 128
            addr_int = prefix << (width - depth) if depth else 0
            net = ipaddress.ip_network((addr_int, depth)) if version == 4 else \
                ipaddress.ip_network((ipaddress.IPv6Address(addr_int), depth))
            yield net, node.value
        if node.zero is not None:
            yield from self._walk(node.zero, prefix << 1, depth + 1, version)
        if node.one is not None:
            yield from self._walk(node.one, (prefix << 1) | 1, depth + 1, version)

    def items(self) -> Iterator:
        """Yield (network, value) pairs for every stored prefix."""
        for version in (4, 6):
            yield from self._walk(self._roots[version], 0, 0, version)
