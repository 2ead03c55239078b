"""HMAC-based one-time passwords (RFC 4226).

HMAC-SHA-1 over the big-endian counter, dynamic truncation, modulo
10^digits, zero-padded.  Verified against all ten Appendix D vectors.
"""

from __future__ import annotations

import hashlib
import hmac
import struct


def hotp(secret: bytes, counter: int, digits: int = 6) -> str:
    """Decimal code for one counter value."""
    if len(secret) < 16:
        raise ValueError("HOTP secret must be at least 16 bytes")
    if not 0 <= counter < 2 ** 64:
        raise ValueError("counter must fit an unsigned 64-bit integer")
    digest = hmac.new(secret, struct.pack(">Q", counter), hashlib.sha1).digest()
    offset = digest[-1] & 0x0F
    code = ((digest[offset] & 0x7F) << 24
            | digest[offset + 1] << 16
            | digest[offset + 2] << 8
            | digest[offset + 3])
    return str(code % 10 ** digits).zfill(digits)
