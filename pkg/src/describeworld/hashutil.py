"""Stable hashing helpers.

Everything that must be reproducible across runs and machines hashes through
here: goal/task identifiers, split assignment, seed derivation, config digests.
Python's builtin hash() is salted per process, so it is never used.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any


def stable_hash64(text: str) -> int:
    """64-bit unsigned hash of a unicode string."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def hash_hex(text: str) -> str:
    """The same 64-bit hash rendered as 16 hex chars (record ids)."""
    return f"{stable_hash64(text):016x}"


def derive_seed(*parts: Any) -> int:
    """Deterministic seed from heterogeneous parts (strings, ints)."""
    return stable_hash64("\x1f".join(str(p) for p in parts))


def config_digest(data: Any) -> str:
    """Digest of parsed config data; insensitive to comments and formatting."""
    canon = json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.blake2b(canon.encode("utf-8"), digest_size=8).hexdigest()
