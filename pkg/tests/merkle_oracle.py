"""Brute-force reference for tree heads and proofs.

Recomputes everything from scratch by slicing the full leaf list at
every recursion step, exactly following the recursive definitions. No
caching and no code shared with the implementation under test.
"""

from __future__ import annotations

import hashlib


def _h(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def _split(n: int) -> int:
    """Largest power of two strictly below n (n >= 2)."""
    k = 1
    while k * 2 < n:
        k *= 2
    return k


def head(leaves: list[bytes]) -> bytes:
    """Tree head over raw leaf inputs."""
    n = len(leaves)
    if n == 0:
        return _h(b"")
    if n == 1:
        return _h(b"\x00" + leaves[0])
    k = _split(n)
    return _h(b"\x01" + head(leaves[:k]) + head(leaves[k:]))


def audit_path(m: int, leaves: list[bytes]) -> list[bytes]:
    """Sibling hashes proving leaf m within the tree over ``leaves``."""
    n = len(leaves)
    assert 0 <= m < n
    if n == 1:
        return []
    k = _split(n)
    if m < k:
        return audit_path(m, leaves[:k]) + [head(leaves[k:])]
    return audit_path(m - k, leaves[k:]) + [head(leaves[:k])]


def consistency_path(m: int, leaves: list[bytes]) -> list[bytes]:
    """Proof that the head over leaves[:m] is a prefix of the full head."""
    assert 0 <= m <= len(leaves)
    if m == 0 or m == len(leaves):
        return []
    return _subproof(m, leaves, True)


def _subproof(m: int, leaves: list[bytes], complete: bool) -> list[bytes]:
    n = len(leaves)
    if m == n:
        return [] if complete else [head(leaves)]
    k = _split(n)
    if m <= k:
        return _subproof(m, leaves[:k], complete) + [head(leaves[k:])]
    return _subproof(m - k, leaves[k:], False) + [head(leaves[:k])]
