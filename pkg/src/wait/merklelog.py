"""Append-only Merkle tree over release leaves, with proofs and storage.

Hashing uses 0x00/0x01 domain separation for leaves/interior nodes and
the recursive split at the largest power of two strictly below n, so
heads and proofs match the Certificate Transparency construction.

Persistence is an append-only file of canonical-JSON records (one per
line) plus a sidecar leaf-hash index that is rebuilt on startup when
missing or inconsistent. A record is durable (flush + fsync) before an
append is acknowledged.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from . import core
from .errors import EncodingError, RangeError, StorageError

LEAF_PREFIX = b"\x00"
NODE_PREFIX = b"\x01"

#: Head of the empty tree: SHA-256 of the empty byte sequence.
EMPTY_ROOT = core.sha256(b"")


def leaf_hash(leaf_bytes: bytes) -> bytes:
    """SHA-256(0x00 || leaf_bytes)."""
    return core.sha256(LEAF_PREFIX + leaf_bytes)


def node_hash(left: bytes, right: bytes) -> bytes:
    """SHA-256(0x01 || left || right)."""
    return core.sha256(NODE_PREFIX + left + right)


def _largest_pow2_below(n: int) -> int:
    """Largest power of two strictly less than n (n >= 2)."""
    return 1 << (n - 1).bit_length() - 1


# ---------------------------------------------------------------------------
# Proof types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InclusionProof:
    leaf_index: int
    tree_size: int
    path: tuple[bytes, ...]

    def to_obj(self) -> dict:
        return {
            "leaf_index": self.leaf_index,
            "path": [core.b64u_encode(h) for h in self.path],
            "tree_size": self.tree_size,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "InclusionProof":
        proof = cls(
            leaf_index=obj["leaf_index"],
            tree_size=obj["tree_size"],
            path=tuple(core.b64u_decode(h) for h in obj["path"]),
        )
        if not 0 <= proof.leaf_index < proof.tree_size:
            raise EncodingError("inclusion proof requires 0 <= leaf_index < tree_size")
        return proof


@dataclass(frozen=True)
class ConsistencyProof:
    old_size: int
    new_size: int
    path: tuple[bytes, ...]

    def to_obj(self) -> dict:
        return {
            "new_size": self.new_size,
            "old_size": self.old_size,
            "path": [core.b64u_encode(h) for h in self.path],
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "ConsistencyProof":
        proof = cls(
            old_size=obj["old_size"],
            new_size=obj["new_size"],
            path=tuple(core.b64u_decode(h) for h in obj["path"]),
        )
        if not 0 <= proof.old_size <= proof.new_size:
            raise EncodingError("consistency proof requires 0 <= old_size <= new_size")
        return proof


@dataclass(frozen=True)
class LogRecord:
    index: int
    leaf: core.ReleaseLeaf
    leaf_hash: bytes
    appended_at: int

    def to_obj(self) -> dict:
        return {
            "appended_at": self.appended_at,
            "index": self.index,
            "leaf": self.leaf.to_obj(),
            "leaf_hash": core.b64u_encode(self.leaf_hash),
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "LogRecord":
        return cls(
            index=obj["index"],
            leaf=core.ReleaseLeaf.from_obj(obj["leaf"]),
            leaf_hash=core.b64u_decode(obj["leaf_hash"]),
            appended_at=obj["appended_at"],
        )


# ---------------------------------------------------------------------------
# Client-side proof verification (pure)
# ---------------------------------------------------------------------------

def verify_inclusion(leaf: bytes, proof: InclusionProof, expected_root: bytes) -> bool:
    """True iff recomputing the root from ``leaf`` along the path matches."""
    fn = proof.leaf_index
    sn = proof.tree_size - 1
    if not 0 <= fn <= sn:
        return False
    r = leaf
    for p in proof.path:
        if sn == 0:
            return False
        if fn & 1 or fn == sn:
            r = node_hash(p, r)
            if not fn & 1:
                while fn != 0 and not fn & 1:
                    fn >>= 1
                    sn >>= 1
        else:
            r = node_hash(r, p)
        fn >>= 1
        sn >>= 1
    return sn == 0 and r == expected_root


def verify_consistency(old_root: bytes, new_root: bytes, proof: ConsistencyProof) -> bool:
    """True iff ``old_root`` is provably the head of a prefix of ``new_root``'s tree."""
    old_size, new_size = proof.old_size, proof.new_size
    if old_size > new_size or old_size < 0:
        return False
    if old_size == new_size:
        return not proof.path and old_root == new_root
    if old_size == 0:
        # The empty tree is a prefix of everything; no proof material needed.
        return not proof.path
    path = list(proof.path)
    if old_size & (old_size - 1) == 0:
        # old tree is a complete subtree; its root is the implicit first node
        path = [old_root] + path
    if not path:
        return False
    fn = old_size - 1
    sn = new_size - 1
    while fn & 1:
        fn >>= 1
        sn >>= 1
    fr = sr = path[0]
    if fn == 0 and fr != old_root:
        return False
    for c in path[1:]:
        if sn == 0:
            return False
        if fn & 1 or fn == sn:
            fr = node_hash(c, fr)
            sr = node_hash(c, sr)
            if not fn & 1:
                while fn != 0 and not fn & 1:
                    fn >>= 1
                    sn >>= 1
        else:
            sr = node_hash(sr, c)
        fn >>= 1
        sn >>= 1
    return sn == 0 and fr == old_root and sr == new_root


# ---------------------------------------------------------------------------
# In-memory tree
# ---------------------------------------------------------------------------

class MerkleTree:
    """Merkle tree over an append-only sequence of leaf hashes.

    Roots at every historical size remain reachable: interior hashes are
    memoized by (lo, hi) range and ranges never change once computed.
    """

    def __init__(self):
        self._hashes: list[bytes] = []
        self._node_cache: dict[tuple[int, int], bytes] = {}

    @property
    def size(self) -> int:
        return len(self._hashes)

    def leaf_hash_at(self, index: int) -> bytes:
        if not 0 <= index < self.size:
            raise RangeError(f"leaf index {index} out of range")
        return self._hashes[index]

    def append_leaf_bytes(self, leaf_bytes: bytes) -> tuple[int, bytes]:
        return self.append_hash(leaf_hash(leaf_bytes))

    def append_hash(self, h: bytes) -> tuple[int, bytes]:
        self._hashes.append(h)
        return len(self._hashes) - 1, h

    def _mth(self, lo: int, hi: int) -> bytes:
        """Head over leaves [lo, hi)."""
        n = hi - lo
        if n == 0:
            return EMPTY_ROOT
        if n == 1:
            return self._hashes[lo]
        cached = self._node_cache.get((lo, hi))
        if cached is not None:
            return cached
        k = _largest_pow2_below(n)
        value = node_hash(self._mth(lo, lo + k), self._mth(lo + k, hi))
        self._node_cache[(lo, hi)] = value
        return value

    def root_at(self, size: int) -> bytes:
        if not 0 <= size <= self.size:
            raise RangeError(f"size {size} out of range (current {self.size})")
        return self._mth(0, size)

    def root(self) -> bytes:
        return self.root_at(self.size)

    def prove_inclusion(self, index: int, size: int) -> InclusionProof:
        if not 0 <= index < size <= self.size:
            raise RangeError(f"inclusion proof range invalid: index={index} size={size}")
        return InclusionProof(
            leaf_index=index, tree_size=size, path=tuple(self._audit_path(index, 0, size))
        )

    def _audit_path(self, m: int, lo: int, hi: int) -> list[bytes]:
        n = hi - lo
        if n == 1:
            return []
        k = _largest_pow2_below(n)
        if m < lo + k:
            return self._audit_path(m, lo, lo + k) + [self._mth(lo + k, hi)]
        return self._audit_path(m, lo + k, hi) + [self._mth(lo, lo + k)]

    def prove_consistency(self, old_size: int, new_size: int) -> ConsistencyProof:
        if not 0 <= old_size <= new_size <= self.size:
            raise RangeError(
                f"consistency range invalid: old={old_size} new={new_size}"
            )
        if old_size == new_size or old_size == 0:
            path: tuple[bytes, ...] = ()
        else:
            path = tuple(self._subproof(old_size, 0, new_size, True))
        return ConsistencyProof(old_size=old_size, new_size=new_size, path=path)

    def _subproof(self, m: int, lo: int, hi: int, complete: bool) -> list[bytes]:
        if m == hi:
            return [] if complete else [self._mth(lo, hi)]
        k = _largest_pow2_below(hi - lo)
        if m <= lo + k:
            return self._subproof(m, lo, lo + k, complete) + [self._mth(lo + k, hi)]
        return self._subproof(m, lo + k, hi, False) + [self._mth(lo, lo + k)]


# ---------------------------------------------------------------------------
# Durable storage
# ---------------------------------------------------------------------------

class SimulatedCrash(Exception):
    """Raised by test kill hooks to abort an append mid-flight."""


class LogStorage:
    """Append-only record file with recovery of a torn final line.

    ``kill_hook(point)`` is a test seam; outside tests it is never set.
    """

    RECORDS_NAME = "log.records"
    INDEX_NAME = "log.index.json"

    def __init__(self, directory: str | Path, kill_hook: Optional[Callable[[str], None]] = None):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.records_path = self.directory / self.RECORDS_NAME
        self.index_path = self.directory / self.INDEX_NAME
        self._kill_hook = kill_hook
        self._fh = None

    def _kill(self, point: str) -> None:
        if self._kill_hook is not None:
            self._kill_hook(point)

    def load_records(self) -> list[LogRecord]:
        """Read all records, truncating a torn final line left by a crash."""
        if not self.records_path.exists():
            return []
        records: list[LogRecord] = []
        good_offset = 0
        with open(self.records_path, "rb") as fh:
            data = fh.read()
        offset = 0
        for line in data.split(b"\n"):
            if not line:
                offset += 1
                continue
            end = offset + len(line)
            if end >= len(data) or data[end] != 0x0A:
                break  # torn tail: no terminating newline
            try:
                obj = json.loads(line.decode("utf-8"))
                record = LogRecord.from_obj(obj)
            except (ValueError, EncodingError, KeyError):
                break  # torn or corrupt tail
            if record.index != len(records):
                break
            records.append(record)
            good_offset = end + 1
            offset = end + 1
        if good_offset < len(data):
            with open(self.records_path, "r+b") as fh:
                fh.truncate(good_offset)
        return records

    def append_record(self, record: LogRecord) -> None:
        line = core.canonical_json(record.to_obj()) + b"\n"
        try:
            if self._fh is None:
                self._fh = open(self.records_path, "ab")
            self._kill("before_write")
            mid = len(line) // 2
            self._fh.write(line[:mid])
            self._kill("partial_write")
            self._fh.write(line[mid:])
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self._kill("before_ack")
        except SimulatedCrash:
            raise
        except OSError as exc:
            raise StorageError(f"append failed: {exc}") from exc

    def load_index(self, expected_size: int) -> Optional[dict[str, int]]:
        """Sidecar index if present and plausibly consistent, else None."""
        if not self.index_path.exists():
            return None
        try:
            obj = json.loads(self.index_path.read_text("utf-8"))
        except (OSError, ValueError):
            return None
        if not isinstance(obj, dict) or len(obj) != expected_size:
            return None
        return {str(k): int(v) for k, v in obj.items()}

    def save_index(self, index: dict[str, int]) -> None:
        tmp = self.index_path.with_suffix(".json.tmp")
        try:
            tmp.write_bytes(core.canonical_json(index))
            tmp.replace(self.index_path)
        except OSError as exc:
            raise StorageError(f"index write failed: {exc}") from exc

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


# ---------------------------------------------------------------------------
# The log
# ---------------------------------------------------------------------------

class MerkleLog:
    """Persistent append-only log of release leaves.

    Appends are serialized by an internal lock (their order defines leaf
    indices); reads work on immutable prefixes and need no locking.
    """

    def __init__(self, directory: str | Path, kill_hook: Optional[Callable[[str], None]] = None):
        self.storage = LogStorage(directory, kill_hook=kill_hook)
        self.tree = MerkleTree()
        self._records: list[LogRecord] = []
        self._by_hash: dict[bytes, int] = {}
        self._append_lock = threading.Lock()
        for record in self.storage.load_records():
            self.tree.append_hash(record.leaf_hash)
            self._records.append(record)
            self._by_hash[record.leaf_hash] = record.index
        index = self.storage.load_index(len(self._records))
        if index is None and self._records:
            self.storage.save_index(
                {core.b64u_encode(r.leaf_hash): r.index for r in self._records}
            )

    @property
    def size(self) -> int:
        return len(self._records)

    def append(self, leaf: core.ReleaseLeaf, appended_at: int) -> tuple[int, bytes]:
        """Durably append a leaf; returns (index, leaf_hash).

        The leaf's developer signature must already have been verified by
        the caller. On storage failure the tree state is unchanged.
        """
        if not leaf.verify_signature():
            raise EncodingError("refusing to append leaf with invalid signature")
        leaf_bytes = core.canonical_encode(leaf)
        h = leaf_hash(leaf_bytes)
        with self._append_lock:
            existing = self._by_hash.get(h)
            if existing is not None:
                return existing, h
            record = LogRecord(
                index=self.size, leaf=leaf, leaf_hash=h, appended_at=appended_at
            )
            self.storage.append_record(record)
            self.tree.append_hash(h)
            self._records.append(record)
            self._by_hash[h] = record.index
            return record.index, h

    def find_leaf(self, h: bytes) -> Optional[LogRecord]:
        index = self._by_hash.get(h)
        return self._records[index] if index is not None else None

    def record_at(self, index: int) -> LogRecord:
        if not 0 <= index < self.size:
            raise RangeError(f"record index {index} out of range")
        return self._records[index]

    def entries(self, start: int, end: int) -> list[LogRecord]:
        """Records with index in [start, end); end exclusive."""
        if start < 0 or end < start or end > self.size:
            raise RangeError(f"entries range [{start}, {end}) invalid for size {self.size}")
        return self._records[start:end]

    def root_at(self, size: int) -> bytes:
        return self.tree.root_at(size)

    def root(self) -> bytes:
        return self.tree.root()

    def prove_inclusion(self, index: int, size: int) -> InclusionProof:
        return self.tree.prove_inclusion(index, size)

    def prove_consistency(self, old_size: int, new_size: int) -> ConsistencyProof:
        return self.tree.prove_consistency(old_size, new_size)

    def save_index(self) -> None:
        self.storage.save_index(
            {core.b64u_encode(r.leaf_hash): r.index for r in self._records}
        )

    def close(self) -> None:
        self.save_index()
        self.storage.close()
