"""Auditor: track signed tree heads, prove append-only growth, raise alerts.

Each poll fetches the current head, verifies its signature, checks a
consistency proof against the previously recorded head, and scans the
new entries against watch rules. A failed consistency check marks the
log SUSPECT and retains both heads as non-repudiable evidence; the log
is never silently trusted again.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import core, merklelog
from .errors import EncodingError, UnknownLeafError, LogRejectedError
from .logclient import LogClient


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WatchRule:
    kind: str  # developer_key | app_url
    value: bytes | str
    label: str

    def __post_init__(self):
        if self.kind not in ("developer_key", "app_url"):
            raise EncodingError(f"unknown watch rule kind: {self.kind}")
        if self.kind == "developer_key" and (
            not isinstance(self.value, bytes) or len(self.value) != 32
        ):
            raise EncodingError("developer_key rule value must be 32 bytes")
        if self.kind == "app_url" and not isinstance(self.value, str):
            raise EncodingError("app_url rule value must be a URL string")

    def matches(self, leaf: core.ReleaseLeaf) -> bool:
        if self.kind == "developer_key":
            return leaf.developer_key == self.value
        return core.normalize_app_url(leaf.app_url) == core.normalize_app_url(str(self.value))

    def to_obj(self) -> dict:
        value = core.b64u_encode(self.value) if isinstance(self.value, bytes) else self.value
        return {"kind": self.kind, "label": self.label, "value": value}

    @classmethod
    def from_obj(cls, obj: dict) -> "WatchRule":
        kind = obj["kind"]
        value = core.b64u_decode(obj["value"]) if kind == "developer_key" else obj["value"]
        return cls(kind=kind, value=value, label=obj.get("label", kind))


@dataclass(frozen=True)
class Alert:
    kind: str  # release | equivocation
    rule_label: str
    log_id: bytes
    raised_at: int
    leaf_index: Optional[int] = None
    app_url: Optional[str] = None
    digest: Optional[str] = None
    developer_key: Optional[str] = None
    detail: str = ""

    def to_obj(self) -> dict:
        obj = {
            "kind": self.kind,
            "log_id": core.b64u_encode(self.log_id),
            "raised_at": self.raised_at,
            "rule_label": self.rule_label,
        }
        if self.leaf_index is not None:
            obj["leaf_index"] = self.leaf_index
        if self.app_url is not None:
            obj["app_url"] = self.app_url
        if self.digest is not None:
            obj["digest"] = self.digest
        if self.developer_key is not None:
            obj["developer_key"] = self.developer_key
        if self.detail:
            obj["detail"] = self.detail
        return obj


@dataclass
class SthRecord:
    sth: core.SignedTreeHead
    fetched_at: int
    verified_against_prev: bool

    def to_obj(self) -> dict:
        return {
            "fetched_at": self.fetched_at,
            "sth": self.sth.to_obj(),
            "verified_against_prev": self.verified_against_prev,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "SthRecord":
        return cls(
            sth=core.SignedTreeHead.from_obj(obj["sth"]),
            fetched_at=obj["fetched_at"],
            verified_against_prev=obj["verified_against_prev"],
        )


@dataclass
class MonitorState:
    log_id: bytes
    records: list[SthRecord] = field(default_factory=list)
    suspect: bool = False
    evidence: list[dict] = field(default_factory=list)

    @property
    def last(self) -> Optional[SthRecord]:
        return self.records[-1] if self.records else None

    def to_obj(self) -> dict:
        return {
            "evidence": self.evidence,
            "log_id": core.b64u_encode(self.log_id),
            "records": [r.to_obj() for r in self.records],
            "suspect": self.suspect,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "MonitorState":
        return cls(
            log_id=core.b64u_decode(obj["log_id"]),
            records=[SthRecord.from_obj(r) for r in obj.get("records", [])],
            suspect=obj.get("suspect", False),
            evidence=list(obj.get("evidence", [])),
        )

    @classmethod
    def load(cls, state_dir: str | Path, log_id: bytes) -> "MonitorState":
        path = Path(state_dir) / f"{log_id.hex()}.json"
        if not path.exists():
            return cls(log_id=log_id)
        return cls.from_obj(json.loads(path.read_text("utf-8")))

    def save(self, state_dir: str | Path) -> None:
        state_dir = Path(state_dir)
        state_dir.mkdir(parents=True, exist_ok=True)
        path = state_dir / f"{self.log_id.hex()}.json"
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(core.canonical_json(self.to_obj()) + b"\n")
        tmp.replace(path)


# ---------------------------------------------------------------------------
# Polling
# ---------------------------------------------------------------------------

def poll(
    log: core.LogIdentity,
    state: MonitorState,
    rules: list[WatchRule],
    now: Optional[int] = None,
    client: Optional[LogClient] = None,
) -> tuple[MonitorState, list[Alert]]:
    """One monitoring round; network errors propagate with state unchanged."""
    client = client or LogClient(log.base_url)
    now = int(time.time()) if now is None else now
    alerts: list[Alert] = []

    sth = client.sth()
    consistent = True
    detail = ""
    if not sth.verify_signature(log.public) or sth.log_id != log.log_id:
        consistent = False
        detail = "tree head signature does not verify under the trusted log key"
    previous = state.last
    if consistent and previous is not None:
        prev_sth = previous.sth
        if sth.tree_size < prev_sth.tree_size:
            consistent = False
            detail = f"tree shrank from {prev_sth.tree_size} to {sth.tree_size}"
        else:
            proof = client.consistency(prev_sth.tree_size, sth.tree_size)
            if not merklelog.verify_consistency(prev_sth.root_hash, sth.root_hash, proof):
                consistent = False
                detail = (
                    f"consistency proof {prev_sth.tree_size}->{sth.tree_size} failed"
                )

    if not consistent:
        state.suspect = True
        state.evidence.append(
            {
                "detail": detail,
                "new": sth.to_obj() if sth.log_signature else None,
                "previous": previous.sth.to_obj() if previous else None,
            }
        )
        alerts.append(
            Alert(
                kind="equivocation",
                rule_label="append-only",
                log_id=log.log_id,
                raised_at=now,
                detail=detail,
            )
        )
        state.records.append(SthRecord(sth=sth, fetched_at=now, verified_against_prev=False))
        return state, alerts

    old_size = previous.sth.tree_size if previous else 0
    start = old_size
    while start < sth.tree_size:
        batch = client.entries(start, sth.tree_size)
        if not batch:
            break
        for record in batch:
            for rule in rules:
                if rule.matches(record.leaf):
                    alerts.append(
                        Alert(
                            kind="release",
                            rule_label=rule.label,
                            log_id=log.log_id,
                            raised_at=now,
                            leaf_index=record.index,
                            app_url=record.leaf.app_url,
                            digest=record.leaf.digest.to_text(),
                            developer_key=core.b64u_encode(record.leaf.developer_key),
                        )
                    )
        start = batch[-1].index + 1

    state.records.append(SthRecord(sth=sth, fetched_at=now, verified_against_prev=True))
    return state, alerts


def audit_release(
    log: core.LogIdentity, leaf_hash: bytes, client: Optional[LogClient] = None
) -> dict:
    """Full audit of one logged release: inclusion, head, developer signature."""
    client = client or LogClient(log.base_url)
    sth = client.sth()
    try:
        proof = client.inclusion_proof(leaf_hash, sth.tree_size)
    except LogRejectedError as exc:
        if exc.rejection_code == "ERR_UNKNOWN_LEAF":
            raise UnknownLeafError(exc.message) from exc
        raise
    records = client.entries(proof.leaf_index, proof.leaf_index + 1)
    record = records[0]
    return {
        "leaf": record.leaf.to_obj(),
        "leaf_index": proof.leaf_index,
        "tree_size": sth.tree_size,
        "checks": {
            "sth_signature": sth.verify_signature(log.public),
            "inclusion_proof": merklelog.verify_inclusion(leaf_hash, proof, sth.root_hash),
            "developer_signature": record.leaf.verify_signature()
            and record.leaf_hash == merklelog.leaf_hash(core.canonical_encode(record.leaf)),
        },
    }


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def load_rules_file(path: str | Path) -> list[WatchRule]:
    data = json.loads(Path(path).read_text("utf-8"))
    return [WatchRule.from_obj(obj) for obj in data]


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="wait-monitor", description=__doc__)
    parser.add_argument("--logs", required=True, help="JSON array of log identities")
    parser.add_argument("--watch", help="JSON array of watch rules")
    parser.add_argument("--state", required=True, help="state directory")
    parser.add_argument("--once", action="store_true", help="single polling round")
    parser.add_argument("--interval", type=int, default=60, help="poll interval seconds")
    parser.add_argument("--audit", help="audit one release by base64url leaf hash")
    args = parser.parse_args(argv)

    from .bundler import load_logs_file

    logs = load_logs_file(args.logs)
    rules = load_rules_file(args.watch) if args.watch else []

    if args.audit:
        leaf_hash = core.b64u_decode(args.audit)
        for log in logs:
            report = audit_release(log, leaf_hash)
            print(core.canonical_json({"log": log.to_obj(), "report": report}).decode())
        return 0

    while True:
        for log in logs:
            state = MonitorState.load(args.state, log.log_id)
            state, alerts = poll(log, state, rules)
            state.save(args.state)
            for alert in alerts:
                print(core.canonical_json(alert.to_obj()).decode())
        if args.once:
            return 0
        time.sleep(args.interval)


if __name__ == "__main__":
    sys.exit(main())
