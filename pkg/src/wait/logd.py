"""Transparency-log service: submission policy, renewal, proofs, heads.

The service core (`LogService`) is transport-free and takes an injected
clock so scenario tests can travel in time; `LogHTTPServer` exposes it
as the JSON-over-HTTP API, and `main` provides the `wait-logd` CLI.

Policy in one sentence: a developer key + app URL pair may hold at most
one unexpired promised digest at a time, new digests are admitted only
inside the clock-tolerance window before the active promise expires,
and every submission or renewal must carry a fresh signed timestamp.
"""

from __future__ import annotations

import argparse
import json
import sys
import threading
import time
from dataclasses import dataclass, replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Callable, Optional
from urllib.parse import parse_qs, urlsplit

from . import core, merklelog
from .errors import (
    ActivePromiseError,
    BadSignatureError,
    EncodingError,
    RangeError,
    StaleTimestampError,
    StorageError,
    UnknownLeafError,
    WaitError,
)

ENTRIES_PAGE_CAP = 1024

Clock = Callable[[], int]


def _wall_clock() -> int:
    return int(time.time())


# ---------------------------------------------------------------------------
# Requests and policy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogPolicy:
    promise_validity: int = 604_800  # 7 days
    clock_tolerance: int = 600
    freshness_window: int = 300
    enforce_single_active: bool = True

    def __post_init__(self):
        if self.clock_tolerance >= self.promise_validity:
            raise EncodingError("clock_tolerance must be below promise_validity")
        if self.freshness_window <= 0:
            raise EncodingError("freshness_window must be positive")


@dataclass(frozen=True)
class SubmissionRequest:
    leaf: core.ReleaseLeaf

    def to_obj(self) -> dict:
        return {"leaf": self.leaf.to_obj()}

    @classmethod
    def from_obj(cls, obj: dict) -> "SubmissionRequest":
        try:
            return cls(leaf=core.ReleaseLeaf.from_obj(obj["leaf"]))
        except KeyError as exc:
            raise EncodingError(f"submission missing field {exc}") from exc


@dataclass(frozen=True)
class RenewalRequest:
    leaf_hash: bytes
    developer_key: bytes
    renewed_at: int
    developer_signature: Optional[bytes] = None

    def signing_bytes(self) -> bytes:
        return core.canonical_json(
            {"leaf_hash": core.b64u_encode(self.leaf_hash), "renewed_at": self.renewed_at}
        )

    def signed(self, key: core.DeveloperKey) -> "RenewalRequest":
        if key.private is None:
            raise BadSignatureError("renewal signing requires a private key")
        return replace(
            self, developer_signature=core.sign(key.private, self.signing_bytes())
        )

    def verify_signature(self) -> bool:
        if self.developer_signature is None:
            return False
        return core.verify(
            self.developer_key, self.signing_bytes(), self.developer_signature
        )

    def to_obj(self) -> dict:
        if self.developer_signature is None:
            raise EncodingError("renewal request is unsigned")
        return {
            "developer_key": core.b64u_encode(self.developer_key),
            "developer_signature": core.b64u_encode(self.developer_signature),
            "leaf_hash": core.b64u_encode(self.leaf_hash),
            "renewed_at": self.renewed_at,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "RenewalRequest":
        try:
            return cls(
                leaf_hash=core.b64u_decode(obj["leaf_hash"]),
                developer_key=core.b64u_decode(obj["developer_key"]),
                renewed_at=int(obj["renewed_at"]),
                developer_signature=core.b64u_decode(obj["developer_signature"]),
            )
        except KeyError as exc:
            raise EncodingError(f"renewal missing field {exc}") from exc


# ---------------------------------------------------------------------------
# Service core
# ---------------------------------------------------------------------------

@dataclass
class _ActivePromise:
    digest_text: str
    expires_at: int


class LogService:
    """Policy-enforcing front of a MerkleLog.

    Writes (submit/renew) serialize through one lock; read handlers are
    lock-free and operate on the immutable prefix they capture.
    """

    def __init__(
        self,
        directory: str | Path,
        key: core.DeveloperKey,
        policy: LogPolicy | None = None,
        clock: Clock = _wall_clock,
        kill_hook=None,
    ):
        if key.private is None:
            raise BadSignatureError("log service requires its private key")
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.key = key
        self.log_id = core.sha256(key.public)
        self.policy = policy or LogPolicy()
        self.clock = clock
        self.log = merklelog.MerkleLog(self.directory / "log", kill_hook=kill_hook)
        self._journal_path = self.directory / "issued.promises"
        self._write_lock = threading.Lock()
        self._active: dict[tuple[bytes, str], _ActivePromise] = {}
        self._replay_journal()

    def _replay_journal(self) -> None:
        if not self._journal_path.exists():
            return
        for line in self._journal_path.read_bytes().splitlines():
            if not line:
                continue
            try:
                promise = core.decode_promise(line)
            except EncodingError:
                continue  # torn tail from a crash
            self._active[(promise.developer_key, promise.app_url)] = _ActivePromise(
                promise.digest.to_text(), promise.expires_at
            )

    def identity(self, base_url: str) -> core.LogIdentity:
        return core.LogIdentity.from_public(self.key.public, base_url)

    # -- write path --------------------------------------------------------

    def handle_submit(self, request: SubmissionRequest) -> core.InclusionPromise:
        now = self.clock()
        leaf = request.leaf
        if not leaf.verify_signature():
            raise BadSignatureError("developer signature does not verify")
        if abs(now - leaf.submitted_at) > self.policy.freshness_window:
            raise StaleTimestampError(
                f"submitted_at {leaf.submitted_at} outside ±{self.policy.freshness_window}s of server time {now}"
            )
        with self._write_lock:
            self._check_single_active(leaf.developer_key, leaf.app_url, leaf.digest, now)
            _, leaf_hash = self.log.append(leaf, appended_at=now)
            return self._mint(leaf, leaf_hash, now)

    def handle_renew(self, request: RenewalRequest) -> core.InclusionPromise:
        now = self.clock()
        record = self.log.find_leaf(request.leaf_hash)
        if record is None:
            raise UnknownLeafError("leaf_hash not present in this log")
        leaf = record.leaf
        if request.developer_key != leaf.developer_key:
            raise BadSignatureError("renewal key does not match the logged leaf")
        if not request.verify_signature():
            raise BadSignatureError("renewal signature does not verify")
        if abs(now - request.renewed_at) > self.policy.freshness_window:
            raise StaleTimestampError(
                f"renewed_at {request.renewed_at} outside ±{self.policy.freshness_window}s of server time {now}"
            )
        with self._write_lock:
            self._check_single_active(leaf.developer_key, leaf.app_url, leaf.digest, now)
            return self._mint(leaf, request.leaf_hash, now)

    def _check_single_active(
        self, developer_key: bytes, app_url: str, digest: core.Digest, now: int
    ) -> None:
        if not self.policy.enforce_single_active:
            return
        active = self._active.get((developer_key, app_url))
        if active is None or active.digest_text == digest.to_text():
            return
        rollover_opens = active.expires_at - self.policy.clock_tolerance
        if now < rollover_opens and now < active.expires_at:
            raise ActivePromiseError(
                f"an unexpired promise for a different digest is active until {active.expires_at}"
            )

    def _mint(self, leaf: core.ReleaseLeaf, leaf_hash: bytes, now: int) -> core.InclusionPromise:
        promise = core.InclusionPromise(
            log_id=self.log_id,
            leaf_hash=leaf_hash,
            app_url=leaf.app_url,
            digest=leaf.digest,
            developer_key=leaf.developer_key,
            issued_at=now,
            expires_at=now + self.policy.promise_validity,
        ).signed(self.key.private)
        try:
            with open(self._journal_path, "ab") as fh:
                fh.write(core.canonical_encode(promise) + b"\n")
        except OSError as exc:
            raise StorageError(f"issuance journal write failed: {exc}") from exc
        self._active[(leaf.developer_key, leaf.app_url)] = _ActivePromise(
            leaf.digest.to_text(), promise.expires_at
        )
        return promise

    # -- read path ----------------------------------------------------------

    def handle_sth(self) -> core.SignedTreeHead:
        size = self.log.size
        return core.SignedTreeHead(
            log_id=self.log_id,
            tree_size=size,
            root_hash=self.log.root_at(size),
            timestamp=self.clock(),
        ).signed(self.key.private)

    def handle_inclusion_proof(self, leaf_hash: bytes, tree_size: int) -> merklelog.InclusionProof:
        record = self.log.find_leaf(leaf_hash)
        if record is None:
            raise UnknownLeafError("leaf_hash not present in this log")
        if not record.index < tree_size <= self.log.size:
            raise RangeError(
                f"tree_size {tree_size} invalid for leaf index {record.index} (log size {self.log.size})"
            )
        return self.log.prove_inclusion(record.index, tree_size)

    def handle_consistency(self, old_size: int, new_size: int) -> merklelog.ConsistencyProof:
        return self.log.prove_consistency(old_size, new_size)

    def handle_entries(self, start: int, end: int) -> list[merklelog.LogRecord]:
        if start < 0 or end < start or end > self.log.size:
            raise RangeError(f"entries range [{start}, {end}) invalid for size {self.log.size}")
        return self.log.entries(start, min(end, start + ENTRIES_PAGE_CAP))

    def close(self) -> None:
        self.log.close()


# ---------------------------------------------------------------------------
# HTTP surface
# ---------------------------------------------------------------------------

_STATUS_BY_CODE = {
    "ERR_ACTIVE_PROMISE": 409,
    "ERR_UNKNOWN_LEAF": 404,
    "ERR_BAD_SIGNATURE": 400,
    "ERR_STALE_TIMESTAMP": 400,
    "ERR_RANGE": 400,
    "ERR_ENCODING": 400,
}


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    service: LogService  # set by the server factory

    def log_message(self, fmt, *args):  # silence default stderr chatter
        pass

    def _send_json(self, status: int, payload: dict | list) -> None:
        body = core.canonical_json(payload)
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_obj(self, exc: WaitError) -> None:
        status = _STATUS_BY_CODE.get(exc.code, 500)
        self._send_json(status, {"code": exc.code, "message": exc.message})

    def _read_body_obj(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length)
        try:
            obj = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise EncodingError(f"request body is not valid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise EncodingError("request body must be a JSON object")
        return obj

    def do_POST(self):
        path = urlsplit(self.path).path
        try:
            if path == "/wait/v1/submit":
                request = SubmissionRequest.from_obj(self._read_body_obj())
                promise = self.service.handle_submit(request)
                self._send_json(200, promise.to_obj())
            elif path == "/wait/v1/renew":
                request = RenewalRequest.from_obj(self._read_body_obj())
                promise = self.service.handle_renew(request)
                self._send_json(200, promise.to_obj())
            else:
                self._send_json(404, {"code": "ERR_NOT_FOUND", "message": path})
        except WaitError as exc:
            self._send_error_obj(exc)

    def do_GET(self):
        parts = urlsplit(self.path)
        query = {k: v[0] for k, v in parse_qs(parts.query).items()}
        try:
            if parts.path == "/wait/v1/sth":
                self._send_json(200, self.service.handle_sth().to_obj())
            elif parts.path == "/wait/v1/proof":
                leaf_hash = core.b64u_decode(query.get("leaf_hash", ""))
                tree_size = _int_param(query, "tree_size")
                proof = self.service.handle_inclusion_proof(leaf_hash, tree_size)
                self._send_json(200, proof.to_obj())
            elif parts.path == "/wait/v1/consistency":
                proof = self.service.handle_consistency(
                    _int_param(query, "old"), _int_param(query, "new")
                )
                self._send_json(200, proof.to_obj())
            elif parts.path == "/wait/v1/entries":
                records = self.service.handle_entries(
                    _int_param(query, "start"), _int_param(query, "end")
                )
                self._send_json(200, {"entries": [r.to_obj() for r in records]})
            else:
                self._send_json(404, {"code": "ERR_NOT_FOUND", "message": parts.path})
        except WaitError as exc:
            self._send_error_obj(exc)


def _int_param(query: dict, name: str) -> int:
    try:
        return int(query[name])
    except KeyError as exc:
        raise RangeError(f"missing query parameter {name}") from exc
    except ValueError as exc:
        raise RangeError(f"query parameter {name} must be an integer") from exc


class LogHTTPServer:
    """Threaded HTTP wrapper; bind to port 0 for an ephemeral port."""

    def __init__(self, service: LogService, host: str = "127.0.0.1", port: int = 0):
        handler = type("BoundHandler", (_Handler,), {"service": service})
        self._httpd = ThreadingHTTPServer((host, port), handler)
        self._thread: Optional[threading.Thread] = None
        self.service = service

    @property
    def base_url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def identity(self) -> core.LogIdentity:
        return self.service.identity(self.base_url)

    def start(self) -> "LogHTTPServer":
        self._thread = threading.Thread(
            target=lambda: self._httpd.serve_forever(poll_interval=0.05), daemon=True
        )
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)


# ---------------------------------------------------------------------------
# Config + CLI
# ---------------------------------------------------------------------------

def parse_config(path: str | Path) -> dict[str, str]:
    """Flat `key = value` lines; '#' starts a comment."""
    values: dict[str, str] = {}
    for raw in Path(path).read_text("utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise EncodingError(f"bad config line: {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def load_key_file(path: str | Path) -> core.DeveloperKey:
    return core.DeveloperKey.from_obj(json.loads(Path(path).read_text("utf-8")))


def write_key_file(path: str | Path, key: core.DeveloperKey) -> None:
    data = core.canonical_json(key.to_obj(include_private=True))
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_bytes(data + b"\n")
    p.chmod(0o600)


def policy_from_config(cfg: dict[str, str]) -> LogPolicy:
    return LogPolicy(
        promise_validity=int(cfg.get("promise_validity", 604_800)),
        clock_tolerance=int(cfg.get("clock_tolerance", 600)),
        freshness_window=int(cfg.get("freshness_window", 300)),
        enforce_single_active=cfg.get("enforce_single_active", "true").lower()
        not in ("false", "0", "no"),
    )


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="wait-logd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    keygen = sub.add_parser("keygen", help="generate a log signing key")
    keygen.add_argument("--out", required=True, help="key file path")

    serve = sub.add_parser("serve", help="run the log service")
    serve.add_argument("--config", required=True, help="key=value config file")

    args = parser.parse_args(argv)
    if args.command == "keygen":
        key = core.generate_keypair()
        write_key_file(args.out, key)
        print(f"log_id: {core.sha256(key.public).hex()}")
        print(f"public: {core.b64u_encode(key.public)}")
        return 0

    cfg = parse_config(args.config)
    key = load_key_file(cfg["key_file"])
    host, _, port = cfg.get("listen", "127.0.0.1:8467").partition(":")
    service = LogService(
        cfg.get("storage_dir", "wait-log-data"), key, policy_from_config(cfg)
    )
    server = LogHTTPServer(service, host=host, port=int(port or 0))
    print(f"wait-logd listening on {server.base_url}")
    print(f"log_id: {service.log_id.hex()}")
    try:
        server.start()
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
        service.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
