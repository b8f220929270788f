"""Canonical data model and crypto primitives for the WAIT ecosystem.

Everything here is pure: no I/O, no clock reads. Records have one
byte-deterministic wire form (canonical JSON: UTF-8, lexicographically
sorted keys, no insignificant whitespace, decimal integers, byte fields
as unpadded base64url). Signatures always cover the canonical encoding
of a record with its signature field removed entirely, never set to an
empty placeholder.
"""

from __future__ import annotations

import hashlib
import ipaddress
import json
import re
from dataclasses import dataclass, replace
from typing import Any, Optional
from urllib.parse import urlsplit

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .errors import BadKeyError, EncodingError, HeaderSyntaxError, UrlError

PROMISE_VERSION = 1
PROMISE_HEADER = "X-WAIT-Inclusion-Promise"
DEVELOPER_KEY_META = "wait-developer-key"

_B64U_RE = re.compile(r"^[A-Za-z0-9_-]*$")
_HEX64_RE = re.compile(r"^[0-9a-f]{64}$")


# ---------------------------------------------------------------------------
# Encoding helpers
# ---------------------------------------------------------------------------

def b64u_encode(data: bytes) -> str:
    """Unpadded base64url."""
    import base64

    return base64.urlsafe_b64encode(data).decode("ascii").rstrip("=")


def b64u_decode(text: str) -> bytes:
    """Strict inverse of :func:`b64u_encode`; rejects any non-canonical form."""
    import base64

    if not isinstance(text, str) or not _B64U_RE.match(text):
        raise EncodingError("invalid base64url characters")
    pad = -len(text) % 4
    if pad == 3:
        raise EncodingError("invalid base64url length")
    raw = base64.urlsafe_b64decode(text + "=" * pad)
    if b64u_encode(raw) != text:
        raise EncodingError("non-canonical base64url encoding")
    return raw


def canonical_json(obj: Any) -> bytes:
    """Canonical JSON bytes: sorted keys, compact separators, UTF-8."""
    try:
        return json.dumps(
            obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False
        ).encode("utf-8")
    except (TypeError, ValueError) as exc:
        raise EncodingError(f"not canonically encodable: {exc}") from exc


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def sha384(data: bytes) -> bytes:
    return hashlib.sha384(data).digest()


def _require_bytes(name: str, value: bytes, length: int) -> None:
    if not isinstance(value, bytes) or len(value) != length:
        raise EncodingError(f"{name} must be exactly {length} bytes")


def _require_timestamp(name: str, value: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise EncodingError(f"{name} must be a non-negative integer")


# ---------------------------------------------------------------------------
# URLs
# ---------------------------------------------------------------------------

def is_loopback_host(host: str) -> bool:
    if host == "localhost" or host.endswith(".localhost"):
        return True
    try:
        return ipaddress.ip_address(host).is_loopback
    except ValueError:
        return False


def normalize_app_url(url: str) -> str:
    """Reduce a URL to the identity WAIT binds promises to.

    scheme+host+port+path with lowercased scheme/host, default ports
    dropped, empty path coerced to "/", query and fragment stripped.
    """
    try:
        parts = urlsplit(url)
    except ValueError as exc:
        raise UrlError(f"unparseable URL: {url!r}") from exc
    if not parts.scheme or parts.hostname is None:
        raise UrlError(f"URL must be absolute: {url!r}")
    scheme = parts.scheme.lower()
    host = parts.hostname.lower()
    try:
        port = parts.port
    except ValueError as exc:
        raise UrlError(f"invalid port in URL: {url!r}") from exc
    default = {"http": 80, "https": 443}.get(scheme)
    netloc = host if port in (None, default) else f"{host}:{port}"
    path = parts.path or "/"
    return f"{scheme}://{netloc}{path}"


def validate_app_url(url: str) -> str:
    """Normalize and enforce the leaf URL invariants (https, or http on loopback)."""
    parts = urlsplit(url)
    if parts.query or parts.fragment:
        raise EncodingError("app_url must not carry a query or fragment")
    normalized = normalize_app_url(url)
    scheme = urlsplit(normalized).scheme
    host = urlsplit(normalized).hostname or ""
    if scheme == "https":
        return normalized
    if scheme == "http" and is_loopback_host(host):
        return normalized
    raise EncodingError(f"app_url must be https (or http on loopback): {url!r}")


# ---------------------------------------------------------------------------
# Ed25519
# ---------------------------------------------------------------------------

def generate_keypair() -> "DeveloperKey":
    private = Ed25519PrivateKey.generate()
    seed = private.private_bytes_raw()
    public = private.public_key().public_bytes_raw()
    return DeveloperKey(public=public, private=seed)


def sign(private_seed: bytes, message: bytes) -> bytes:
    """Ed25519 signature (64 bytes) over ``message``."""
    if not isinstance(private_seed, bytes) or len(private_seed) != 32:
        raise BadKeyError("private key must be a 32-byte seed")
    try:
        key = Ed25519PrivateKey.from_private_bytes(private_seed)
    except Exception as exc:
        raise BadKeyError(f"malformed private key: {exc}") from exc
    return key.sign(message)


def verify(public_key: bytes, message: bytes, signature: bytes) -> bool:
    """True iff ``signature`` is a valid Ed25519 signature by ``public_key``."""
    if not isinstance(public_key, bytes) or len(public_key) != 32:
        raise BadKeyError("public key must be 32 bytes")
    if not isinstance(signature, bytes) or len(signature) != 64:
        return False
    try:
        key = Ed25519PublicKey.from_public_bytes(public_key)
    except Exception as exc:
        raise BadKeyError(f"malformed public key: {exc}") from exc
    try:
        key.verify(signature, message)
        return True
    except InvalidSignature:
        return False


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Digest:
    """SHA-256 digest of exact served bytes; the root of transitive trust."""

    value: bytes
    algorithm: str = "sha256"

    def __post_init__(self):
        if self.algorithm != "sha256":
            raise EncodingError(f"unsupported digest algorithm: {self.algorithm}")
        _require_bytes("digest value", self.value, 32)

    def to_text(self) -> str:
        return f"sha256:{self.value.hex()}"

    @classmethod
    def from_text(cls, text: str) -> "Digest":
        if not isinstance(text, str) or not text.startswith("sha256:"):
            raise EncodingError(f"bad digest text: {text!r}")
        hexpart = text[len("sha256:"):]
        if not _HEX64_RE.match(hexpart):
            raise EncodingError("digest hex must be 64 lowercase hex characters")
        return cls(value=bytes.fromhex(hexpart))


def digest_bytes(data: bytes) -> Digest:
    """SHA-256 of ``data``; deterministic."""
    return Digest(value=sha256(data))


@dataclass(frozen=True)
class DeveloperKey:
    """Ed25519 key pair; ``private`` is present only in developer-side contexts."""

    public: bytes
    private: Optional[bytes] = None
    algorithm: str = "ed25519"

    def __post_init__(self):
        if self.algorithm != "ed25519":
            raise BadKeyError(f"unsupported key algorithm: {self.algorithm}")
        _require_bytes("public key", self.public, 32)
        try:
            Ed25519PublicKey.from_public_bytes(self.public)
        except Exception as exc:
            raise BadKeyError(f"invalid Ed25519 public key: {exc}") from exc
        if self.private is not None:
            _require_bytes("private key", self.private, 32)

    def to_obj(self, include_private: bool = False) -> dict:
        obj = {"algorithm": self.algorithm, "public": b64u_encode(self.public)}
        if include_private:
            if self.private is None:
                raise BadKeyError("key has no private component")
            obj["private"] = b64u_encode(self.private)
        return obj

    @classmethod
    def from_obj(cls, obj: dict) -> "DeveloperKey":
        if not isinstance(obj, dict):
            raise EncodingError("key record must be an object")
        private = obj.get("private")
        return cls(
            public=b64u_decode(obj["public"]),
            private=b64u_decode(private) if private is not None else None,
            algorithm=obj.get("algorithm", "ed25519"),
        )


@dataclass(frozen=True)
class LogIdentity:
    """A trusted transparency log: key, derived id, and API endpoint."""

    log_id: bytes
    public: bytes
    base_url: str

    def __post_init__(self):
        _require_bytes("log_id", self.log_id, 32)
        _require_bytes("log public key", self.public, 32)
        if self.log_id != sha256(self.public):
            raise EncodingError("log_id must equal SHA-256 of the log public key")

    @classmethod
    def from_public(cls, public: bytes, base_url: str) -> "LogIdentity":
        return cls(log_id=sha256(public), public=public, base_url=base_url)

    def to_obj(self) -> dict:
        return {
            "base_url": self.base_url,
            "log_id": b64u_encode(self.log_id),
            "public": b64u_encode(self.public),
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "LogIdentity":
        return cls(
            log_id=b64u_decode(obj["log_id"]),
            public=b64u_decode(obj["public"]),
            base_url=str(obj["base_url"]),
        )


@dataclass(frozen=True)
class ReleaseLeaf:
    """Canonical release record; its canonical bytes are the Merkle leaf unit."""

    app_url: str
    developer_key: bytes
    digest: Digest
    submitted_at: int
    developer_signature: Optional[bytes] = None

    def __post_init__(self):
        object.__setattr__(self, "app_url", validate_app_url(self.app_url))
        _require_bytes("developer_key", self.developer_key, 32)
        _require_timestamp("submitted_at", self.submitted_at)
        if self.developer_signature is not None:
            _require_bytes("developer_signature", self.developer_signature, 64)

    def to_obj(self, include_signature: bool = True) -> dict:
        obj = {
            "app_url": self.app_url,
            "developer_key": b64u_encode(self.developer_key),
            "digest": self.digest.to_text(),
            "submitted_at": self.submitted_at,
        }
        if include_signature:
            if self.developer_signature is None:
                raise EncodingError("leaf is unsigned")
            obj["developer_signature"] = b64u_encode(self.developer_signature)
        return obj

    @classmethod
    def from_obj(cls, obj: dict) -> "ReleaseLeaf":
        if not isinstance(obj, dict):
            raise EncodingError("leaf must be an object")
        try:
            return cls(
                app_url=obj["app_url"],
                developer_key=b64u_decode(obj["developer_key"]),
                digest=Digest.from_text(obj["digest"]),
                submitted_at=obj["submitted_at"],
                developer_signature=b64u_decode(obj["developer_signature"]),
            )
        except KeyError as exc:
            raise EncodingError(f"leaf missing field {exc}") from exc

    def signing_bytes(self) -> bytes:
        return canonical_json(self.to_obj(include_signature=False))

    def signed(self, key: DeveloperKey) -> "ReleaseLeaf":
        if key.private is None:
            raise BadKeyError("signing requires the private key component")
        if key.public != self.developer_key:
            raise BadKeyError("leaf developer_key does not match signing key")
        return replace(self, developer_signature=sign(key.private, self.signing_bytes()))

    def verify_signature(self) -> bool:
        if self.developer_signature is None:
            return False
        return verify(self.developer_key, self.signing_bytes(), self.developer_signature)


@dataclass(frozen=True)
class InclusionPromise:
    """Log-signed, expiring attestation that a release leaf is (or will be) logged."""

    log_id: bytes
    leaf_hash: bytes
    app_url: str
    digest: Digest
    developer_key: bytes
    issued_at: int
    expires_at: int
    log_signature: Optional[bytes] = None
    version: int = PROMISE_VERSION

    def __post_init__(self):
        _require_bytes("log_id", self.log_id, 32)
        _require_bytes("leaf_hash", self.leaf_hash, 32)
        object.__setattr__(self, "app_url", validate_app_url(self.app_url))
        _require_bytes("developer_key", self.developer_key, 32)
        _require_timestamp("issued_at", self.issued_at)
        _require_timestamp("expires_at", self.expires_at)
        if not self.issued_at < self.expires_at:
            raise EncodingError("promise must have issued_at < expires_at")
        if self.log_signature is not None:
            _require_bytes("log_signature", self.log_signature, 64)
        if not isinstance(self.version, int) or isinstance(self.version, bool):
            raise EncodingError("version must be an integer")

    def to_obj(self, include_signature: bool = True) -> dict:
        obj = {
            "app_url": self.app_url,
            "developer_key": b64u_encode(self.developer_key),
            "digest": self.digest.to_text(),
            "expires_at": self.expires_at,
            "issued_at": self.issued_at,
            "leaf_hash": b64u_encode(self.leaf_hash),
            "log_id": b64u_encode(self.log_id),
            "version": self.version,
        }
        if include_signature:
            if self.log_signature is None:
                raise EncodingError("promise is unsigned")
            obj["log_signature"] = b64u_encode(self.log_signature)
        return obj

    @classmethod
    def from_obj(cls, obj: dict) -> "InclusionPromise":
        if not isinstance(obj, dict):
            raise EncodingError("promise must be an object")
        try:
            return cls(
                log_id=b64u_decode(obj["log_id"]),
                leaf_hash=b64u_decode(obj["leaf_hash"]),
                app_url=obj["app_url"],
                digest=Digest.from_text(obj["digest"]),
                developer_key=b64u_decode(obj["developer_key"]),
                issued_at=obj["issued_at"],
                expires_at=obj["expires_at"],
                log_signature=b64u_decode(obj["log_signature"]),
                version=obj["version"],
            )
        except KeyError as exc:
            raise EncodingError(f"promise missing field {exc}") from exc

    def signing_bytes(self) -> bytes:
        return canonical_json(self.to_obj(include_signature=False))

    def signed(self, log_private: bytes) -> "InclusionPromise":
        return replace(self, log_signature=sign(log_private, self.signing_bytes()))

    def verify_signature(self, log_public: bytes) -> bool:
        if self.log_signature is None:
            return False
        return verify(log_public, self.signing_bytes(), self.log_signature)


@dataclass(frozen=True)
class SignedTreeHead:
    """Log-signed snapshot of (tree size, root hash, timestamp)."""

    log_id: bytes
    tree_size: int
    root_hash: bytes
    timestamp: int
    log_signature: Optional[bytes] = None

    def __post_init__(self):
        _require_bytes("log_id", self.log_id, 32)
        _require_timestamp("tree_size", self.tree_size)
        _require_bytes("root_hash", self.root_hash, 32)
        _require_timestamp("timestamp", self.timestamp)
        if self.log_signature is not None:
            _require_bytes("log_signature", self.log_signature, 64)

    def to_obj(self, include_signature: bool = True) -> dict:
        obj = {
            "log_id": b64u_encode(self.log_id),
            "root_hash": b64u_encode(self.root_hash),
            "timestamp": self.timestamp,
            "tree_size": self.tree_size,
        }
        if include_signature:
            if self.log_signature is None:
                raise EncodingError("tree head is unsigned")
            obj["log_signature"] = b64u_encode(self.log_signature)
        return obj

    @classmethod
    def from_obj(cls, obj: dict) -> "SignedTreeHead":
        try:
            return cls(
                log_id=b64u_decode(obj["log_id"]),
                tree_size=obj["tree_size"],
                root_hash=b64u_decode(obj["root_hash"]),
                timestamp=obj["timestamp"],
                log_signature=b64u_decode(obj["log_signature"]),
            )
        except KeyError as exc:
            raise EncodingError(f"tree head missing field {exc}") from exc

    def signing_bytes(self) -> bytes:
        return canonical_json(self.to_obj(include_signature=False))

    def signed(self, log_private: bytes) -> "SignedTreeHead":
        return replace(self, log_signature=sign(log_private, self.signing_bytes()))

    def verify_signature(self, log_public: bytes) -> bool:
        if self.log_signature is None:
            return False
        return verify(log_public, self.signing_bytes(), self.log_signature)


# ---------------------------------------------------------------------------
# Canonical encode/decode
# ---------------------------------------------------------------------------

def canonical_encode(record) -> bytes:
    """Byte-deterministic encoding of a record (signature included if signed)."""
    return canonical_json(record.to_obj())


def decode_release_leaf(data: bytes) -> ReleaseLeaf:
    return ReleaseLeaf.from_obj(_load_obj(data))


def decode_promise(data: bytes) -> InclusionPromise:
    return InclusionPromise.from_obj(_load_obj(data))


def decode_tree_head(data: bytes) -> SignedTreeHead:
    return SignedTreeHead.from_obj(_load_obj(data))


def _load_obj(data: bytes) -> dict:
    try:
        obj = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise EncodingError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise EncodingError("top-level JSON value must be an object")
    return obj


# ---------------------------------------------------------------------------
# X-WAIT-Inclusion-Promise header codec
# ---------------------------------------------------------------------------

def promise_to_header(promises: list[InclusionPromise]) -> str:
    """Comma-separated unpadded-base64url canonical promise encodings."""
    if not promises:
        raise EncodingError("cannot encode an empty promise list")
    return ",".join(b64u_encode(canonical_encode(p)) for p in promises)


def header_to_promises(value: str) -> list[InclusionPromise]:
    """Parse a header value back into promises.

    Entries with an unknown ``version`` are skipped (forward
    compatibility); raises ERR_HEADER_SYNTAX only when no entry decodes
    at all.
    """
    tokens = [t.strip() for t in value.split(",")]
    tokens = [t for t in tokens if t]
    promises: list[InclusionPromise] = []
    decoded_any = False
    for token in tokens:
        try:
            obj = _load_obj(b64u_decode(token))
        except EncodingError:
            continue
        if obj.get("version") != PROMISE_VERSION:
            decoded_any = True  # recognizably a promise, just a foreign version
            continue
        try:
            promises.append(InclusionPromise.from_obj(obj))
        except EncodingError:
            continue
        decoded_any = True
    if not decoded_any:
        raise HeaderSyntaxError("no inclusion promise could be decoded from header")
    return promises
