"""Client-side validation engine: allow or block an application load.

The decision pipeline implements the fail-closed ordering
secure context -> promise header present -> strict CSP -> document
coverage -> subresource integrity -> promise verification, and the
HSTS-style pin store refuses downgraded (header-stripped) loads of
previously protected applications.

`decide` is a pure function of its inputs: the clock and the
subresource fetcher are injected, so the engine is reusable in tests,
the CLI, and a browser runtime.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from dataclasses import dataclass, field, replace
from html.parser import HTMLParser
from pathlib import Path
from typing import Callable, Mapping, Optional
from urllib.parse import urljoin, urlsplit

import requests

from . import core
from .errors import (
    EncodingError,
    HeaderSyntaxError,
    SriSyntaxError,
    UrlError,
    WaitIOError,
)

ALLOW = "ALLOW"
BLOCK = "BLOCK"

CSP_HEADER = "Content-Security-Policy"

# Reason codes, grouped by pipeline stage.
NOT_SECURE_CONTEXT = "NOT_SECURE_CONTEXT"
DOWNGRADE = "DOWNGRADE"
HEADER_SYNTAX = "HEADER_SYNTAX"
CSP_NOT_HEADER = "CSP_NOT_HEADER"
CSP_META_MISMATCH = "CSP_META_MISMATCH"
CSP_NO_SCRIPT_POLICY = "CSP_NO_SCRIPT_POLICY"
CSP_UNSAFE_INLINE = "CSP_UNSAFE_INLINE"
CSP_UNSAFE_EVAL = "CSP_UNSAFE_EVAL"
CSP_UNSAFE_HASHES = "CSP_UNSAFE_HASHES"
CSP_STRICT_DYNAMIC = "CSP_STRICT_DYNAMIC"
CSP_NONCE_SOURCE = "CSP_NONCE_SOURCE"
CSP_WILDCARD = "CSP_WILDCARD"
CSP_FORBIDDEN_SCHEME = "CSP_FORBIDDEN_SCHEME"
CSP_HTTP_SOURCE = "CSP_HTTP_SOURCE"
CSP_OBJECT_SRC_NOT_NONE = "CSP_OBJECT_SRC_NOT_NONE"
DOC_PARSE = "DOC_PARSE"
DOC_INLINE_SCRIPT = "DOC_INLINE_SCRIPT"
DOC_INLINE_STYLE = "DOC_INLINE_STYLE"
DOC_EVENT_HANDLER = "DOC_EVENT_HANDLER"
DOC_JAVASCRIPT_URL = "DOC_JAVASCRIPT_URL"
DOC_MISSING_SRI = "DOC_MISSING_SRI"
SRI_MISMATCH = "SRI_MISMATCH"
SRI_UNAVAILABLE = "SRI_UNAVAILABLE"
PROMISE_UNTRUSTED_LOG = "PROMISE_UNTRUSTED_LOG"
PROMISE_BAD_SIG = "PROMISE_BAD_SIG"
PROMISE_DIGEST_MISMATCH = "PROMISE_DIGEST_MISMATCH"
PROMISE_URL_MISMATCH = "PROMISE_URL_MISMATCH"
PROMISE_EXPIRED = "PROMISE_EXPIRED"
PROMISE_INSUFFICIENT = "PROMISE_INSUFFICIENT"

REASON_CODES = frozenset({
    NOT_SECURE_CONTEXT, DOWNGRADE, HEADER_SYNTAX,
    CSP_NOT_HEADER, CSP_META_MISMATCH, CSP_NO_SCRIPT_POLICY,
    CSP_UNSAFE_INLINE, CSP_UNSAFE_EVAL, CSP_UNSAFE_HASHES,
    CSP_STRICT_DYNAMIC, CSP_NONCE_SOURCE, CSP_WILDCARD,
    CSP_FORBIDDEN_SCHEME, CSP_HTTP_SOURCE, CSP_OBJECT_SRC_NOT_NONE,
    DOC_PARSE, DOC_INLINE_SCRIPT, DOC_INLINE_STYLE, DOC_EVENT_HANDLER,
    DOC_JAVASCRIPT_URL, DOC_MISSING_SRI,
    SRI_MISMATCH, SRI_UNAVAILABLE,
    PROMISE_UNTRUSTED_LOG, PROMISE_BAD_SIG, PROMISE_DIGEST_MISMATCH,
    PROMISE_URL_MISMATCH, PROMISE_EXPIRED, PROMISE_INSUFFICIENT,
})

Fetcher = Callable[[str], Optional[bytes]]


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValidationConfig:
    trust_store: tuple[core.LogIdentity, ...]
    required_promises: int = 1
    clock_tolerance: int = 600
    pin_max_age: int = 2_592_000  # 30 days

    def __post_init__(self):
        if self.required_promises < 1:
            raise EncodingError("required_promises must be positive")
        if self.required_promises > len(self.trust_store):
            raise EncodingError("required_promises exceeds trust store size")

    def to_obj(self) -> dict:
        return {
            "clock_tolerance": self.clock_tolerance,
            "pin_max_age": self.pin_max_age,
            "required_promises": self.required_promises,
            "trust_store": [log.to_obj() for log in self.trust_store],
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "ValidationConfig":
        return cls(
            trust_store=tuple(
                core.LogIdentity.from_obj(o) for o in obj.get("trust_store", [])
            ),
            required_promises=obj.get("required_promises", 1),
            clock_tolerance=obj.get("clock_tolerance", 600),
            pin_max_age=obj.get("pin_max_age", 2_592_000),
        )


# ---------------------------------------------------------------------------
# Secure context
# ---------------------------------------------------------------------------

def assert_secure_context(url: str) -> bool:
    """https anywhere, or http on a loopback host (development exception)."""
    parts = urlsplit(url)
    if not parts.scheme or parts.hostname is None:
        raise UrlError(f"URL must be absolute: {url!r}")
    if parts.scheme.lower() == "https":
        return True
    if parts.scheme.lower() == "http":
        return core.is_loopback_host(parts.hostname.lower())
    return False


# ---------------------------------------------------------------------------
# CSP
# ---------------------------------------------------------------------------

_DIRECTIVE_NAME_RE = re.compile(r"^[A-Za-z0-9-]+$")


@dataclass(frozen=True)
class CspPolicy:
    directives: dict[str, tuple[str, ...]] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()


def parse_csp(value: Optional[str]) -> CspPolicy:
    """Tokenize a policy string; empty or absent input is the empty policy.

    Directive names are lowercased, sources kept verbatim, duplicate
    directives keep their first occurrence; malformed segments are
    dropped with a warning (diagnostic only, never a verdict reason).
    """
    directives: dict[str, tuple[str, ...]] = {}
    warnings: list[str] = []
    if not value:
        return CspPolicy()
    for segment in value.split(";"):
        tokens = segment.split()
        if not tokens:
            continue
        name = tokens[0].lower()
        if not _DIRECTIVE_NAME_RE.match(name):
            warnings.append(f"malformed directive name: {tokens[0]!r}")
            continue
        if name in directives:
            warnings.append(f"duplicate directive: {name}")
            continue
        directives[name] = tuple(tokens[1:])
    return CspPolicy(directives=directives, warnings=tuple(warnings))


_FORBIDDEN_SCHEMES = ("data:", "blob:", "filesystem:")


def check_csp_strict(policy: CspPolicy) -> list[str]:
    """Reason codes violated by the policy; an empty list means strict.

    Strict requires: an effective script policy exists; the effective
    script and style policies carry no inline/eval/nonce/wildcard/
    forbidden-scheme/http sources; the effective object policy is
    exactly 'none'.
    """
    d = policy.directives
    reasons: list[str] = []

    script = d.get("script-src", d.get("default-src"))
    if script is None:
        reasons.append(CSP_NO_SCRIPT_POLICY)
    style = d.get("style-src", d.get("default-src"))

    for sources in (script, style):
        if sources is None:
            continue
        for token in sources:
            t = token.lower()
            if t == "'unsafe-inline'":
                reasons.append(CSP_UNSAFE_INLINE)
            elif t == "'unsafe-eval'":
                reasons.append(CSP_UNSAFE_EVAL)
            elif t == "'unsafe-hashes'":
                reasons.append(CSP_UNSAFE_HASHES)
            elif t == "'strict-dynamic'":
                reasons.append(CSP_STRICT_DYNAMIC)
            elif t.startswith("'nonce-"):
                reasons.append(CSP_NONCE_SOURCE)
            elif t == "*":
                reasons.append(CSP_WILDCARD)
            elif t.startswith(_FORBIDDEN_SCHEMES):
                reasons.append(CSP_FORBIDDEN_SCHEME)
            elif t == "http:" or t.startswith("http://"):
                reasons.append(CSP_HTTP_SOURCE)

    obj = d.get("object-src", d.get("default-src"))
    if obj is None or tuple(t.lower() for t in obj) != ("'none'",):
        reasons.append(CSP_OBJECT_SRC_NOT_NONE)

    return _dedup(reasons)


def _dedup(codes: list[str]) -> list[str]:
    seen: set[str] = set()
    out = []
    for code in codes:
        if code not in seen:
            seen.add(code)
            out.append(code)
    return out


# ---------------------------------------------------------------------------
# Document coverage
# ---------------------------------------------------------------------------

_URL_ATTRS = ("href", "src", "action", "formaction", "data")


class _CoverageParser(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.findings: list[str] = []
        self.resources: list[tuple[str, str]] = []  # (reference, expected sri)
        self.meta_csp: Optional[str] = None
        self.developer_key_meta: Optional[str] = None
        self._seen_refs: set[str] = set()

    def _first_attr(self, attrs, name: str) -> Optional[str]:
        for key, value in attrs:
            if key == name:
                return value
        return None

    def _check_common(self, tag: str, attrs) -> None:
        for key, value in attrs:
            if key.lower().startswith("on"):
                self.findings.append(DOC_EVENT_HANDLER)
            if key.lower() in _URL_ATTRS and value:
                if value.strip().lower().startswith("javascript:"):
                    self.findings.append(DOC_JAVASCRIPT_URL)

    def handle_starttag(self, tag, attrs):
        self._check_common(tag, attrs)
        if tag == "script":
            src = self._first_attr(attrs, "src")
            if src is None:
                self.findings.append(DOC_INLINE_SCRIPT)
                return
            self._require_sri("script", src, attrs)
        elif tag == "style":
            self.findings.append(DOC_INLINE_STYLE)
        elif tag == "link":
            rel = (self._first_attr(attrs, "rel") or "").lower().split()
            if "stylesheet" in rel:
                href = self._first_attr(attrs, "href")
                if href is not None:
                    self._require_sri("stylesheet", href, attrs)
        elif tag == "meta":
            http_equiv = (self._first_attr(attrs, "http-equiv") or "").lower()
            if http_equiv == "content-security-policy":
                self.meta_csp = self._first_attr(attrs, "content") or ""
            if (self._first_attr(attrs, "name") or "") == core.DEVELOPER_KEY_META:
                self.developer_key_meta = self._first_attr(attrs, "content") or ""

    handle_startendtag = handle_starttag

    def _require_sri(self, kind: str, ref: str, attrs) -> None:
        integrity = self._first_attr(attrs, "integrity")
        if not integrity:
            self.findings.append(DOC_MISSING_SRI)
            return
        if ref not in self._seen_refs:
            self._seen_refs.add(ref)
            self.resources.append((ref, integrity))


def check_document_coverage(document: bytes) -> tuple[list[str], list[tuple[str, str]]]:
    """Findings plus the (reference, expected SRI) list for fetch checks.

    Zero findings means: every script has a source plus integrity, every
    stylesheet link has integrity, and nothing inline or dynamic exists.
    """
    parser = _CoverageParser()
    try:
        text = document.decode("utf-8")
        parser.feed(text)
        parser.close()
    except UnicodeDecodeError:
        return [DOC_PARSE], []
    except Exception:
        return [DOC_PARSE], []
    return _dedup(parser.findings), parser.resources


def _parse_document_meta(document: bytes) -> Optional[_CoverageParser]:
    parser = _CoverageParser()
    try:
        parser.feed(document.decode("utf-8"))
        parser.close()
    except Exception:
        return None
    return parser


# ---------------------------------------------------------------------------
# SRI
# ---------------------------------------------------------------------------

_SRI_RE = re.compile(r"^sha384-([A-Za-z0-9+/]+={0,2})$")


def verify_subresource_integrity(content: bytes, expected_sri: str) -> bool:
    """True iff the sha384 of ``content`` matches the SRI token."""
    match = _SRI_RE.match(expected_sri.strip())
    if not match:
        raise SriSyntaxError(f"unsupported SRI token: {expected_sri!r}")
    import base64

    try:
        expected = base64.b64decode(match.group(1), validate=True)
    except ValueError as exc:
        raise SriSyntaxError(f"undecodable SRI token: {expected_sri!r}") from exc
    if len(expected) != 48:
        raise SriSyntaxError("SRI sha384 digest must be 48 bytes")
    return core.sha384(content) == expected


# ---------------------------------------------------------------------------
# Pin store
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PinEntry:
    app_url: str
    first_seen: int
    last_success: int
    expires: int
    log_ids_seen: frozenset[bytes] = frozenset()

    def to_obj(self) -> dict:
        return {
            "app_url": self.app_url,
            "expires": self.expires,
            "first_seen": self.first_seen,
            "last_success": self.last_success,
            "log_ids_seen": sorted(core.b64u_encode(i) for i in self.log_ids_seen),
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "PinEntry":
        return cls(
            app_url=obj["app_url"],
            first_seen=obj["first_seen"],
            last_success=obj["last_success"],
            expires=obj["expires"],
            log_ids_seen=frozenset(core.b64u_decode(i) for i in obj.get("log_ids_seen", [])),
        )


class PinStore:
    """Record of previously WAIT-protected URLs; basis of downgrade refusal."""

    def __init__(self):
        self._entries: dict[str, PinEntry] = {}
        self.corrupt_on_load = False

    def get(self, app_url: str, now: int) -> Optional[PinEntry]:
        entry = self._entries.get(app_url)
        if entry is None:
            return None
        if entry.expires <= now:
            del self._entries[app_url]  # lazy purge
            return None
        return entry

    def upsert(self, app_url: str, log_ids: frozenset[bytes], now: int, pin_max_age: int) -> PinEntry:
        previous = self._entries.get(app_url)
        entry = PinEntry(
            app_url=app_url,
            first_seen=previous.first_seen if previous else now,
            last_success=now,
            expires=now + pin_max_age,
            log_ids_seen=(previous.log_ids_seen if previous else frozenset()) | log_ids,
        )
        self._entries[app_url] = entry
        return entry

    def entries(self) -> list[PinEntry]:
        return sorted(self._entries.values(), key=lambda e: e.app_url)

    @classmethod
    def load(cls, path: str | Path, now: int) -> "PinStore":
        store = cls()
        path = Path(path)
        if not path.exists():
            return store
        try:
            obj = json.loads(path.read_text("utf-8"))
            entries = [PinEntry.from_obj(e) for e in obj["entries"]]
        except (OSError, ValueError, KeyError, EncodingError):
            store.corrupt_on_load = True
            return store
        for entry in entries:
            if entry.expires > now:
                store._entries[entry.app_url] = entry
        return store

    def save(self, path: str | Path) -> None:
        path = Path(path)
        payload = core.canonical_json(
            {"entries": [e.to_obj() for e in self.entries()], "version": 1}
        )
        tmp = path.with_name(path.name + ".tmp")
        try:
            tmp.write_bytes(payload + b"\n")
            tmp.replace(path)
        except OSError as exc:
            raise WaitIOError(f"pin store write failed: {exc}") from exc


# ---------------------------------------------------------------------------
# Promises
# ---------------------------------------------------------------------------

def verify_promises(
    promises: list[core.InclusionPromise],
    digest: core.Digest,
    app_url: str,
    config: ValidationConfig,
    now: int,
) -> tuple[list[core.InclusionPromise], list[str]]:
    """Accepted promises plus reason codes for every rejected one.

    Validity requires: trusted log and verifying signature, digest and
    URL exactly matching the document, and the time window
    issued_at - tolerance <= now <= expires_at + tolerance. The set is
    sufficient when the accepted promises cover at least
    ``required_promises`` distinct logs.
    """
    trusted = {log.log_id: log for log in config.trust_store}
    accepted: list[core.InclusionPromise] = []
    reasons: list[str] = []
    normalized_url = core.normalize_app_url(app_url)
    for promise in promises:
        log = trusted.get(promise.log_id)
        if log is None:
            reasons.append(PROMISE_UNTRUSTED_LOG)
            continue
        if not promise.verify_signature(log.public):
            reasons.append(PROMISE_BAD_SIG)
            continue
        if promise.digest != digest:
            reasons.append(PROMISE_DIGEST_MISMATCH)
            continue
        if core.normalize_app_url(promise.app_url) != normalized_url:
            reasons.append(PROMISE_URL_MISMATCH)
            continue
        if not (promise.issued_at - config.clock_tolerance <= now
                <= promise.expires_at + config.clock_tolerance):
            reasons.append(PROMISE_EXPIRED)
            continue
        accepted.append(promise)
    distinct_logs = {p.log_id for p in accepted}
    if len(distinct_logs) < config.required_promises:
        reasons.append(PROMISE_INSUFFICIENT)
    return accepted, _dedup(reasons)


# ---------------------------------------------------------------------------
# Verdict + decision pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    decision: str
    reasons: tuple[str, ...]
    checked_at: int

    def __post_init__(self):
        if self.decision == BLOCK and not self.reasons:
            raise EncodingError("BLOCK verdict requires at least one reason")
        if self.decision == ALLOW and self.reasons:
            raise EncodingError("ALLOW verdict must carry no reasons")

    def to_obj(self) -> dict:
        return {
            "checked_at": self.checked_at,
            "decision": self.decision,
            "reasons": list(self.reasons),
        }


def _allow(now: int) -> Verdict:
    return Verdict(decision=ALLOW, reasons=(), checked_at=now)


def _block(now: int, reasons: list[str]) -> Verdict:
    return Verdict(decision=BLOCK, reasons=tuple(_dedup(reasons)), checked_at=now)


def decide(
    document: bytes,
    headers: Mapping[str, str],
    url: str,
    pin_store: Optional[PinStore],
    config: ValidationConfig,
    now: int,
    fetcher: Fetcher,
) -> Verdict:
    """Run the full validation pipeline over one main-document response.

    Stages run in fail-closed order and stop at the first failure. A
    response without the promise header is allowed untouched unless the
    URL holds an unexpired pin (downgrade refusal). On ALLOW the pin
    store is refreshed.
    """
    lowered = {k.lower(): v for k, v in headers.items()}

    # Stage 1: secure context.
    try:
        if not assert_secure_context(url):
            return _block(now, [NOT_SECURE_CONTEXT])
        app_url = core.normalize_app_url(url)
    except UrlError:
        return _block(now, [NOT_SECURE_CONTEXT])

    # Stage 2: header presence vs. pin state.
    header_value = lowered.get(core.PROMISE_HEADER.lower())
    if header_value is None:
        if pin_store is not None and pin_store.get(app_url, now) is not None:
            return _block(now, [DOWNGRADE])
        return _allow(now)  # not WAIT-protected; pass through untouched

    try:
        promises = core.header_to_promises(header_value)
    except HeaderSyntaxError:
        return _block(now, [HEADER_SYNTAX])

    meta = _parse_document_meta(document)

    # Stage 3: CSP strictness (header policy; the digest-covered meta copy
    # must agree with what the server actually sent).
    csp_value = lowered.get(CSP_HEADER.lower())
    csp_reasons = check_csp_strict(parse_csp(csp_value))
    if meta is not None and meta.meta_csp is not None:
        if csp_value is None:
            csp_reasons.append(CSP_NOT_HEADER)
        elif csp_value != meta.meta_csp:
            csp_reasons.append(CSP_META_MISMATCH)
    if csp_reasons:
        return _block(now, csp_reasons)

    # Stage 4: document coverage.
    findings, resources = check_document_coverage(document)
    if findings:
        return _block(now, findings)

    # Stage 5: subresource integrity.
    sri_reasons: list[str] = []
    for ref, expected_sri in resources:
        content = fetcher(ref)
        if content is None:
            sri_reasons.append(SRI_UNAVAILABLE)
            continue
        try:
            if not verify_subresource_integrity(content, expected_sri):
                sri_reasons.append(SRI_MISMATCH)
        except SriSyntaxError:
            sri_reasons.append(SRI_MISMATCH)
    if sri_reasons:
        return _block(now, sri_reasons)

    # Stage 6: inclusion promises.
    accepted, promise_reasons = verify_promises(
        promises, core.digest_bytes(document), app_url, config, now
    )
    if len({p.log_id for p in accepted}) < config.required_promises:
        return _block(now, promise_reasons)

    if pin_store is not None:
        pin_store.upsert(
            app_url,
            frozenset(p.log_id for p in accepted),
            now,
            config.pin_max_age,
        )
    return _allow(now)


# ---------------------------------------------------------------------------
# Fetchers + CLI
# ---------------------------------------------------------------------------

def http_fetcher(base_url: str, session: Optional[requests.Session] = None) -> Fetcher:
    session = session or requests.Session()

    def fetch(ref: str) -> Optional[bytes]:
        target = urljoin(base_url, ref)
        try:
            response = session.get(target, timeout=10)
        except requests.RequestException:
            return None
        if response.status_code != 200:
            return None
        return response.content

    return fetch


def directory_fetcher(root: str | Path, base_url: str) -> Fetcher:
    """Serve subresource reads from an offline snapshot directory."""
    root = Path(root)
    base_path = urlsplit(base_url).path

    def fetch(ref: str) -> Optional[bytes]:
        parts = urlsplit(ref)
        if parts.scheme:
            return None  # remote resources are not part of the snapshot
        if parts.path.startswith("/"):
            relative = parts.path.lstrip("/")
        else:
            prefix = base_path.rsplit("/", 1)[0].lstrip("/")
            relative = f"{prefix}/{parts.path}" if prefix else parts.path
        candidate = (root / relative).resolve()
        if root.resolve() not in candidate.parents and candidate != root.resolve():
            return None
        try:
            return candidate.read_bytes()
        except OSError:
            return None

    return fetch


def load_config_file(path: str | Path) -> ValidationConfig:
    obj = json.loads(Path(path).read_text("utf-8"))
    if isinstance(obj, list):  # bare trust store array
        return ValidationConfig.from_obj({"trust_store": obj})
    return ValidationConfig.from_obj(obj)


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="wait-verify", description=__doc__)
    parser.add_argument("url", help="application URL to validate")
    parser.add_argument("--config", help="ValidationConfig JSON (or bare trust store array)")
    parser.add_argument("--trust-store", help="JSON array of log identities (overrides config's)")
    parser.add_argument("--pinstore", help="pin store file (canonical JSON)")
    parser.add_argument("--offline", help="verify from a directory snapshot instead of the network")
    args = parser.parse_args(argv)

    now = int(time.time())
    config = load_config_file(args.config) if args.config else None
    if args.trust_store:
        trust = tuple(
            core.LogIdentity.from_obj(o)
            for o in json.loads(Path(args.trust_store).read_text("utf-8"))
        )
        if config is None:
            config = ValidationConfig(trust_store=trust)
        else:
            config = replace(config, trust_store=trust)
    if config is None:
        print("a trust store is required (--config or --trust-store)", file=sys.stderr)
        return 1

    pin_store = PinStore.load(args.pinstore, now) if args.pinstore else PinStore()
    if pin_store.corrupt_on_load:
        print("warning: pin store was corrupt; starting empty", file=sys.stderr)

    if args.offline:
        root = Path(args.offline)
        doc_path = urlsplit(args.url).path or "/"
        if doc_path.endswith("/"):
            doc_path += "index.html"
        document = (root / doc_path.lstrip("/")).read_bytes()
        headers_file = root / "headers.json"
        headers = (
            json.loads(headers_file.read_text("utf-8")) if headers_file.exists() else {}
        )
        fetcher = directory_fetcher(root, args.url)
    else:
        try:
            response = requests.get(args.url, timeout=10)
        except requests.RequestException as exc:
            print(f"ERR_NETWORK: {exc}", file=sys.stderr)
            return 1
        document = response.content
        headers = dict(response.headers)
        fetcher = http_fetcher(args.url)

    verdict = decide(document, headers, args.url, pin_store, config, now, fetcher)
    if args.pinstore:
        pin_store.save(args.pinstore)
    if verdict.decision == ALLOW:
        print("ALLOW")
        return 0
    for reason in verdict.reasons:
        print(reason)
    return 2


if __name__ == "__main__":
    sys.exit(main())
