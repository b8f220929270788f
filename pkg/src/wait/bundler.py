"""Developer toolchain: make a built SPA bundle transitively verifiable.

Transforms a bundle so that a single digest of the main document covers
every executable byte: every referenced script/stylesheet gains an SRI
attribute, the emitted CSP forbids everything not statically declared,
a meta tag binds the developer identity, and the finalized document is
hashed, signed, and submitted to one or more transparency logs.

Rewriting is attribute-level: outside of the edited attributes and the
two injected meta tags, every byte of the input document is preserved,
so release diffs stay reviewable.
"""

from __future__ import annotations

import argparse
import base64
import json
import re
import sys
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path
from typing import Optional
from urllib.parse import urlsplit

from . import core, logd
from .errors import (
    BadKeyError,
    EncodingError,
    ExternalDynamicError,
    LogRejectedError,
    NetworkError,
    ParseError,
    WaitError,
    WaitIOError,
)
from .logclient import LogClient

BASE_CSP = (
    "default-src 'self'; script-src 'self'; style-src 'self'; "
    "object-src 'none'; base-uri 'none'"
)

CSP_META_HTTP_EQUIV = "content-security-policy"

_URL_ATTRS = ("href", "src", "action", "formaction", "data")


def compute_sri(content: bytes) -> str:
    """SRI token: sha384 with standard (padded) base64, per the SRI format."""
    return "sha384-" + base64.b64encode(core.sha384(content)).decode("ascii")


# ---------------------------------------------------------------------------
# Document model
# ---------------------------------------------------------------------------

@dataclass
class Tag:
    name: str
    attrs: list[tuple[str, Optional[str]]]
    raw: str
    start: int

    @property
    def end(self) -> int:
        return self.start + len(self.raw)

    def attr(self, name: str) -> Optional[str]:
        for key, value in self.attrs:
            if key == name:
                return value
        return None

    def has_attr(self, name: str) -> bool:
        return any(key == name for key, _ in self.attrs)


class _TagScanner(HTMLParser):
    """Collects start tags with their exact source slices."""

    def __init__(self, text: str):
        super().__init__(convert_charrefs=True)
        self.text = text
        self.tags: list[Tag] = []
        self._line_starts = [0]
        for i, ch in enumerate(text):
            if ch == "\n":
                self._line_starts.append(i + 1)
        self.feed(text)
        self.close()

    def _offset(self) -> int:
        line, col = self.getpos()
        return self._line_starts[line - 1] + col

    def _record(self, name: str, attrs):
        raw = self.get_starttag_text() or ""
        self.tags.append(Tag(name=name, attrs=list(attrs), raw=raw, start=self._offset()))

    def handle_starttag(self, tag, attrs):
        self._record(tag, attrs)

    def handle_startendtag(self, tag, attrs):
        self._record(tag, attrs)


def parse_document(data: bytes) -> tuple[str, list[Tag]]:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"main document is not valid UTF-8: {exc}") from exc
    try:
        scanner = _TagScanner(text)
    except Exception as exc:  # html.parser raises only on grossly broken input
        raise ParseError(f"main document failed to parse: {exc}") from exc
    return text, scanner.tags


def _is_stylesheet_link(tag: Tag) -> bool:
    if tag.name != "link":
        return False
    rel = (tag.attr("rel") or "").lower().split()
    return "stylesheet" in rel


def _edit(text: str, edits: list[tuple[int, int, str]]) -> str:
    """Apply non-overlapping (start, end, replacement) edits."""
    out = []
    cursor = 0
    for start, end, replacement in sorted(edits):
        out.append(text[cursor:start])
        out.append(replacement)
        cursor = end
    out.append(text[cursor:])
    return "".join(out)


def _set_tag_attr(raw: str, name: str, value: str) -> str:
    """Set one attribute inside a raw tag slice, preserving everything else."""
    pattern = re.compile(
        rf'(\s{re.escape(name)}\s*=\s*)("[^"]*"|\'[^\']*\'|[^\s>]+)', re.IGNORECASE
    )
    match = pattern.search(raw)
    if match:
        return raw[: match.start(2)] + f'"{value}"' + raw[match.end(2):]
    closer = raw.rfind("/>")
    if closer == -1:
        closer = raw.rfind(">")
    return raw[:closer] + f' {name}="{value}"' + raw[closer:]


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------

@dataclass
class ResourceEntry:
    path: str  # bundle-relative path, or absolute https URL for cross-origin
    kind: str  # script | stylesheet | other
    size: int
    sri: str
    origin: Optional[str] = None  # None for bundle-local resources

    def to_obj(self) -> dict:
        obj = {"kind": self.kind, "path": self.path, "size": self.size, "sri": self.sri}
        if self.origin:
            obj["origin"] = self.origin
        return obj


@dataclass
class BundleManifest:
    bundle_dir: Path
    main_document: str
    resources: list[ResourceEntry] = field(default_factory=list)
    csp: str = ""
    developer_key: Optional[bytes] = None
    release_digest: Optional[core.Digest] = None
    violations: list[str] = field(default_factory=list)

    def to_obj(self) -> dict:
        return {
            "csp": self.csp,
            "developer_key": core.b64u_encode(self.developer_key)
            if self.developer_key
            else None,
            "main_document": self.main_document,
            "release_digest": self.release_digest.to_text()
            if self.release_digest
            else None,
            "resources": [r.to_obj() for r in self.resources],
            "violations": list(self.violations),
        }


def _resolve_local(bundle_dir: Path, main_document: str, ref: str) -> Optional[Path]:
    """Map a same-origin reference onto a file inside the bundle, if any."""
    ref_path = urlsplit(ref).path
    if ref_path.startswith("/"):
        candidate = (bundle_dir / ref_path.lstrip("/")).resolve()
    else:
        candidate = (bundle_dir / Path(main_document).parent / ref_path).resolve()
    root = bundle_dir.resolve()
    if root not in candidate.parents and candidate != root:
        return None
    return candidate


def scan_bundle(bundle_dir: str | Path, main_document: str) -> BundleManifest:
    """Inventory every script/stylesheet the main document references.

    Inline scripts, style elements, event-handler attributes and
    javascript: URLs are reported as violations on the manifest; a
    reference that neither resolves inside the bundle nor is an
    absolute https URL raises ERR_EXTERNAL_DYNAMIC.
    """
    bundle_dir = Path(bundle_dir)
    doc_path = bundle_dir / main_document
    try:
        data = doc_path.read_bytes()
    except OSError as exc:
        raise WaitIOError(f"cannot read main document: {exc}") from exc
    _, tags = parse_document(data)

    manifest = BundleManifest(bundle_dir=bundle_dir, main_document=main_document)
    seen: set[str] = set()
    for tag in tags:
        for attr_name, attr_value in tag.attrs:
            if attr_name.lower().startswith("on"):
                manifest.violations.append(f"event handler attribute on <{tag.name}>")
            if attr_name.lower() in _URL_ATTRS and attr_value:
                if attr_value.strip().lower().startswith("javascript:"):
                    manifest.violations.append(f"javascript: URL on <{tag.name}>")
        if tag.name == "style":
            manifest.violations.append("inline style element")
            continue
        if tag.name == "script" and not tag.has_attr("src"):
            manifest.violations.append("inline script element")
            continue

        kind = None
        ref = None
        if tag.name == "script" and tag.attr("src"):
            kind, ref = "script", tag.attr("src")
        elif _is_stylesheet_link(tag):
            kind, ref = "stylesheet", tag.attr("href")
        if kind is None or ref is None:
            continue
        if ref in seen:
            continue
        seen.add(ref)

        parts = urlsplit(ref)
        if parts.scheme == "https":
            sri = tag.attr("integrity") or ""
            if not sri:
                manifest.violations.append(f"cross-origin {kind} without integrity: {ref}")
            manifest.resources.append(
                ResourceEntry(
                    path=ref, kind=kind, size=0, sri=sri,
                    origin=f"https://{parts.netloc}",
                )
            )
            continue
        if parts.scheme:
            raise ExternalDynamicError(f"{kind} reference with scheme {parts.scheme!r}: {ref}")
        target = _resolve_local(bundle_dir, main_document, ref)
        if target is None or not target.is_file():
            raise ExternalDynamicError(f"{kind} reference not found in bundle: {ref}")
        content = target.read_bytes()
        manifest.resources.append(
            ResourceEntry(
                path=target.relative_to(bundle_dir.resolve()).as_posix(),
                kind=kind,
                size=len(content),
                sri=compute_sri(content),
            )
        )
    return manifest


# ---------------------------------------------------------------------------
# Rewriting
# ---------------------------------------------------------------------------

def inject_integrity(manifest: BundleManifest, document: bytes) -> bytes:
    """Give every script/stylesheet reference a correct integrity attribute.

    Deterministic and idempotent: tags already carrying the correct
    attributes pass through untouched, stale values are replaced.
    """
    text, tags = parse_document(document)
    edits: list[tuple[int, int, str]] = []
    for tag in tags:
        ref = None
        if tag.name == "script" and tag.attr("src"):
            ref = tag.attr("src")
        elif _is_stylesheet_link(tag):
            ref = tag.attr("href")
        if ref is None:
            continue
        parts = urlsplit(ref)
        if parts.scheme == "https":
            sri = tag.attr("integrity")
            if not sri:
                raise ExternalDynamicError(f"cross-origin reference without integrity: {ref}")
        else:
            target = _resolve_local(manifest.bundle_dir, manifest.main_document, ref)
            if target is None or not target.is_file():
                raise ExternalDynamicError(f"reference not found in bundle: {ref}")
            sri = compute_sri(target.read_bytes())
        raw = _set_tag_attr(tag.raw, "integrity", sri)
        raw = _set_tag_attr(raw, "crossorigin", "anonymous")
        if raw != tag.raw:
            edits.append((tag.start, tag.end, raw))
    return _edit(text, edits).encode("utf-8")


def emit_csp(manifest: BundleManifest) -> str:
    """Strict baseline policy plus the explicit origins of remote resources."""
    script_origins = sorted(
        {r.origin for r in manifest.resources if r.origin and r.kind == "script"}
    )
    style_origins = sorted(
        {r.origin for r in manifest.resources if r.origin and r.kind == "stylesheet"}
    )
    policy = BASE_CSP
    if script_origins:
        policy = policy.replace(
            "script-src 'self'", "script-src 'self' " + " ".join(script_origins)
        )
    if style_origins:
        policy = policy.replace(
            "style-src 'self'", "style-src 'self' " + " ".join(style_origins)
        )
    return policy


def _upsert_meta(document: bytes, match_attr: str, match_value: str, meta_html: str) -> bytes:
    """Insert or replace a meta tag in head; exactly one instance remains."""
    text, tags = parse_document(document)
    edits: list[tuple[int, int, str]] = []
    matches = [
        t
        for t in tags
        if t.name == "meta" and (t.attr(match_attr) or "").lower() == match_value
    ]
    if matches:
        first, rest = matches[0], matches[1:]
        if first.raw != meta_html:
            edits.append((first.start, first.end, meta_html))
        for extra in rest:
            end = extra.end
            if text[end:end + 1] == "\n":
                end += 1
            edits.append((extra.start, end, ""))
    else:
        head = next((t for t in tags if t.name == "head"), None)
        if head is not None:
            edits.append((head.end, head.end, "\n" + meta_html))
        else:
            edits.append((0, 0, meta_html + "\n"))
    return _edit(text, edits).encode("utf-8")


def embed_developer_key(document: bytes, public_key: bytes) -> bytes:
    """Bind the developer identity: one wait-developer-key meta tag in head."""
    meta = (
        f'<meta name="{core.DEVELOPER_KEY_META}" '
        f'content="ed25519:{core.b64u_encode(public_key)}">'
    )
    return _upsert_meta(document, "name", core.DEVELOPER_KEY_META, meta)


def embed_csp_meta(document: bytes, policy: str) -> bytes:
    """Embed a digest-covered copy of the CSP the server must send."""
    meta = f'<meta http-equiv="Content-Security-Policy" content="{policy}">'
    return _upsert_meta(document, "http-equiv", CSP_META_HTTP_EQUIV, meta)


def finalize_release(
    manifest: BundleManifest,
    key: core.DeveloperKey,
    app_url: str,
    now: int,
    document: Optional[bytes] = None,
) -> core.ReleaseLeaf:
    """Digest the finalized main document and sign the release record."""
    if key.private is None:
        raise BadKeyError("finalize requires the developer private key")
    if document is None:
        document = (manifest.bundle_dir / manifest.main_document).read_bytes()
    manifest.release_digest = core.digest_bytes(document)
    manifest.developer_key = key.public
    leaf = core.ReleaseLeaf(
        app_url=app_url,
        developer_key=key.public,
        digest=manifest.release_digest,
        submitted_at=now,
    )
    return leaf.signed(key)


def seal_bundle(
    bundle_dir: str | Path,
    main_document: str,
    key: core.DeveloperKey,
    app_url: str,
    now: int,
) -> tuple[BundleManifest, core.ReleaseLeaf]:
    """Full pipeline: scan, inject SRI, embed CSP + key meta, digest, sign.

    Refuses to seal while the scan reports violations (fail-closed, the
    verifier would block the result anyway). Rewrites the main document
    in place.
    """
    manifest = scan_bundle(bundle_dir, main_document)
    if manifest.violations:
        raise ParseError(
            "bundle has violations: " + "; ".join(manifest.violations)
        )
    doc_path = manifest.bundle_dir / main_document
    document = doc_path.read_bytes()
    document = inject_integrity(manifest, document)
    manifest.csp = emit_csp(manifest)
    document = embed_csp_meta(document, manifest.csp)
    document = embed_developer_key(document, key.public)
    doc_path.write_bytes(document)
    leaf = finalize_release(manifest, key, app_url, now, document=document)
    return manifest, leaf


# ---------------------------------------------------------------------------
# Log submission
# ---------------------------------------------------------------------------

@dataclass
class SubmissionOutcome:
    log: core.LogIdentity
    promise: Optional[core.InclusionPromise] = None
    error: Optional[WaitError] = None

    @property
    def ok(self) -> bool:
        return self.promise is not None


def submit_release(
    leaf: core.ReleaseLeaf, logs: list[core.LogIdentity]
) -> list[SubmissionOutcome]:
    """Submit to every log; per-log failures are reported, not raised."""
    outcomes = []
    for log in logs:
        client = LogClient(log.base_url)
        try:
            promise = client.submit(leaf)
            if promise.log_id != log.log_id or not promise.verify_signature(log.public):
                raise NetworkError(f"log {log.base_url} returned a promise that does not verify")
            if promise.digest != leaf.digest or promise.app_url != leaf.app_url:
                raise NetworkError(f"log {log.base_url} returned a promise for different content")
            outcomes.append(SubmissionOutcome(log=log, promise=promise))
        except WaitError as exc:
            outcomes.append(SubmissionOutcome(log=log, error=exc))
    return outcomes


def renew_promise(
    leaf_hash: bytes,
    key: core.DeveloperKey,
    logs: list[core.LogIdentity],
    now: int,
) -> list[SubmissionOutcome]:
    outcomes = []
    for log in logs:
        client = LogClient(log.base_url)
        request = logd.RenewalRequest(
            leaf_hash=leaf_hash, developer_key=key.public, renewed_at=now
        ).signed(key)
        try:
            promise = client.renew(request)
            if not promise.verify_signature(log.public):
                raise NetworkError(f"log {log.base_url} returned a promise that does not verify")
            outcomes.append(SubmissionOutcome(log=log, promise=promise))
        except WaitError as exc:
            outcomes.append(SubmissionOutcome(log=log, error=exc))
    return outcomes


def emit_server_config(promises: list[core.InclusionPromise]) -> str:
    """Header value plus a copy-paste add-header snippet for static servers."""
    if not promises:
        raise EncodingError("no promises to emit")
    value = core.promise_to_header(promises)
    return (
        f"{core.PROMISE_HEADER}: {value}\n"
        "\n"
        "# nginx\n"
        f'add_header {core.PROMISE_HEADER} "{value}" always;\n'
        "\n"
        "# Apache\n"
        f'Header always set {core.PROMISE_HEADER} "{value}"\n'
    )


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def load_logs_file(path: str | Path) -> list[core.LogIdentity]:
    data = json.loads(Path(path).read_text("utf-8"))
    if not isinstance(data, list):
        raise EncodingError("log list file must be a JSON array")
    return [core.LogIdentity.from_obj(obj) for obj in data]


def _write_or_print(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, "utf-8")
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="wait-bundle", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    keygen = sub.add_parser("keygen", help="generate a developer key pair")
    keygen.add_argument("--out", required=True)

    scan = sub.add_parser("scan", help="inventory a bundle without modifying it")
    scan.add_argument("--bundle", required=True)
    scan.add_argument("--main", default="index.html")

    seal = sub.add_parser("seal", help="rewrite, digest and sign the bundle")
    seal.add_argument("--bundle", required=True)
    seal.add_argument("--main", default="index.html")
    seal.add_argument("--key", required=True)
    seal.add_argument("--app-url", required=True)
    seal.add_argument("--leaf-out", help="write the signed release record here")
    seal.add_argument("--csp-out", help="write the emitted CSP here")
    seal.add_argument("--timestamp", type=int, help="release timestamp (default: now)")

    submit_cmd = sub.add_parser("submit", help="submit a sealed release to logs")
    submit_cmd.add_argument("--leaf", required=True)
    submit_cmd.add_argument("--logs", required=True, help="JSON array of log identities")
    submit_cmd.add_argument("--promises-out")

    renew_cmd = sub.add_parser("renew", help="refresh promises for a logged release")
    renew_cmd.add_argument("--leaf", required=True)
    renew_cmd.add_argument("--key", required=True)
    renew_cmd.add_argument("--logs", required=True)
    renew_cmd.add_argument("--promises-out")

    emit = sub.add_parser("emit-config", help="emit the web server header snippet")
    emit.add_argument("--promises", required=True)
    emit.add_argument("--out")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except WaitError as exc:
        print(f"{exc.code}: {exc.message}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    import time

    if args.command == "keygen":
        key = core.generate_keypair()
        logd.write_key_file(args.out, key)
        print(f"public: ed25519:{core.b64u_encode(key.public)}")
        return 0

    if args.command == "scan":
        manifest = scan_bundle(args.bundle, args.main)
        print(json.dumps(manifest.to_obj(), indent=2, sort_keys=True))
        return 0 if not manifest.violations else 1

    if args.command == "seal":
        key = logd.load_key_file(args.key)
        now = args.timestamp if args.timestamp is not None else int(time.time())
        manifest, leaf = seal_bundle(args.bundle, args.main, key, args.app_url, now)
        if args.leaf_out:
            Path(args.leaf_out).write_bytes(core.canonical_encode(leaf) + b"\n")
        if args.csp_out:
            Path(args.csp_out).write_text(manifest.csp + "\n", "utf-8")
        print(json.dumps(manifest.to_obj(), indent=2, sort_keys=True))
        return 0

    if args.command == "submit":
        leaf = core.decode_release_leaf(Path(args.leaf).read_bytes())
        outcomes = submit_release(leaf, load_logs_file(args.logs))
        return _report_outcomes(outcomes, args.promises_out)

    if args.command == "renew":
        from . import merklelog

        leaf = core.decode_release_leaf(Path(args.leaf).read_bytes())
        key = logd.load_key_file(args.key)
        leaf_hash = merklelog.leaf_hash(core.canonical_encode(leaf))
        outcomes = renew_promise(leaf_hash, key, load_logs_file(args.logs), int(time.time()))
        return _report_outcomes(outcomes, args.promises_out)

    if args.command == "emit-config":
        data = json.loads(Path(args.promises).read_text("utf-8"))
        promises = [core.InclusionPromise.from_obj(obj) for obj in data]
        _write_or_print(emit_server_config(promises), args.out)
        return 0

    raise AssertionError(f"unhandled command {args.command}")


def _report_outcomes(outcomes: list[SubmissionOutcome], promises_out: Optional[str]) -> int:
    promises = []
    ok = True
    for outcome in outcomes:
        if outcome.ok:
            promises.append(outcome.promise)
            print(f"{outcome.log.base_url}: promise expires_at={outcome.promise.expires_at}")
        else:
            ok = False
            code = outcome.error.code
            if isinstance(outcome.error, LogRejectedError):
                code = f"{code}({outcome.error.rejection_code})"
            print(f"{outcome.log.base_url}: {code}: {outcome.error.message}", file=sys.stderr)
    if promises and promises_out:
        Path(promises_out).write_text(
            json.dumps([p.to_obj() for p in promises], indent=2, sort_keys=True), "utf-8"
        )
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
