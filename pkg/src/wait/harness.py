"""End-to-end scenario runner: bundler -> log -> web server -> verifier.

Each scenario builds the generated demo bundle (one main document plus
eight subresources, 1.5 MB total), runs an in-process log service and
static file server on ephemeral ports under a shared virtual clock,
exercises one adversary move, and checks the verifier's verdict (or the
log's error) against the scenario's expectation.

The `all` run additionally asserts coverage: across the scenario set,
every BLOCK reason code the verifier can emit is observed at least
once.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time
from dataclasses import dataclass, field, replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Callable, Optional

import requests

from . import bundler, core, merklelog, monitor, verifier
from .errors import LogRejectedError, SetupError, UnexpectedVerdictError, WaitError
from .logclient import LogClient
from .logd import LogHTTPServer, LogPolicy, LogService, RenewalRequest
from .verifier import PinStore, ValidationConfig, Verdict

T0 = 1_700_000_000


class VirtualClock:
    """Injected into the log service and the verifier for time travel."""

    def __init__(self, start: int = T0):
        self._now = start

    def __call__(self) -> int:
        return self._now

    def advance(self, seconds: int) -> None:
        self._now += seconds

    def set(self, timestamp: int) -> None:
        self._now = timestamp


# ---------------------------------------------------------------------------
# Demo bundle
# ---------------------------------------------------------------------------

DEMO_SCRIPTS = [
    ("app.js", 420_000),
    ("vendor.js", 320_000),
    ("ui.js", 210_000),
    ("data.js", 150_000),
    ("boot.js", 90_000),
]
DEMO_SHEETS = [
    ("main.css", 120_000),
    ("theme.css", 100_000),
    ("layout.css", 74_000),
]
DEMO_HTML_SIZE = 16_000
DEMO_TOTAL = DEMO_HTML_SIZE + sum(s for _, s in DEMO_SCRIPTS) + sum(s for _, s in DEMO_SHEETS)


def _pad_exact(base: str, size: int, open_comment: str, close_comment: str) -> bytes:
    """Append a filler comment so the encoded file is exactly ``size`` bytes."""
    room = size - len(base.encode()) - len(open_comment) - len(close_comment)
    if room < 0:
        raise SetupError(f"target size {size} too small for base content")
    filler = ("abcdefghijklmnop" * (room // 16 + 1))[:room]
    return (base + open_comment + filler + close_comment).encode()


def generate_demo_bundle(directory: str | Path) -> Path:
    """Write the note-taking demo app shape: 9 files, 1.5 MB in total."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, size in DEMO_SCRIPTS:
        base = (
            f"'use strict';\n// {name}: demo module\n"
            f"window.waitDemo = window.waitDemo || {{}};\n"
            f"window.waitDemo['{name}'] = function () {{ return '{name}'; }};\n"
        )
        (directory / name).write_bytes(_pad_exact(base, size, "/*", "*/\n"))
    for name, size in DEMO_SHEETS:
        base = f"/* {name}: demo stylesheet */\nbody {{ margin: 0; font-family: sans-serif; }}\n"
        (directory / name).write_bytes(_pad_exact(base, size, "/*", "*/\n"))

    links = "\n".join(
        f'<link rel="stylesheet" href="{name}">' for name, _ in DEMO_SHEETS
    )
    scripts = "\n".join(f'<script src="{name}"></script>' for name, _ in DEMO_SCRIPTS)
    base_html = (
        "<!DOCTYPE html>\n"
        "<html>\n<head>\n"
        "<title>Private Notes</title>\n"
        f"{links}\n"
        "</head>\n<body>\n"
        '<h1 id="release-marker">notes release-v1</h1>\n'
        '<p id="tamper-target">All note content is encrypted locally before upload.</p>\n'
        f"{scripts}\n"
        "</body>\n</html>\n"
    )
    (directory / "index.html").write_bytes(
        _pad_exact(base_html, DEMO_HTML_SIZE, "<!--", "-->\n")
    )
    total = sum((directory / n).stat().st_size for n, _ in DEMO_SCRIPTS + DEMO_SHEETS)
    total += (directory / "index.html").stat().st_size
    if total != DEMO_TOTAL:
        raise SetupError(f"demo bundle is {total} bytes, expected {DEMO_TOTAL}")
    return directory


# ---------------------------------------------------------------------------
# Static application server
# ---------------------------------------------------------------------------

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript",
    ".css": "text/css",
}


class _AppHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    app: "StaticAppServer"

    def log_message(self, fmt, *args):
        pass

    def do_GET(self):
        key = self.path.split("?", 1)[0].lstrip("/") or "index.html"
        content = self.app.files.get(key)
        if content is None:
            self.send_response(404)
            self.send_header("Content-Length", "0")
            self.end_headers()
            return
        self.send_response(200)
        suffix = "." + key.rsplit(".", 1)[-1] if "." in key else ""
        self.send_header("Content-Type", _CONTENT_TYPES.get(suffix, "application/octet-stream"))
        self.send_header("Content-Length", str(len(content)))
        for name, value in self.app.headers.items():
            self.send_header(name, value)
        self.end_headers()
        self.wfile.write(content)


class StaticAppServer:
    """In-memory static file server with configurable response headers."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self.files: dict[str, bytes] = {}
        self.headers: dict[str, str] = {}
        handler = type("BoundAppHandler", (_AppHandler,), {"app": self})
        self._httpd = ThreadingHTTPServer((host, port), handler)
        self._thread = None

    @property
    def base_url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def load_dir(self, directory: str | Path) -> None:
        directory = Path(directory)
        self.files = {
            p.relative_to(directory).as_posix(): p.read_bytes()
            for p in directory.rglob("*")
            if p.is_file()
        }

    def start(self) -> "StaticAppServer":
        import threading

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
# Scenario rig
# ---------------------------------------------------------------------------

@dataclass
class ScenarioReport:
    scenario: str
    params: dict
    expected: dict
    events: list[dict] = field(default_factory=list)
    passed: bool = False

    def to_obj(self) -> dict:
        return {
            "events": self.events,
            "expected": self.expected,
            "params": {k: str(v) for k, v in sorted(self.params.items())},
            "passed": self.passed,
            "scenario": self.scenario,
        }


class ScenarioRig:
    """Shared machinery: demo bundle, log, app server, verifier config."""

    def __init__(self, workdir: str | Path, required_promises: int = 1):
        self.workdir = Path(workdir)
        self.clock = VirtualClock(T0)
        self.dev_key = core.generate_keypair()
        self.log_key = core.generate_keypair()
        self.log_service = LogService(
            self.workdir / "logd", self.log_key, LogPolicy(), clock=self.clock
        )
        self.log_server = LogHTTPServer(self.log_service).start()
        self.app_server = StaticAppServer().start()
        self.bundle_dir = generate_demo_bundle(self.workdir / "bundle")
        self.app_url = f"{self.app_server.base_url}/index.html"

        self.manifest, self.leaf = bundler.seal_bundle(
            self.bundle_dir, "index.html", self.dev_key, self.app_url, now=self.clock()
        )
        outcomes = bundler.submit_release(self.leaf, [self.log_server.identity()])
        if not outcomes[0].ok:
            raise SetupError(f"initial submission failed: {outcomes[0].error}")
        self.promise = outcomes[0].promise

        self.app_server.load_dir(self.bundle_dir)
        self.app_server.headers = {
            core.PROMISE_HEADER: core.promise_to_header([self.promise]),
            verifier.CSP_HEADER: self.manifest.csp,
        }

        trust = [self.log_server.identity()]
        if required_promises > 1:
            silent = core.generate_keypair()
            trust.append(core.LogIdentity.from_public(silent.public, "http://silent.invalid"))
        self.config = ValidationConfig(
            trust_store=tuple(trust), required_promises=required_promises
        )
        self.pins = PinStore()

    def verify(self, url: Optional[str] = None, record: Optional[Callable] = None) -> Verdict:
        """Fetch the main document over HTTP and run the decision pipeline."""
        response = requests.get(self.app_url, timeout=10)
        document = response.content
        headers = dict(response.headers)
        verdict = verifier.decide(
            document,
            headers,
            url or self.app_url,
            self.pins,
            self.config,
            self.clock(),
            verifier.http_fetcher(self.app_url),
        )
        if record is not None:
            record(document, headers, url or self.app_url, verdict)
        return verdict

    def reseal(self, marker: str) -> tuple[core.ReleaseLeaf, core.InclusionPromise]:
        """Publish a new release: change the marker text, reseal, resubmit."""
        import re

        index = self.bundle_dir / "index.html"
        text, count = re.subn(r"release-v\d+", marker, index.read_text("utf-8"))
        if count == 0:
            raise SetupError("release marker not found")
        index.write_text(text, "utf-8")
        _, leaf = bundler.seal_bundle(
            self.bundle_dir, "index.html", self.dev_key, self.app_url, now=self.clock()
        )
        outcomes = bundler.submit_release(leaf, [self.log_server.identity()])
        if not outcomes[0].ok:
            raise outcomes[0].error
        return leaf, outcomes[0].promise

    def serve_current_bundle(self, promise: core.InclusionPromise) -> None:
        self.app_server.load_dir(self.bundle_dir)
        self.app_server.headers = {
            core.PROMISE_HEADER: core.promise_to_header([promise]),
            verifier.CSP_HEADER: self.manifest.csp,
        }

    def stop(self) -> None:
        self.app_server.stop()
        self.log_server.stop()
        self.log_service.close()


# ---------------------------------------------------------------------------
# Scenario implementations
# ---------------------------------------------------------------------------

def _weak_csp(code_target: str) -> str:
    policies = {
        "csp_unsafe_inline": "script-src 'self' 'unsafe-inline'; object-src 'none'",
        "csp_unsafe_eval": "script-src 'self' 'unsafe-eval'; object-src 'none'",
        "csp_unsafe_hashes": "script-src 'self' 'unsafe-hashes'; object-src 'none'",
        "csp_strict_dynamic": "script-src 'self' 'strict-dynamic'; object-src 'none'",
        "csp_nonce": "script-src 'self' 'nonce-d00d'; object-src 'none'",
        "csp_wildcard": "script-src *; object-src 'none'",
        "csp_data": "script-src 'self' data:; object-src 'none'",
        "csp_http_source": "script-src 'self' http://cdn.example; object-src 'none'",
        "csp_object_src": "script-src 'self'; object-src 'self'",
    }
    return policies[code_target]


@dataclass
class TamperContext:
    """What an insider-tamper mutation may draw on."""

    dev_key: core.DeveloperKey
    leaf: core.ReleaseLeaf
    promise: core.InclusionPromise
    now: int
    base_url: str
    issue_promise: Callable[[core.ReleaseLeaf], core.InclusionPromise]
    rogue_key: Optional[core.DeveloperKey] = None  # fixed key keeps fixtures stable


def apply_tamper(
    target: str, files: dict[str, bytes], headers: dict[str, str], ctx: TamperContext
) -> Optional[str]:
    """Mutate the served files/headers in place for one adversary move.

    Returns a verification-URL override for targets that need one.
    Shared between the scenario runner and the golden-fixture builder so
    the two stay in lockstep.
    """
    if target == "document_text":
        files["index.html"] = files["index.html"].replace(
            b"encrypted locally", b"encrypted rocally"
        ).replace(b"application body text", b"application bodt text")
    elif target == "inline_script":
        files["index.html"] = files["index.html"].replace(
            b"<body>", b"<body>\n<script>exfiltrate()</script>"
        )
    elif target == "inline_style":
        files["index.html"] = files["index.html"].replace(
            b"<body>", b"<body>\n<style>p{}</style>"
        )
    elif target == "event_handler":
        files["index.html"] = files["index.html"].replace(b"<body>", b'<body onload="spy()">')
    elif target == "javascript_url":
        files["index.html"] = files["index.html"].replace(
            b"<body>", b'<body>\n<a href="javascript:spy()">notes</a>'
        )
    elif target == "strip_integrity":
        doc = files["index.html"].decode()
        start = doc.index(' integrity="')
        end = doc.index('"', start + len(' integrity="')) + 1
        files["index.html"] = (doc[:start] + doc[end:]).encode()
    elif target == "invalid_utf8":
        files["index.html"] = b"\xff\xfe" + files["index.html"]
    elif target == "header_garbage":
        headers[core.PROMISE_HEADER] = "!!!"
    elif target == "strip_csp":
        del headers[verifier.CSP_HEADER]
    elif target == "csp_suffix":
        headers[verifier.CSP_HEADER] += "; img-src 'self'"
    elif target.startswith("csp_"):
        headers[verifier.CSP_HEADER] = _weak_csp(target)
    elif target == "rogue_log_promise":
        rogue = ctx.rogue_key or core.generate_keypair()
        promise = replace(ctx.promise, log_id=core.sha256(rogue.public)).signed(rogue.private)
        headers[core.PROMISE_HEADER] = core.promise_to_header([promise])
    elif target == "promise_sig_flip":
        sig = bytearray(ctx.promise.log_signature)
        sig[7] ^= 0x20
        promise = replace(ctx.promise, log_signature=bytes(sig))
        headers[core.PROMISE_HEADER] = core.promise_to_header([promise])
    elif target == "promise_url_mismatch":
        sibling = core.ReleaseLeaf(
            app_url=f"{ctx.base_url}/other.html",
            developer_key=ctx.dev_key.public,
            digest=ctx.leaf.digest,
            submitted_at=ctx.now,
        ).signed(ctx.dev_key)
        headers[core.PROMISE_HEADER] = core.promise_to_header([ctx.issue_promise(sibling)])
    elif target == "insufficient_quorum":
        pass  # expressed through the verifier config, not the response
    elif target == "non_secure_context":
        return "http://app.example/index.html"
    else:
        raise SetupError(f"unknown insider_tamper target: {target}")
    return None


def _scenario_happy_path(rig: ScenarioRig, params: dict, report: ScenarioReport) -> None:
    verdict = rig.verify()
    report.events.append({"step": "verify", "decision": verdict.decision,
                          "reasons": list(verdict.reasons)})
    pinned = rig.pins.get(core.normalize_app_url(rig.app_url), rig.clock()) is not None
    report.events.append({"step": "pin_created", "value": pinned})

    rule = monitor.WatchRule(kind="developer_key", value=rig.dev_key.public, label="demo")
    state = monitor.MonitorState(log_id=rig.log_server.identity().log_id)
    state, alerts = monitor.poll(rig.log_server.identity(), state, [rule], now=rig.clock())
    state, second = monitor.poll(rig.log_server.identity(), state, [rule], now=rig.clock())
    report.events.append({
        "step": "monitor",
        "alerts": len(alerts),
        "repeat_alerts": len(second),
        "consistent": all(r.verified_against_prev for r in state.records),
    })
    report.passed = (
        verdict.decision == verifier.ALLOW
        and verdict.reasons == ()
        and pinned
        and len(alerts) == 1
        and len(second) == 0
        and all(r.verified_against_prev for r in state.records)
    )


def _scenario_insider_tamper(rig: ScenarioRig, params: dict, report: ScenarioReport) -> None:
    target = params["target"]
    expected_code = params["expect_code"]
    ctx = TamperContext(
        dev_key=rig.dev_key,
        leaf=rig.leaf,
        promise=rig.promise,
        now=rig.clock(),
        base_url=rig.app_server.base_url,
        issue_promise=LogClient(rig.log_server.base_url).submit,
    )
    verify_url = apply_tamper(target, rig.app_server.files, rig.app_server.headers, ctx)
    verdict = rig.verify(url=verify_url)
    report.events.append({"step": "verify", "decision": verdict.decision,
                          "reasons": list(verdict.reasons)})
    report.passed = verdict.decision == verifier.BLOCK and expected_code in verdict.reasons


def _scenario_subresource_tamper(rig: ScenarioRig, params: dict, report: ScenarioReport) -> None:
    target = params.get("target", "flip")
    name = params.get("resource", "vendor.js")
    if target == "flip":
        data = bytearray(rig.app_server.files[name])
        data[len(data) // 2] ^= 0x01
        rig.app_server.files[name] = bytes(data)
        expected_code = verifier.SRI_MISMATCH
    else:
        del rig.app_server.files[name]
        expected_code = verifier.SRI_UNAVAILABLE
    verdict = rig.verify()
    report.events.append({"step": "verify", "decision": verdict.decision,
                          "reasons": list(verdict.reasons)})
    report.passed = verdict.decision == verifier.BLOCK and expected_code in verdict.reasons


def _scenario_downgrade(rig: ScenarioRig, params: dict, report: ScenarioReport) -> None:
    protected_headers = dict(rig.app_server.headers)
    unprotected = {verifier.CSP_HEADER: rig.manifest.csp}

    rig.app_server.headers = unprotected
    before_pin = rig.verify()
    report.events.append({"step": "unprotected_before_pin", "decision": before_pin.decision,
                          "reasons": list(before_pin.reasons)})

    rig.app_server.headers = protected_headers
    protected = rig.verify()
    report.events.append({"step": "protected", "decision": protected.decision,
                          "reasons": list(protected.reasons)})

    rig.app_server.headers = unprotected
    stripped = rig.verify()
    report.events.append({"step": "header_stripped", "decision": stripped.decision,
                          "reasons": list(stripped.reasons)})

    report.passed = (
        before_pin.decision == verifier.ALLOW
        and protected.decision == verifier.ALLOW
        and stripped.decision == verifier.BLOCK
        and stripped.reasons == (verifier.DOWNGRADE,)
    )


def _scenario_promise_replay(rig: ScenarioRig, params: dict, report: ScenarioReport) -> None:
    rig.clock.advance(100)
    request = RenewalRequest(
        leaf_hash=rig.promise.leaf_hash,
        developer_key=rig.dev_key.public,
        renewed_at=rig.clock(),
    ).signed(rig.dev_key)
    client = LogClient(rig.log_server.base_url)
    fresh = client.renew(request)
    report.events.append({"step": "renew", "ok": True,
                          "extended": fresh.expires_at > rig.promise.expires_at})

    rig.clock.advance(600)  # outside the 300 s freshness window
    try:
        client.renew(request)
        report.events.append({"step": "replay", "error": None})
        report.passed = False
    except LogRejectedError as exc:
        report.events.append({"step": "replay", "error": exc.rejection_code})
        report.passed = exc.rejection_code == "ERR_STALE_TIMESTAMP"


def _scenario_deferred_upgrade(rig: ScenarioRig, params: dict, report: ScenarioReport) -> None:
    stale_files = dict(rig.app_server.files)
    stale_headers = dict(rig.app_server.headers)

    rig.clock.set(rig.promise.expires_at + 600 + 1)  # past expiry plus tolerance
    leaf2, promise2 = rig.reseal("release-v2")
    report.events.append({"step": "new_release_logged",
                          "tree_size": rig.log_service.log.size})

    # The attacker keeps serving the stale release with its stale promise.
    rig.app_server.files = stale_files
    rig.app_server.headers = stale_headers
    verdict = rig.verify()
    report.events.append({"step": "verify_stale", "decision": verdict.decision,
                          "reasons": list(verdict.reasons)})
    report.passed = (
        verdict.decision == verifier.BLOCK
        and verifier.PROMISE_EXPIRED in verdict.reasons
    )


def _scenario_rollover(rig: ScenarioRig, params: dict, report: ScenarioReport) -> None:
    first = rig.verify()
    report.events.append({"step": "v1", "decision": first.decision,
                          "reasons": list(first.reasons)})

    rig.clock.advance(3600)
    try:
        rig.reseal("release-v2")
        early_error = None
    except LogRejectedError as exc:
        early_error = exc.rejection_code
    report.events.append({"step": "early_second_release", "error": early_error})

    rig.clock.set(rig.promise.expires_at - rig.log_service.policy.clock_tolerance + 1)
    leaf2, promise2 = rig.reseal("release-v2")
    rig.serve_current_bundle(promise2)
    second = rig.verify()
    report.events.append({"step": "v2_inside_tolerance_window", "decision": second.decision,
                          "reasons": list(second.reasons),
                          "tree_size": rig.log_service.log.size})

    report.passed = (
        first.decision == verifier.ALLOW
        and early_error == "ERR_ACTIVE_PROMISE"
        and second.decision == verifier.ALLOW
        and rig.log_service.log.size == 2
    )


_SCENARIOS: dict[str, Callable[[ScenarioRig, dict, ScenarioReport], None]] = {
    "happy_path": _scenario_happy_path,
    "insider_tamper": _scenario_insider_tamper,
    "subresource_tamper": _scenario_subresource_tamper,
    "downgrade": _scenario_downgrade,
    "promise_replay": _scenario_promise_replay,
    "deferred_upgrade": _scenario_deferred_upgrade,
    "rollover": _scenario_rollover,
}

_DEFAULT_PARAMS: dict[str, dict] = {
    "insider_tamper": {"target": "document_text",
                       "expect_code": verifier.PROMISE_DIGEST_MISMATCH},
    "subresource_tamper": {"target": "flip"},
}

_EXPECTATIONS: dict[str, dict] = {
    "happy_path": {"decision": "ALLOW", "reasons": []},
    "insider_tamper": {"decision": "BLOCK"},
    "subresource_tamper": {"decision": "BLOCK"},
    "downgrade": {"decision": "BLOCK", "reasons": [verifier.DOWNGRADE]},
    "promise_replay": {"log_error": "ERR_STALE_TIMESTAMP"},
    "deferred_upgrade": {"decision": "BLOCK", "reasons": [verifier.PROMISE_EXPIRED]},
    "rollover": {"decision": "ALLOW"},
}

#: insider_tamper mutation targets and the reason code each must produce.
TAMPER_TARGETS: dict[str, str] = {
    "document_text": verifier.PROMISE_DIGEST_MISMATCH,
    "inline_script": verifier.DOC_INLINE_SCRIPT,
    "inline_style": verifier.DOC_INLINE_STYLE,
    "event_handler": verifier.DOC_EVENT_HANDLER,
    "javascript_url": verifier.DOC_JAVASCRIPT_URL,
    "strip_integrity": verifier.DOC_MISSING_SRI,
    "invalid_utf8": verifier.DOC_PARSE,
    "header_garbage": verifier.HEADER_SYNTAX,
    "strip_csp": verifier.CSP_NOT_HEADER,
    "csp_suffix": verifier.CSP_META_MISMATCH,
    "csp_unsafe_inline": verifier.CSP_UNSAFE_INLINE,
    "csp_unsafe_eval": verifier.CSP_UNSAFE_EVAL,
    "csp_unsafe_hashes": verifier.CSP_UNSAFE_HASHES,
    "csp_strict_dynamic": verifier.CSP_STRICT_DYNAMIC,
    "csp_nonce": verifier.CSP_NONCE_SOURCE,
    "csp_wildcard": verifier.CSP_WILDCARD,
    "csp_data": verifier.CSP_FORBIDDEN_SCHEME,
    "csp_http_source": verifier.CSP_HTTP_SOURCE,
    "csp_object_src": verifier.CSP_OBJECT_SRC_NOT_NONE,
    "rogue_log_promise": verifier.PROMISE_UNTRUSTED_LOG,
    "promise_sig_flip": verifier.PROMISE_BAD_SIG,
    "promise_url_mismatch": verifier.PROMISE_URL_MISMATCH,
    "insufficient_quorum": verifier.PROMISE_INSUFFICIENT,
    "non_secure_context": verifier.NOT_SECURE_CONTEXT,
}


def scenario_variants() -> list[tuple[str, dict]]:
    """The full regression set run by ``wait-harness run all``."""
    variants: list[tuple[str, dict]] = [("happy_path", {})]
    for target, code in TAMPER_TARGETS.items():
        params = {"target": target, "expect_code": code}
        if target == "insufficient_quorum":
            params["required_promises"] = 2
        variants.append(("insider_tamper", params))
    variants.append(("subresource_tamper", {"target": "flip"}))
    variants.append(("subresource_tamper", {"target": "remove"}))
    variants.extend(
        [("downgrade", {}), ("promise_replay", {}), ("deferred_upgrade", {}), ("rollover", {})]
    )
    return variants


def run_scenario(name: str, workdir: str | Path, params: Optional[dict] = None) -> ScenarioReport:
    if name not in _SCENARIOS:
        raise SetupError(f"unknown scenario: {name}")
    merged = dict(_DEFAULT_PARAMS.get(name, {}))
    merged.update(params or {})
    if name == "insider_tamper" and "expect_code" not in (params or {}):
        merged["expect_code"] = TAMPER_TARGETS[merged["target"]]
    report = ScenarioReport(
        scenario=name, params=merged, expected=_EXPECTATIONS[name]
    )
    rig = ScenarioRig(workdir, required_promises=merged.get("required_promises", 1))
    try:
        _SCENARIOS[name](rig, merged, report)
    finally:
        rig.stop()
    return report


def run_all(workdir: str | Path) -> tuple[list[ScenarioReport], dict]:
    workdir = Path(workdir)
    reports = []
    observed: set[str] = set()
    for i, (name, params) in enumerate(scenario_variants()):
        report = run_scenario(name, workdir / f"{i:02d}-{name}", params)
        reports.append(report)
        for event in report.events:
            observed.update(event.get("reasons", []))
    missing = sorted(verifier.REASON_CODES - observed)
    coverage = {
        "observed_reason_codes": sorted(observed),
        "missing_reason_codes": missing,
        "all_reason_codes_covered": not missing,
        "threats": {
            "insider_tamper": ["insider_tamper", "subresource_tamper"],
            "rogue_provider_non_repudiation": ["happy_path"],  # monitor alert + signed leaf
            "downgrade": ["downgrade"],
            "deferred_upgrade": ["deferred_upgrade", "promise_replay", "rollover"],
        },
    }
    return reports, coverage


# ---------------------------------------------------------------------------
# Bench
# ---------------------------------------------------------------------------

def bench_verify(iterations: int, workdir: str | Path) -> dict:
    """Median/min/p95 latency of decide() over the sealed 1.5 MB fixture."""
    if iterations <= 0:
        return {"iterations": 0}
    workdir = Path(workdir)
    clock = VirtualClock(T0)
    dev_key = core.generate_keypair()
    log_key = core.generate_keypair()
    bundle = generate_demo_bundle(workdir / "bench-bundle")
    app_url = "https://app.example/index.html"
    manifest, leaf = bundler.seal_bundle(bundle, "index.html", dev_key, app_url, now=T0)
    document = (bundle / "index.html").read_bytes()
    promise = core.InclusionPromise(
        log_id=core.sha256(log_key.public),
        leaf_hash=merklelog.leaf_hash(core.canonical_encode(leaf)),
        app_url=app_url,
        digest=leaf.digest,
        developer_key=dev_key.public,
        issued_at=T0,
        expires_at=T0 + 604_800,
    ).signed(log_key.private)
    headers = {
        core.PROMISE_HEADER: core.promise_to_header([promise]),
        verifier.CSP_HEADER: manifest.csp,
    }
    files = {
        p.relative_to(bundle).as_posix(): p.read_bytes() for p in bundle.iterdir()
    }
    config = ValidationConfig(
        trust_store=(core.LogIdentity.from_public(log_key.public, "http://log.invalid"),)
    )

    samples = []
    for _ in range(iterations):
        begin = time.perf_counter()
        verdict = verifier.decide(
            document, headers, app_url, None, config, T0, files.get
        )
        samples.append((time.perf_counter() - begin) * 1000.0)
        if verdict.decision != verifier.ALLOW:
            raise UnexpectedVerdictError(f"bench fixture blocked: {verdict.reasons}")
    samples.sort()
    return {
        "iterations": iterations,
        "min_ms": round(samples[0], 3),
        "median_ms": round(statistics.median(samples), 3),
        "p95_ms": round(samples[int(len(samples) * 0.95) - 1 if iterations > 1 else 0], 3),
    }


# ---------------------------------------------------------------------------
# Golden fixtures (shared with the browser extension)
# ---------------------------------------------------------------------------

def build_golden_fixtures(out_dir: str | Path) -> list[str]:
    """Deterministic decision fixtures for cross-component parity tests.

    Uses a small synthetic app (not the 1.5 MB demo) so the fixture files
    stay reviewable; every fixture records the full decide() input and
    the expected verdict.
    """
    from .goldens import generate_fixtures

    return generate_fixtures(Path(out_dir))


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="wait-harness", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario or 'all'")
    run.add_argument("scenario", help="|".join(list(_SCENARIOS) + ["all"]))
    run.add_argument("--workdir", default=None)
    run.add_argument("--report", help="write a JSON report here")

    bench = sub.add_parser("bench", help="verifier latency over the demo fixture")
    bench.add_argument("--iterations", type=int, default=1000)
    bench.add_argument("--workdir", default=None)

    fixtures = sub.add_parser("fixtures", help="emit golden decision fixtures")
    fixtures.add_argument("--out", required=True)

    args = parser.parse_args(argv)

    import tempfile

    if args.command == "bench":
        with tempfile.TemporaryDirectory() as tmp:
            summary = bench_verify(args.iterations, args.workdir or tmp)
        print(json.dumps(summary, indent=2, sort_keys=True))
        return 0

    if args.command == "fixtures":
        names = build_golden_fixtures(args.out)
        print(f"wrote {len(names)} fixtures to {args.out}")
        return 0

    with tempfile.TemporaryDirectory() as tmp:
        workdir = args.workdir or tmp
        if args.scenario == "all":
            reports, coverage = run_all(workdir)
        else:
            reports = [run_scenario(args.scenario, Path(workdir) / args.scenario)]
            coverage = None
        for report in reports:
            marker = "PASS" if report.passed else "FAIL"
            label = report.params.get("target", "")
            suffix = f" [{label}]" if label else ""
            print(f"{marker} {report.scenario}{suffix}")
        if coverage is not None:
            print(f"reason-code coverage: {'complete' if coverage['all_reason_codes_covered'] else coverage['missing_reason_codes']}")
        if args.report:
            payload = {
                "coverage": coverage,
                "reports": [r.to_obj() for r in reports],
            }
            Path(args.report).write_text(json.dumps(payload, indent=2, sort_keys=True), "utf-8")
        return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
