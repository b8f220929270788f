"""Golden decision fixtures shared with the browser extension.

Every fixture freezes one complete decide() input (document, headers,
URL, resources, config, pins, clock) together with the verdict this
implementation produces. Generation is fully deterministic: fixed seeds
derive the key material, the app content is static, and all timestamps
come from a fixed epoch, so regenerating the suite is byte-stable.
"""

from __future__ import annotations

import json
import tempfile
from dataclasses import replace
from pathlib import Path
from typing import Callable, Optional

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from . import bundler, core, merklelog, verifier
from .harness import TamperContext, apply_tamper, TAMPER_TARGETS
from .verifier import PinStore, ValidationConfig

T0 = 1_700_000_000
VALIDITY = 604_800
APP_URL = "https://app.example/index.html"


def deterministic_key(label: str) -> core.DeveloperKey:
    seed = core.sha256(b"wait-golden-fixture:" + label.encode())
    public = Ed25519PrivateKey.from_private_bytes(seed).public_key().public_bytes_raw()
    return core.DeveloperKey(public=public, private=seed)


def _small_app(directory: Path) -> None:
    (directory / "app.js").write_bytes(b"console.log('fixture');\n")
    (directory / "style.css").write_bytes(b"body { margin: 0; }\n")
    (directory / "index.html").write_bytes(
        b"<!DOCTYPE html>\n"
        b"<html>\n<head>\n"
        b'<link rel="stylesheet" href="style.css">\n'
        b"<title>fixture app</title>\n"
        b"</head>\n<body>\n"
        b'<p id="tamper-target">golden fixture application body text</p>\n'
        b'<script src="app.js"></script>\n'
        b"</body>\n</html>\n"
    )


def _mint(log_key: core.DeveloperKey, leaf: core.ReleaseLeaf,
          issued_at: int = T0, expires_at: Optional[int] = None) -> core.InclusionPromise:
    return core.InclusionPromise(
        log_id=core.sha256(log_key.public),
        leaf_hash=merklelog.leaf_hash(core.canonical_encode(leaf)),
        app_url=leaf.app_url,
        digest=leaf.digest,
        developer_key=leaf.developer_key,
        issued_at=issued_at,
        expires_at=expires_at if expires_at is not None else issued_at + VALIDITY,
    ).signed(log_key.private)


class _FixtureBase:
    def __init__(self):
        self.dev_key = deterministic_key("developer")
        self.log_key = deterministic_key("log-a")
        self.log_key_b = deterministic_key("log-b")
        with tempfile.TemporaryDirectory() as tmp:
            tmp = Path(tmp)
            _small_app(tmp)
            self.manifest, self.leaf = bundler.seal_bundle(
                tmp, "index.html", self.dev_key, APP_URL, now=T0
            )
            self.files = {
                "index.html": (tmp / "index.html").read_bytes(),
                "app.js": (tmp / "app.js").read_bytes(),
                "style.css": (tmp / "style.css").read_bytes(),
            }
        self.promise = _mint(self.log_key, self.leaf)
        self.promise_b = _mint(self.log_key_b, self.leaf)
        self.headers = {
            core.PROMISE_HEADER: core.promise_to_header([self.promise]),
            verifier.CSP_HEADER: self.manifest.csp,
        }
        self.trust_one = (core.LogIdentity.from_public(self.log_key.public, "https://log-a.example"),)
        self.trust_two = self.trust_one + (
            core.LogIdentity.from_public(self.log_key_b.public, "https://log-b.example"),
        )


def generate_fixtures(out_dir: Path) -> list[str]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    base = _FixtureBase()
    fixtures: list[dict] = []

    def add(
        name: str,
        *,
        mutate: Optional[Callable[[dict, dict], Optional[str]]] = None,
        now: int = T0 + 1000,
        url: str = APP_URL,
        config_trust=base.trust_one,
        required: int = 1,
        promises: Optional[list[core.InclusionPromise]] = None,
        raw_header: Optional[str] = None,
        drop_header: bool = False,
        pins: Optional[list[verifier.PinEntry]] = None,
        intends: Optional[tuple[str, Optional[str]]] = None,
    ) -> None:
        files = dict(base.files)
        headers = dict(base.headers)
        if promises is not None:
            headers[core.PROMISE_HEADER] = core.promise_to_header(promises)
        if raw_header is not None:
            headers[core.PROMISE_HEADER] = raw_header
        if drop_header:
            del headers[core.PROMISE_HEADER]
        verify_url = url
        if mutate is not None:
            override = mutate(files, headers)
            if override:
                verify_url = override
        config = ValidationConfig(trust_store=config_trust, required_promises=required)
        pin_store = PinStore()
        for entry in pins or []:
            pin_store._entries[entry.app_url] = entry

        verdict = verifier.decide(
            files["index.html"], headers, verify_url, pin_store, config, now, files.get
        )
        if intends is not None:
            decision, code = intends
            assert verdict.decision == decision, (name, verdict)
            if code is not None:
                assert code in verdict.reasons, (name, verdict)
        fixtures.append(
            {
                "name": name,
                "url": verify_url,
                "now": now,
                "document_b64": core.b64u_encode(files["index.html"]),
                "headers": headers,
                "resources": {
                    ref: core.b64u_encode(content)
                    for ref, content in files.items()
                    if ref != "index.html"
                },
                "config": config.to_obj(),
                "pins": [e.to_obj() for e in (pins or [])],
                "expected": {
                    "decision": verdict.decision,
                    "reasons": list(verdict.reasons),
                },
            }
        )

    ctx = TamperContext(
        dev_key=base.dev_key,
        leaf=base.leaf,
        promise=base.promise,
        now=T0,
        base_url="https://app.example",
        issue_promise=lambda leaf: _mint(base.log_key, leaf),
        rogue_key=deterministic_key("rogue-log"),
    )

    add("allow_sealed_app", intends=(verifier.ALLOW, None))
    add("allow_no_header_no_pin", drop_header=True, intends=(verifier.ALLOW, None))
    add(
        "block_downgrade_pinned",
        drop_header=True,
        pins=[
            verifier.PinEntry(
                app_url=core.normalize_app_url(APP_URL),
                first_seen=T0,
                last_success=T0,
                expires=T0 + 2_592_000,
                log_ids_seen=frozenset({core.sha256(base.log_key.public)}),
            )
        ],
        intends=(verifier.BLOCK, verifier.DOWNGRADE),
    )

    for target, code in TAMPER_TARGETS.items():
        def mutate(files, headers, target=target):
            return apply_tamper(target, files, headers, ctx)

        add(
            f"block_{target}",
            mutate=mutate,
            required=2 if target == "insufficient_quorum" else 1,
            config_trust=base.trust_two if target == "insufficient_quorum" else base.trust_one,
            intends=(verifier.BLOCK, code),
        )

    add(
        "allow_quorum_two_distinct_logs",
        promises=[base.promise, base.promise_b],
        config_trust=base.trust_two,
        required=2,
        intends=(verifier.ALLOW, None),
    )
    renewed = _mint(base.log_key, base.leaf, issued_at=T0 + 500)
    add(
        "block_same_log_twice_quorum_two",
        promises=[base.promise, renewed],
        config_trust=base.trust_two,
        required=2,
        intends=(verifier.BLOCK, verifier.PROMISE_INSUFFICIENT),
    )
    add(
        "block_expired_promise",
        now=T0 + VALIDITY + 601,
        intends=(verifier.BLOCK, verifier.PROMISE_EXPIRED),
    )
    add(
        "allow_exactly_at_expiry_tolerance",
        now=T0 + VALIDITY + 600,
        intends=(verifier.ALLOW, None),
    )
    foreign = dict(base.promise.to_obj(), version=9)
    foreign_token = core.b64u_encode(core.canonical_json(foreign))
    add(
        "allow_with_unknown_version_entry",
        raw_header=core.promise_to_header([base.promise]) + "," + foreign_token,
        intends=(verifier.ALLOW, None),
    )
    add(
        "block_only_unknown_version",
        raw_header=foreign_token,
        intends=(verifier.BLOCK, verifier.PROMISE_INSUFFICIENT),
    )

    names = []
    for fixture in fixtures:
        path = out_dir / f"{fixture['name']}.json"
        path.write_text(json.dumps(fixture, indent=2, sort_keys=True) + "\n", "utf-8")
        names.append(fixture["name"])
    index = {"fixtures": sorted(names), "version": 1}
    (out_dir / "index.json").write_text(json.dumps(index, indent=2, sort_keys=True) + "\n", "utf-8")
    return names
