"""Acceptance suite: one test per release criterion, at the stated budgets.

Run with `pytest tests/test_acceptance.py -s` to see one PASS/FAIL line
per criterion.
"""

from __future__ import annotations

import random
import sys
import time
from contextlib import contextmanager
from dataclasses import replace

import pytest

from wait import bundler, core, harness, merklelog, monitor, verifier
from wait.errors import ActivePromiseError, LogRejectedError, StaleTimestampError
from wait.harness import T0, VirtualClock, generate_demo_bundle
from wait.logd import LogHTTPServer, LogPolicy, LogService, RenewalRequest, SubmissionRequest
from wait.merklelog import (
    ConsistencyProof,
    InclusionProof,
    MerkleTree,
    leaf_hash,
    verify_consistency,
    verify_inclusion,
)
from wait.verifier import ALLOW, BLOCK, PinStore, ValidationConfig

from . import merkle_oracle
from .conftest import make_leaf
from .test_verifier import CSP_TABLE


@contextmanager
def criterion(name: str):
    begin = time.monotonic()
    try:
        yield
    except BaseException:
        print(f"[ACCEPTANCE] {name}: FAIL ({time.monotonic() - begin:.1f}s)", file=sys.stderr)
        raise
    print(f"[ACCEPTANCE] {name}: PASS ({time.monotonic() - begin:.1f}s)")


# ---------------------------------------------------------------------------
# 1. Merkle oracle equivalence + proof soundness fuzzing
# ---------------------------------------------------------------------------

def test_merkle_oracle_equivalence():
    with criterion("merkle-oracle-equivalence"):
        begin = time.monotonic()
        rng = random.Random(0xACCE55)
        leaves = [rng.randbytes(rng.randrange(1, 80)) for _ in range(64)]
        tree = MerkleTree()
        for leaf in leaves:
            tree.append_leaf_bytes(leaf)

        for size in range(65):
            assert tree.root_at(size) == merkle_oracle.head(leaves[:size])
            for index in range(size):
                proof = tree.prove_inclusion(index, size)
                assert list(proof.path) == merkle_oracle.audit_path(index, leaves[:size])
                assert verify_inclusion(
                    leaf_hash(leaves[index]), proof, tree.root_at(size)
                )
            for old in range(size + 1):
                proof = tree.prove_consistency(old, size)
                assert list(proof.path) == merkle_oracle.consistency_path(old, leaves[:size])
                assert verify_consistency(tree.root_at(old), tree.root_at(size), proof)

        rejected = 0
        for _ in range(10_000):
            if rng.random() < 0.5:
                size = rng.randrange(1, 65)
                index = rng.randrange(size)
                proof = tree.prove_inclusion(index, size)
                root = tree.root_at(size)
                leaf = leaf_hash(leaves[index])
                kind = rng.choice(["index", "size", "path", "drop", "add", "root", "leaf"])
                if kind == "index":
                    proof = InclusionProof(
                        (index + rng.randrange(1, 65)) % 66, size, proof.path
                    )
                elif kind == "size":
                    # a claimed size is always checked against the head
                    # published for that size
                    new_size = rng.randrange(1, 65)
                    while new_size == size:
                        new_size = rng.randrange(1, 65)
                    proof = InclusionProof(index, new_size, proof.path)
                    root = tree.root_at(new_size)
                elif kind == "path" and proof.path:
                    path = list(proof.path)
                    i = rng.randrange(len(path))
                    mutated = bytearray(path[i])
                    mutated[rng.randrange(32)] ^= 1 << rng.randrange(8)
                    path[i] = bytes(mutated)
                    proof = InclusionProof(index, size, tuple(path))
                elif kind == "drop" and proof.path:
                    path = list(proof.path)
                    path.pop(rng.randrange(len(path)))
                    proof = InclusionProof(index, size, tuple(path))
                elif kind == "add":
                    proof = InclusionProof(
                        index, size, proof.path + (rng.randbytes(32),)
                    )
                elif kind == "root":
                    root = rng.randbytes(32)
                else:
                    leaf = rng.randbytes(32)
                assert not verify_inclusion(leaf, proof, root)
                rejected += 1
            else:
                old = rng.randrange(1, 63)
                new = rng.randrange(old + 1, 65)
                proof = tree.prove_consistency(old, new)
                old_root, new_root = tree.root_at(old), tree.root_at(new)
                kind = rng.choice(["old", "new", "path", "drop", "add", "old_root", "new_root"])
                if kind == "old":
                    # a claimed prefix size is checked against its own head
                    mutated_old = rng.choice([m for m in range(new) if m != old])
                    proof = ConsistencyProof(mutated_old, new, proof.path)
                    old_root = tree.root_at(mutated_old)
                elif kind == "new":
                    mutated_new = rng.choice(
                        [n for n in range(old + 1, 65) if n != new]
                    )
                    proof = ConsistencyProof(old, mutated_new, proof.path)
                    new_root = tree.root_at(mutated_new)
                elif kind == "path":
                    path = list(proof.path)
                    i = rng.randrange(len(path))
                    mutated = bytearray(path[i])
                    mutated[rng.randrange(32)] ^= 1 << rng.randrange(8)
                    path[i] = bytes(mutated)
                    proof = ConsistencyProof(old, new, tuple(path))
                elif kind == "drop":
                    path = list(proof.path)
                    path.pop(rng.randrange(len(path)))
                    proof = ConsistencyProof(old, new, tuple(path))
                elif kind == "add":
                    proof = ConsistencyProof(old, new, proof.path + (rng.randbytes(32),))
                elif kind == "old_root":
                    old_root = rng.randbytes(32)
                else:
                    new_root = rng.randbytes(32)
                assert not verify_consistency(old_root, new_root, proof)
                rejected += 1
        assert rejected == 10_000
        assert time.monotonic() - begin < 30.0


# ---------------------------------------------------------------------------
# Shared end-to-end fixture (demo bundle, in-memory serving)
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def demo(tmp_path_factory):
    """Sealed 1.5 MB demo release with one trusted log, served from dicts."""
    workdir = tmp_path_factory.mktemp("acceptance")
    clock = VirtualClock(T0)
    dev_key = core.generate_keypair()
    log_key = core.generate_keypair()
    bundle = generate_demo_bundle(workdir / "bundle")
    app_url = "https://app.example/index.html"
    manifest, leaf = bundler.seal_bundle(bundle, "index.html", dev_key, app_url, now=T0)
    promise = core.InclusionPromise(
        log_id=core.sha256(log_key.public),
        leaf_hash=merklelog.leaf_hash(core.canonical_encode(leaf)),
        app_url=app_url,
        digest=leaf.digest,
        developer_key=dev_key.public,
        issued_at=T0,
        expires_at=T0 + 604_800,
    ).signed(log_key.private)
    files = {p.name: p.read_bytes() for p in bundle.iterdir()}
    return {
        "clock": clock,
        "dev_key": dev_key,
        "log_key": log_key,
        "app_url": app_url,
        "manifest": manifest,
        "leaf": leaf,
        "promise": promise,
        "document": files["index.html"],
        "resources": {k: v for k, v in files.items() if k != "index.html"},
        "headers": {
            core.PROMISE_HEADER: core.promise_to_header([promise]),
            verifier.CSP_HEADER: manifest.csp,
        },
        "config": ValidationConfig(
            trust_store=(core.LogIdentity.from_public(log_key.public, "https://log.example"),)
        ),
    }


def run_decide(demo, document=None, headers=None, resources=None, now=None, pins=None):
    resources = demo["resources"] if resources is None else resources
    return verifier.decide(
        demo["document"] if document is None else document,
        demo["headers"] if headers is None else headers,
        demo["app_url"],
        pins,
        demo["config"],
        demo["clock"]() if now is None else now,
        resources.get,
    )


# ---------------------------------------------------------------------------
# 2. End-to-end happy path over HTTP
# ---------------------------------------------------------------------------

def test_end_to_end_happy_path(tmp_path):
    with criterion("end-to-end-happy-path"):
        begin = time.monotonic()
        report = harness.run_scenario("happy_path", tmp_path / "hp")
        assert report.passed, report.to_obj()
        verify_event = report.events[0]
        assert verify_event["decision"] == ALLOW
        assert verify_event["reasons"] == []
        assert time.monotonic() - begin < 10.0


# ---------------------------------------------------------------------------
# 3. Tamper detection, 100 randomized trials
# ---------------------------------------------------------------------------

def _text_regions(document: bytes) -> list[int]:
    """Byte offsets outside every tag, so flips leave verification metadata alone."""
    text = document.decode("utf-8")
    from wait.bundler import _TagScanner

    spans = [(t.start, t.end) for t in _TagScanner(text).tags]
    inside = [False] * len(text)
    for start, end in spans:
        for i in range(start, end):
            inside[i] = True
    # also exclude the closing-tag and comment regions: anything between < and >
    open_pos = None
    for i, ch in enumerate(text):
        if ch == "<":
            open_pos = i
        elif ch == ">" and open_pos is not None:
            for j in range(open_pos, i + 1):
                inside[j] = True
            open_pos = None
    # keep printable ascii positions only, so the flip stays valid UTF-8
    return [
        i for i, flag in enumerate(inside)
        if not flag and 0x20 <= document[i] < 0x7F
    ]


def test_tamper_detection_randomized(demo):
    with criterion("tamper-detection-100-trials"):
        rng = random.Random(0x7A3B)
        text_positions = _text_regions(demo["document"])
        assert text_positions, "demo document has no free text region"
        allows = 0
        for trial in range(100):
            kind = ("document", "subresource", "promise")[trial % 3]
            if kind == "document":
                data = bytearray(demo["document"])
                pos = rng.choice(text_positions)
                flip = rng.randrange(1, 64)
                data[pos] = 0x20 + ((data[pos] - 0x20 + flip) % 0x5F)
                verdict = run_decide(demo, document=bytes(data))
                assert verifier.PROMISE_DIGEST_MISMATCH in verdict.reasons, verdict
            elif kind == "subresource":
                resources = dict(demo["resources"])
                name = rng.choice(sorted(resources))
                data = bytearray(resources[name])
                data[rng.randrange(len(data))] ^= 1 << rng.randrange(8)
                resources[name] = bytes(data)
                verdict = run_decide(demo, resources=resources)
                assert verifier.SRI_MISMATCH in verdict.reasons, verdict
            else:
                p = demo["promise"]
                field = rng.choice(
                    ["leaf_hash", "digest", "developer_key", "issued_at",
                     "expires_at", "app_url", "log_signature"]
                )
                if field == "leaf_hash" or field == "developer_key":
                    p = replace(p, **{field: rng.randbytes(32)})
                elif field == "digest":
                    p = replace(p, digest=core.Digest(value=rng.randbytes(32)))
                elif field == "issued_at":
                    p = replace(p, issued_at=p.issued_at + rng.randrange(1, 3600))
                elif field == "expires_at":
                    p = replace(p, expires_at=p.expires_at + rng.randrange(1, 3600))
                elif field == "app_url":
                    p = replace(p, app_url="https://app.example/variant")
                else:
                    sig = bytearray(p.log_signature)
                    sig[rng.randrange(64)] ^= 1 << rng.randrange(8)
                    p = replace(p, log_signature=bytes(sig))
                headers = dict(demo["headers"])
                headers[core.PROMISE_HEADER] = core.promise_to_header([p])
                verdict = run_decide(demo, headers=headers)
                assert verifier.PROMISE_BAD_SIG in verdict.reasons, (field, verdict)
            if verdict.decision == ALLOW:
                allows += 1
        assert allows == 0


# ---------------------------------------------------------------------------
# 4. Downgrade defense + interoperability
# ---------------------------------------------------------------------------

def test_downgrade_defense(demo):
    with criterion("downgrade-defense"):
        pins = PinStore()
        stripped = {verifier.CSP_HEADER: demo["headers"][verifier.CSP_HEADER]}

        before = run_decide(demo, headers=stripped, pins=pins)
        assert before.decision == ALLOW and before.reasons == ()

        protected = run_decide(demo, pins=pins)
        assert protected.decision == ALLOW

        after = run_decide(demo, headers=stripped, pins=pins)
        assert after.decision == BLOCK
        assert after.reasons == (verifier.DOWNGRADE,)


# ---------------------------------------------------------------------------
# 5. Deferred upgrade + renewal replay
# ---------------------------------------------------------------------------

def test_deferred_upgrade_and_replay(demo, tmp_path):
    with criterion("deferred-upgrade-and-replay"):
        expired_now = demo["promise"].expires_at + 600 + 1
        verdict = run_decide(demo, now=expired_now)
        assert verdict.decision == BLOCK
        assert verifier.PROMISE_EXPIRED in verdict.reasons

        clock = VirtualClock(T0)
        service = LogService(tmp_path / "replay-log", demo["log_key"], clock=clock)
        leaf = make_leaf(demo["dev_key"], submitted_at=clock())
        promise = service.handle_submit(SubmissionRequest(leaf))
        request = RenewalRequest(
            leaf_hash=promise.leaf_hash,
            developer_key=demo["dev_key"].public,
            renewed_at=clock(),
        ).signed(demo["dev_key"])
        service.handle_renew(request)
        clock.advance(301)  # now outside the 300 s freshness window
        with pytest.raises(StaleTimestampError):
            service.handle_renew(request)
        service.close()


# ---------------------------------------------------------------------------
# 6. One-valid-version policy
# ---------------------------------------------------------------------------

def test_one_valid_version_policy(demo, tmp_path):
    with criterion("one-valid-version"):
        clock = VirtualClock(T0)
        policy = LogPolicy()
        service = LogService(tmp_path / "ovv-log", demo["log_key"], policy, clock=clock)
        dev = demo["dev_key"]
        first = service.handle_submit(
            SubmissionRequest(make_leaf(dev, data=b"v1", submitted_at=clock()))
        )
        clock.advance(3600)
        with pytest.raises(ActivePromiseError):
            service.handle_submit(
                SubmissionRequest(make_leaf(dev, data=b"v2", submitted_at=clock()))
            )
        clock.set(first.expires_at - policy.clock_tolerance + 1)
        renewed = service.handle_submit(
            SubmissionRequest(make_leaf(dev, data=b"v2", submitted_at=clock()))
        )
        assert renewed.digest == core.digest_bytes(b"v2")
        assert service.log.size == 2
        service.close()


# ---------------------------------------------------------------------------
# 7. Renewal idempotence + monitored STH consistency
# ---------------------------------------------------------------------------

def test_renewal_idempotence_and_sth_consistency(demo, tmp_path):
    with criterion("renewal-idempotence"):
        clock = VirtualClock(T0)
        service = LogService(tmp_path / "renew-log", demo["log_key"], clock=clock)
        server = LogHTTPServer(service).start()
        try:
            identity = server.identity()
            state = monitor.MonitorState(log_id=identity.log_id)
            state, _ = monitor.poll(identity, state, [], now=clock())

            dev = demo["dev_key"]
            leaf = make_leaf(dev, data=b"v1", submitted_at=clock())
            service.handle_submit(SubmissionRequest(leaf))
            assert service.log.size == 1
            state, _ = monitor.poll(identity, state, [], now=clock())

            for step in range(4):
                clock.advance(60)
                if step % 2 == 0:
                    request = RenewalRequest(
                        leaf_hash=merklelog.leaf_hash(core.canonical_encode(leaf)),
                        developer_key=dev.public,
                        renewed_at=clock(),
                    ).signed(dev)
                    service.handle_renew(request)
                else:
                    duplicate = make_leaf(dev, data=b"v1", submitted_at=clock())
                    service.handle_submit(SubmissionRequest(duplicate))  # same digest
                state, _ = monitor.poll(identity, state, [], now=clock())

            # renewals never grew the tree; the identical-leaf resubmit did not
            # duplicate its leaf; distinct submitted_at leaves are new entries
            assert service.log.size <= 3
            renew_only = [r for r in state.records]
            assert all(r.verified_against_prev for r in renew_only)
            assert not state.suspect
        finally:
            server.stop()
            service.close()

        # strict renewal-only check: renew leaves size untouched
        clock2 = VirtualClock(T0)
        service2 = LogService(tmp_path / "renew-log2", demo["log_key"], clock=clock2)
        leaf = make_leaf(demo["dev_key"], data=b"solo", submitted_at=clock2())
        promise = service2.handle_submit(SubmissionRequest(leaf))
        size_after_submit = service2.log.size
        for _ in range(3):
            clock2.advance(30)
            request = RenewalRequest(
                leaf_hash=promise.leaf_hash,
                developer_key=demo["dev_key"].public,
                renewed_at=clock2(),
            ).signed(demo["dev_key"])
            service2.handle_renew(request)
            assert service2.log.size == size_after_submit
        duplicate = service2.handle_submit(SubmissionRequest(leaf))
        assert service2.log.size == size_after_submit
        assert duplicate.leaf_hash == promise.leaf_hash
        service2.close()


# ---------------------------------------------------------------------------
# 8. Verifier latency budget
# ---------------------------------------------------------------------------

def test_verifier_latency_budget(tmp_path):
    with criterion("verifier-latency-budget"):
        summary = harness.bench_verify(1000, tmp_path)
        assert summary["iterations"] == 1000
        assert summary["median_ms"] < 50.0, summary


# ---------------------------------------------------------------------------
# 9. CSP decision table
# ---------------------------------------------------------------------------

def test_csp_decision_table():
    with criterion("csp-decision-table"):
        assert len(CSP_TABLE) >= 20
        for policy_text, expected in CSP_TABLE:
            observed = verifier.check_csp_strict(verifier.parse_csp(policy_text))
            assert observed == expected, (policy_text, observed, expected)
