from __future__ import annotations

from dataclasses import replace

import pytest

from wait import core, merklelog, monitor
from wait.errors import UnknownLeafError
from wait.logclient import LogClient
from wait.logd import LogHTTPServer, LogService, SubmissionRequest

from .conftest import make_leaf
from .test_logd import FakeClock, T0


@pytest.fixture()
def rig(tmp_path, log_key):
    clock = FakeClock()
    service = LogService(tmp_path / "logd", log_key, clock=clock)
    server = LogHTTPServer(service).start()
    yield {
        "clock": clock,
        "service": service,
        "server": server,
        "log": server.identity(),
    }
    server.stop()
    service.close()


def submit(rig, dev_key, data=b"v1", app_url="https://app.example/"):
    leaf = make_leaf(dev_key, app_url=app_url, data=data, submitted_at=rig["clock"]())
    return leaf, rig["service"].handle_submit(SubmissionRequest(leaf))


class TestPoll:
    def test_unchanged_log_no_alerts(self, rig, tmp_path):
        state = monitor.MonitorState(log_id=rig["log"].log_id)
        state, alerts = monitor.poll(rig["log"], state, [], now=T0)
        assert alerts == []
        assert state.last.verified_against_prev is True
        state, alerts = monitor.poll(rig["log"], state, [], now=T0 + 60)
        assert alerts == []
        assert state.last.verified_against_prev is True
        assert not state.suspect

    def test_matching_release_alerts_once(self, rig, dev_key):
        rule = monitor.WatchRule(kind="developer_key", value=dev_key.public, label="our key")
        state = monitor.MonitorState(log_id=rig["log"].log_id)
        state, alerts = monitor.poll(rig["log"], state, [rule], now=T0)
        assert alerts == []
        leaf, _ = submit(rig, dev_key)
        state, alerts = monitor.poll(rig["log"], state, [rule], now=T0 + 60)
        assert len(alerts) == 1
        alert = alerts[0]
        assert alert.kind == "release"
        assert alert.rule_label == "our key"
        assert alert.leaf_index == 0
        assert alert.digest == leaf.digest.to_text()
        # nothing new on the next poll
        state, alerts = monitor.poll(rig["log"], state, [rule], now=T0 + 120)
        assert alerts == []

    def test_app_url_rule(self, rig, dev_key):
        rule = monitor.WatchRule(kind="app_url", value="https://app.example/", label="app")
        other = core.generate_keypair()
        submit(rig, dev_key, data=b"ours")
        submit(rig, other, data=b"theirs", app_url="https://elsewhere.example/")
        state = monitor.MonitorState(log_id=rig["log"].log_id)
        state, alerts = monitor.poll(rig["log"], state, [rule], now=T0)
        assert len(alerts) == 1
        assert alerts[0].app_url == "https://app.example/"

    def test_equivocation_detected(self, rig, tmp_path, log_key, dev_key):
        # A second log instance with the same identity but different content:
        # same size, different root. Replaying the monitor against it must
        # trip the consistency check.
        state = monitor.MonitorState(log_id=rig["log"].log_id)
        submit(rig, dev_key, data=b"honest-1")
        state, alerts = monitor.poll(rig["log"], state, [], now=T0)
        assert alerts == []

        shadow_service = LogService(tmp_path / "shadow", log_key, clock=rig["clock"])
        shadow_leaf = make_leaf(dev_key, data=b"forged-1", submitted_at=rig["clock"]())
        shadow_service.handle_submit(SubmissionRequest(shadow_leaf))
        shadow_server = LogHTTPServer(shadow_service).start()
        try:
            state, alerts = monitor.poll(
                rig["log"], state, [], now=T0 + 60,
                client=LogClient(shadow_server.base_url),
            )
        finally:
            shadow_server.stop()
            shadow_service.close()
        assert state.suspect
        assert len(alerts) == 1
        assert alerts[0].kind == "equivocation"
        assert state.last.verified_against_prev is False
        assert state.evidence  # both heads retained

    def test_forged_sth_signature_flagged(self, rig, dev_key):
        state = monitor.MonitorState(log_id=rig["log"].log_id)
        rogue = core.generate_keypair()
        fake_identity = core.LogIdentity.from_public(rogue.public, rig["server"].base_url)
        # Monitor trusts `fake_identity` key, but the server signs with its own.
        state = monitor.MonitorState(log_id=fake_identity.log_id)
        state, alerts = monitor.poll(fake_identity, state, [], now=T0)
        assert state.suspect
        assert alerts and alerts[0].kind == "equivocation"

    def test_state_round_trip_no_duplicate_alerts(self, rig, tmp_path, dev_key):
        rule = monitor.WatchRule(kind="developer_key", value=dev_key.public, label="k")
        state_dir = tmp_path / "state"
        state = monitor.MonitorState.load(state_dir, rig["log"].log_id)
        submit(rig, dev_key)
        state, alerts = monitor.poll(rig["log"], state, [rule], now=T0)
        assert len(alerts) == 1
        state.save(state_dir)

        reloaded = monitor.MonitorState.load(state_dir, rig["log"].log_id)
        assert reloaded.to_obj() == state.to_obj()
        reloaded, alerts = monitor.poll(rig["log"], reloaded, [rule], now=T0 + 60)
        assert alerts == []

    def test_network_error_leaves_state_unchanged(self, rig):
        from wait.errors import NetworkError

        state = monitor.MonitorState(log_id=rig["log"].log_id)
        state, _ = monitor.poll(rig["log"], state, [], now=T0)
        snapshot = state.to_obj()
        unreachable = core.LogIdentity(
            log_id=rig["log"].log_id,
            public=rig["log"].public,
            base_url="http://127.0.0.1:1",
        )
        with pytest.raises(NetworkError):
            monitor.poll(unreachable, state, [], now=T0 + 60)
        assert state.to_obj() == snapshot

    def test_honest_log_replay_schedule(self, rig, dev_key):
        # Scripted submissions; every poll verifies and alert count matches
        # exactly the rule-matching new leaves.
        rule = monitor.WatchRule(kind="developer_key", value=dev_key.public, label="k")
        state = monitor.MonitorState(log_id=rig["log"].log_id)
        schedule = [1, 0, 2, 0, 3]
        total = 0
        for round_index, count in enumerate(schedule):
            for j in range(count):
                submit(rig, dev_key, data=bytes([round_index, j]),
                       app_url=f"https://app.example/{round_index}/{j}")
            state, alerts = monitor.poll(rig["log"], state, [rule], now=T0 + round_index)
            assert len(alerts) == count
            assert state.last.verified_against_prev
            total += count
        assert total == sum(schedule)


class TestAuditRelease:
    def test_all_checks_pass(self, rig, dev_key):
        leaf, promise = submit(rig, dev_key)
        report = monitor.audit_release(rig["log"], promise.leaf_hash)
        assert report["checks"] == {
            "sth_signature": True,
            "inclusion_proof": True,
            "developer_signature": True,
        }
        assert report["leaf_index"] == 0

    def test_unknown_leaf(self, rig):
        with pytest.raises(UnknownLeafError):
            monitor.audit_release(rig["log"], b"\x09" * 32)

    def test_forged_stored_signature_detected(self, rig, dev_key):
        leaf, promise = submit(rig, dev_key)
        record = rig["service"].log._records[0]
        sig = bytearray(record.leaf.developer_signature)
        sig[0] ^= 0x01
        forged_leaf = replace(record.leaf, developer_signature=bytes(sig))
        rig["service"].log._records[0] = replace(record, leaf=forged_leaf)
        report = monitor.audit_release(rig["log"], promise.leaf_hash)
        assert report["checks"]["developer_signature"] is False
        assert report["checks"]["inclusion_proof"] is True


class TestWatchRules:
    def test_wire_round_trip(self, dev_key):
        rule = monitor.WatchRule(kind="developer_key", value=dev_key.public, label="x")
        assert monitor.WatchRule.from_obj(rule.to_obj()) == rule
        rule = monitor.WatchRule(kind="app_url", value="https://a.example/", label="y")
        assert monitor.WatchRule.from_obj(rule.to_obj()) == rule

    def test_bad_kind_rejected(self):
        with pytest.raises(Exception):
            monitor.WatchRule(kind="hostname", value="x", label="z")
