"""The documented command-line surfaces, driven end to end in-process."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from wait import bundler, core, harness, logd, monitor, verifier
from wait.harness import StaticAppServer, generate_demo_bundle
from wait.logd import LogHTTPServer, LogService


@pytest.fixture()
def log_server(tmp_path):
    key = core.generate_keypair()
    service = LogService(tmp_path / "logd-data", key)
    server = LogHTTPServer(service).start()
    yield server
    server.stop()
    service.close()


def write_logs_file(path: Path, server: LogHTTPServer) -> Path:
    path.write_text(json.dumps([server.identity().to_obj()]), "utf-8")
    return path


class TestBundlerCli:
    def test_keygen_scan_seal_submit_emit(self, tmp_path, log_server, capsys):
        bundle = tmp_path / "bundle"
        (bundle / "sub").mkdir(parents=True)
        (bundle / "app.js").write_bytes(b"console.log(1);\n")
        (bundle / "index.html").write_text(
            '<html><head><title>t</title></head><body>'
            '<script src="app.js"></script></body></html>'
        )
        key_file = tmp_path / "dev.key.json"
        assert bundler.main(["keygen", "--out", str(key_file)]) == 0
        assert json.loads(key_file.read_text())["algorithm"] == "ed25519"

        assert bundler.main(["scan", "--bundle", str(bundle)]) == 0

        leaf_file = tmp_path / "leaf.json"
        csp_file = tmp_path / "csp.txt"
        code = bundler.main([
            "seal", "--bundle", str(bundle), "--key", str(key_file),
            "--app-url", "https://app.example/", "--leaf-out", str(leaf_file),
            "--csp-out", str(csp_file), "--timestamp", str(harness.T0),
        ])
        assert code == 0
        leaf = core.decode_release_leaf(leaf_file.read_bytes())
        assert leaf.verify_signature()
        assert "default-src 'self'" in csp_file.read_text()

        logs_file = write_logs_file(tmp_path / "logs.json", log_server)
        promises_file = tmp_path / "promises.json"

        # the CLI-sealed leaf carries a frozen timestamp; submit a fresh one
        key = logd.load_key_file(key_file)
        import time

        fresh = core.ReleaseLeaf(
            app_url="https://app.example/",
            developer_key=key.public,
            digest=leaf.digest,
            submitted_at=int(time.time()),
        ).signed(key)
        fresh_leaf_file = tmp_path / "fresh-leaf.json"
        fresh_leaf_file.write_bytes(core.canonical_encode(fresh))
        code = bundler.main([
            "submit", "--leaf", str(fresh_leaf_file), "--logs", str(logs_file),
            "--promises-out", str(promises_file),
        ])
        assert code == 0
        promises = json.loads(promises_file.read_text())
        assert len(promises) == 1

        code = bundler.main(["emit-config", "--promises", str(promises_file)])
        assert code == 0
        out = capsys.readouterr().out
        assert "X-WAIT-Inclusion-Promise:" in out
        assert "add_header" in out

        code = bundler.main([
            "renew", "--leaf", str(fresh_leaf_file), "--key", str(key_file),
            "--logs", str(logs_file),
        ])
        assert code == 0

    def test_scan_violations_exit_code(self, tmp_path):
        bundle = tmp_path / "bad"
        bundle.mkdir()
        (bundle / "index.html").write_text("<html><body><script>x()</script></body></html>")
        assert bundler.main(["scan", "--bundle", str(bundle)]) == 1

    def test_submit_rejection_exit_code(self, tmp_path, log_server, capsys):
        key = core.generate_keypair()
        key_file = tmp_path / "k.json"
        logd.write_key_file(key_file, key)
        logs_file = write_logs_file(tmp_path / "logs.json", log_server)

        import time

        now = int(time.time())
        for payload in (b"v1", b"v2"):
            leaf = core.ReleaseLeaf(
                app_url="https://app.example/",
                developer_key=key.public,
                digest=core.digest_bytes(payload),
                submitted_at=now,
            ).signed(key)
            leaf_file = tmp_path / f"leaf-{payload.decode()}.json"
            leaf_file.write_bytes(core.canonical_encode(leaf))
        assert bundler.main([
            "submit", "--leaf", str(tmp_path / "leaf-v1.json"), "--logs", str(logs_file),
        ]) == 0
        assert bundler.main([
            "submit", "--leaf", str(tmp_path / "leaf-v2.json"), "--logs", str(logs_file),
        ]) == 1
        assert "ERR_ACTIVE_PROMISE" in capsys.readouterr().err


class TestLogdCli:
    def test_keygen(self, tmp_path, capsys):
        out_file = tmp_path / "log.key.json"
        assert logd.main(["keygen", "--out", str(out_file)]) == 0
        record = json.loads(out_file.read_text())
        assert set(record) == {"algorithm", "private", "public"}
        printed = capsys.readouterr().out
        assert "log_id:" in printed

    def test_config_parsing(self, tmp_path):
        config = tmp_path / "logd.conf"
        config.write_text(
            "# demo config\n"
            "listen = 127.0.0.1:0\n"
            "promise_validity = 3600\n"
            "clock_tolerance = 60\n"
            "freshness_window = 30\n"
            "enforce_single_active = false\n"
        )
        values = logd.parse_config(config)
        policy = logd.policy_from_config(values)
        assert policy.promise_validity == 3600
        assert policy.enforce_single_active is False


class TestVerifyCli:
    def _serve_sealed_app(self, tmp_path, log_server):
        import time

        bundle = tmp_path / "bundle"
        bundle.mkdir()
        (bundle / "app.js").write_bytes(b"console.log('cli');\n")
        (bundle / "index.html").write_text(
            '<html><head><title>t</title></head><body>'
            '<script src="app.js"></script></body></html>'
        )
        dev_key = core.generate_keypair()
        app_server = StaticAppServer().start()
        app_url = f"{app_server.base_url}/index.html"
        manifest, leaf = bundler.seal_bundle(
            bundle, "index.html", dev_key, app_url, now=int(time.time())
        )
        outcomes = bundler.submit_release(leaf, [log_server.identity()])
        assert outcomes[0].ok
        app_server.load_dir(bundle)
        app_server.headers = {
            core.PROMISE_HEADER: core.promise_to_header([outcomes[0].promise]),
            verifier.CSP_HEADER: manifest.csp,
        }
        return app_server, app_url

    def test_allow_then_downgrade_block(self, tmp_path, log_server, capsys):
        app_server, app_url = self._serve_sealed_app(tmp_path, log_server)
        try:
            trust_file = tmp_path / "trust.json"
            trust_file.write_text(json.dumps([log_server.identity().to_obj()]))
            pin_file = tmp_path / "pins.json"

            code = verifier.main([
                app_url, "--trust-store", str(trust_file), "--pinstore", str(pin_file),
            ])
            assert code == 0
            assert "ALLOW" in capsys.readouterr().out
            assert pin_file.exists()

            del app_server.headers[core.PROMISE_HEADER]
            code = verifier.main([
                app_url, "--trust-store", str(trust_file), "--pinstore", str(pin_file),
            ])
            assert code == 2
            assert "DOWNGRADE" in capsys.readouterr().out
        finally:
            app_server.stop()

    def test_offline_snapshot(self, tmp_path, log_server, capsys):
        app_server, app_url = self._serve_sealed_app(tmp_path, log_server)
        try:
            snapshot = tmp_path / "snapshot"
            snapshot.mkdir()
            for name, content in app_server.files.items():
                (snapshot / name).write_bytes(content)
            (snapshot / "headers.json").write_text(json.dumps(app_server.headers))
            trust_file = tmp_path / "trust.json"
            trust_file.write_text(json.dumps([log_server.identity().to_obj()]))

            code = verifier.main([
                app_url, "--trust-store", str(trust_file), "--offline", str(snapshot),
            ])
            assert code == 0
            assert "ALLOW" in capsys.readouterr().out
        finally:
            app_server.stop()


class TestMonitorCli:
    def test_once_and_audit(self, tmp_path, log_server, capsys, dev_key):
        import time

        from wait.logd import SubmissionRequest

        leaf = core.ReleaseLeaf(
            app_url="https://watched.example/",
            developer_key=dev_key.public,
            digest=core.digest_bytes(b"watched"),
            submitted_at=int(time.time()),
        ).signed(dev_key)
        promise = log_server.service.handle_submit(SubmissionRequest(leaf))

        logs_file = write_logs_file(tmp_path / "logs.json", log_server)
        watch_file = tmp_path / "watch.json"
        watch_file.write_text(json.dumps([
            {"kind": "app_url", "value": "https://watched.example/", "label": "watched"}
        ]))
        state_dir = tmp_path / "state"

        code = monitor.main([
            "--logs", str(logs_file), "--watch", str(watch_file),
            "--state", str(state_dir), "--once",
        ])
        assert code == 0
        lines = [l for l in capsys.readouterr().out.splitlines() if l.strip()]
        assert len(lines) == 1
        alert = json.loads(lines[0])
        assert alert["kind"] == "release"
        assert alert["rule_label"] == "watched"

        code = monitor.main([
            "--logs", str(logs_file), "--state", str(state_dir),
            "--audit", core.b64u_encode(promise.leaf_hash),
        ])
        assert code == 0
        report = json.loads(capsys.readouterr().out.splitlines()[0])
        assert report["report"]["checks"]["inclusion_proof"] is True


class TestHarnessCli:
    def test_run_single_scenario(self, tmp_path, capsys):
        code = harness.main(["run", "happy_path", "--workdir", str(tmp_path / "w")])
        assert code == 0
        assert "PASS happy_path" in capsys.readouterr().out

    def test_bench_small(self, capsys):
        code = harness.main(["bench", "--iterations", "3"])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["iterations"] == 3

    def test_report_written(self, tmp_path, capsys):
        report_file = tmp_path / "report.json"
        code = harness.main([
            "run", "downgrade", "--workdir", str(tmp_path / "w"),
            "--report", str(report_file),
        ])
        assert code == 0
        payload = json.loads(report_file.read_text())
        assert payload["reports"][0]["scenario"] == "downgrade"
        assert payload["reports"][0]["passed"] is True

    def test_fixtures_command(self, tmp_path, capsys):
        code = harness.main(["fixtures", "--out", str(tmp_path / "fx")])
        assert code == 0
        assert (tmp_path / "fx" / "index.json").exists()
