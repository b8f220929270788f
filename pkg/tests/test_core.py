from __future__ import annotations

import random

import pytest

from wait import core, merklelog
from wait.errors import (
    BadKeyError,
    EncodingError,
    HeaderSyntaxError,
    UrlError,
)

from .conftest import make_leaf

# Well-known SHA-256 values, frozen from the FIPS 180-2 test vectors.
SHA256_EMPTY = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
SHA256_ABC = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"

# RFC 8032 section 7.1, test vector 1 (empty message).
RFC8032_SK = bytes.fromhex(
    "9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60"
)
RFC8032_PK = bytes.fromhex(
    "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a"
)
RFC8032_SIG = bytes.fromhex(
    "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e06522490155"
    "5fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b"
)


class TestDigest:
    def test_empty_input(self):
        assert core.digest_bytes(b"").to_text() == f"sha256:{SHA256_EMPTY}"

    def test_abc(self):
        assert core.digest_bytes(b"abc").to_text() == f"sha256:{SHA256_ABC}"

    def test_deterministic(self):
        d = b"some document bytes"
        assert core.digest_bytes(d) == core.digest_bytes(d)

    def test_text_round_trip(self):
        d = core.digest_bytes(b"xyz")
        assert core.Digest.from_text(d.to_text()) == d

    @pytest.mark.parametrize(
        "text",
        ["sha256:ZZ", "sha384:" + "0" * 64, "sha256:" + "A" * 64, SHA256_EMPTY],
    )
    def test_bad_text_rejected(self, text):
        with pytest.raises(EncodingError):
            core.Digest.from_text(text)

    def test_wrong_length_rejected(self):
        with pytest.raises(EncodingError):
            core.Digest(value=b"\x00" * 31)


class TestSignatures:
    def test_round_trip(self, dev_key):
        msg = b"release announcement"
        sig = core.sign(dev_key.private, msg)
        assert core.verify(dev_key.public, msg, sig)

    def test_any_bit_flip_fails(self, dev_key):
        msg = bytearray(b"release announcement")
        sig = core.sign(dev_key.private, bytes(msg))
        for byte_index in range(len(msg)):
            mutated = bytearray(msg)
            mutated[byte_index] ^= 0x01
            assert not core.verify(dev_key.public, bytes(mutated), sig)

    def test_signature_flip_fails(self, dev_key):
        msg = b"m"
        sig = bytearray(core.sign(dev_key.private, msg))
        sig[10] ^= 0x80
        assert not core.verify(dev_key.public, msg, bytes(sig))

    def test_rfc8032_vector_1(self):
        assert core.sign(RFC8032_SK, b"") == RFC8032_SIG
        assert core.verify(RFC8032_PK, b"", RFC8032_SIG)

    def test_malformed_keys(self):
        with pytest.raises(BadKeyError):
            core.sign(b"\x01" * 16, b"m")
        with pytest.raises(BadKeyError):
            core.verify(b"\x01" * 16, b"m", b"\x00" * 64)


class TestCanonicalEncoding:
    def test_leaf_round_trip(self, signed_leaf):
        data = core.canonical_encode(signed_leaf)
        again = core.decode_release_leaf(data)
        assert again == signed_leaf
        assert core.canonical_encode(again) == data

    def test_fieldwise_equal_leaves_encode_identically(self, dev_key):
        a = make_leaf(dev_key, data=b"same")
        b = core.ReleaseLeaf(
            app_url=a.app_url,
            developer_key=a.developer_key,
            digest=a.digest,
            submitted_at=a.submitted_at,
            developer_signature=a.developer_signature,
        )
        assert core.canonical_encode(a) == core.canonical_encode(b)

    def test_matches_hand_sorted_reference(self):
        # Expected string assembled by hand: keys in lexicographic order,
        # compact separators, digest in its textual form.
        key = bytes(range(32))
        sig = bytes(range(64))
        leaf = core.ReleaseLeaf(
            app_url="https://app.example/",
            developer_key=key,
            digest=core.Digest(value=b"\x11" * 32),
            submitted_at=7,
            developer_signature=sig,
        )
        expected = (
            '{"app_url":"https://app.example/"'
            f',"developer_key":"{core.b64u_encode(key)}"'
            f',"developer_signature":"{core.b64u_encode(sig)}"'
            f',"digest":"sha256:{"11" * 32}"'
            ',"submitted_at":7}'
        ).encode()
        assert core.canonical_encode(leaf) == expected
        # Feeding the fields in a permuted order yields the same bytes.
        permuted = core.ReleaseLeaf(
            developer_signature=sig,
            submitted_at=7,
            digest=core.Digest(value=b"\x11" * 32),
            developer_key=key,
            app_url="https://app.example/",
        )
        assert core.canonical_encode(permuted) == expected

    def test_negative_timestamp_rejected(self, dev_key):
        with pytest.raises(EncodingError):
            core.ReleaseLeaf(
                app_url="https://app.example/",
                developer_key=dev_key.public,
                digest=core.digest_bytes(b"x"),
                submitted_at=-1,
            )

    def test_promise_round_trip(self, dev_key, log_key):
        promise = make_promise(dev_key, log_key)
        data = core.canonical_encode(promise)
        assert core.decode_promise(data) == promise

    def test_tree_head_round_trip(self, log_key):
        head = core.SignedTreeHead(
            log_id=core.sha256(log_key.public),
            tree_size=3,
            root_hash=b"\x42" * 32,
            timestamp=1_700_000_123,
        ).signed(log_key.private)
        data = core.canonical_encode(head)
        assert core.decode_tree_head(data) == head
        assert head.verify_signature(log_key.public)

    def test_distinct_records_encode_distinctly(self, dev_key):
        a = make_leaf(dev_key, data=b"one")
        b = make_leaf(dev_key, data=b"two")
        assert core.canonical_encode(a) != core.canonical_encode(b)


class TestAppUrls:
    @pytest.mark.parametrize(
        "url,expected",
        [
            ("https://App.Example/", "https://app.example/"),
            ("https://app.example", "https://app.example/"),
            ("https://app.example:443/x", "https://app.example/x"),
            ("http://127.0.0.1:8080/app.html", "http://127.0.0.1:8080/app.html"),
            ("http://localhost/", "http://localhost/"),
        ],
    )
    def test_accepted_and_normalized(self, url, expected):
        assert core.validate_app_url(url) == expected

    @pytest.mark.parametrize(
        "url",
        [
            "http://app.example/",
            "ftp://app.example/",
            "https://app.example/?q=1",
            "https://app.example/#frag",
            "not a url",
        ],
    )
    def test_rejected(self, url):
        with pytest.raises((EncodingError, UrlError)):
            core.validate_app_url(url)


class TestHeaderCodec:
    def test_single_promise_round_trip(self, dev_key, log_key):
        promise = make_promise(dev_key, log_key)
        value = core.promise_to_header([promise])
        assert "," not in value
        assert core.header_to_promises(value) == [promise]

    def test_two_promises_order_preserved(self, dev_key, log_key):
        other_log = core.generate_keypair()
        p1 = make_promise(dev_key, log_key)
        p2 = make_promise(dev_key, other_log)
        value = core.promise_to_header([p1, p2])
        assert value.count(",") == 1
        assert core.header_to_promises(value) == [p1, p2]

    def test_garbage_raises(self):
        with pytest.raises(HeaderSyntaxError):
            core.header_to_promises("!!!")

    def test_unknown_version_skipped(self, dev_key, log_key):
        promise = make_promise(dev_key, log_key)
        foreign = dict(promise.to_obj(), version=9)
        token = core.b64u_encode(core.canonical_json(foreign))
        value = core.promise_to_header([promise]) + "," + token
        assert core.header_to_promises(value) == [promise]

    def test_only_unknown_versions_yield_empty_list(self, dev_key, log_key):
        promise = make_promise(dev_key, log_key)
        foreign = dict(promise.to_obj(), version=9)
        token = core.b64u_encode(core.canonical_json(foreign))
        assert core.header_to_promises(token) == []

    def test_empty_list_rejected(self):
        with pytest.raises(EncodingError):
            core.promise_to_header([])


class TestLeafHashStability:
    def test_single_field_mutations_never_collide(self, dev_key):
        rng = random.Random(0x57A11)
        base = make_leaf(dev_key, data=b"stability")
        base_bytes = core.canonical_encode(base)
        base_hash = merklelog.leaf_hash(base_bytes)
        seen: dict[bytes, bytes] = {base_hash: base_bytes}
        fields = ["app_url", "developer_key", "digest", "submitted_at", "signature"]
        for _ in range(10_000):
            field = rng.choice(fields)
            obj = base.to_obj()
            if field == "app_url":
                obj["app_url"] = f"https://app.example/v{rng.randrange(1 << 30)}"
            elif field == "developer_key":
                obj["developer_key"] = core.b64u_encode(rng.randbytes(32))
            elif field == "digest":
                obj["digest"] = "sha256:" + rng.randbytes(32).hex()
            elif field == "submitted_at":
                obj["submitted_at"] = rng.randrange(1, 1 << 40)
            else:
                obj["developer_signature"] = core.b64u_encode(rng.randbytes(64))
            mutated_bytes = core.canonical_json(obj)
            if mutated_bytes == base_bytes:
                continue  # mutation landed on the original value
            h = merklelog.leaf_hash(mutated_bytes)
            assert h != base_hash
            # injectivity in practice: same hash implies same bytes
            assert seen.setdefault(h, mutated_bytes) == mutated_bytes


def make_promise(
    dev_key: core.DeveloperKey,
    log_key: core.DeveloperKey,
    app_url: str = "https://app.example/",
    data: bytes = b"payload",
    issued_at: int = 1_700_000_000,
    validity: int = 604_800,
) -> core.InclusionPromise:
    leaf = make_leaf(dev_key, app_url=app_url, data=data, submitted_at=issued_at)
    return core.InclusionPromise(
        log_id=core.sha256(log_key.public),
        leaf_hash=merklelog.leaf_hash(core.canonical_encode(leaf)),
        app_url=app_url,
        digest=leaf.digest,
        developer_key=dev_key.public,
        issued_at=issued_at,
        expires_at=issued_at + validity,
    ).signed(log_key.private)
