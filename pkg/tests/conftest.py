from __future__ import annotations

import pytest

from wait import core


@pytest.fixture(scope="session")
def dev_key() -> core.DeveloperKey:
    return core.generate_keypair()


@pytest.fixture(scope="session")
def log_key() -> core.DeveloperKey:
    return core.generate_keypair()


def make_leaf(
    key: core.DeveloperKey,
    app_url: str = "https://app.example/",
    data: bytes = b"payload",
    submitted_at: int = 1_700_000_000,
) -> core.ReleaseLeaf:
    leaf = core.ReleaseLeaf(
        app_url=app_url,
        developer_key=key.public,
        digest=core.digest_bytes(data),
        submitted_at=submitted_at,
    )
    return leaf.signed(key)


@pytest.fixture()
def signed_leaf(dev_key) -> core.ReleaseLeaf:
    return make_leaf(dev_key)
