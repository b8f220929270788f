"""HTTP client for the transparency-log API."""

from __future__ import annotations

from typing import Optional

import requests

from . import core, logd, merklelog
from .errors import LogRejectedError, NetworkError


class LogClient:
    def __init__(self, base_url: str, timeout: float = 10.0, session: Optional[requests.Session] = None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.session = session or requests.Session()

    def _request(self, method: str, path: str, **kwargs) -> dict:
        url = f"{self.base_url}{path}"
        try:
            response = self.session.request(method, url, timeout=self.timeout, **kwargs)
        except requests.RequestException as exc:
            raise NetworkError(f"{method} {url}: {exc}") from exc
        if response.status_code >= 400:
            try:
                payload = response.json()
                raise LogRejectedError(payload["code"], payload.get("message", ""))
            except (ValueError, KeyError):
                raise LogRejectedError(
                    "ERR_HTTP", f"{method} {url} -> {response.status_code}"
                ) from None
        try:
            return response.json()
        except ValueError as exc:
            raise NetworkError(f"non-JSON response from {url}") from exc

    def submit(self, leaf: core.ReleaseLeaf) -> core.InclusionPromise:
        obj = self._request(
            "POST", "/wait/v1/submit", json=logd.SubmissionRequest(leaf).to_obj()
        )
        return core.InclusionPromise.from_obj(obj)

    def renew(self, request: logd.RenewalRequest) -> core.InclusionPromise:
        obj = self._request("POST", "/wait/v1/renew", json=request.to_obj())
        return core.InclusionPromise.from_obj(obj)

    def sth(self) -> core.SignedTreeHead:
        return core.SignedTreeHead.from_obj(self._request("GET", "/wait/v1/sth"))

    def inclusion_proof(self, leaf_hash: bytes, tree_size: int) -> merklelog.InclusionProof:
        obj = self._request(
            "GET",
            "/wait/v1/proof",
            params={"leaf_hash": core.b64u_encode(leaf_hash), "tree_size": tree_size},
        )
        return merklelog.InclusionProof.from_obj(obj)

    def consistency(self, old_size: int, new_size: int) -> merklelog.ConsistencyProof:
        obj = self._request(
            "GET", "/wait/v1/consistency", params={"old": old_size, "new": new_size}
        )
        return merklelog.ConsistencyProof.from_obj(obj)

    def entries(self, start: int, end: int) -> list[merklelog.LogRecord]:
        obj = self._request(
            "GET", "/wait/v1/entries", params={"start": start, "end": end}
        )
        return [merklelog.LogRecord.from_obj(o) for o in obj["entries"]]
