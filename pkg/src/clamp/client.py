"""Thin HTTP client for the retrieval service; the CLI's remote mode."""

from __future__ import annotations

import httpx


class ServiceClient:
    def __init__(self, base_url: str, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self._client = httpx.Client(base_url=self.base_url, timeout=timeout)

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _checked(self, response: httpx.Response) -> dict:
        payload = response.json()
        if response.status_code >= 400:
            error = payload.get("error", {})
            raise RuntimeError(f"{error.get('code', response.status_code)}: {error.get('detail', '')}")
        return payload

    def health(self) -> dict:
        return self._checked(self._client.get("/health"))

    def search(self, query: str, k: int = 10) -> dict:
        return self._checked(self._client.get("/search", params={"q": query, "k": k}))

    def classify(self, abc: str, labels: list[tuple[str, str]]) -> dict:
        body = {"abc": abc, "labels": [{"label": l, "prompt": p} for l, p in labels]}
        return self._checked(self._client.post("/classify", json=body))

    def piece(self, source_id: str) -> dict:
        return self._checked(self._client.get(f"/piece/{source_id}"))
