"""Shared JSON-over-HTTP call used by the embedder and model adapters."""

from __future__ import annotations

import httpx

from .errors import BackendError


def post_json(client: httpx.Client, url: str, body: dict) -> object:
    """POST JSON and decode the reply, mapping failures onto ``BackendError``."""
    try:
        resp = client.post(url, json=body)
    except httpx.TimeoutException as exc:
        raise BackendError(f"timeout contacting {url}: {exc}", retryable=True) from exc
    except httpx.TransportError as exc:
        raise BackendError(f"transport error contacting {url}: {exc}", retryable=True) from exc
    if resp.status_code != 200:
        retryable = resp.status_code == 429 or resp.status_code >= 500
        raise BackendError(f"{url} returned HTTP {resp.status_code}", retryable=retryable, status=resp.status_code)
    try:
        return resp.json()
    except ValueError:
        raise BackendError(f"{url} returned invalid JSON", retryable=False) from None
