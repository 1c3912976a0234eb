"""Fetch concept relations from the UMLS terminology service (UTS REST API).

Responses are cached per CUI in a JSON file so reruns are offline. The API
key is read from ``UMLS_API_KEY`` and never logged.
"""

from __future__ import annotations

import json
import logging
import os
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import httpx

from .canonical import RELATION_CODES, RelationRow
from .matcher import CUI_RE

log = logging.getLogger(__name__)

API_KEY_ENV = "UMLS_API_KEY"
BASE_URL = "https://uts-ws.nlm.nih.gov/rest"
# UTS spells synonymy "SY"; the relations file uses "SYN"
_LABELS = {"SY": "SYN"}
RETRY_STATUS = frozenset({401, 403, 408, 429, 500, 502, 503, 504})


class _RedactApiKey(logging.Filter):
    """httpx logs full request URLs, and UTS takes the key as a query parameter."""

    _pattern = re.compile(r"(apiKey=)[^&\s\"']+")

    def filter(self, record: logging.LogRecord) -> bool:
        msg = record.getMessage()
        redacted = self._pattern.sub(r"\1***", msg)
        if redacted != msg:
            record.msg, record.args = redacted, ()
        return True


_redactor = _RedactApiKey()


class FetchConfigError(RuntimeError):
    pass


@dataclass
class FetchResult:
    rows: list[RelationRow] = field(default_factory=list)
    errors: dict[str, str] = field(default_factory=dict)
    requests_made: int = 0


def _related_cui(related_id: str) -> Optional[str]:
    # concept-level relations point at .../CUI/Cxxxxxxx; atom-level ones at /AUI/
    parts = related_id.rstrip("/").split("/")
    if len(parts) >= 2 and parts[-2] == "CUI" and CUI_RE.match(parts[-1]):
        return parts[-1]
    return None


def rows_from_payload(cui: str, results: Iterable[dict]) -> list[RelationRow]:
    """Convert UTS relation records for ``cui`` into relations-file rows.

    UTS lists ``relationLabel`` from the related concept's side: a PAR record
    means the related concept is the parent of ``cui``, which the file writes
    as ``related PAR cui``.
    """
    rows = []
    for rec in results:
        label = rec.get("relationLabel", "")
        label = _LABELS.get(label, label)
        other = _related_cui(rec.get("relatedId", ""))
        if label in RELATION_CODES and other and other != cui:
            rows.append(RelationRow(other, label, cui))
    return rows


class RelationsClient:
    def __init__(
        self,
        api_key: str,
        client: Optional[httpx.Client] = None,
        base_url: str = BASE_URL,
        version: str = "current",
        max_retries: int = 4,
        backoff: float = 1.0,
        min_interval: float = 0.05,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self._key = api_key
        for name in ("httpx", "httpcore"):
            logger = logging.getLogger(name)
            if _redactor not in logger.filters:
                logger.addFilter(_redactor)
        self.client = client or httpx.Client(timeout=30.0)
        self.base_url = base_url.rstrip("/")
        self.version = version
        self.max_retries = max_retries
        self.backoff = backoff
        self.min_interval = min_interval
        self.sleep = sleep
        self.requests_made = 0
        self._last = 0.0

    def __repr__(self) -> str:
        return f"RelationsClient(base_url={self.base_url!r}, version={self.version!r})"

    def _get(self, url: str, params: dict) -> Optional[dict]:
        """GET with throttling and exponential backoff; None on 404."""
        delay = self.backoff
        for attempt in range(self.max_retries + 1):
            wait = self.min_interval - (time.monotonic() - self._last)
            if wait > 0:
                self.sleep(wait)
            self._last = time.monotonic()
            self.requests_made += 1
            try:
                resp = self.client.get(url, params={**params, "apiKey": self._key})
            except httpx.TransportError as exc:
                problem = f"{type(exc).__name__}"
            else:
                if resp.status_code == 404:
                    return None
                if resp.status_code == 200:
                    return resp.json()
                if resp.status_code not in RETRY_STATUS:
                    raise RuntimeError(f"HTTP {resp.status_code}")
                problem = f"HTTP {resp.status_code}"
            if attempt == self.max_retries:
                raise RuntimeError(f"{problem} after {attempt + 1} attempts")
            log.debug("retrying %s in %.1fs (%s)", url, delay, problem)
            self.sleep(delay)
            delay *= 2
        raise AssertionError("unreachable")

    def relations(self, cui: str) -> list[RelationRow]:
        url = f"{self.base_url}/content/{self.version}/CUI/{cui}/relations"
        rows: list[RelationRow] = []
        page, pages = 1, 1
        while page <= pages:
            payload = self._get(url, {"pageNumber": page, "pageSize": 100})
            if payload is None:
                break
            rows.extend(rows_from_payload(cui, payload.get("result", [])))
            pages = int(payload.get("pageCount", 1))
            page += 1
        return rows


def _load_cache(path: Optional[str]) -> dict[str, list[list[str]]]:
    if path and os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    return {}


def _save_cache(path: str, cache: dict) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(cache, fh, indent=1, sort_keys=True)
    os.replace(tmp, path)


def fetch_relations_remote(
    cuis: Iterable[str],
    api_key: Optional[str] = None,
    cache_path: Optional[str] = None,
    client: Optional[RelationsClient] = None,
) -> FetchResult:
    """Relations for every CUI, from cache when possible.

    Failures are recorded per CUI in ``FetchResult.errors``; the remaining
    rows are still returned.
    """
    wanted = sorted(set(cuis))
    cache = _load_cache(cache_path)
    result = FetchResult()
    todo = [c for c in wanted if c not in cache]
    if todo and client is None:
        api_key = api_key or os.environ.get(API_KEY_ENV)
        if not api_key:
            raise FetchConfigError(f"set {API_KEY_ENV} to fetch relations remotely")
        client = RelationsClient(api_key)
    for cui in todo:
        try:
            rows = client.relations(cui)
        except (RuntimeError, ValueError) as exc:
            result.errors[cui] = str(exc)
            log.warning("relations fetch failed for %s: %s", cui, exc)
            continue
        cache[cui] = [[r.cui_a, r.rel, r.cui_b] for r in rows]
    if todo and cache_path:
        _save_cache(cache_path, cache)
    seen = set()
    for cui in wanted:
        for a, rel, b in cache.get(cui, ()):
            row = RelationRow(a, rel, b)
            if row not in seen:
                seen.add(row)
                result.rows.append(row)
    result.requests_made = client.requests_made if client else 0
    return result
