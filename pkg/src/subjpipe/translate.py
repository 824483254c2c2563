"""Language adaptation: translate non-English splits to English.

Backends are anything with a ``name`` and ``translate(text, source_language)``.
Two ship here: an offline table-driven stub, and a small JSON-over-HTTP
adapter selected when ``SUBJPIPE_MT_KEY`` is set.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Mapping, Optional, Protocol

from subjpipe.corpus import LANGUAGES, CorpusSplit, with_texts

logger = logging.getLogger(__name__)

KEY_ENV = "SUBJPIPE_MT_KEY"
URL_ENV = "SUBJPIPE_MT_URL"
FALLTHROUGH_PREFIX = "EN:"
CACHE_HEADER = "lang\tsha256\ttranslation_escaped"

MAX_WORKERS = 4
ATTEMPTS = 3
BACKOFF_SECONDS = 1.0


class TranslationError(RuntimeError):
    pass


class TranslationBackend(Protocol):
    name: str

    def translate(self, text: str, source_language: str) -> str: ...


class StubBackend:
    """Offline lookup table; unmapped text comes back as ``"EN:" + text``."""

    def __init__(self, mapping: Mapping[str, str], name: str = "stub"):
        self.mapping = dict(mapping)
        self.name = name

    def translate(self, text: str, source_language: str) -> str:
        try:
            return self.mapping[text]
        except KeyError:
            return FALLTHROUGH_PREFIX + text


def stub_backend(mapping_file) -> StubBackend:
    path = Path(mapping_file)
    if not path.exists():
        raise TranslationError(f"stub mapping file not found: {path}")
    mapping = {}
    for lineno, line in enumerate(path.read_text("utf-8").split("\n"), start=1):
        if not line:
            continue
        parts = line.rstrip("\r").split("\t")
        if len(parts) != 2:
            raise TranslationError(f"{path}:{lineno}: expected 2 tab-separated columns")
        mapping[parts[0]] = parts[1]
    return StubBackend(mapping, name=f"stub:{path.name}")


class HttpBackend:
    """POSTs ``{"text", "source", "target": "en"}`` as JSON, reads ``{"translation"}``.

    The credential goes in an ``Authorization: Bearer`` header.
    """

    def __init__(self, endpoint: str, api_key: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout = timeout
        self.name = f"http:{endpoint}"

    def translate(self, text: str, source_language: str) -> str:
        # mixed-language splits leave source detection to the service
        source = "auto" if source_language == "multi" else source_language
        body = json.dumps({"text": text, "source": source, "target": "en"})
        req = urllib.request.Request(
            self.endpoint,
            data=body.encode("utf-8"),
            headers={
                "Content-Type": "application/json; charset=utf-8",
                "Authorization": f"Bearer {self.api_key}",
            },
            method="POST",
        )
        with urllib.request.urlopen(req, timeout=self.timeout) as resp:
            payload = json.loads(resp.read().decode("utf-8"))
        out = payload.get("translation")
        if not isinstance(out, str):
            raise TranslationError("malformed backend response: no 'translation' string")
        return out


def resolve_backend(stub_file=None, environ: Optional[Mapping[str, str]] = None):
    """Explicit stub file wins; otherwise the HTTP backend when a key is set,
    else an empty stub (every text falls through as ``EN:...``)."""
    env = os.environ if environ is None else environ
    if stub_file is not None:
        return stub_backend(stub_file)
    key = env.get(KEY_ENV)
    if key:
        url = env.get(URL_ENV)
        if not url:
            raise TranslationError(f"{KEY_ENV} is set but {URL_ENV} names no endpoint")
        return HttpBackend(url, key)
    return StubBackend({})


def content_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n").replace("\r", "\\r")


def _unescape(s: str) -> str:
    out = []
    i = 0
    while i < len(s):
        c = s[i]
        if c == "\\" and i + 1 < len(s):
            nxt = s[i + 1]
            out.append({"t": "\t", "n": "\n", "r": "\r", "\\": "\\"}.get(nxt, "\\" + nxt))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


class TranslationCache:
    """(language, sha256(text)) -> translation, mirrored to an append-only TSV."""

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self.entries: dict[tuple[str, str], str] = {}
        self.hits = 0
        self.misses = 0
        self._lock = threading.Lock()
        if self.path is None:
            return
        if self.path.exists():
            self._load()
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            fresh = not self.path.exists() or self.path.stat().st_size == 0
            with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                if fresh:
                    fh.write(CACHE_HEADER + "\n")
        except OSError as exc:
            raise TranslationError(f"translation cache not writable: {self.path}: {exc}") from None

    def _load(self):
        lines = self.path.read_text("utf-8").split("\n")
        for lineno, line in enumerate(lines, start=1):
            if not line or (lineno == 1 and line == CACHE_HEADER):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise TranslationError(f"{self.path}:{lineno}: corrupt cache line")
            self.entries[(parts[0], parts[1])] = _unescape(parts[2])

    def get(self, language: str, text: str) -> Optional[str]:
        with self._lock:
            val = self.entries.get((language, content_hash(text)))
            if val is None:
                self.misses += 1
            else:
                self.hits += 1
            return val

    def put(self, language: str, text: str, translation: str) -> None:
        key = (language, content_hash(text))
        with self._lock:
            self.entries[key] = translation
            if self.path is None:
                return
            try:
                with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                    fh.write(f"{key[0]}\t{key[1]}\t{_escape(translation)}\n")
            except OSError as exc:
                raise TranslationError(f"translation cache not writable: {self.path}: {exc}") from None


def _with_retry(backend, text: str, language: str, attempts: int, backoff: float,
                sleep: Callable[[float], None]) -> str:
    last = None
    for attempt in range(1, attempts + 1):
        try:
            return backend.translate(text, language)
        except Exception as exc:  # backend errors are opaque; retry everything
            last = exc
            logger.warning("backend %s attempt %d/%d failed: %s",
                           getattr(backend, "name", "?"), attempt, attempts, exc)
            if attempt < attempts:
                sleep(backoff)
    raise last


def translate_split(split: CorpusSplit, backend, cache: TranslationCache, *,
                    max_workers: int = MAX_WORKERS, attempts: int = ATTEMPTS,
                    backoff: float = BACKOFF_SECONDS,
                    sleep: Callable[[float], None] = time.sleep) -> CorpusSplit:
    """Return ``split`` with every text replaced by its English translation.

    English splits pass through untouched. Cached translations are reused;
    the remaining distinct texts go to the backend (up to ``max_workers`` in
    flight). All-or-nothing: one sentence failing after ``attempts`` tries
    fails the whole split.
    """
    if split.language not in LANGUAGES:
        raise TranslationError(f"unsupported language {split.language!r}")
    if split.language == "en":
        return split

    lang = split.language
    texts = [r.text for r in split.rows]
    resolved: dict[str, str] = {}
    pending: dict[str, str] = {}  # text -> first sentence_id needing it
    for row in split.rows:
        if row.text in resolved or row.text in pending:
            continue
        hit = cache.get(lang, row.text)
        if hit is None:
            pending[row.text] = row.sentence_id
        else:
            resolved[row.text] = hit

    if pending:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            futures = [
                (text, sid, pool.submit(_with_retry, backend, text, lang, attempts, backoff, sleep))
                for text, sid in pending.items()
            ]
            failure = None
            # submission order keeps the cache file deterministic
            for text, sid, fut in futures:
                try:
                    out = fut.result()
                except Exception as exc:
                    if failure is None:
                        failure = (sid, exc)
                    continue
                cache.put(lang, text, out)
                resolved[text] = out
        if failure is not None:
            sid, exc = failure
            raise TranslationError(
                f"translation failed for sentence {sid!r} after {attempts} attempts: {exc}")

    return with_texts(split, [resolved[t] for t in texts], language="en")
