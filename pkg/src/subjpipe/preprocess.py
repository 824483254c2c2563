"""Text normalization: demojization, mention/URL stripping."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

EMPTY_PLACEHOLDER = "[EMPTY]"

_NAME_RE = re.compile(r"[a-z0-9_]+")
MENTION_RE = re.compile(r"(?<!\S)@[A-Za-z0-9_]+")
# lazy body stops before at most one trailing punctuation mark at a boundary
URL_RE = re.compile(r"https?://\S+?(?=[.,!?)]?(?:\s|$))")


@dataclass(frozen=True)
class EmojiTable:
    entries: Mapping[str, str]
    _pattern: re.Pattern = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for key, name in self.entries.items():
            if not key:
                raise ValueError("empty emoji key")
            if not _NAME_RE.fullmatch(name):
                raise ValueError(f"bad emoji name {name!r}")
        object.__setattr__(self, "entries", dict(self.entries))
        if self.entries:
            # longest keys first: alternation picks the first branch that matches
            keys = sorted(self.entries, key=lambda k: (-len(k), k))
            pat = re.compile("|".join(re.escape(k) for k in keys))
        else:
            pat = None
        object.__setattr__(self, "_pattern", pat)

    def __len__(self):
        return len(self.entries)


def load_emoji_table(path=None) -> EmojiTable:
    """Read an ``emoji<TAB>name`` file; the bundled table when no path is given."""
    if path is None:
        text = resources.files("subjpipe").joinpath("data/emoji.tsv").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    entries = {}
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line or (lineno == 1 and line == "emoji\tname"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"emoji table line {lineno}: expected 2 columns")
        entries[parts[0]] = parts[1]
    return EmojiTable(entries)


_default_table = None


def default_table() -> EmojiTable:
    global _default_table
    if _default_table is None:
        _default_table = load_emoji_table()
    return _default_table


def demojize(text: str, table: EmojiTable) -> str:
    if table._pattern is None:
        return text
    return table._pattern.sub(lambda m: f":{table.entries[m.group(0)]}:", text)


def _strip_once(text: str) -> str:
    spans = [m.span() for m in MENTION_RE.finditer(text)]
    spans += [m.span() for m in URL_RE.finditer(text)]
    if not spans:
        return text.strip()
    spans.sort()
    merged = [list(spans[0])]
    for s, e in spans[1:]:
        if s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    out = text[: merged[0][0]]
    for i, (s, e) in enumerate(merged):
        nxt = merged[i + 1][0] if i + 1 < len(merged) else len(text)
        out = out.rstrip() + " " + text[e:nxt].lstrip()
    return out.strip()


def strip_mentions_links(text: str) -> str:
    """Delete @mentions and http(s) URLs, collapsing the whitespace around each
    deletion to a single space.

    Repeats until nothing matches, since a deletion can leave a fresh mention
    at the start of the string (``"@a@b"`` -> ``"@b"``).
    """
    prev = text
    cur = _strip_once(text)
    while cur != prev:
        prev, cur = cur, _strip_once(cur)
    return cur


def pos_attention_hook(text: str) -> str:
    """POS-tagging / attention-mask stage. Identity: it did not pay off."""
    return text


def preprocess(text: str, table: EmojiTable | None = None) -> str:
    if table is None:
        table = default_table()
    out = strip_mentions_links(demojize(text, table))
    out = pos_attention_hook(out)
    return out if out else EMPTY_PLACEHOLDER
