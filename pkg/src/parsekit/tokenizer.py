"""Rule-based tokenization and sentence splitting for raw-text input.

Tokens are whitespace chunks with leading and trailing punctuation detached;
sentence boundaries are sentence-final punctuation followed by whitespace
and an upper-case or digit start.  A fixture list of abbreviations keeps
forms like ``Dr.`` and ``U.S.`` intact and suppresses boundaries after them.
"""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources

_LEADING = "\"'`([{“‘«"
_TRAILING = "\"'`)]}”’».,;:!?"

_INITIALS = re.compile(r"(?:\w\.)+\Z")
_ELLIPSIS = re.compile(r"\.\.\.+\Z")
_BOUNDARY = re.compile(
    r"(?<=[.!?])([\"'”’)\]]*)(\s+)(?=[\"'“‘(\[]?[A-Z0-9])"
)


@lru_cache(maxsize=1)
def abbreviations() -> frozenset[str]:
    """Lower-cased abbreviation forms bundled with the package."""
    text = resources.files("parsekit.data").joinpath("abbreviations.txt").read_text("utf-8")
    return frozenset(
        line.strip().lower() for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    )


def _keeps_period(chunk: str) -> bool:
    """True when a chunk ending in '.' should keep it attached."""
    return chunk.lower() in abbreviations() or bool(_INITIALS.fullmatch(chunk))


def _split_chunk(chunk: str) -> list[str]:
    lead: list[str] = []
    while chunk and chunk[0] in _LEADING:
        lead.append(chunk[0])
        chunk = chunk[1:]
    trail: list[str] = []
    while chunk:
        ellipsis = _ELLIPSIS.search(chunk)
        if ellipsis and len(chunk) > ellipsis.end() - ellipsis.start():
            trail.append(chunk[ellipsis.start() :])
            chunk = chunk[: ellipsis.start()]
            continue
        if chunk[-1] not in _TRAILING or len(chunk) == 1:
            break
        if chunk[-1] == "." and _keeps_period(chunk):
            break
        trail.append(chunk[-1])
        chunk = chunk[:-1]
    if chunk:
        lead.append(chunk)
    lead.extend(reversed(trail))
    return lead


def tokenize_sentence(sentence: str) -> list[str]:
    """Split one sentence into tokens."""
    tokens: list[str] = []
    for chunk in sentence.split():
        tokens.extend(_split_chunk(chunk))
    return tokens


def split_sentences(text: str) -> list[str]:
    """Split raw text into sentence strings."""
    sentences: list[str] = []
    start = 0
    for match in _BOUNDARY.finditer(text):
        last = re.search(r"\S+\Z", text[: match.start(1)])
        if last and last.group().endswith(".") and _keeps_period(last.group()):
            continue
        sentence = text[start : match.start(2)].strip()
        if sentence:
            sentences.append(sentence)
        start = match.end(2)
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def tokenize(text: str) -> list[list[str]]:
    """Raw text to tokenized sentences; empty text yields zero sentences."""
    result = []
    for sentence in split_sentences(text):
        tokens = tokenize_sentence(sentence)
        if tokens:
            result.append(tokens)
    return result
