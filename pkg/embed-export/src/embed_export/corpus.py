"""Minimal reader for the extractor's triplet-file grammar.

Only the tokenized text matters here; annotations after the #### separator
are ignored. Sentence ids are 1-based line numbers, matching how the
extractor loads the same files.
"""

from __future__ import annotations

from pathlib import Path

SEPARATOR = "####"


def read_tokenized(path: str | Path) -> list[tuple[str, list[str]]]:
    """(sentence id, whitespace tokens) per non-blank line."""
    out = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            text, sep, _ = line.rstrip("\n").rpartition(SEPARATOR)
            if not sep:
                raise ValueError(f"line {lineno}: missing {SEPARATOR!r} separator")
            tokens = text.split()
            if not tokens:
                raise ValueError(f"line {lineno}: empty sentence text")
            out.append((str(lineno), tokens))
    return out
