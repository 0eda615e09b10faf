"""External token-vector files.

Normative text format, one vector per (sentence id, token index):

    dim=<d> count=<n>
    <sentence_id>\t<token_index>\t<d space-separated decimal floats>
    ...

The header count must equal the number of rows and every row must carry
exactly d floats.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ParseError
from .scorer import TokenVectors


def write_vectors(path: str | Path, dim: int, rows) -> None:
    """rows: iterable of (sentence_id, token_index, vector)."""
    rows = list(rows)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"dim={dim} count={len(rows)}\n")
        for sentence_id, index, vector in rows:
            if len(vector) != dim:
                raise ParseError(
                    f"vector for ({sentence_id!r}, {index}) has {len(vector)} dims, expected {dim}"
                )
            values = " ".join(repr(float(v)) for v in vector)
            handle.write(f"{sentence_id}\t{index}\t{values}\n")


def read_vectors(path: str | Path) -> TokenVectors:
    path = Path(path)
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().strip()
        parts = dict(
            item.split("=", 1) for item in header.split() if "=" in item
        )
        if "dim" not in parts or "count" not in parts:
            raise ParseError(f"bad vector-file header {header!r}", line=1)
        dim = int(parts["dim"])
        count = int(parts["count"])
        rows = {}
        for lineno, line in enumerate(handle, start=2):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 3:
                raise ParseError("expected <id>\\t<index>\\t<floats>", line=lineno)
            sentence_id, index, values = fields
            vector = np.array([float(v) for v in values.split()])
            if vector.size != dim:
                raise ParseError(
                    f"row has {vector.size} floats, header says {dim}", line=lineno
                )
            rows[(sentence_id, int(index))] = vector
        if len(rows) != count:
            raise ParseError(
                f"header count {count} != {len(rows)} rows", line=1
            )
    return TokenVectors(dim=dim, rows=rows)
