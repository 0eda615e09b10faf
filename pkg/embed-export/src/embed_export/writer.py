"""Writer for the extractor's external token-vector file format.

    dim=<d> count=<n>
    <sentence_id>\t<token_index>\t<d space-separated decimal floats>
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def write_vector_file(path: str | Path, dim: int, rows) -> int:
    """rows: iterable of (sentence_id, token_index, vector). Returns count."""
    rows = list(rows)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"dim={dim} count={len(rows)}\n")
        for sentence_id, index, vector in rows:
            vector = np.asarray(vector, dtype=np.float64)
            if vector.shape != (dim,):
                raise ValueError(
                    f"vector for ({sentence_id!r}, {index}) has shape {vector.shape}, "
                    f"expected ({dim},)"
                )
            values = " ".join(repr(float(v)) for v in vector)
            handle.write(f"{sentence_id}\t{index}\t{values}\n")
    return len(rows)
