"""Checkpoint files: a UTF-8 header manifest followed by raw tensors.

Layout:

    shiftpair-checkpoint v1
    seed=<int>
    dims token=.. action=.. distance=.. hidden=.. mlp=.. max_distance=..
    external=<0|1>
    vocab_hash=<sha256 of the vocabulary, lookup mode only>
    tensor <name> <dim> [<dim> ...]
    ...
    vocab <word>
    ...
    end-header
    <float64 little-endian tensor data, concatenated in manifest order>

Loading validates the version, every tensor shape against the declared
dimensions, and the vocabulary hash.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CheckpointError, DimMismatchError
from .scorer import Dims, ScorerParams, Vocabulary, array_specs

MAGIC = "shiftpair-checkpoint v1"


def save_checkpoint(path: str | Path, params: ScorerParams, seed: int = 0) -> None:
    dims = params.dims
    lines = [
        MAGIC,
        f"seed={seed}",
        "dims "
        + " ".join(
            f"{k}={getattr(dims, k)}"
            for k in ("token", "action", "distance", "hidden", "mlp", "max_distance")
        ),
        f"external={0 if params.vocab is not None else 1}",
    ]
    if params.vocab is not None:
        lines.append(f"vocab_hash={params.vocab.digest()}")
    specs = array_specs(dims, len(params.vocab) if params.vocab else None)
    for name, shape in specs:
        lines.append(f"tensor {name} " + " ".join(str(d) for d in shape))
    if params.vocab is not None:
        lines.extend(f"vocab {w}" for w in params.vocab.words)
    lines.append("end-header")
    header = ("\n".join(lines) + "\n").encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(header)
        for name, _ in specs:
            handle.write(np.ascontiguousarray(params.arrays[name], dtype="<f8").tobytes())


@dataclass(frozen=True)
class LoadedCheckpoint:
    params: ScorerParams
    seed: int


def load_checkpoint(path: str | Path) -> LoadedCheckpoint:
    raw = Path(path).read_bytes()
    marker = b"end-header\n"
    cut = raw.find(marker)
    if cut < 0:
        raise CheckpointError("missing end-header marker")
    header = raw[:cut].decode("utf-8").splitlines()
    blob = raw[cut + len(marker):]
    if not header or header[0] != MAGIC:
        raise CheckpointError(f"unrecognized checkpoint header {header[:1]!r}")

    seed = 0
    dims_kv: dict[str, int] = {}
    external = False
    vocab_hash = None
    tensors: list[tuple[str, tuple[int, ...]]] = []
    words: list[str] = []
    for line in header[1:]:
        if line.startswith("seed="):
            seed = int(line.split("=", 1)[1])
        elif line.startswith("dims "):
            dims_kv = {
                k: int(v) for k, v in (item.split("=", 1) for item in line.split()[1:])
            }
        elif line.startswith("external="):
            external = line.split("=", 1)[1] == "1"
        elif line.startswith("vocab_hash="):
            vocab_hash = line.split("=", 1)[1]
        elif line.startswith("tensor "):
            parts = line.split()
            tensors.append((parts[1], tuple(int(d) for d in parts[2:])))
        elif line.startswith("vocab "):
            words.append(line[len("vocab "):])
        else:
            raise CheckpointError(f"unrecognized header line {line!r}")

    dims = Dims(**dims_kv)
    vocab = None if external else Vocabulary(tuple(words))
    if vocab is not None and vocab_hash != vocab.digest():
        raise CheckpointError("vocabulary hash does not match the stored words")
    expected = array_specs(dims, len(vocab) if vocab else None)
    if [(n, tuple(s)) for n, s in tensors] != [(n, tuple(s)) for n, s in expected]:
        raise DimMismatchError(
            "checkpoint tensor manifest does not match the declared dimensions"
        )
    total = sum(int(np.prod(s)) for _, s in tensors)
    data = np.frombuffer(blob, dtype="<f8")
    if data.size != total:
        raise DimMismatchError(
            f"checkpoint payload holds {data.size} floats, manifest needs {total}"
        )
    arrays = {}
    offset = 0
    for name, shape in tensors:
        size = int(np.prod(shape))
        arrays[name] = data[offset : offset + size].reshape(shape).copy()
        offset += size
    return LoadedCheckpoint(params=ScorerParams(dims, vocab, arrays), seed=seed)
