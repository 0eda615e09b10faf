"""embed-export: write per-token encoder vectors for a corpus file.

The default encoder is roberta-base via the transformers hub (any model
name or local path works; the hidden size of the chosen model decides the
vector width unless --dim requests a seeded down-projection). Pass
``--encoder random`` for a locally constructed seed-initialized
transformer when no pretrained weights can be fetched: the same
subword-alignment and pooling pipeline runs, only the weights differ.
Layer -1 (the last hidden layer) is the default export layer.
"""

from __future__ import annotations

import argparse
import sys

from .corpus import read_tokenized
from .encoders import HuggingFaceEncoder, Projection, RandomEncoder, TokenAlignmentError
from .writer import write_vector_file


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embed-export", description=__doc__)
    parser.add_argument("--data", required=True, help="corpus file (#### grammar)")
    parser.add_argument("--out", required=True, help="vector file to write")
    parser.add_argument(
        "--encoder", default="roberta-base",
        help="transformers model name/path, or 'random' for the offline stand-in",
    )
    parser.add_argument("--layer", type=int, default=-1,
                        help="hidden layer to export (-1 = last)")
    parser.add_argument("--dim", type=int, default=None,
                        help="optional seeded linear down-projection width")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--random-dim", type=int, default=64,
                        help="hidden size of the 'random' encoder")
    parser.add_argument("--random-layers", type=int, default=2,
                        help="depth of the 'random' encoder")
    return parser


def run_export(args) -> int:
    sentences = read_tokenized(args.data)
    if args.encoder == "random":
        encoder = RandomEncoder(
            dim=args.random_dim, layers=args.random_layers,
            seed=args.seed, layer=args.layer,
        )
    else:
        encoder = HuggingFaceEncoder(args.encoder, layer=args.layer)
    projection = None
    out_dim = encoder.dim
    if args.dim is not None and args.dim != encoder.dim:
        projection = Projection(encoder.dim, args.dim, seed=args.seed)
        out_dim = args.dim

    rows = []
    for start in range(0, len(sentences), args.batch_size):
        batch = sentences[start : start + args.batch_size]
        for (sid, tokens), vectors in zip(batch, encoder.encode_batch(batch)):
            if projection is not None:
                vectors = projection(vectors)
            for index in range(len(tokens)):
                rows.append((sid, index, vectors[index]))
    count = write_vector_file(args.out, out_dim, rows)
    print(f"wrote {count} vectors (dim={out_dim}) to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return run_export(args)
    except TokenAlignmentError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
