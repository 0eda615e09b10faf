"""Command-line interface.

Exit codes: 0 success, 1 domain error (the error code is printed to
stderr), 2 usage error. All randomness flows from --seed, and every
command except bench (whose timing column necessarily varies) writes
byte-identical output for identical flags and seed. SHIFTPAIR_LOG
({error, info, debug}) controls diagnostics on stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from contextlib import contextmanager
from pathlib import Path

from . import data as data_mod
from . import oracle as oracle_mod
from .checkpoint import load_checkpoint, save_checkpoint
from .data import (
    SPLITS,
    Corpus,
    build_fused,
    corpus_from_dir,
    generate_graded,
    generate_synthetic,
    load_corpus,
    save_corpus,
)
from .decode import decode_corpus, evaluate, measure_complexity, predictions_from_corpus
from .errors import ParseError, ShiftpairError
from .scorer import Dims, Vocabulary, init_params
from .training import (
    Batch,
    LossWeights,
    TrainConfig,
    finite_diff_check,
    steps_from_sentence,
    train,
)
from .transition import format_trace
from .vecfile import read_vectors

log = logging.getLogger("shiftpair")


def _parse_dims(text: str) -> Dims:
    """token,action,distance,hidden[,mlp[,max_distance]]"""
    parts = [int(p) for p in text.split(",")]
    if len(parts) < 4 or len(parts) > 6:
        raise argparse.ArgumentTypeError(
            "--dims needs token,action,distance,hidden[,mlp[,max_distance]]"
        )
    names = ("token", "action", "distance", "hidden", "mlp", "max_distance")
    return Dims(**dict(zip(names, parts)))


@contextmanager
def _out_stream(path: str | None):
    if path:
        with open(path, "w", encoding="utf-8") as handle:
            yield handle
    else:
        yield sys.stdout


def _load_data(path: str, split: str) -> Corpus:
    p = Path(path)
    if p.is_dir():
        return corpus_from_dir(p, split)
    return load_corpus(p, split=split)


def _load_training_corpus(args) -> Corpus:
    if args.fused:
        corpora = [_load_data(d, args.split) for d in args.fused]
        return build_fused(corpora)
    return _load_data(args.data, args.split)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shiftpair",
        description="Transition-based aspect-opinion pair and triplet extraction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    convert = sub.add_parser("convert", help="parse a triplet file and re-emit it")
    convert.add_argument("--data", required=True)
    convert.add_argument("--out")
    convert.add_argument("--split", default="train", choices=SPLITS)

    oracle_cmd = sub.add_parser("oracle", help="emit gold action/sentiment sequences")
    oracle_cmd.add_argument("--data", required=True)
    oracle_cmd.add_argument("--out")
    oracle_cmd.add_argument("--split", default="train", choices=SPLITS)

    coverage = sub.add_parser("coverage", help="action coverage over datasets")
    coverage.add_argument("--data", required=True, nargs="+",
                          help="dataset directories or triplet files")
    coverage.add_argument("--split", default="all", choices=SPLITS + ("all",))
    coverage.add_argument("--jobs", type=int, default=1)
    coverage.add_argument("--out")

    synth = sub.add_parser("synth", help="write a synthetic corpus")
    synth.add_argument("--out", required=True)
    synth.add_argument("--count", type=int, default=50)
    synth.add_argument("--seed", type=int, default=0)

    train_cmd = sub.add_parser("train", help="teacher-forced training")
    train_cmd.add_argument("--data", required=True)
    train_cmd.add_argument("--fused", nargs="+", help="fuse these datasets instead of --data")
    train_cmd.add_argument("--dev")
    train_cmd.add_argument("--out", required=True, help="checkpoint path")
    train_cmd.add_argument("--split", default="train", choices=SPLITS)
    train_cmd.add_argument("--epochs", type=int, default=60)
    train_cmd.add_argument("--lr", type=float, default=0.01)
    train_cmd.add_argument("--batch", type=int, default=4)
    train_cmd.add_argument("--seed", type=int, default=0)
    train_cmd.add_argument("--w1", type=float, default=1.0, help="base loss weight")
    train_cmd.add_argument("--w2", type=float, default=0.0, help="contrastive loss weight")
    train_cmd.add_argument("--dims", type=_parse_dims, default=Dims())
    train_cmd.add_argument("--embeddings", help="external token-vector file")

    decode_cmd = sub.add_parser("decode", help="greedy decode to the corpus grammar")
    decode_cmd.add_argument("--data", required=True)
    decode_cmd.add_argument("--model", required=True)
    decode_cmd.add_argument("--out")
    decode_cmd.add_argument("--split", default="test", choices=SPLITS)
    decode_cmd.add_argument("--embeddings")
    decode_cmd.add_argument("--jobs", type=int, default=1)

    eval_cmd = sub.add_parser("eval", help="pair and triplet P/R/F1")
    eval_cmd.add_argument("--pred", required=True)
    eval_cmd.add_argument("--data", required=True, help="gold triplet file")
    eval_cmd.add_argument("--split", default="test", choices=SPLITS)
    eval_cmd.add_argument("--out")

    trace = sub.add_parser("trace", help="derivation table for one sentence")
    trace.add_argument("--sentence", required=True)
    trace.add_argument("--gold", default="[]", help="triplet list, e.g. \"([0,1],[3],'POS')\"")
    trace.add_argument("--out")

    gradcheck = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    gradcheck.add_argument("--seed", type=int, default=0)
    gradcheck.add_argument("--w1", type=float, default=1.0)
    gradcheck.add_argument("--w2", type=float, default=1.0)
    gradcheck.add_argument("--h", type=float, default=1e-4)
    gradcheck.add_argument("--tolerance", type=float, default=1e-4)
    gradcheck.add_argument("--sample", type=float, default=0.05,
                           help="fraction of coordinates checked per array")

    bench = sub.add_parser("bench", help="decode complexity over graded lengths")
    bench.add_argument("--lengths", default="10,25,50,100,150,200,300,400")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--dims", type=_parse_dims, default=Dims())
    bench.add_argument("--out")

    return parser


# ---------------------------------------------------------------------------
# command bodies


def _cmd_convert(args) -> int:
    corpus = _load_data(args.data, args.split)
    with _out_stream(args.out) as out:
        out.write(data_mod.serialize_corpus(corpus))
    return 0


def _cmd_oracle(args) -> int:
    corpus = _load_data(args.data, args.split)
    with _out_stream(args.out) as out:
        for sentence in corpus.sentences:
            result = oracle_mod.derive(sentence)
            actions = " ".join(str(int(a)) for a in result.actions)
            sentiments = " ".join(str(int(s.sentiment)) for s in result.steps)
            out.write(f"{sentence.id}\t{actions}\t{sentiments}\n")
    return 0


def _cmd_coverage(args) -> int:
    splits = SPLITS if args.split == "all" else (args.split,)
    table: list[tuple[str, str, oracle_mod.CoverageCounts]] = []
    per_split_corpora: dict[str, list[Corpus]] = {s: [] for s in splits}
    for path in args.data:
        name = Path(path).stem if Path(path).is_file() else Path(path).name
        totals = oracle_mod.CoverageCounts(0, 0, 0)
        for split in splits:
            try:
                corpus = _load_data(path, split)
            except (ShiftpairError, FileNotFoundError):
                if args.split != "all":
                    raise
                continue
            log.info("coverage: %s/%s (%d sentences)", name, split, len(corpus))
            counts = oracle_mod.coverage(corpus, jobs=args.jobs)
            table.append((name, split, counts))
            totals = totals + counts
            per_split_corpora[split].append(corpus)
        table.append((name, "total", totals))
    if len(args.data) > 1:
        fused_total = oracle_mod.CoverageCounts(0, 0, 0)
        for split in splits:
            if not per_split_corpora[split]:
                continue
            fused = build_fused(per_split_corpora[split])
            counts = oracle_mod.coverage(fused, jobs=args.jobs)
            table.append(("fused", split, counts))
            fused_total = fused_total + counts
        table.append(("fused", "total", fused_total))

    with _out_stream(args.out) as out:
        header = f"{'dataset':<12}{'split':<8}{'precision':>10}{'recall':>10}{'f1':>10}"
        out.write(header + "\n")
        for name, split, counts in table:
            out.write(
                f"{name:<12}{split:<8}{counts.precision:>10.2f}"
                f"{counts.recall:>10.2f}{counts.f1:>10.2f}\n"
            )
        out.write("\n")
        for name, split, counts in table:
            for metric in ("precision", "recall", "f1"):
                value = getattr(counts, metric)
                out.write(f"coverage.{name}.{split}.{metric}={value:.2f}\n")
    return 0


def _cmd_synth(args) -> int:
    corpus = generate_synthetic(args.seed, args.count)
    save_corpus(corpus, args.out)
    return 0


def _cmd_train(args) -> int:
    if args.embeddings and args.dev:
        # Line-number sentence ids collide across files, so one vector file
        # cannot cover both corpora unambiguously.
        raise ParseError("--embeddings cannot be combined with --dev")
    corpus = _load_training_corpus(args)
    dev = load_corpus(args.dev, split="dev") if args.dev else None
    vectors = read_vectors(args.embeddings) if args.embeddings else None
    config = TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch,
        seed=args.seed,
        weights=LossWeights(args.w1, args.w2),
        dims=args.dims,
    )
    result = train(corpus, config, dev=dev, vectors=vectors)
    for m in result.history:
        line = f"epoch={m.epoch} loss={m.loss:.6f} action_accuracy={m.action_accuracy:.4f}"
        if m.dev_aope_f1 is not None:
            line += f" dev_aope_f1={m.dev_aope_f1:.2f} dev_aste_f1={m.dev_aste_f1:.2f}"
        print(line)
    save_checkpoint(args.out, result.params, seed=args.seed)
    log.info("checkpoint written to %s", args.out)
    return 0


def _cmd_decode(args) -> int:
    corpus = _load_data(args.data, args.split)
    loaded = load_checkpoint(args.model)
    vectors = read_vectors(args.embeddings) if args.embeddings else None
    predictions = decode_corpus(corpus, loaded.params, vectors, jobs=args.jobs)
    with _out_stream(args.out) as out:
        for sentence, prediction in zip(corpus.sentences, predictions):
            triplets = ", ".join(
                "({}, {}, '{}')".format(
                    list(range(r.aspect.span.start, r.aspect.span.end + 1)),
                    list(range(r.opinion.span.start, r.opinion.span.end + 1)),
                    r.sentiment.name,
                )
                for r in prediction.relations
            )
            out.write(f"{' '.join(sentence.surfaces)}####[{triplets}]\n")
    return 0


def _cmd_eval(args) -> int:
    gold = load_corpus(args.data, split=args.split)
    pred_corpus = load_corpus(args.pred, split=args.split)
    predictions = predictions_from_corpus(pred_corpus)
    with _out_stream(args.out) as out:
        lines = []
        for task in ("AOPE", "ASTE"):
            m = evaluate(predictions, gold, task)
            lines.append((task, m))
        out.write(f"{'task':<6}{'precision':>10}{'recall':>10}{'f1':>10}\n")
        for task, m in lines:
            out.write(f"{task:<6}{m.precision:>10.2f}{m.recall:>10.2f}{m.f1:>10.2f}\n")
        out.write("\n")
        for task, m in lines:
            for metric in ("precision", "recall", "f1"):
                out.write(f"eval.{task.lower()}.{metric}={getattr(m, metric):.2f}\n")
    return 0


def _cmd_trace(args) -> int:
    gold = args.gold.strip()
    if not gold.startswith("["):
        gold = f"[{gold}]"
    sentence = data_mod.parse_aste_line(f"{args.sentence}####{gold}", sentence_id="trace")
    result = oracle_mod.derive(sentence)
    with _out_stream(args.out) as out:
        out.write(format_trace(sentence, result.steps) + "\n")
    return 0


def _cmd_gradcheck(args) -> int:
    dims = Dims(token=8, action=4, distance=4, hidden=6, mlp=5, max_distance=3)
    corpus = generate_synthetic(args.seed, 2)
    vocab = Vocabulary.build(corpus.sentences)
    params = init_params(dims, vocab, seed=args.seed)
    steps = []
    for i, s in enumerate(corpus.sentences):
        steps.extend(steps_from_sentence(s, dims, i))
    batch = Batch(steps=tuple(steps), sentences=tuple(corpus.sentences))
    report = finite_diff_check(
        params, batch, h=args.h, tolerance=args.tolerance,
        weights=LossWeights(args.w1, args.w2),
        sample_fraction=args.sample, seed=args.seed,
    )
    print(f"gradcheck.checked={report.checked}")
    print(f"gradcheck.max_relative_error={report.max_relative_error:.3e}")
    print(f"gradcheck.worst={report.worst}")
    print(f"gradcheck.passed={int(report.passed)}")
    return 0 if report.passed else 1


def _cmd_bench(args) -> int:
    lengths = [int(x) for x in args.lengths.split(",")]
    corpus = generate_graded(args.seed, lengths)
    vocab = Vocabulary.build(corpus.sentences)
    params = init_params(args.dims, vocab, seed=args.seed)
    report = measure_complexity(corpus, params)
    with _out_stream(args.out) as out:
        out.write(f"{'sentence':<18}{'tokens':>8}{'actions':>9}{'bound':>8}{'seconds':>10}\n")
        for row in report.rows:
            out.write(
                f"{row.sentence_id:<18}{row.tokens:>8}{row.actions:>9}"
                f"{6 * row.tokens + 3:>8}{row.seconds:>10.4f}\n"
            )
        out.write("\n")
        out.write(f"bench.slope={report.slope:.4f}\n")
        out.write(f"bench.intercept={report.intercept:.4f}\n")
        out.write(f"bench.r_squared={report.r_squared:.4f}\n")
        out.write(f"bench.max_ratio_to_bound={report.max_ratio_to_bound:.4f}\n")
    return 0


_COMMANDS = {
    "convert": _cmd_convert,
    "oracle": _cmd_oracle,
    "coverage": _cmd_coverage,
    "synth": _cmd_synth,
    "train": _cmd_train,
    "decode": _cmd_decode,
    "eval": _cmd_eval,
    "trace": _cmd_trace,
    "gradcheck": _cmd_gradcheck,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    level = os.environ.get("SHIFTPAIR_LOG", "error").upper()
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level, logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ShiftpairError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
