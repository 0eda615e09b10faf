"""Corpus ingestion, fused-dataset construction, and synthetic corpora.

The file grammar is one sentence per line:

    <whitespace-tokenized text>####<triplet list>

where the triplet list is a bracketed sequence of
([aspect indices], [opinion indices], '<POS|NEG|NEU>') tuples with 0-based,
gap-free index lists, e.g.

    Gourmet food is delicious .####[([0, 1], [3], 'POS')]
"""

from __future__ import annotations

import ast
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import GoldTriplet, Polarity, Sentence, Span, make_sentence
from .errors import MixedSplitsError, ParseError

SPLITS = ("train", "dev", "test")
SEPARATOR = "####"


@dataclass(frozen=True)
class Corpus:
    name: str
    split: str
    sentences: tuple[Sentence, ...]

    def __post_init__(self) -> None:
        seen = set()
        for s in self.sentences:
            if s.id in seen:
                raise ParseError(f"duplicate sentence id {s.id!r} in corpus {self.name!r}")
            seen.add(s.id)

    def __len__(self) -> int:
        return len(self.sentences)


def parse_aste_line(line: str, sentence_id: str = "0", lineno: int | None = None) -> Sentence:
    """Parse one corpus line into a validated Sentence."""
    text, sep, raw = line.rstrip("\n").rpartition(SEPARATOR)
    if not sep:
        raise ParseError(f"missing {SEPARATOR!r} separator", line=lineno, column=1)
    surfaces = text.split()
    if not surfaces:
        raise ParseError("empty sentence text", line=lineno, column=1)
    column = len(text) + len(sep) + 1
    try:
        parsed = ast.literal_eval(raw.strip())
    except (SyntaxError, ValueError) as exc:
        raise ParseError(f"malformed triplet list: {exc}", line=lineno, column=column) from exc
    if not isinstance(parsed, (list, tuple)):
        raise ParseError("triplet list must be a bracketed list", line=lineno, column=column)
    triplets = []
    for item in parsed:
        if not (isinstance(item, (list, tuple)) and len(item) == 3):
            raise ParseError(
                f"each triplet needs (aspect, opinion, polarity), got {item!r}",
                line=lineno,
                column=column,
            )
        a_idx, o_idx, pol = item
        for name, idx in (("aspect", a_idx), ("opinion", o_idx)):
            if not (isinstance(idx, (list, tuple)) and idx and all(isinstance(i, int) for i in idx)):
                raise ParseError(
                    f"{name} indices must be a non-empty int list, got {idx!r}",
                    line=lineno,
                    column=column,
                )
        if not isinstance(pol, str) or pol not in Polarity.__members__ or pol == "NONE":
            raise ParseError(
                f"polarity must be one of POS/NEG/NEU, got {pol!r}", line=lineno, column=column
            )
        triplets.append(
            GoldTriplet(Span.from_indices(a_idx), Span.from_indices(o_idx), Polarity[pol])
        )
    return make_sentence(sentence_id, surfaces, triplets)


def serialize_sentence(sentence: Sentence) -> str:
    """Inverse of parse_aste_line (up to sentence id, which lives outside the line)."""
    triplets = [
        (
            list(range(t.aspect.start, t.aspect.end + 1)),
            list(range(t.opinion.start, t.opinion.end + 1)),
            t.polarity.name,
        )
        for t in sentence.triplets
    ]
    rendered = ", ".join(f"({a}, {o}, '{p}')" for a, o, p in triplets)
    return f"{' '.join(sentence.surfaces)}{SEPARATOR}[{rendered}]"


def serialize_corpus(corpus: Corpus) -> str:
    return "\n".join(serialize_sentence(s) for s in corpus.sentences) + "\n"


def load_corpus(path: str | Path, name: str | None = None, split: str = "train") -> Corpus:
    """Read a triplet file; sentence ids are 1-based line numbers."""
    path = Path(path)
    sentences = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            sentences.append(parse_aste_line(line, sentence_id=str(lineno), lineno=lineno))
    return Corpus(name=name or path.stem, split=split, sentences=tuple(sentences))


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text(serialize_corpus(corpus), encoding="utf-8")


def corpus_from_dir(directory: str | Path, split: str, name: str | None = None) -> Corpus:
    """Locate <split>_triplets.txt or <split>.txt under a dataset directory."""
    directory = Path(directory)
    for candidate in (f"{split}_triplets.txt", f"{split}.txt"):
        path = directory / candidate
        if path.exists():
            return load_corpus(path, name=name or directory.name, split=split)
    raise ParseError(f"no {split} file found under {directory}")


def build_fused(corpora: Sequence[Corpus], name: str = "fused") -> Corpus:
    """Concatenate same-split corpora with provenance-preserving ids."""
    if not corpora:
        raise MixedSplitsError("nothing to fuse")
    split = corpora[0].split
    if any(c.split != split for c in corpora):
        raise MixedSplitsError(
            f"all corpora must share one split, got {sorted({c.split for c in corpora})}"
        )
    sentences = []
    for corpus in corpora:
        for s in corpus.sentences:
            sentences.append(Sentence(f"{corpus.name}:{s.id}", s.tokens, s.triplets))
    return Corpus(name=name, split=split, sentences=tuple(sentences))


# ---------------------------------------------------------------------------
# Synthetic corpora. Clause templates use A/O (and O2 for a second opinion
# sharing the clause's aspect) as slots; everything else is a literal token.
# Generated pairs are non-crossing, entities are disjoint, and every entity
# has at most one partner per side, so the oracle recovers all of them.

ASPECTS_SINGLE = ("food", "service", "battery", "screen", "pizza", "staff", "menu", "price")
ASPECT_MODIFIERS = ("gourmet", "delivery", "touch", "wine", "front")
OPINIONS = (
    (("delicious",), Polarity.POS),
    (("great",), Polarity.POS),
    (("friendly",), Polarity.POS),
    (("cheap",), Polarity.POS),
    (("slow",), Polarity.NEG),
    (("awful",), Polarity.NEG),
    (("not", "bad"), Polarity.NEU),
    (("very", "good"), Polarity.POS),
    (("too", "salty"), Polarity.NEG),
)
CONNECTORS = (",", "and", "but")
FILLERS = ("the", "is", "was", "really", "though", ".")

#: A leading O slot pairs leftward (opinion before aspect); a trailing O or
#: O2 slot pairs rightward.
DEFAULT_TEMPLATES = (
    "the A is O",
    "A was O",
    "O A",
    "really O A",
    "the A looked O",
    "O A , O2 too",
)


@dataclass(frozen=True)
class SyntheticVocab:
    aspects: tuple[str, ...] = ASPECTS_SINGLE
    modifiers: tuple[str, ...] = ASPECT_MODIFIERS
    opinions: tuple = OPINIONS
    connectors: tuple[str, ...] = CONNECTORS
    fillers: tuple[str, ...] = FILLERS


def _build_clause(rng: np.random.Generator, vocab: SyntheticVocab, template: str):
    """Expand one template into (tokens, triplets with clause-local indices)."""
    tokens: list[str] = []
    triplets: list[tuple[Span, Span, Polarity]] = []
    aspect_span: Span | None = None
    pending_left: list[tuple[Span, Polarity]] = []

    for slot in template.split():
        if slot == "A":
            words = [vocab.aspects[rng.integers(len(vocab.aspects))]]
            if rng.random() < 0.4:
                words.insert(0, vocab.modifiers[rng.integers(len(vocab.modifiers))])
            start = len(tokens)
            tokens.extend(words)
            aspect_span = Span(start, len(tokens) - 1)
            for opinion_span, polarity in pending_left:
                triplets.append((aspect_span, opinion_span, polarity))
            pending_left.clear()
        elif slot in ("O", "O2"):
            words, polarity = vocab.opinions[rng.integers(len(vocab.opinions))]
            start = len(tokens)
            tokens.extend(words)
            opinion_span = Span(start, len(tokens) - 1)
            if aspect_span is None:
                pending_left.append((opinion_span, polarity))
            else:
                triplets.append((aspect_span, opinion_span, polarity))
        else:
            tokens.append(slot)
    return tokens, triplets


def _template_pairs(template: str) -> int:
    return sum(1 for slot in template.split() if slot in ("O", "O2"))


def _build_sentence_tokens(
    rng: np.random.Generator,
    vocab: SyntheticVocab,
    templates: Sequence[str],
    n_clauses: int,
    max_pairs: int = 3,
):
    tokens: list[str] = []
    triplets: list[GoldTriplet] = []
    for i in range(n_clauses):
        budget = max_pairs - len(triplets)
        eligible = [t for t in templates if _template_pairs(t) <= budget]
        if not eligible:
            break
        if i > 0:
            tokens.append(vocab.connectors[rng.integers(len(vocab.connectors))])
        template = eligible[rng.integers(len(eligible))]
        clause_tokens, clause_triplets = _build_clause(rng, vocab, template)
        offset = len(tokens)
        tokens.extend(clause_tokens)
        for aspect, opinion, polarity in clause_triplets:
            triplets.append(
                GoldTriplet(
                    Span(aspect.start + offset, aspect.end + offset),
                    Span(opinion.start + offset, opinion.end + offset),
                    polarity,
                )
            )
    return tokens, triplets


def generate_synthetic(
    seed: int,
    count: int,
    vocab: SyntheticVocab | None = None,
    templates: Sequence[str] | None = None,
    split: str = "train",
    name: str = "synthetic",
) -> Corpus:
    """Deterministic desk-scale corpus; every sentence is fully oracle-reachable."""
    vocab = vocab or SyntheticVocab()
    templates = tuple(templates or DEFAULT_TEMPLATES)
    rng = np.random.default_rng(seed)
    sentences = []
    for i in range(count):
        n_clauses = int(rng.integers(1, 4))
        tokens, triplets = _build_sentence_tokens(rng, vocab, templates, n_clauses)
        if rng.random() < 0.5:
            tokens.append(".")
        sentences.append(make_sentence(f"synth-{i:05d}", tokens, triplets))
    return Corpus(name=name, split=split, sentences=tuple(sentences))


def generate_graded(
    seed: int,
    lengths: Iterable[int],
    vocab: SyntheticVocab | None = None,
    templates: Sequence[str] | None = None,
    name: str = "graded",
) -> Corpus:
    """Sentences padded to exact token counts, for complexity measurements."""
    vocab = vocab or SyntheticVocab()
    templates = tuple(templates or DEFAULT_TEMPLATES)
    rng = np.random.default_rng(seed)
    sentences = []
    for i, target in enumerate(lengths):
        if target < 1:
            raise ValueError(f"length must be >= 1, got {target}")
        tokens: list[str] = []
        triplets: list[GoldTriplet] = []
        while True:
            clause_tokens, clause_triplets = _build_clause(
                rng, vocab, templates[rng.integers(len(templates))]
            )
            if len(tokens) + len(clause_tokens) + 1 > target:
                break
            if tokens:
                tokens.append(vocab.connectors[rng.integers(len(vocab.connectors))])
            offset = len(tokens)
            tokens.extend(clause_tokens)
            for aspect, opinion, polarity in clause_triplets:
                triplets.append(
                    GoldTriplet(
                        Span(aspect.start + offset, aspect.end + offset),
                        Span(opinion.start + offset, opinion.end + offset),
                        polarity,
                    )
                )
        while len(tokens) < target:
            tokens.append(vocab.fillers[rng.integers(len(vocab.fillers))])
        sentences.append(make_sentence(f"graded-{i:04d}-n{target}", tokens[:target], triplets))
    return Corpus(name=name, split="test", sentences=tuple(sentences))
