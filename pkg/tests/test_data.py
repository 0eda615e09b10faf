import pytest

from shiftpair.core import Polarity, Span
from shiftpair.data import (
    Corpus,
    build_fused,
    generate_graded,
    generate_synthetic,
    load_corpus,
    parse_aste_line,
    save_corpus,
    serialize_corpus,
    serialize_sentence,
)
from shiftpair.errors import (
    MixedSplitsError,
    NoncontiguousError,
    OutOfBoundsError,
    ParseError,
)


def test_parse_basic_line():
    s = parse_aste_line("Gourmet food is delicious .####[([0, 1], [3], 'POS')]")
    assert len(s) == 5
    assert len(s.triplets) == 1
    t = s.triplets[0]
    assert (t.aspect, t.opinion, t.polarity) == (Span(0, 1), Span(3, 3), Polarity.POS)


def test_parse_empty_triplets():
    s = parse_aste_line("hello world####[]")
    assert len(s) == 2
    assert s.triplets == ()


def test_parse_out_of_bounds():
    with pytest.raises(OutOfBoundsError):
        parse_aste_line("a####[([0], [2], 'POS')]")


def test_parse_noncontiguous_indices():
    with pytest.raises(NoncontiguousError):
        parse_aste_line("a b c d####[([0, 2], [3], 'POS')]")


def test_parse_errors_carry_position():
    with pytest.raises(ParseError) as err:
        parse_aste_line("a b####([0], [1], 'POS'", lineno=7)
    assert err.value.line == 7
    with pytest.raises(ParseError):
        parse_aste_line("no separator here")
    with pytest.raises(ParseError):
        parse_aste_line("####[]")


def test_parse_unknown_polarity_rejected():
    with pytest.raises(ParseError):
        parse_aste_line("a b####[([0], [1], 'GOOD')]")
    with pytest.raises(ParseError):
        parse_aste_line("a b####[([0], [1], 'NONE')]")


def test_parse_is_lenient_on_whitespace():
    s = parse_aste_line("a b c####[ ( [0] , [2] , 'NEG' ) ]")
    assert s.triplets[0].polarity is Polarity.NEG


def test_round_trip_identity(tmp_path):
    corpus = generate_synthetic(5, 20)
    path = tmp_path / "c.txt"
    save_corpus(corpus, path)
    loaded = load_corpus(path, name=corpus.name, split=corpus.split)
    assert len(loaded) == len(corpus)
    for a, b in zip(corpus.sentences, loaded.sentences):
        assert a.surfaces == b.surfaces
        assert a.triplets == b.triplets
    assert serialize_corpus(loaded) == serialize_corpus(corpus)


def test_serialize_matches_grammar():
    s = parse_aste_line("great pizza####[([1], [0], 'POS')]")
    assert serialize_sentence(s) == "great pizza####[([1], [0], 'POS')]"


def test_fused_concatenates_with_provenance():
    a = generate_synthetic(1, 3, name="14lap")
    b = generate_synthetic(2, 4, name="14res")
    fused = build_fused([a, b])
    assert len(fused) == 7
    assert fused.sentences[0].id == "14lap:synth-00000"
    assert fused.sentences[3].id == "14res:synth-00000"
    assert [s.surfaces for s in fused.sentences[:3]] == [s.surfaces for s in a.sentences]


def test_fused_single_corpus_identity():
    a = generate_synthetic(1, 3, name="only")
    fused = build_fused([a])
    assert len(fused) == 3
    assert all(s.id.startswith("only:") for s in fused.sentences)


def test_fused_rejects_mixed_splits():
    a = generate_synthetic(1, 2, split="train")
    b = generate_synthetic(2, 2, split="test")
    with pytest.raises(MixedSplitsError):
        build_fused([a, b])


def test_synthetic_deterministic():
    c1 = generate_synthetic(7, 50)
    c2 = generate_synthetic(7, 50)
    assert serialize_corpus(c1) == serialize_corpus(c2)
    c3 = generate_synthetic(8, 50)
    assert serialize_corpus(c3) != serialize_corpus(c1)


def test_synthetic_empty():
    assert len(generate_synthetic(1, 0)) == 0


def test_synthetic_structure():
    corpus = generate_synthetic(7, 100)
    pair_counts = {len(s.triplets) for s in corpus.sentences}
    assert pair_counts <= {1, 2, 3}
    assert any(len(s.triplets) >= 2 for s in corpus.sentences)
    multi = [t for s in corpus.sentences for t in s.triplets if len(t.aspect) > 1 or len(t.opinion) > 1]
    assert multi, "expected some multi-token entities"
    lefts = [
        t
        for s in corpus.sentences
        for t in s.triplets
        if t.opinion.end < t.aspect.start
    ]
    rights = [
        t
        for s in corpus.sentences
        for t in s.triplets
        if t.aspect.end < t.opinion.start
    ]
    assert lefts and rights, "expected both pair orientations"


def test_graded_lengths_exact():
    lengths = [10, 25, 40]
    corpus = generate_graded(3, lengths)
    assert [len(s) for s in corpus.sentences] == lengths
    c2 = generate_graded(3, lengths)
    assert serialize_corpus(c2) == serialize_corpus(corpus)


def test_duplicate_ids_rejected():
    s = parse_aste_line("a b####[]", sentence_id="x")
    with pytest.raises(ParseError):
        Corpus("c", "train", (s, s))
