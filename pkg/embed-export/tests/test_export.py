import subprocess
import sys

import numpy as np
import pytest

from embed_export.cli import main
from embed_export.corpus import read_tokenized
from embed_export.encoders import (
    RandomEncoder,
    TokenAlignmentError,
    _pool_by_word,
)
from embed_export.writer import write_vector_file

CORPUS = (
    "Gourmet food is delicious .####[([0, 1], [3], 'POS')]\n"
    "great pizza####[([1], [0], 'POS')]\n"
    "the battery was slow####[([1], [3], 'NEG')]\n"
)


@pytest.fixture()
def corpus_file(tmp_path):
    path = tmp_path / "corpus.txt"
    path.write_text(CORPUS, encoding="utf-8")
    return path


def shiftpair(*argv):
    return subprocess.run(
        [sys.executable, "-m", "shiftpair.cli", *argv],
        capture_output=True, text=True,
    )


def test_read_tokenized_ids_are_line_numbers(corpus_file):
    sentences = read_tokenized(corpus_file)
    assert [sid for sid, _ in sentences] == ["1", "2", "3"]
    assert sentences[0][1] == ["Gourmet", "food", "is", "delicious", "."]


def test_read_tokenized_rejects_bad_lines(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("no separator\n")
    with pytest.raises(ValueError):
        read_tokenized(bad)


def test_pool_by_word_means_subword_rows():
    hidden = np.array([[0.0, 0], [2, 2], [4, 4], [6, 6], [0, 0]])
    word_ids = [None, 0, 0, 1, None]
    pooled = _pool_by_word(hidden, word_ids, 2, "s")
    assert np.allclose(pooled, [[3, 3], [6, 6]])


def test_pool_by_word_reports_uncovered_token():
    hidden = np.zeros((3, 2))
    with pytest.raises(TokenAlignmentError) as err:
        _pool_by_word(hidden, [None, 0, None], 2, "s42")
    assert "s42" in str(err.value)


def test_random_encoder_shapes_and_determinism():
    enc1 = RandomEncoder(dim=32, layers=1, seed=5)
    enc2 = RandomEncoder(dim=32, layers=1, seed=5)
    batch = [("1", ["gourmet", "food"]), ("2", ["extraordinarily", "good", "pizza"])]
    v1 = enc1.encode_batch(batch)
    v2 = enc2.encode_batch(batch)
    assert [v.shape for v in v1] == [(2, 32), (3, 32)]
    for a, b in zip(v1, v2):
        assert np.array_equal(a, b)
    assert not np.array_equal(
        RandomEncoder(dim=32, layers=1, seed=6).encode_batch(batch)[0], v1[0]
    )


def test_export_counts_and_header(corpus_file, tmp_path):
    out = tmp_path / "vectors.vec"
    code = main([
        "--data", str(corpus_file), "--out", str(out),
        "--encoder", "random", "--random-dim", "32", "--seed", "1",
    ])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "dim=32 count=11"  # 5 + 2 + 4 tokens
    assert len(lines) == 12
    first = lines[1].split("\t")
    assert first[0] == "1" and first[1] == "0"
    assert len(first[2].split()) == 32


def test_export_is_byte_deterministic(corpus_file, tmp_path):
    a, b = tmp_path / "a.vec", tmp_path / "b.vec"
    argv = ["--data", str(corpus_file), "--encoder", "random", "--random-dim", "16"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_projection_changes_header_dim(corpus_file, tmp_path):
    out = tmp_path / "proj.vec"
    code = main([
        "--data", str(corpus_file), "--out", str(out),
        "--encoder", "random", "--random-dim", "32", "--dim", "8",
    ])
    assert code == 0
    assert out.read_text().splitlines()[0] == "dim=8 count=11"


def test_writer_validates_width(tmp_path):
    with pytest.raises(ValueError):
        write_vector_file(tmp_path / "w.vec", 4, [("1", 0, np.zeros(3))])


def test_hub_encoder_if_available(corpus_file, tmp_path):
    try:
        from embed_export.encoders import HuggingFaceEncoder

        encoder = HuggingFaceEncoder("roberta-base")
    except Exception:
        pytest.skip("no pretrained weights reachable in this environment")
    vectors = encoder.encode_batch([("1", ["gourmet", "food"])])
    assert vectors[0].shape == (2, encoder.dim)


# ---------------------------------------------------------------------------
# Integration with the extractor, strictly through files and its CLI.


def test_decode_with_exported_vectors_end_to_end(tmp_path):
    corpus = tmp_path / "synth.txt"
    vectors = tmp_path / "synth.vec"
    ckpt = tmp_path / "model.ckpt"
    pred = tmp_path / "pred.txt"

    made = shiftpair("synth", "--out", str(corpus), "--count", "12", "--seed", "3")
    assert made.returncode == 0, made.stderr

    code = main([
        "--data", str(corpus), "--out", str(vectors),
        "--encoder", "random", "--random-dim", "32", "--seed", "2",
    ])
    assert code == 0
    header = vectors.read_text().splitlines()[0]
    assert header.startswith("dim=32 count=")

    trained = shiftpair(
        "train", "--data", str(corpus), "--out", str(ckpt),
        "--embeddings", str(vectors), "--epochs", "2",
        "--dims", "32,8,4,16,8", "--seed", "0",
    )
    assert trained.returncode == 0, trained.stderr

    decoded = shiftpair(
        "decode", "--data", str(corpus), "--model", str(ckpt),
        "--embeddings", str(vectors), "--out", str(pred), "--split", "test",
    )
    assert decoded.returncode == 0, decoded.stderr

    produced = read_tokenized(pred)  # decode output round-trips the grammar
    source = read_tokenized(corpus)
    assert [tokens for _, tokens in produced] == [tokens for _, tokens in source]

    validated = shiftpair("convert", "--data", str(pred), "--split", "test")
    assert validated.returncode == 0, validated.stderr  # spans/polarities parse

    wrong_dim = shiftpair(
        "train", "--data", str(corpus), "--out", str(ckpt),
        "--embeddings", str(vectors), "--epochs", "1",
        "--dims", "64,8,4,16,8", "--seed", "0",
    )
    assert wrong_dim.returncode == 1
    assert "DIM_MISMATCH" in wrong_dim.stderr
