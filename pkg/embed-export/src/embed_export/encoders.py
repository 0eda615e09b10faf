"""Contextual encoders producing one vector per whitespace token.

Two backends share the same subword pooling: a pretrained transformer
loaded through the transformers library (any hub name or local path), and
a locally constructed, seed-initialized transformer for environments that
cannot fetch model weights. Subword hidden states are mean-pooled back to
their whitespace token; special positions ([CLS]/[SEP] and padding) are
dropped.
"""

from __future__ import annotations

import hashlib

import numpy as np
import torch


class TokenAlignmentError(Exception):
    """Subword-to-token alignment was ambiguous or incomplete."""

    code = "TOKEN_ALIGNMENT_FAILURE"

    def __init__(self, sentence_id: str, detail: str):
        super().__init__(f"sentence {sentence_id}: {detail}")
        self.sentence_id = sentence_id


def _pool_by_word(hidden: np.ndarray, word_ids, n_tokens: int, sentence_id: str) -> np.ndarray:
    """Mean of each word's subword rows; every word must own at least one."""
    sums = np.zeros((n_tokens, hidden.shape[1]))
    counts = np.zeros(n_tokens)
    for position, word in enumerate(word_ids):
        if word is None:
            continue  # special or padding position
        if word >= n_tokens:
            raise TokenAlignmentError(
                sentence_id, f"piece {position} maps to word {word} of {n_tokens}"
            )
        sums[word] += hidden[position]
        counts[word] += 1
    if np.any(counts == 0):
        missing = int(np.argmax(counts == 0))
        raise TokenAlignmentError(sentence_id, f"token {missing} received no pieces")
    return sums / counts[:, None]


class HuggingFaceEncoder:
    """Per-token hidden states from a pretrained transformer.

    layer selects among hidden_states (-1 = last). Requires a fast
    tokenizer, which provides the piece-to-word alignment.
    """

    def __init__(self, name_or_path: str, layer: int = -1):
        from transformers import AutoModel, AutoTokenizer

        self.tokenizer = AutoTokenizer.from_pretrained(name_or_path, use_fast=True)
        if not self.tokenizer.is_fast:
            raise TokenAlignmentError("*", "a fast tokenizer is required for alignment")
        self.model = AutoModel.from_pretrained(name_or_path)
        self.model.eval()
        self.layer = layer
        self.dim = int(self.model.config.hidden_size)

    def encode_batch(self, batch: list[tuple[str, list[str]]]) -> list[np.ndarray]:
        ids = [sid for sid, _ in batch]
        token_lists = [tokens for _, tokens in batch]
        encoded = self.tokenizer(
            token_lists,
            is_split_into_words=True,
            padding=True,
            return_tensors="pt",
        )
        with torch.no_grad():
            output = self.model(**encoded, output_hidden_states=True)
        hidden = output.hidden_states[self.layer].cpu().numpy().astype(np.float64)
        out = []
        for row, (sid, tokens) in enumerate(zip(ids, token_lists)):
            word_ids = encoded.word_ids(batch_index=row)
            out.append(_pool_by_word(hidden[row], word_ids, len(tokens), sid))
        return out


def _chunk(token: str, size: int = 4) -> list[str]:
    return [token[i : i + size] for i in range(0, len(token), size)]


def _chunk_id(piece: str, vocab_size: int) -> int:
    digest = hashlib.sha1(piece.encode("utf-8")).digest()
    # reserve 0/1/2 for pad/bos/eos
    return 3 + int.from_bytes(digest[:4], "big") % (vocab_size - 3)


class RandomEncoder:
    """Seed-initialized local transformer over hashed character chunks.

    A stand-in contextual encoder for offline environments: no weights are
    fetched, yet the full subword-splitting and pooling pipeline runs and
    the output is deterministic for a fixed seed.
    """

    VOCAB = 5003

    def __init__(self, dim: int = 64, layers: int = 2, seed: int = 0, layer: int = -1):
        from transformers import RobertaConfig, RobertaModel

        heads = max(1, dim // 16)
        while dim % heads:
            heads -= 1
        torch.manual_seed(seed)
        config = RobertaConfig(
            vocab_size=self.VOCAB,
            hidden_size=dim,
            num_hidden_layers=layers,
            num_attention_heads=heads,
            intermediate_size=2 * dim,
            max_position_embeddings=2048,
            pad_token_id=0,
            bos_token_id=1,
            eos_token_id=2,
        )
        self.model = RobertaModel(config)
        self.model.eval()
        self.layer = layer
        self.dim = dim

    def encode_batch(self, batch: list[tuple[str, list[str]]]) -> list[np.ndarray]:
        rows = []
        word_maps = []
        for sid, tokens in batch:
            ids = [1]
            words: list[int | None] = [None]
            for t_index, token in enumerate(tokens):
                for piece in _chunk(token):
                    ids.append(_chunk_id(piece, self.VOCAB))
                    words.append(t_index)
            ids.append(2)
            words.append(None)
            rows.append(ids)
            word_maps.append(words)
        width = max(len(r) for r in rows)
        input_ids = torch.zeros((len(rows), width), dtype=torch.long)
        attention = torch.zeros((len(rows), width), dtype=torch.long)
        for i, r in enumerate(rows):
            input_ids[i, : len(r)] = torch.tensor(r)
            attention[i, : len(r)] = 1
        with torch.no_grad():
            output = self.model(
                input_ids=input_ids, attention_mask=attention, output_hidden_states=True
            )
        hidden = output.hidden_states[self.layer].cpu().numpy().astype(np.float64)
        out = []
        for row, (sid, tokens) in enumerate(batch):
            padded = word_maps[row] + [None] * (width - len(word_maps[row]))
            out.append(_pool_by_word(hidden[row], padded, len(tokens), sid))
        return out


class Projection:
    """Optional seeded linear down-projection applied after the encoder."""

    def __init__(self, in_dim: int, out_dim: int, seed: int):
        rng = np.random.default_rng(seed)
        self.matrix = rng.normal(0.0, 1.0 / np.sqrt(in_dim), size=(in_dim, out_dim))
        self.dim = out_dim

    def __call__(self, vectors: np.ndarray) -> np.ndarray:
        return vectors @ self.matrix
