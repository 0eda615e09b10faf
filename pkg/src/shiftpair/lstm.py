"""Gated recurrent summarizers with exact reverse-mode gradients.

A single weight convention is shared by every recurrence in the scorer:
gate pre-activations stack as [input, forget, candidate, output] rows of
W (4H x D), U (4H x H) and b (4H,). Sequences of unequal length are padded
and masked; a masked step passes hidden and cell state through unchanged,
so the "final" hidden state of each sequence is simply the state after the
last padded step. Empty sequences summarize to zero vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class LstmCache:
    X: np.ndarray          # (B, T, D) padded inputs
    mask: np.ndarray       # (B, T)
    lengths: tuple[int, ...]
    h_prev: np.ndarray     # (T, B, H)
    c_prev: np.ndarray     # (T, B, H)
    gates: np.ndarray      # (T, B, 4H) post-activation [i, f, g, o]
    c_hat: np.ndarray      # (T, B, H) pre-mask cell state
    empty: bool = False


def forward(
    W: np.ndarray, U: np.ndarray, b: np.ndarray, seqs: Sequence[np.ndarray]
) -> tuple[np.ndarray, LstmCache]:
    """Run the recurrence over a batch of sequences; return final hiddens."""
    H = U.shape[1]
    D = W.shape[1]
    B = len(seqs)
    lengths = tuple(len(s) for s in seqs)
    T = max(lengths, default=0)
    if B == 0 or T == 0:
        cache = LstmCache(
            X=np.zeros((B, 0, D)), mask=np.zeros((B, 0)), lengths=lengths,
            h_prev=np.zeros((0, B, H)), c_prev=np.zeros((0, B, H)),
            gates=np.zeros((0, B, 4 * H)), c_hat=np.zeros((0, B, H)), empty=True,
        )
        return np.zeros((B, H)), cache

    X = np.zeros((B, T, D))
    mask = np.zeros((B, T))
    for i, s in enumerate(seqs):
        if len(s):
            X[i, : len(s)] = s
            mask[i, : len(s)] = 1.0

    xw = X.reshape(B * T, D) @ W.T
    xw = xw.reshape(B, T, 4 * H)

    h = np.zeros((B, H))
    c = np.zeros((B, H))
    h_prev = np.empty((T, B, H))
    c_prev = np.empty((T, B, H))
    gates = np.empty((T, B, 4 * H))
    c_hats = np.empty((T, B, H))
    for t in range(T):
        h_prev[t] = h
        c_prev[t] = c
        a = xw[:, t] + h @ U.T + b
        i_g = sigmoid(a[:, :H])
        f_g = sigmoid(a[:, H : 2 * H])
        g_g = np.tanh(a[:, 2 * H : 3 * H])
        o_g = sigmoid(a[:, 3 * H :])
        c_hat = f_g * c + i_g * g_g
        h_hat = o_g * np.tanh(c_hat)
        m = mask[:, t : t + 1]
        h = m * h_hat + (1.0 - m) * h
        c = m * c_hat + (1.0 - m) * c
        gates[t, :, :H] = i_g
        gates[t, :, H : 2 * H] = f_g
        gates[t, :, 2 * H : 3 * H] = g_g
        gates[t, :, 3 * H :] = o_g
        c_hats[t] = c_hat
    cache = LstmCache(X=X, mask=mask, lengths=lengths, h_prev=h_prev,
                      c_prev=c_prev, gates=gates, c_hat=c_hats)
    return h, cache


def backward(
    W: np.ndarray, U: np.ndarray, b: np.ndarray,
    cache: LstmCache, d_final: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[np.ndarray]]:
    """Backpropagate a gradient on the final hiddens through the recurrence."""
    H = U.shape[1]
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros_like(b)
    if cache.empty:
        return dW, dU, db, [np.zeros((n, W.shape[1])) for n in cache.lengths]

    B, T, D = cache.X.shape
    dX = np.zeros((B, T, D))
    dh = d_final.copy()
    dc = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        m = cache.mask[:, t : t + 1]
        i_g = cache.gates[t, :, :H]
        f_g = cache.gates[t, :, H : 2 * H]
        g_g = cache.gates[t, :, 2 * H : 3 * H]
        o_g = cache.gates[t, :, 3 * H :]
        c_hat = cache.c_hat[t]
        c_prev = cache.c_prev[t]
        h_prev = cache.h_prev[t]

        dh_hat = m * dh
        dh_passed = (1.0 - m) * dh
        dc_hat = m * dc
        dc_passed = (1.0 - m) * dc

        tanh_c = np.tanh(c_hat)
        do = dh_hat * tanh_c
        dc_hat = dc_hat + dh_hat * o_g * (1.0 - tanh_c * tanh_c)
        df = dc_hat * c_prev
        di = dc_hat * g_g
        dg = dc_hat * i_g
        dc = dc_hat * f_g + dc_passed

        da = np.concatenate(
            [
                di * i_g * (1.0 - i_g),
                df * f_g * (1.0 - f_g),
                dg * (1.0 - g_g * g_g),
                do * o_g * (1.0 - o_g),
            ],
            axis=1,
        )
        x_t = cache.X[:, t]
        dW += da.T @ x_t
        dU += da.T @ h_prev
        db += da.sum(axis=0)
        dX[:, t] = da @ W
        dh = dh_passed + da @ U
    d_seqs = [dX[i, :n] for i, n in enumerate(cache.lengths)]
    return dW, dU, db, d_seqs


def cell_step(
    W: np.ndarray, U: np.ndarray, b: np.ndarray,
    x: np.ndarray, h: np.ndarray, c: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """One un-batched cell update; used by incremental decoding paths."""
    H = U.shape[1]
    a = W @ x + U @ h + b
    i_g = sigmoid(a[:H])
    f_g = sigmoid(a[H : 2 * H])
    g_g = np.tanh(a[2 * H : 3 * H])
    o_g = sigmoid(a[3 * H :])
    c_new = f_g * c + i_g * g_g
    h_new = o_g * np.tanh(c_new)
    return h_new, c_new


def scan(
    W: np.ndarray, U: np.ndarray, b: np.ndarray, seq: np.ndarray
) -> np.ndarray:
    """Hidden state after each prefix of one sequence: (L+1, H), row 0 zero."""
    H = U.shape[1]
    L = len(seq)
    out = np.zeros((L + 1, H))
    h = np.zeros(H)
    c = np.zeros(H)
    for t in range(L):
        h, c = cell_step(W, U, b, seq[t], h, c)
        out[t + 1] = h
    return out


def bidirectional_forward(
    params: dict, prefix: str, seqs: Sequence[np.ndarray]
) -> tuple[np.ndarray, tuple[LstmCache, LstmCache]]:
    """Concatenated final hiddens of a forward and a reversed pass."""
    fw, fw_cache = forward(
        params[f"{prefix}_fw_W"], params[f"{prefix}_fw_U"], params[f"{prefix}_fw_b"], seqs
    )
    reversed_seqs = [s[::-1] for s in seqs]
    bw, bw_cache = forward(
        params[f"{prefix}_bw_W"], params[f"{prefix}_bw_U"], params[f"{prefix}_bw_b"],
        reversed_seqs,
    )
    return np.concatenate([fw, bw], axis=1), (fw_cache, bw_cache)


def bidirectional_backward(
    params: dict, prefix: str, caches: tuple[LstmCache, LstmCache],
    d_summary: np.ndarray, grads: dict,
) -> list[np.ndarray]:
    """Route a gradient on the concatenated summary back to the inputs."""
    H = params[f"{prefix}_fw_U"].shape[1]
    dW, dU, db, d_fw = backward(
        params[f"{prefix}_fw_W"], params[f"{prefix}_fw_U"], params[f"{prefix}_fw_b"],
        caches[0], d_summary[:, :H],
    )
    grads[f"{prefix}_fw_W"] += dW
    grads[f"{prefix}_fw_U"] += dU
    grads[f"{prefix}_fw_b"] += db
    dW, dU, db, d_bw = backward(
        params[f"{prefix}_bw_W"], params[f"{prefix}_bw_U"], params[f"{prefix}_bw_b"],
        caches[1], d_summary[:, H:],
    )
    grads[f"{prefix}_bw_W"] += dW
    grads[f"{prefix}_bw_U"] += dU
    grads[f"{prefix}_bw_b"] += db
    return [f + bwd[::-1] for f, bwd in zip(d_fw, d_bw)]
