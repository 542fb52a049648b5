"""Encoders for sliding-window polar codes.

``encode_matrix`` multiplies by the dense transform and exists as a reference.
``encode_accumulate`` is the production path: ``S`` independent length-``M``
polar encodes followed by a backward (suffix) XOR accumulation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    MAX_MATRIX_ORDER,
    CodeConfig,
    as_bits,
    gf2_matmul,
    index_set,
    is_power_of_two,
    log2_exact,
    sw_transform,
)


@dataclass(frozen=True)
class EncodeResult:
    codeword: np.ndarray
    partials: Optional[np.ndarray] = None  # (S, M) partial codewords t^(1..S)
    steps: int = 0  # butterfly stages + accumulation steps


def polar_encode_batch(u: np.ndarray) -> np.ndarray:
    """Butterfly ``u . T_M`` along the last axis; works on any leading shape."""
    x = np.array(u, dtype=np.uint8, copy=True)
    M = x.shape[-1]
    if not is_power_of_two(M):
        raise ValueError(f"block length must be a power of two, got {M}")
    lead = x.shape[:-1]
    half = M // 2
    while half >= 1:
        v = x.reshape(lead + (M // (2 * half), 2, half))
        v[..., 0, :] ^= v[..., 1, :]
        half //= 2
    return x


def polar_encode_block(u_block) -> np.ndarray:
    """Encode one length-``M`` block with ``T_M`` in ``O(M log M)``."""
    u = as_bits(u_block)
    return polar_encode_batch(u)


def encode_matrix(u, config: CodeConfig) -> np.ndarray:
    """Reference encoder ``x = u . (W_S (x) T_M)``."""
    if config.N > MAX_MATRIX_ORDER:
        raise NotImplementedError(f"matrix encoder limited to N <= {MAX_MATRIX_ORDER}")
    u = as_bits(u, config.N)
    return gf2_matmul(u, sw_transform(config.S, config.M))


def accumulate_batch(u: np.ndarray, S: int, M: int) -> np.ndarray:
    """Sliding-window encode of a ``(..., N)`` batch of input vectors."""
    u = np.asarray(u, dtype=np.uint8)
    lead = u.shape[:-1]
    t = polar_encode_batch(u.reshape(lead + (S, M)))
    x = np.bitwise_xor.accumulate(t[..., ::-1, :], axis=-2)[..., ::-1, :]
    return np.ascontiguousarray(x).reshape(lead + (S * M,))


def encode_accumulate(u, config: CodeConfig) -> EncodeResult:
    """Encode block by block, then set window ``s`` to ``t^(s) ^ ... ^ t^(S)``."""
    S, M = config.S, config.M
    u = as_bits(u, config.N)
    t = polar_encode_batch(u.reshape(S, M))
    steps = log2_exact(M)
    x = np.empty_like(t)
    acc = np.zeros(M, dtype=np.uint8)
    for s in range(S - 1, -1, -1):
        acc ^= t[s]
        x[s] = acc
        steps += 1
    return EncodeResult(x.reshape(-1), t, steps)


def build_input(message, info, N: int) -> np.ndarray:
    """Scatter the message onto the information positions; frozen bits are zero."""
    message = as_bits(message)
    return build_input_batch(message, index_set(info, N), N)


def build_input_batch(messages: np.ndarray, info: np.ndarray, N: int) -> np.ndarray:
    messages = np.asarray(messages, dtype=np.uint8)
    if messages.shape[-1] != len(info):
        raise ValueError(f"message length {messages.shape[-1]} does not match |I| = {len(info)}")
    u = np.zeros(messages.shape[:-1] + (N,), dtype=np.uint8)
    u[..., info] = messages
    return u
