"""LLR-domain SC and SCL decoding of a length-``M`` polar code.

The engines work on batches: SC takes ``(B, M)`` LLR arrays, SCL takes
``(B, L, M)`` arrays with one row per list slot.  The single-frame functions
:func:`sc_decode` and :func:`scl_decode` wrap them with ``B = 1``.

Tree layout follows ``x = u . T_M`` in natural order: the left child of a
node of size ``n`` decodes the first ``n/2`` inputs from
``f(alpha[:n/2], alpha[n/2:])`` and the right child uses
``g(alpha[:n/2], alpha[n/2:], beta_left)``.

SCL path metrics are non-negative penalties (lower is better): a decision
against the sign of its LLR costs ``|alpha|``.  Inactive list slots carry an
infinite metric.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .core import LLR_MAX, is_power_of_two, mask_from_indices
from .encoder import polar_encode_batch

MODES = ("exact", "minsum")


class StepCounter:
    """Abstract latency model: every vector f- or g-update is one time step."""

    def __init__(self):
        self.steps = 0

    def add(self, n: int = 1):
        self.steps += n


def f_op(a, b, mode: str = "exact"):
    """Check-node (boxplus) update of two LLRs."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m = np.minimum(np.abs(a), np.abs(b))
    out = np.where(np.signbit(a) ^ np.signbit(b), -m, m)
    if mode == "exact":
        # 2 atanh(tanh(a/2) tanh(b/2)), written to stay finite for saturated inputs
        out = out + np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b)))
    elif mode != "minsum":
        raise ValueError(f"unknown f_op mode {mode!r}")
    return out if out.ndim else float(out)


def g_op(a, b, bit):
    """Variable-node update ``(-1)^bit * a + b``, saturated at ``LLR_MAX``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.where(np.asarray(bit, dtype=bool), b - a, b + a)
    out = np.clip(out, -LLR_MAX, LLR_MAX)
    return out if out.ndim else float(out)


def _frozen_mask(frozen, M: int) -> np.ndarray:
    frozen = np.asarray(frozen)
    if frozen.dtype == bool and frozen.shape == (M,):
        return frozen
    return mask_from_indices(frozen, M)


def _check_llrs(y, M: Optional[int] = None) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if M is not None and y.shape[-1] != M:
        raise ValueError(f"expected {M} LLRs, got {y.shape[-1]}")
    if not is_power_of_two(y.shape[-1]):
        raise ValueError(f"LLR length must be a power of two, got {y.shape[-1]}")
    if np.any(np.isnan(y)):
        raise ValueError("LLRs must not be NaN")
    return np.clip(y, -LLR_MAX, LLR_MAX)


# ---------------------------------------------------------------------------
# SC

def _sc_node(alpha, frozen, mode, counter, leaves, offset, prune):
    n = alpha.shape[-1]
    if n == 1:
        a = alpha[..., 0]
        if leaves is not None:
            leaves[..., offset] = a
        if frozen[0]:
            return np.zeros(alpha.shape, dtype=np.uint8)
        return (a < 0).astype(np.uint8)[..., None]
    if prune and frozen.all():
        if counter is not None:
            counter.add(2 * n - 2)
        return np.zeros(alpha.shape, dtype=np.uint8)
    half = n // 2
    a1, a2 = alpha[..., :half], alpha[..., half:]
    if counter is not None:
        counter.add()
    beta_l = _sc_node(f_op(a1, a2, mode), frozen[:half], mode, counter, leaves, offset, prune)
    if counter is not None:
        counter.add()
    beta_r = _sc_node(g_op(a1, a2, beta_l), frozen[half:], mode, counter, leaves, offset + half, prune)
    return np.concatenate([beta_l ^ beta_r, beta_r], axis=-1)


def sc_decode_batch(Y, frozen_mask, mode: str = "exact", counter: StepCounter = None,
                    return_leaves: bool = False):
    """SC-decode a ``(B, M)`` batch.

    Returns the re-encoded decisions ``x = u . T_M`` (``(B, M)`` uint8), or
    ``(x, leaf_llrs)`` when ``return_leaves`` is set.  Decisions themselves are
    ``polar_encode_batch(x)`` since ``T_M`` is its own inverse over GF(2).
    """
    Y = np.asarray(Y, dtype=float)
    leaves = np.empty(Y.shape) if return_leaves else None
    x = _sc_node(Y, np.asarray(frozen_mask, dtype=bool), mode, counter, leaves, 0,
                 prune=not return_leaves)
    return (x, leaves) if return_leaves else x


def sc_decode(y, frozen, mode: str = "exact") -> np.ndarray:
    """Successive cancellation decoding of one frame; returns the estimated input ``u``."""
    y = _check_llrs(y)
    M = y.size
    x = sc_decode_batch(y[None, :], _frozen_mask(frozen, M), mode)
    return polar_encode_batch(x)[0]


# ---------------------------------------------------------------------------
# SCL

def _gather(arr, perm):
    return np.take_along_axis(arr, perm[..., None], axis=1)


def _compose(first, then):
    if first is None:
        return then
    if then is None:
        return first
    return np.take_along_axis(first, then, axis=1)


def _scl_leaf(a, frozen_bit, metric):
    # a, metric: (B, L)
    if frozen_bit:
        return np.zeros(a.shape + (1,), dtype=np.uint8), None, metric + np.maximum(-a, 0.0)
    L = a.shape[1]
    cand = np.concatenate([metric + np.maximum(-a, 0.0), metric + np.maximum(a, 0.0)], axis=1)
    # Stable sort: on equal metrics the bit-0 child, then the lower slot, wins.
    idx = np.argsort(cand, axis=1, kind="stable")[:, :L]
    new_metric = np.take_along_axis(cand, idx, axis=1)
    parent = idx % L
    bit = (idx >= L).astype(np.uint8)
    return bit[..., None], parent, new_metric


def _scl_node(alpha, frozen, metric, mode):
    """Returns ``(beta, perm, metric)``; ``perm[b, j]`` is the slot at node entry
    that final slot ``j`` descends from (``None`` means identity)."""
    n = alpha.shape[-1]
    if n == 1:
        return _scl_leaf(alpha[..., 0], frozen[0], metric)
    half = n // 2
    a1, a2 = alpha[..., :half], alpha[..., half:]
    beta_l, perm_l, metric = _scl_node(f_op(a1, a2, mode), frozen[:half], metric, mode)
    if perm_l is not None:
        a1, a2 = _gather(a1, perm_l), _gather(a2, perm_l)
    beta_r, perm_r, metric = _scl_node(g_op(a1, a2, beta_l), frozen[half:], metric, mode)
    if perm_r is not None:
        beta_l = _gather(beta_l, perm_r)
    return np.concatenate([beta_l ^ beta_r, beta_r], axis=-1), _compose(perm_l, perm_r), metric


def scl_decode_batch(alpha, frozen_mask, metric, mode: str = "exact"):
    """Run SCL over one length-``M`` tree for every slot of a ``(B, L, M)`` batch.

    ``metric`` holds the ``(B, L)`` metrics at entry.  Returns
    ``(x, perm, metric)`` with re-encoded decisions ``x`` per final slot and the
    ancestry map ``perm`` (``None`` if no slot was re-assigned).
    """
    return _scl_node(np.asarray(alpha, dtype=float), np.asarray(frozen_mask, dtype=bool),
                     np.asarray(metric, dtype=float), mode)


def initial_metrics(B: int, L: int) -> np.ndarray:
    metric = np.full((B, L), np.inf)
    metric[:, 0] = 0.0
    return metric


@dataclass
class DecoderPath:
    decisions: np.ndarray
    metric: float
    slot: int = field(default=0, compare=False)


def scl_decode(y, frozen, L: int, mode: str = "exact") -> Tuple[np.ndarray, List[DecoderPath]]:
    """Successive cancellation list decoding of one frame.

    Returns the decisions of the minimum-metric path and the live survivors
    sorted by metric.
    """
    if L < 1:
        raise ValueError("list size must be at least 1")
    y = _check_llrs(y)
    M = y.size
    alpha = np.broadcast_to(y, (1, L, M))
    x, _, metric = scl_decode_batch(alpha, _frozen_mask(frozen, M), initial_metrics(1, L), mode)
    u = polar_encode_batch(x[0])
    live = [j for j in np.argsort(metric[0], kind="stable") if np.isfinite(metric[0, j])]
    paths = [DecoderPath(u[j], float(metric[0, j]), int(j)) for j in live]
    return paths[0].decisions, paths

