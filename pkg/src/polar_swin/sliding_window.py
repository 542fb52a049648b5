"""Sliding-window SC / SCL decoding through a window of ``M`` LLRs.

The decoder keeps a length-``M`` LLR buffer ``l``.  Window ``s`` is decoded
from ``l [+] y^(s+1)``; its re-encoded decisions ``x^(s)`` then update the
buffer as ``l <- (-1)^x^(s) * l + y^(s+1)``.  The last window is decoded from
``l`` alone.  Input arrives one window at a time (:class:`SlidingWindowDecoder`),
so a decision for window ``s`` is available as soon as ``y^(s+1)`` is in.
"""

from __future__ import annotations

from typing import List, Optional

import numpy as np

from .core import CodeConfig, index_set, mask_from_indices
from .decoder import (
    StepCounter,
    _check_llrs,
    _gather,
    f_op,
    g_op,
    initial_metrics,
    sc_decode_batch,
    scl_decode_batch,
)
from .encoder import polar_encode_batch

LIST_SCOPES = ("carried", "per_window")


def window_combine(l, y_next, mode: str = "exact") -> np.ndarray:
    """Elementwise boxplus of the buffer with the next window's LLRs."""
    l, y_next = np.asarray(l, dtype=float), np.asarray(y_next, dtype=float)
    if l.shape[-1] != y_next.shape[-1]:
        raise ValueError(f"length mismatch: {l.shape[-1]} vs {y_next.shape[-1]}")
    return f_op(l, y_next, mode)


def buffer_update(l, x_s, y_next) -> np.ndarray:
    """``(-1)^x_s * l + y_next`` elementwise."""
    l, y_next = np.asarray(l, dtype=float), np.asarray(y_next, dtype=float)
    x_s = np.asarray(x_s)
    if not (l.shape[-1] == y_next.shape[-1] == x_s.shape[-1]):
        raise ValueError("buffer, partial sum and LLR window must have equal length")
    return g_op(l, y_next, x_s)


def restrict_info_set(info, s: int, M: int) -> np.ndarray:
    """Information positions of window ``s`` (1-based), re-based to ``[0, M)``."""
    info = np.asarray(info, dtype=np.int64)
    lo = (s - 1) * M
    sel = info[(info >= lo) & (info < lo + M)]
    return np.sort(sel - lo)


def latency_steps(N: int, M: int) -> int:
    """Time steps of sliding-window SC: ``2M`` per non-final window, ``2M - 2`` for the last."""
    if M < 1 or N % M:
        raise ValueError("M must divide N")
    return 2 * N - 2


class SlidingWindowDecoder:
    """Window-by-window decoder for a batch of frames.

    Feed ``S`` chunks of ``M`` LLRs through :meth:`push` and close with
    :meth:`finish`.  Both return the list of window decisions that became
    final, each of shape ``(B, M)``.  With a carried SCL list nothing is final
    until the end, so everything is returned by :meth:`finish`.

    ``record_leaves`` keeps the leaf LLRs of SC decoding (genie-aided
    analysis); it disables frozen-subtree pruning.
    """

    def __init__(self, config: CodeConfig, info, decoder: str = "sc", list_size: int = 1,
                 mode: str = "exact", list_scope: str = "carried",
                 counter: Optional[StepCounter] = None, record_leaves: bool = False):
        if decoder not in ("sc", "scl"):
            raise ValueError(f"unknown decoder {decoder!r}")
        if list_scope not in LIST_SCOPES:
            raise ValueError(f"unknown list scope {list_scope!r}")
        if list_size < 1:
            raise ValueError("list size must be at least 1")
        self.config = config
        self.M, self.S = config.M, config.S
        info = np.asarray(info)
        if info.dtype == bool:
            info = np.flatnonzero(info)
        self.frozen = ~mask_from_indices(index_set(info, config.N), config.N)
        self.decoder = decoder
        self.L = list_size
        self.mode = mode
        self.list_scope = list_scope
        self.counter = counter
        self.record_leaves = record_leaves
        self.reset()

    def reset(self):
        self.s = 0  # windows decoded so far
        self.received = 0
        self.l = None
        self.metric = None
        self.leaves: List[np.ndarray] = []
        self._history = []  # carried SCL: (decisions, ancestry) per window

    @property
    def done(self) -> bool:
        return self.s == self.S

    def _frozen(self, s):
        return self.frozen[s * self.M:(s + 1) * self.M]

    def _decode_sc(self, v):
        out = sc_decode_batch(v, self._frozen(self.s), self.mode, self.counter,
                              return_leaves=self.record_leaves)
        if self.record_leaves:
            x, leaves = out
            self.leaves.append(leaves)
            return x
        return out

    def _start(self, y1):
        if self.decoder == "sc":
            self.l = y1.copy()
        else:
            B = y1.shape[0]
            self.l = np.repeat(y1[:, None, :], self.L, axis=1)
            self.metric = initial_metrics(B, self.L)

    def _window(self, y_next):
        """Decode window ``self.s``; ``y_next`` is ``None`` for the last window."""
        emitted = []
        if self.decoder == "sc":
            if y_next is None:
                x = self._decode_sc(self.l)
            else:
                if self.counter is not None:
                    self.counter.add()
                x = self._decode_sc(window_combine(self.l, y_next, self.mode))
                if self.counter is not None:
                    self.counter.add()
                self.l = buffer_update(self.l, x, y_next)
            emitted.append(polar_encode_batch(x))
        else:
            yb = None if y_next is None else y_next[:, None, :]
            v = self.l if yb is None else window_combine(self.l, yb, self.mode)
            x, perm, self.metric = scl_decode_batch(v, self._frozen(self.s), self.metric, self.mode)
            if perm is not None:
                self.l = _gather(self.l, perm)
            if yb is not None:
                self.l = buffer_update(self.l, x, yb)
            u = polar_encode_batch(x)
            if self.list_scope == "per_window" or (yb is None and not self._history):
                best = np.argmin(self.metric, axis=1)
                rows = np.arange(u.shape[0])
                emitted.append(u[rows, best])
                self.l = np.repeat(self.l[rows, best][:, None, :], self.L, axis=1)
                m = initial_metrics(u.shape[0], self.L)
                m[:, 0] = self.metric[rows, best]
                self.metric = m
            else:
                self._history.append((u, perm))
                if yb is None:
                    emitted.extend(self._traceback())
        self.s += 1
        return emitted

    def _traceback(self):
        B = self.metric.shape[0]
        rows = np.arange(B)
        slot = np.argmin(self.metric, axis=1)
        out = []
        for u, perm in reversed(self._history):
            out.append(u[rows, slot])
            if perm is not None:
                slot = perm[rows, slot]
        self._history = []
        return out[::-1]

    def push(self, y_window) -> List[np.ndarray]:
        """Accept the next ``M`` LLRs (shape ``(M,)`` or ``(B, M)``)."""
        y = _check_llrs(np.atleast_2d(y_window), self.M)
        if self.received >= self.S:
            raise ValueError(f"received more than S={self.S} windows")
        self.received += 1
        if self.received == 1:
            self._start(y)
            return []
        return self._window(y)

    def finish(self) -> List[np.ndarray]:
        if self.received != self.S:
            raise ValueError(f"expected {self.S} windows of {self.M} LLRs, got {self.received}")
        if self.done:
            raise ValueError("frame already finished")
        return self._window(None)

    def state_nbytes(self) -> int:
        """Working memory held between windows: LLR buffer, list metrics and the
        scratch of one length-``M`` tree decoder (about ``2M`` LLRs and ``M``
        partial sums per slot).  Carried-list decision history is output and
        not counted."""
        slots = 1 if self.decoder == "sc" else self.L
        scratch = slots * (2 * self.M * 8 + self.M)
        held = 0 if self.l is None else self.l.nbytes
        if self.metric is not None:
            held += self.metric.nbytes
        B = 1 if self.l is None else self.l.shape[0]
        return held + B * scratch

    def decode(self, Y) -> np.ndarray:
        """Decode whole frames ``(B, N)`` or ``(N,)``; returns ``u`` of the same shape."""
        Y = np.asarray(Y, dtype=float)
        single = Y.ndim == 1
        Y = np.atleast_2d(Y)
        if Y.shape[1] != self.config.N:
            raise ValueError(f"expected {self.config.N} LLRs per frame, got {Y.shape[1]}")
        self.reset()
        windows = []
        for s in range(self.S):
            windows.extend(self.push(Y[:, s * self.M:(s + 1) * self.M]))
        windows.extend(self.finish())
        u = np.concatenate(windows, axis=1)
        return u[0] if single else u


def sw_sc_decode(y, config: CodeConfig, info, mode: str = "exact",
                 counter: Optional[StepCounter] = None) -> np.ndarray:
    """Sliding-window SC decoding of one frame (or a ``(B, N)`` batch)."""
    return SlidingWindowDecoder(config, info, "sc", mode=mode, counter=counter).decode(y)


def sw_scl_decode(y, config: CodeConfig, info, L: int, mode: str = "exact",
                  list_scope: str = "carried") -> np.ndarray:
    """Sliding-window SCL decoding; the list is carried across windows by default."""
    return SlidingWindowDecoder(config, info, "scl", L, mode, list_scope).decode(y)

