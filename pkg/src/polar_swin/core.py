"""Shared types and binary transform generators.

Matrices are plain ``numpy.uint8`` arrays; bit vectors are 1-D ``uint8``
arrays and index sets are sorted 1-D ``int64`` arrays.  Everything is in
natural (non bit-reversed) order and 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

# Largest LLR magnitude handled anywhere; used for "certain" bits.
LLR_MAX = 1e9

# Dense transform matrices are only ever built for tests and the reference encoder.
MAX_MATRIX_ORDER = 4096


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def log2_exact(n: int) -> int:
    if not is_power_of_two(n):
        raise ValueError(f"{n} is not a power of two")
    return n.bit_length() - 1


@dataclass(frozen=True)
class BEC:
    """Binary erasure design channel with erasure probability ``erasure``."""

    erasure: float

    def __post_init__(self):
        if not 0.0 <= self.erasure <= 1.0:
            raise ValueError(f"erasure probability must lie in [0, 1], got {self.erasure}")


@dataclass(frozen=True)
class AWGN:
    """BPSK/AWGN design channel.

    ``ebn0_db`` is the design Eb/N0 and ``rate`` the rate used to convert it
    into a channel LLR mean.  ``method`` picks Gaussian approximation
    (``"ga"``) or the Bhattacharyya bound ``Z = exp(-R Eb/N0)``.
    """

    ebn0_db: float
    rate: float
    method: str = "ga"

    def __post_init__(self):
        if not 0.0 < self.rate <= 1.0:
            raise ValueError(f"rate must lie in (0, 1], got {self.rate}")
        if self.method not in ("ga", "bhattacharyya"):
            raise ValueError(f"unknown AWGN design method {self.method!r}")


DesignChannel = Union[BEC, AWGN]


@dataclass(frozen=True)
class CodeConfig:
    """One sliding-window code instance: length ``N``, window ``M``, dimension ``K``."""

    N: int
    M: int
    K: int
    design: Optional[DesignChannel] = None

    def __post_init__(self):
        if not is_power_of_two(self.N):
            raise ValueError(f"N must be a power of two, got {self.N}")
        if not is_power_of_two(self.M):
            raise ValueError(f"M must be a power of two, got {self.M}")
        if self.M > self.N:
            raise ValueError(f"M must not exceed N (M={self.M}, N={self.N})")
        if not 0 <= self.K <= self.N:
            raise ValueError(f"K must lie in [0, N], got K={self.K} for N={self.N}")

    @property
    def S(self) -> int:
        return self.N // self.M

    @property
    def n(self) -> int:
        return log2_exact(self.N)

    @property
    def m(self) -> int:
        return log2_exact(self.M)

    @property
    def rate(self) -> float:
        return self.K / self.N


def as_bits(bits, length: Optional[int] = None) -> np.ndarray:
    """Validate and convert to a ``uint8`` bit vector."""
    arr = np.asarray(bits)
    if arr.ndim != 1:
        raise ValueError("bit vector must be one-dimensional")
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ValueError("bit vector entries must be 0 or 1")
    if length is not None and arr.size != length:
        raise ValueError(f"expected {length} bits, got {arr.size}")
    return arr.astype(np.uint8)


def index_set(indices, N: int) -> np.ndarray:
    """Sorted, duplicate-free index array with every entry in ``[0, N)``."""
    arr = np.asarray(indices, dtype=np.int64).reshape(-1)
    out = np.unique(arr)
    if out.size != arr.size:
        raise ValueError("index set contains duplicates")
    if out.size and (out[0] < 0 or out[-1] >= N):
        raise ValueError(f"index set entries must lie in [0, {N})")
    return out


def complement(indices, N: int) -> np.ndarray:
    mask = np.ones(N, dtype=bool)
    mask[np.asarray(indices, dtype=np.int64)] = False
    return np.flatnonzero(mask)


def mask_from_indices(indices, N: int) -> np.ndarray:
    mask = np.zeros(N, dtype=bool)
    mask[np.asarray(indices, dtype=np.int64)] = True
    return mask


def make_ws_kernel(S: int) -> np.ndarray:
    """Sliding-window kernel: ``S x S`` lower triangular all-ones matrix."""
    if S < 1:
        raise ValueError(f"kernel size must be positive, got {S}")
    if S > MAX_MATRIX_ORDER:
        raise ValueError(f"refusing to materialise a {S}x{S} matrix")
    return np.tril(np.ones((S, S), dtype=np.uint8))


T2 = np.array([[1, 0], [1, 1]], dtype=np.uint8)


def kronecker(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Kronecker product of two binary matrices."""
    A = np.asarray(A, dtype=np.uint8)
    B = np.asarray(B, dtype=np.uint8)
    if A.ndim != 2 or B.ndim != 2 or 0 in A.shape or 0 in B.shape:
        raise ValueError("kronecker operands must be non-empty 2-D matrices")
    if A.shape[0] * B.shape[0] > MAX_MATRIX_ORDER or A.shape[1] * B.shape[1] > MAX_MATRIX_ORDER:
        raise ValueError("Kronecker product too large to materialise")
    return np.kron(A, B).astype(np.uint8)


def polar_transform(m: int) -> np.ndarray:
    """``T_2`` raised to the ``m``-fold Kronecker power (no bit reversal)."""
    if m < 0:
        raise ValueError(f"m must be non-negative, got {m}")
    T = np.ones((1, 1), dtype=np.uint8)
    for _ in range(m):
        T = kronecker(T, T2)
    return T


def sw_transform(S: int, M: int) -> np.ndarray:
    """Full sliding-window transform ``W_S (x) T_M`` (small sizes only)."""
    return kronecker(make_ws_kernel(S), polar_transform(log2_exact(M)))


def gf2_matmul(u: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Row vector(s) times matrix over GF(2)."""
    return (np.asarray(u, dtype=np.int64) @ np.asarray(T, dtype=np.int64) % 2).astype(np.uint8)
