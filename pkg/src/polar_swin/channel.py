"""BPSK modulation, AWGN / BEC channels and reproducible per-frame randomness.

Every frame draws from its own Philox-4x64 stream.  The 128-bit key is
derived from the run seed with ``numpy.random.SeedSequence``; the counter is
``[position, 0, stream, frame]`` so frames and streams never overlap.
Uniforms use the top 53 bits of each raw 64-bit word, mapped to ``(0, 1]``;
normals use Box-Muller (``r cos``, then ``r sin``) on consecutive uniform
pairs.  Only raw generator output is consumed, so noise is bit-exact across
platforms and numpy versions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import LLR_MAX

MESSAGE_STREAM = 0
NOISE_STREAM = 1


@lru_cache(maxsize=64)
def _key(seed: int) -> tuple:
    state = np.random.SeedSequence(seed).generate_state(2, np.uint64)
    return int(state[0]), int(state[1])


@dataclass(frozen=True)
class ChannelRealization:
    """Randomness of one frame, fully determined by ``(seed, frame)``."""

    seed: int
    frame: int = 0

    def raw(self, n: int, stream: int) -> np.ndarray:
        counter = np.array([0, 0, stream, self.frame], dtype=np.uint64)
        bg = np.random.Philox(key=np.array(_key(self.seed), dtype=np.uint64), counter=counter)
        return bg.random_raw(n)

    def uniforms(self, n: int, stream: int = NOISE_STREAM) -> np.ndarray:
        return ((self.raw(n, stream) >> np.uint64(11)) + 1).astype(float) * 2.0**-53

    def normals(self, n: int, stream: int = NOISE_STREAM) -> np.ndarray:
        half = (n + 1) // 2
        u = self.uniforms(2 * half, stream)
        r = np.sqrt(-2.0 * np.log(u[:half]))
        theta = 2.0 * np.pi * u[half:]
        return np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]

    def bits(self, n: int, stream: int = MESSAGE_STREAM) -> np.ndarray:
        words = self.raw((n + 63) // 64, stream)
        return np.unpackbits(words.astype("<u8").view(np.uint8), bitorder="little")[:n]


def bpsk_modulate(x) -> np.ndarray:
    """Bit 0 -> +1, bit 1 -> -1."""
    return 1.0 - 2.0 * np.asarray(x, dtype=float)


def noise_variance(rate: float, ebn0_db: float) -> float:
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"rate must lie in (0, 1], got {rate}")
    return 1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0))


def awgn_llr(symbols, rate: float, ebn0_db: float, realization: ChannelRealization = None,
             noise=None) -> np.ndarray:
    """Channel LLRs ``2 r / sigma^2`` of BPSK symbols over AWGN.

    ``sigma^2 = 1 / (2 R 10^(Eb/N0 / 10))``.  Pass ``noise`` (unit-variance
    samples) to bypass the generator.
    """
    symbols = np.asarray(symbols, dtype=float)
    sigma2 = noise_variance(rate, ebn0_db)
    if noise is None:
        if realization is None:
            raise ValueError("either a realization or explicit noise is required")
        noise = realization.normals(symbols.size).reshape(symbols.shape)
    r = symbols + np.sqrt(sigma2) * np.asarray(noise, dtype=float)
    return np.clip(2.0 * r / sigma2, -LLR_MAX, LLR_MAX)


def bec_llr(x, erasure: float, realization: ChannelRealization) -> np.ndarray:
    """Each position erased (LLR 0) with probability ``erasure``, else ``+-LLR_MAX``."""
    if not 0.0 <= erasure <= 1.0:
        raise ValueError(f"erasure probability must lie in [0, 1], got {erasure}")
    x = np.asarray(x)
    erased = realization.uniforms(x.size).reshape(x.shape) <= erasure
    return np.where(erased, 0.0, LLR_MAX * bpsk_modulate(x))


def frame_messages(seed: int, frames, K: int) -> np.ndarray:
    """``(B, K)`` message bits for the given frame indices."""
    return np.stack([ChannelRealization(seed, int(f)).bits(K) for f in frames]) \
        if len(frames) else np.zeros((0, K), dtype=np.uint8)


def frame_normals(seed: int, frames, N: int) -> np.ndarray:
    return np.stack([ChannelRealization(seed, int(f)).normals(N) for f in frames])


def frame_uniforms(seed: int, frames, N: int) -> np.ndarray:
    return np.stack([ChannelRealization(seed, int(f)).uniforms(N) for f in frames])
