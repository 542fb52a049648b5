"""BLER bounds, target-SNR search and the Monte Carlo BLER harness.

Three transmission strategies are compared at equal ``(N, M, K)``:

* ``sw``   -- one sliding-window codeword, decoded window by window
* ``ind``  -- ``S`` independent ``(M, K_s)`` codewords; a frame fails if any block fails
* ``full`` -- one ordinary ``(N, K)`` polar codeword decoded at full length

Frames are simulated in batches.  Frame ``f`` of a point draws its message
and noise from ``ChannelRealization(seed, f)``, so a point's result does not
depend on batch size or on the number of worker processes.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np
from scipy.special import erfc

from .channel import LLR_MAX, frame_messages, frame_normals, frame_uniforms, noise_variance
from .construction import (
    ReliabilityProfile,
    design_full,
    design_ind,
    design_sw,
    full_profile,
    split_dimension,
    sw_profile,
)
from .core import AWGN, BEC, CodeConfig, DesignChannel
from .encoder import accumulate_batch, build_input_batch
from .sliding_window import SlidingWindowDecoder

log = logging.getLogger(__name__)

CSV_HEADER = ["strategy", "decoder", "list_size", "N", "M", "K", "ebn0_db", "source",
              "frames", "errors", "bler"]
VARIANTS = ("sw", "ind", "full")


@dataclass(frozen=True)
class Strategy:
    variant: str = "sw"
    decoder: str = "sc"
    list_size: int = 1
    mode: str = "exact"
    list_scope: str = "carried"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown strategy {self.variant!r}")
        if self.decoder not in ("sc", "scl"):
            raise ValueError(f"unknown decoder {self.decoder!r}")
        if self.list_size < 1:
            raise ValueError("list size must be at least 1")
        if self.decoder == "sc" and self.list_size != 1:
            object.__setattr__(self, "list_size", 1)


@dataclass(frozen=True)
class StopRule:
    max_frames: int = 10**7
    max_errors: int = 100


@dataclass(frozen=True)
class BlerPoint:
    ebn0_db: float
    frames: int
    errors: int
    bler: float
    source: str = "simulation"

    @property
    def rse(self) -> float:
        """Relative standard error of the BLER estimate."""
        if self.source != "simulation" or self.errors == 0:
            return math.inf if self.source == "simulation" else 0.0
        return math.sqrt((1.0 - self.bler) / self.errors)


# ---------------------------------------------------------------------------
# bounds

def q_func(x):
    """Standard Gaussian tail probability."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return out if np.ndim(out) else float(out)


def sc_bler_bound(means: ReliabilityProfile, info) -> float:
    """``sum_{i in I} Q(sqrt(mu_i / 2))``, clamped to ``[0, 1]``."""
    if means.kind != "ga-mean":
        raise ValueError(f"SC bound needs a GA-mean profile, got {means.kind!r}")
    info = np.asarray(info, dtype=np.int64)
    if info.size == 0:
        return 0.0
    return float(min(1.0, np.sum(q_func(np.sqrt(means.values[info] / 2.0)))))


def ind_bler_bound(p_e: float, S: int) -> float:
    """BLER of ``S`` independent blocks each failing with probability ``p_e``."""
    if not 0.0 <= p_e <= 1.0:
        raise ValueError("p_e must lie in [0, 1]")
    return float(-np.expm1(S * np.log1p(-p_e))) if p_e < 1.0 else 1.0


def _channel_design(N: int, K: int, ebn0_db: float) -> AWGN:
    return AWGN(ebn0_db, K / N)


def bler_bound(variant: str, N: int, M: int, K: int, ebn0_db: float,
               design: Optional[DesignChannel] = None) -> float:
    """SC BLER approximation of a strategy over BPSK/AWGN at ``ebn0_db``.

    The frozen sets come from ``design`` (default: the channel itself); the
    GA means are always those of the actual channel.
    """
    if K == 0:
        return 0.0
    channel = _channel_design(N, K, ebn0_db)
    design = design or channel
    if variant == "sw":
        info = design_sw(CodeConfig(N, M, K), design).info
        return sc_bler_bound(sw_profile(N, M, channel), info)
    if variant == "full":
        info = design_full(N, K, design).info
        return sc_bler_bound(full_profile(N, channel), info)
    if variant == "ind":
        means = full_profile(M, channel)
        blocks = [sc_bler_bound(means, d.info) for d in design_ind(N, M, K, design)]
        if len(set(blocks)) == 1:
            return ind_bler_bound(blocks[0], N // M)
        return float(1.0 - np.prod([1.0 - p for p in blocks]))
    raise ValueError(f"unknown strategy {variant!r}")


class BracketError(ValueError):
    pass


def target_snr(config: CodeConfig, strategy: Strategy, target_bler: float,
               lo: float = -2.0, hi: float = 12.0, tol: float = 0.01) -> float:
    """Smallest Eb/N0 (dB) at which the SC bound of ``strategy`` reaches ``target_bler``.

    Bisection on ``[lo, hi]`` until the bracket is narrower than ``tol``;
    the design follows the channel unless ``config.design`` pins it.
    """
    if strategy.decoder != "sc":
        raise ValueError("bounds exist for SC decoding only")

    def bound(g):
        return bler_bound(strategy.variant, config.N, config.M, config.K, g, config.design)

    b_lo, b_hi = bound(lo), bound(hi)
    if not (b_lo >= target_bler >= b_hi):
        raise BracketError(
            f"target BLER {target_bler:g} not bracketed on [{lo}, {hi}] dB: "
            f"bound({lo})={b_lo:.3g}, bound({hi})={b_hi:.3g}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        b = bound(mid)
        if not (b_lo >= b >= b_hi):
            raise AssertionError(f"bound not monotone in Eb/N0 around {mid:.4f} dB")
        if b > target_bler:
            lo, b_lo = mid, b
        else:
            hi, b_hi = mid, b
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Monte Carlo

@dataclass(frozen=True)
class _Job:
    config: CodeConfig
    strategy: Strategy
    param: float  # Eb/N0 in dB, or erasure probability for the BEC
    channel: str
    seed: int


def _design_for(job: _Job) -> DesignChannel:
    c = job.config
    if c.design is not None:
        return c.design
    if job.channel == "bec":
        return BEC(job.param)
    return AWGN(job.param, max(c.K, 1) / c.N)


def _llrs(job: _Job, x: np.ndarray, frames: Sequence[int]) -> np.ndarray:
    c = job.config
    symbols = 1.0 - 2.0 * x
    if job.channel == "bec":
        erased = frame_uniforms(job.seed, frames, c.N) <= job.param
        return np.where(erased, 0.0, LLR_MAX * symbols)
    sigma2 = noise_variance(max(c.K, 1) / c.N, job.param)
    r = symbols + math.sqrt(sigma2) * frame_normals(job.seed, frames, c.N)
    return np.clip(2.0 * r / sigma2, -LLR_MAX, LLR_MAX)


def _decoder(config: CodeConfig, info, strategy: Strategy) -> SlidingWindowDecoder:
    return SlidingWindowDecoder(config, info, strategy.decoder, strategy.list_size,
                                strategy.mode, strategy.list_scope)


def simulate_frames(job: _Job, first: int, count: int) -> np.ndarray:
    """Frame-error flags for frames ``first .. first + count - 1``."""
    c, st = job.config, job.strategy
    frames = range(first, first + count)
    msg = frame_messages(job.seed, frames, c.K)
    design = _design_for(job)
    if st.variant == "ind":
        designs = design_ind(c.N, c.M, c.K, design)
        sizes = split_dimension(c.K, c.S)
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        u = np.concatenate([build_input_batch(msg[:, offsets[s]:offsets[s + 1]], d.info, c.M)
                            for s, d in enumerate(designs)], axis=1)
        x = accumulate_batch(u.reshape(count, c.S, c.M), 1, c.M).reshape(count, c.N)
        y = _llrs(job, x, frames)
        errors = np.zeros(count, dtype=bool)
        for s, d in enumerate(designs):
            if d.info.size == 0:
                continue
            block = slice(s * c.M, (s + 1) * c.M)
            u_hat = _decoder(CodeConfig(c.M, c.M, d.info.size), d.info, st).decode(y[:, block])
            errors |= np.any(u_hat[:, d.info] != u[:, block][:, d.info], axis=1)
        return errors
    if st.variant == "full":
        info = design_full(c.N, c.K, design).info
        inner = CodeConfig(c.N, c.N, c.K)
    else:
        info = design_sw(c, design).info
        inner = c
    u = build_input_batch(msg, info, c.N)
    x = accumulate_batch(u, inner.S, inner.M)
    y = _llrs(job, x, frames)
    if info.size == 0:
        return np.zeros(count, dtype=bool)
    u_hat = _decoder(inner, info, st).decode(y)
    return np.any(u_hat[:, info] != msg, axis=1)


def _simulate_chunk(args):
    job, first, count = args
    return simulate_frames(job, first, count)


def worker_count() -> int:
    env = os.environ.get("POLAR_SWIN_THREADS")
    cpus = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), cpus))
        except ValueError:
            raise ValueError(f"POLAR_SWIN_THREADS must be an integer, got {env!r}") from None
    return 1


def default_batch(strategy: Strategy, N: int) -> int:
    per_frame = N * strategy.list_size
    return int(max(16, min(4096, 2**21 // per_frame)))


def monte_carlo_bler(config: CodeConfig, strategy: Strategy, ebn0_db: float,
                     stop: StopRule = StopRule(), seed: int = 0, channel: str = "awgn",
                     batch: Optional[int] = None, workers: Optional[int] = None) -> BlerPoint:
    """Simulate frames until ``stop.max_errors`` frame errors or ``stop.max_frames`` frames.

    The count stops exactly at the frame that produced the last required
    error, so results are independent of ``batch`` and ``workers``.
    For ``channel="bec"``, ``ebn0_db`` carries the erasure probability.
    """
    job = _Job(config, strategy, float(ebn0_db), channel, seed)
    batch = batch or default_batch(strategy, config.N)
    workers = workers or worker_count()
    frames = errors = 0
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        while frames < stop.max_frames and errors < stop.max_errors:
            chunks = []
            start = frames
            for _ in range(workers):
                count = min(batch, stop.max_frames - start)
                if count <= 0:
                    break
                chunks.append((job, start, count))
                start += count
            results = pool.map(_simulate_chunk, chunks) if pool else map(_simulate_chunk, chunks)
            for flags in results:
                cum = errors + np.cumsum(flags)
                hit = np.flatnonzero(cum >= stop.max_errors)
                if hit.size:
                    frames += int(hit[0]) + 1
                    errors = stop.max_errors
                    break
                frames += flags.size
                errors = int(cum[-1]) if flags.size else errors
            log.debug("%s %.2f dB: %d errors / %d frames", strategy.variant, ebn0_db, errors, frames)
    finally:
        if pool:
            pool.shutdown()
    return BlerPoint(float(ebn0_db), frames, errors, errors / frames if frames else 0.0)


def point_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def snr_sweep(config: CodeConfig, strategy: Strategy, ebn0_list: Iterable[float],
              stop: StopRule = StopRule(), seed: int = 0, channel: str = "awgn",
              **kwargs) -> List[BlerPoint]:
    """``monte_carlo_bler`` over a grid; point ``i`` uses sub-seed ``(seed, i)``."""
    points = []
    for i, g in enumerate(ebn0_list):
        points.append(monte_carlo_bler(config, strategy, g, stop, point_seed(seed, i), channel, **kwargs))
    for a, b in zip(points, points[1:]):
        if b.ebn0_db > a.ebn0_db and b.errors and a.errors and b.bler > a.bler * (1 + 3 * (a.rse + b.rse)):
            warnings.warn(f"BLER rises from {a.bler:.3g} at {a.ebn0_db} dB to {b.bler:.3g} at "
                          f"{b.ebn0_db} dB beyond Monte Carlo error", RuntimeWarning)
    return points


def bound_sweep(config: CodeConfig, strategy: Strategy, ebn0_list: Iterable[float]) -> List[BlerPoint]:
    return [BlerPoint(float(g), 0, 0, bler_bound(strategy.variant, config.N, config.M, config.K,
                                                  g, config.design), "bound")
            for g in ebn0_list]


def crossing_snr(points: Sequence[BlerPoint], target: float) -> float:
    """Eb/N0 where a BLER curve crosses ``target``, interpolated linearly in log10(BLER)."""
    pts = sorted((p for p in points if p.bler > 0), key=lambda p: p.ebn0_db)
    for a, b in zip(pts, pts[1:]):
        if a.bler >= target >= b.bler:
            la, lb, lt = math.log10(a.bler), math.log10(b.bler), math.log10(target)
            if la == lb:
                return a.ebn0_db
            return a.ebn0_db + (la - lt) / (la - lb) * (b.ebn0_db - a.ebn0_db)
    raise BracketError(f"BLER {target:g} not crossed by the simulated points")


def simulated_target_snr(config: CodeConfig, strategy: Strategy, target_bler: float,
                         start: float, step: float = 0.25, stop: StopRule = StopRule(),
                         seed: int = 0, max_points: int = 40) -> tuple:
    """Walk a ``step``-dB grid from ``start`` until two simulated points bracket
    ``target_bler``; returns ``(crossing, points)``."""
    points = {}

    def run(g):
        g = round(g, 6)
        if g not in points:
            points[g] = monte_carlo_bler(config, strategy, g, stop,
                                         point_seed(seed, int(round(g * 1000))))
        return points[g]

    g = start
    for _ in range(max_points):
        p = run(g)
        g += step if p.bler > target_bler else -step
        pts = sorted(points.values(), key=lambda q: q.ebn0_db)
        try:
            return crossing_snr(pts, target_bler), pts
        except BracketError:
            continue
    raise BracketError(f"no bracket for BLER {target_bler:g} within {max_points} points")


def csv_rows(config: CodeConfig, strategy: Strategy, points: Iterable[BlerPoint]):
    for p in points:
        yield [strategy.variant, strategy.decoder, strategy.list_size, config.N, config.M,
               config.K, repr(float(p.ebn0_db)), p.source, p.frames, p.errors, repr(float(p.bler))]


def write_csv(stream, rows, header: bool = True):
    w = csv.writer(stream, lineterminator="\n")
    if header:
        w.writerow(CSV_HEADER)
    w.writerows(rows)


def to_csv(config: CodeConfig, strategy: Strategy, points: Iterable[BlerPoint]) -> str:
    buf = io.StringIO()
    write_csv(buf, csv_rows(config, strategy, points))
    return buf.getvalue()
