"""Bit-channel reliabilities and frozen-set design.

Three code families are supported:

* ``design_sw``   -- sliding-window code ``T = W_S (x) T_M``
* ``design_full`` -- plain length-``N`` polar code
* ``design_ind``  -- ``S`` independent length-``M`` polar codes

Reliabilities are erasure probabilities / Bhattacharyya parameters (lower is
better) or Gaussian-approximation LLR means (higher is better).

The GA function ``phi(x) = 1 - E[tanh(L/2)]`` for ``L ~ N(x, 2x)`` is evaluated
from the exact integral rather than the usual two-piece fit, because the fit
exceeds 1 near zero and jumps upward at ``x = 10``.  Completing the square
gives::

    phi(x) = exp(-x/4) / sqrt(4 pi x) * integral sech(z/2) exp(-z^2/(4x)) dz

whose remaining integral is smooth and bounded by ``2 pi``, so ``log phi`` can
be computed without underflow for any mean.
"""

from __future__ import annotations

from typing import List, NamedTuple

import numpy as np

from .core import AWGN, BEC, CodeConfig, DesignChannel, complement, log2_exact

# ---------------------------------------------------------------------------
# phi and its inverse

_GH_T, _GH_W = np.polynomial.hermite.hermgauss(100)
_GH_T, _GH_W = _GH_T[50:], 2.0 * _GH_W[50:]  # even integrand: fold to t >= 0


def _gl_panels(edges, order):
    t, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * t + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


# sech(z/2) < 1e-17 beyond z = 80
_GL_Z, _GL_W = _gl_panels([0.0, 6.0, 16.0, 32.0, 52.0, 80.0], 48)
_SPLIT = 1.0
_X_LO = 1e-30
_X_HI = 1e12


def _sech(x):
    e = np.exp(-np.abs(x))
    return 2.0 * e / (1.0 + e * e)


def _log_phi_and_slope(x: np.ndarray):
    """Return ``log phi(x)`` and ``d log phi / dx`` for ``x > 0``."""
    x = np.asarray(x, dtype=float)
    lp = np.empty_like(x)
    dlp = np.empty_like(x)

    small = x < _SPLIT
    if np.any(small):
        xs = x[small]
        s = np.sqrt(xs)[:, None]
        st = s * _GH_T[None, :]
        sech = _sech(st)
        tanh = np.tanh(st)
        total = sech @ _GH_W
        # d/dx sech(sqrt(x) t) = -sech * tanh * t / (2 sqrt x)
        dtotal = -((sech * tanh * _GH_T[None, :]) @ _GH_W) / (2.0 * s[:, 0])
        lp[small] = -xs / 4.0 + np.log(total) - 0.5 * np.log(np.pi)
        dlp[small] = -0.25 + dtotal / total

    large = ~small
    if np.any(large):
        xl = x[large]
        z2 = _GL_Z[None, :] ** 2
        kern = _sech(0.5 * _GL_Z)[None, :] * np.exp(-z2 / (4.0 * xl[:, None]))
        integral = 2.0 * (kern @ _GL_W)
        dintegral = 2.0 * ((kern * z2) @ _GL_W) / (4.0 * xl**2)
        lp[large] = -xl / 4.0 - 0.5 * np.log(4.0 * np.pi * xl) + np.log(integral)
        dlp[large] = -0.25 - 0.5 / xl + dintegral / integral
    return lp, dlp


def log_phi(x):
    """Natural log of ``phi``; ``log_phi(0) == 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ValueError("phi is defined for non-negative arguments only")
    out = np.zeros_like(x)
    pos = x > 0
    if np.any(pos):
        out[pos] = _log_phi_and_slope(x[pos])[0]
    return out if out.ndim else float(out)


def phi(x):
    """Gaussian-approximation transfer function; ``phi(0) = 1``, strictly decreasing."""
    return np.exp(log_phi(x))


def log_phi_inv(ly, tol: float = 1e-14, max_iter: int = 100):
    """Inverse of :func:`log_phi` for ``ly <= 0`` (safeguarded Newton in ``log x``)."""
    ly = np.asarray(ly, dtype=float)
    if np.any(ly > 0) or np.any(np.isnan(ly)):
        raise ValueError("log_phi_inv needs arguments <= 0")
    out = np.zeros_like(ly)
    todo = ly < 0
    if not np.any(todo):
        return out if out.ndim else float(out)

    target = ly[todo]
    lo = np.full(target.shape, np.log(_X_LO))
    hi = np.full(target.shape, np.log(_X_HI))
    # Rough start: phi ~ exp(-x/2) for small x, ~exp(-x/4) for large x.
    u = np.log(np.clip(np.where(target > -0.5, -2.0 * target, -4.0 * target), _X_LO, _X_HI))
    active = np.ones(target.shape, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        uu = u[idx]
        x = np.exp(uu)
        lp, dlp = _log_phi_and_slope(x)
        resid = lp - target[idx]
        # log phi decreases in u: resid > 0 means x too small
        too_small = resid > 0
        lo[idx] = np.where(too_small, uu, lo[idx])
        hi[idx] = np.where(too_small, hi[idx], uu)
        slope = dlp * x
        with np.errstate(divide="ignore", invalid="ignore"):
            step = resid / slope
        new = uu - step
        bad = ~np.isfinite(new) | (new <= lo[idx]) | (new >= hi[idx])
        new = np.where(bad, 0.5 * (lo[idx] + hi[idx]), new)
        done = (np.abs(new - uu) <= tol) | (hi[idx] - lo[idx] <= tol)
        u[idx] = new
        active[idx[done]] = False
    out[todo] = np.exp(u)
    # Arguments beyond the bracket (phi below exp(-2.5e11)) pin to the bound.
    return out if out.ndim else float(out)


def phi_inv(y):
    """Inverse of :func:`phi` on ``(0, 1]``; ``phi_inv(1) == 0``."""
    y = np.asarray(y, dtype=float)
    if np.any(~((y > 0) & (y <= 1))):
        raise ValueError("phi_inv is defined on (0, 1] only")
    return log_phi_inv(np.log(y))


def _log1mexp(lx):
    """``log(1 - exp(lx))`` for ``lx <= 0``, accurate at both ends."""
    lx = np.asarray(lx, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(lx > -0.6931471805599453, np.log(-np.expm1(lx)), np.log1p(-np.exp(lx)))


def _check_means(mu):
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < 0) or np.any(np.isnan(mu)):
        raise ValueError("GA means must be non-negative")
    return mu


def _check_probs(p):
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or np.any(p > 1) or np.any(np.isnan(p)):
        raise ValueError("erasure / Bhattacharyya values must lie in [0, 1]")
    return p


def degrade_means(a, b):
    """GA mean of the check combination of two Gaussian LLRs with means ``a`` and ``b``."""
    la, lb = log_phi(_check_means(a)), log_phi(_check_means(b))
    # 1 - (1 - pa)(1 - pb) = pa + pb (1 - pa)
    lt = np.logaddexp(la, lb + _log1mexp(la))
    return log_phi_inv(np.minimum(lt, 0.0))


# ---------------------------------------------------------------------------
# sliding-window kernel recursions

def ws_block_erasures(S: int, erasure: float) -> np.ndarray:
    """Erasure probability seen by each of the ``S`` inputs of ``W_S`` over a BEC."""
    if S < 1:
        raise ValueError("S must be positive")
    d = float(_check_probs(erasure))
    i = np.arange(1, S, dtype=float)
    out = np.empty(S)
    out[:-1] = 1.0 - (1.0 - d) * (1.0 - d**i)
    out[-1] = d**S
    return out


def ws_block_bhattacharyya(S: int, Z: float) -> np.ndarray:
    """Bhattacharyya parameters of the ``W_S`` virtual channels (bound taken with equality)."""
    return ws_block_erasures(S, Z)


def ws_block_means(S: int, mu: float) -> np.ndarray:
    """GA LLR means of the ``W_S`` virtual channels for channel mean ``mu``."""
    if S < 1:
        raise ValueError("S must be positive")
    mu = float(_check_means(mu))
    out = np.empty(S)
    out[:-1] = degrade_means(np.full(S - 1, mu), mu * np.arange(1, S))
    out[-1] = S * mu
    return out


def polar_stage_erasure(profile) -> np.ndarray:
    """One polarization stage: every value ``z`` becomes ``(2z - z^2, z^2)``."""
    z = _check_probs(profile).reshape(-1)
    out = np.empty(2 * z.size)
    out[0::2] = 1.0 - (1.0 - z) ** 2
    out[1::2] = z * z
    return out


def polar_stage_means(profile) -> np.ndarray:
    """One GA polarization stage: every mean ``mu`` becomes ``(degraded, 2 mu)``."""
    mu = _check_means(profile).reshape(-1)
    out = np.empty(2 * mu.size)
    out[0::2] = degrade_means(mu, mu)
    out[1::2] = 2.0 * mu
    return out


def _expand(values, stages: int, kind: str) -> np.ndarray:
    stage = polar_stage_means if kind == "ga-mean" else polar_stage_erasure
    v = np.asarray(values, dtype=float)
    for _ in range(stages):
        v = stage(v)
    return v


# ---------------------------------------------------------------------------
# designs

class ReliabilityProfile(NamedTuple):
    kind: str  # "erasure", "bhattacharyya" or "ga-mean"
    values: np.ndarray

    @property
    def higher_is_better(self) -> bool:
        return self.kind == "ga-mean"

    def order(self) -> np.ndarray:
        """Indices from most to least reliable; ties go to the lower index."""
        key = -self.values if self.higher_is_better else self.values
        return np.argsort(key, kind="stable")


class Design(NamedTuple):
    profile: ReliabilityProfile
    frozen: np.ndarray
    info: np.ndarray


def channel_llr_mean(rate: float, ebn0_db: float) -> float:
    """Mean of BPSK/AWGN channel LLRs: ``4 R 10^(Eb/N0 / 10)``."""
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"rate must lie in (0, 1], got {rate}")
    return 4.0 * rate * 10.0 ** (ebn0_db / 10.0)


def _channel_parameter(design: DesignChannel):
    if isinstance(design, BEC):
        return "erasure", design.erasure
    if isinstance(design, AWGN):
        if design.method == "ga":
            return "ga-mean", channel_llr_mean(design.rate, design.ebn0_db)
        return "bhattacharyya", float(np.exp(-design.rate * 10.0 ** (design.ebn0_db / 10.0)))
    raise TypeError(f"unsupported design channel {design!r}")


def select(profile: ReliabilityProfile, K: int) -> Design:
    N = profile.values.size
    if not 0 <= K <= N:
        raise ValueError(f"K must lie in [0, {N}], got {K}")
    info = np.sort(profile.order()[:K])
    return Design(profile, complement(info, N), info)


def sw_profile(N: int, M: int, design: DesignChannel) -> ReliabilityProfile:
    S = N // M
    kind, value = _channel_parameter(design)
    blocks = ws_block_means(S, value) if kind == "ga-mean" else ws_block_erasures(S, value)
    stages = log2_exact(M)
    return ReliabilityProfile(kind, np.concatenate([_expand([b], stages, kind) for b in blocks]))


def design_sw(config: CodeConfig, design: DesignChannel = None) -> Design:
    """Frozen set of the sliding-window code: ``W_S`` first, then ``log2 M`` polar stages."""
    design = design if design is not None else config.design
    if design is None:
        raise ValueError("a design channel is required")
    return select(sw_profile(config.N, config.M, design), config.K)


def full_profile(N: int, design: DesignChannel) -> ReliabilityProfile:
    kind, value = _channel_parameter(design)
    return ReliabilityProfile(kind, _expand([value], log2_exact(N), kind))


def design_full(N: int, K: int, design: DesignChannel) -> Design:
    """Standard polar construction on ``T_N``."""
    if K > N:
        raise ValueError(f"K={K} exceeds N={N}")
    return select(full_profile(N, design), K)


def split_dimension(K: int, S: int) -> List[int]:
    """Per-block dimensions; the first ``K mod S`` blocks take one extra bit."""
    base, extra = divmod(K, S)
    return [base + (1 if s < extra else 0) for s in range(S)]


def design_ind(N: int, M: int, K: int, design: DesignChannel) -> List[Design]:
    """``S`` independent ``(M, K_s)`` polar designs over the same channel."""
    if K > N:
        raise ValueError(f"K={K} exceeds N={N}")
    profile = full_profile(M, design)
    return [select(profile, k) for k in split_dimension(K, N // M)]
