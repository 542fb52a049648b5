import numpy as np
import pytest
from _oracles import all_inputs, brute_force_sc, ml_codewords

from polar_swin.construction import design_sw
from polar_swin.core import AWGN, BEC, LLR_MAX, CodeConfig, sw_transform
from polar_swin.decoder import StepCounter, sc_decode
from polar_swin.encoder import accumulate_batch, build_input_batch
from polar_swin.sliding_window import (
    SlidingWindowDecoder,
    buffer_update,
    latency_steps,
    restrict_info_set,
    sw_sc_decode,
    sw_scl_decode,
    window_combine,
)


def codewords(config, info):
    msgs = all_inputs(len(info))
    U = build_input_batch(msgs, info, config.N)
    return msgs, U, accumulate_batch(U, config.S, config.M)


def test_window_combine_examples():
    np.testing.assert_allclose(window_combine([3.0, -3.0], [2.0, 2.0], "minsum"), [2.0, -2.0])
    np.testing.assert_allclose(window_combine([0.0], [5.0]), [0.0])
    with pytest.raises(ValueError):
        window_combine([1.0, 2.0], [1.0])


def test_buffer_update_examples():
    np.testing.assert_allclose(buffer_update([1.0, 2.0], [0, 1], [0.5, 0.5]), [1.5, -1.5])
    np.testing.assert_allclose(buffer_update([0.0, 0.0], [1, 1], [3.0, -3.0]), [3.0, -3.0])
    with pytest.raises(ValueError):
        buffer_update([1.0, 2.0], [0], [0.5, 0.5])


def test_restrict_info_set_examples():
    info = [1, 3, 4, 6, 7, 12]
    assert restrict_info_set(info, 1, 4).tolist() == [1, 3]
    assert restrict_info_set(info, 2, 4).tolist() == [0, 2, 3]
    assert restrict_info_set(info, 3, 4).tolist() == []
    assert restrict_info_set(info, 4, 4).tolist() == [0]


@pytest.mark.parametrize("N,M", [(8, 8), (8, 4), (8, 1), (64, 8), (1024, 128), (1024, 256)])
def test_step_counter_equals_latency_model(N, M):
    config = CodeConfig(N, M, N // 2)
    info = design_sw(config, AWGN(1.0, 0.5)).info
    counter = StepCounter()
    sw_sc_decode(np.ones(N), config, info, counter=counter)
    assert counter.steps == latency_steps(N, M) == 2 * N - 2


def test_single_window_is_plain_sc():
    rng = np.random.default_rng(0)
    config = CodeConfig(32, 32, 16)
    d = design_sw(config, AWGN(1.0, 0.5))
    for _ in range(50):
        y = rng.normal(1.0, 2.0, 32)
        np.testing.assert_array_equal(sw_sc_decode(y, config, d.info), sc_decode(y, d.frozen))


@pytest.mark.parametrize("N,M", [(4, 2), (8, 2), (8, 4), (16, 4), (16, 8)])
def test_sw_sc_equals_sc_on_full_transform(N, M):
    """Windowed decisions coincide with bit-by-bit SC over the whole transform."""
    rng = np.random.default_rng(N * M)
    config = CodeConfig(N, M, N // 2)
    info = design_sw(config, AWGN(1.0, 0.5)).info
    frozen = np.ones(N, dtype=bool)
    frozen[info] = False
    T = sw_transform(N // M, M)
    for _ in range(60 if N == 16 else 200):
        y = 2.0 * rng.normal(1.0, 1.0, N) * (1 - 2.0 * rng.integers(0, 2, N))
        np.testing.assert_array_equal(sw_sc_decode(y, config, info), brute_force_sc(y, T, frozen))


@pytest.mark.parametrize("scope", ["carried", "per_window"])
def test_noiseless_exhaustive_n8(scope):
    config = CodeConfig(8, 4, 4)
    info = design_sw(config, BEC(0.5)).info
    msgs, U, X = codewords(config, info)
    Y = LLR_MAX * (1 - 2.0 * X)
    np.testing.assert_array_equal(sw_sc_decode(Y, config, info)[:, info], msgs)
    for L in (1, 2, 8, 16):
        np.testing.assert_array_equal(sw_scl_decode(Y, config, info, L, list_scope=scope)[:, info], msgs)


def test_scl_full_list_is_ml():
    config = CodeConfig(8, 4, 4)
    g = 2.0
    info = design_sw(config, AWGN(g, 0.5)).info
    _, _, X = codewords(config, info)
    rng = np.random.default_rng(1)
    sigma2 = 1 / (2 * 0.5 * 10 ** (g / 10))
    sent = X[rng.integers(len(X), size=2000)]
    Y = 2 * ((1 - 2.0 * sent) + rng.normal(0, np.sqrt(sigma2), sent.shape)) / sigma2
    ml, unique = ml_codewords(Y, X)
    u = sw_scl_decode(Y, config, info, 16, "minsum")
    agree = np.all(accumulate_batch(u, 2, 4) == X[ml], axis=1)
    assert np.all(agree[unique])
    # with the exact boxplus the |alpha| penalty is only approximately ML
    u = sw_scl_decode(Y, config, info, 16, "exact")
    assert np.mean(np.all(accumulate_batch(u, 2, 4) == X[ml], axis=1)) > 0.98


def test_list_of_one_is_sc():
    rng = np.random.default_rng(2)
    config = CodeConfig(64, 16, 32)
    info = design_sw(config, AWGN(1.0, 0.5)).info
    Y = rng.normal(1.5, 2.0, (40, 64))
    sc = sw_sc_decode(Y, config, info)
    for scope in ("carried", "per_window"):
        np.testing.assert_array_equal(sw_scl_decode(Y, config, info, 1, list_scope=scope), sc)


def test_list_scopes_with_one_window_agree():
    rng = np.random.default_rng(3)
    config = CodeConfig(32, 32, 16)
    info = design_sw(config, AWGN(1.0, 0.5)).info
    Y = rng.normal(1.0, 2.0, (30, 32))
    a = sw_scl_decode(Y, config, info, 4, list_scope="carried")
    b = sw_scl_decode(Y, config, info, 4, list_scope="per_window")
    np.testing.assert_array_equal(a, b)


def test_batch_equals_single_frames():
    rng = np.random.default_rng(4)
    config = CodeConfig(64, 8, 24)
    info = design_sw(config, AWGN(2.0, 0.375)).info
    Y = rng.normal(1.0, 2.0, (10, 64))
    for L in (1, 4):
        dec = SlidingWindowDecoder(config, info, "scl" if L > 1 else "sc", L)
        batch = dec.decode(Y)
        for b in range(10):
            np.testing.assert_array_equal(dec.decode(Y[b]), batch[b])


def test_streaming_matches_batch_and_emits_early():
    rng = np.random.default_rng(5)
    config = CodeConfig(64, 16, 32)
    info = design_sw(config, AWGN(1.0, 0.5)).info
    y = rng.normal(1.0, 2.0, 64)
    full = sw_sc_decode(y, config, info)
    dec = SlidingWindowDecoder(config, info)
    out = []
    for s in range(4):
        emitted = dec.push(y[s * 16:(s + 1) * 16])
        assert len(emitted) == (0 if s == 0 else 1)
        out += emitted
    out += dec.finish()
    np.testing.assert_array_equal(np.concatenate(out, axis=1)[0], full)


def test_window_decisions_ignore_later_windows():
    """Window s depends only on y^(1..s+1): later LLRs cannot change it."""
    rng = np.random.default_rng(6)
    config = CodeConfig(64, 8, 32)
    info = design_sw(config, AWGN(1.0, 0.5)).info
    y = rng.normal(1.0, 2.0, 64)
    ref = sw_sc_decode(y, config, info)
    for s in range(1, 7):
        z = y.copy()
        z[(s + 1) * 8:] = rng.normal(-3.0, 5.0, 64 - (s + 1) * 8)
        np.testing.assert_array_equal(sw_sc_decode(z, config, info)[:s * 8], ref[:s * 8])


def test_each_push_reads_only_its_window():
    config = CodeConfig(32, 8, 16)
    info = design_sw(config, AWGN(1.0, 0.5)).info
    reads = []

    class TracedWindow:
        def __init__(self, s, values):
            self.s, self.values = s, values

        def __array__(self, dtype=None, copy=None):
            reads.append(self.s)
            return np.asarray(self.values, dtype=dtype)

    rng = np.random.default_rng(7)
    windows = [TracedWindow(s, rng.normal(1, 2, 8)) for s in range(4)]
    dec = SlidingWindowDecoder(config, info)
    per_push = []
    for w in windows:
        reads.clear()
        dec.push(w)
        per_push.append(sorted(set(reads)))
    dec.finish()
    assert per_push == [[0], [1], [2], [3]]


def test_state_is_independent_of_code_length():
    sizes = []
    for N in (256, 4096):
        config = CodeConfig(N, 64, N // 2)
        info = design_sw(config, AWGN(1.0, 0.5)).info
        dec = SlidingWindowDecoder(config, info, "scl", 4)
        rng = np.random.default_rng(0)
        peak = 0
        for s in range(config.S):
            dec.push(rng.normal(1, 2, 64))
            peak = max(peak, dec.state_nbytes())
        dec.finish()
        sizes.append(peak)
    assert sizes[0] == sizes[1]


def test_deterministic():
    rng = np.random.default_rng(8)
    config = CodeConfig(128, 32, 64)
    info = design_sw(config, AWGN(1.0, 0.5)).info
    Y = rng.normal(0.5, 2.0, (20, 128))
    a = sw_scl_decode(Y, config, info, 8)
    b = sw_scl_decode(Y.copy(), config, info, 8)
    np.testing.assert_array_equal(a, b)


def test_saturated_and_erased_inputs():
    config = CodeConfig(16, 4, 8)
    info = design_sw(config, BEC(0.3)).info
    msgs, U, X = codewords(config, info)
    Y = np.where(X == 0, np.inf, -np.inf)
    np.testing.assert_array_equal(sw_sc_decode(Y, config, info)[:, info], msgs)
    out = sw_scl_decode(np.zeros(16), config, info, 4)
    assert out.shape == (16,) and set(np.unique(out)) <= {0, 1}


def test_frozen_bits_are_zero():
    rng = np.random.default_rng(9)
    config = CodeConfig(64, 16, 20)
    d = design_sw(config, AWGN(0.0, 20 / 64))
    Y = rng.normal(0.0, 3.0, (30, 64))
    assert not sw_sc_decode(Y, config, d.info)[:, d.frozen].any()
    assert not sw_scl_decode(Y, config, d.info, 4)[:, d.frozen].any()


def test_decoder_input_validation():
    config = CodeConfig(16, 4, 8)
    info = np.arange(8, 16)
    with pytest.raises(ValueError):
        SlidingWindowDecoder(config, info, "bp")
    with pytest.raises(ValueError):
        SlidingWindowDecoder(config, info, "scl", 4, list_scope="global")
    with pytest.raises(ValueError):
        sw_sc_decode(np.zeros(12), config, info)
    dec = SlidingWindowDecoder(config, info)
    dec.push(np.zeros(4))
    with pytest.raises(ValueError):
        dec.finish()
    with pytest.raises(ValueError):
        dec.push(np.zeros(3))
    for _ in range(3):
        dec.push(np.zeros(4))
    with pytest.raises(ValueError):
        dec.push(np.zeros(4))
    with pytest.raises(ValueError):
        dec.push([np.nan] * 4)
