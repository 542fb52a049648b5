import os
import subprocess
import sys

import numpy as np
import pytest

from polar_swin.cli import main
from polar_swin.construction import design_sw
from polar_swin.core import BEC, CodeConfig

CODE = ["--n", "8", "--m", "4", "--k", "4", "--channel", "bec", "--design-snr", "0.5"]


def run(argv, capsys):
    rc = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return rc, out, err


def lines(path):
    return path.read_text().splitlines()


def assert_single_line_error(err):
    assert err.count("\n") == 1 and err.startswith("polar-swin: error:")


def test_construct_example(tmp_path, capsys):
    rc, out, _ = run(["construct", *CODE, "--out", tmp_path / "c"], capsys)
    assert rc == 0 and "frozen=4 info=4" in out
    d = design_sw(CodeConfig(8, 4, 4), BEC(0.5))
    assert [int(v) for v in lines(tmp_path / "c.frozen")] == d.frozen.tolist()
    assert [int(v) for v in lines(tmp_path / "c.info")] == d.info.tolist()
    prof = [line.split() for line in lines(tmp_path / "c.profile")]
    assert [int(i) for i, _ in prof] == list(range(8))
    np.testing.assert_allclose([float(v) for _, v in prof], d.profile.values, rtol=0, atol=0)


def test_construct_full_rate_and_ind(tmp_path, capsys):
    rc, _, _ = run(["construct", "--n", 8, "--m", 4, "--k", 8, "--design-snr", 1.0,
                    "--out", tmp_path / "a"], capsys)
    assert rc == 0 and (tmp_path / "a.frozen").read_text() == ""
    rc, _, _ = run(["construct", *CODE[:4], "--k", 3, "--strategy", "ind", "--design-snr", 1.0,
                    "--out", tmp_path / "b"], capsys)
    info = [int(v) for v in lines(tmp_path / "b.info")]
    assert rc == 0 and len(info) == 3 and sum(i < 4 for i in info) == 2


def test_k_larger_than_n_names_the_field(tmp_path, capsys):
    rc, _, err = run(["construct", "--n", 8, "--m", 4, "--k", 9, "--design-snr", 1.0,
                      "--out", tmp_path / "c"], capsys)
    assert rc == 2 and "K" in err
    assert_single_line_error(err)
    assert list(tmp_path.iterdir()) == []


@pytest.mark.parametrize("argv", [
    ["construct", "--n", 8, "--m", 3, "--k", 2, "--design-snr", 1],
    ["construct", "--n", 8, "--m", 4, "--k", 2],
    ["construct", "--n", 8, "--m", 4, "--k", 2, "--design-snr", 2, "--channel", "bec"],
    ["sweep", "--n", 8, "--m", 4, "--k", 2, "--ebn0", "1,x"],
    ["sweep", "--n", 8, "--m", 4, "--k", 2, "--ebn0", "1", "--strategy", "tail"],
    ["decode", "--n", 8, "--m", 4, "--k", 2, "--list-size", 0],
    ["bogus"],
    [],
])
def test_usage_errors(argv, capsys):
    rc, _, err = run(argv, capsys)
    assert rc == 2
    assert_single_line_error(err)


def test_encode_zero_message_and_partials(tmp_path, capsys):
    (tmp_path / "msg").write_text("0000\n")
    rc, out, _ = run(["encode", *CODE, "--message", tmp_path / "msg",
                      "--emit-partials", tmp_path / "parts"], capsys)
    assert rc == 0 and out == "00000000\n"
    assert lines(tmp_path / "parts") == ["0000", "0000"]


def test_partials_shape(tmp_path, capsys):
    rng = np.random.default_rng(0)
    msgs = ["".join(map(str, rng.integers(0, 2, 16))) for _ in range(3)]
    (tmp_path / "msg").write_text("\n".join(msgs) + "\n")
    rc, _, _ = run(["encode", "--n", 64, "--m", 16, "--k", 16, "--design-snr", 1.0,
                    "--message", tmp_path / "msg", "--emit-partials", tmp_path / "p",
                    "--out", tmp_path / "x"], capsys)
    assert rc == 0
    parts = lines(tmp_path / "p")
    assert len(parts) == 3 * 4 and all(len(p) == 16 for p in parts)
    x = lines(tmp_path / "x")
    # window s of x is the XOR of partials s..S of the same frame
    t = np.array([[int(c) for c in p] for p in parts[:4]])
    acc = np.bitwise_xor.accumulate(t[::-1], axis=0)[::-1].reshape(-1)
    assert "".join(map(str, acc)) == x[0]


def test_encode_failure_leaves_no_files(tmp_path, capsys):
    (tmp_path / "msg").write_text("0000\n010\n")
    rc, _, err = run(["encode", *CODE, "--message", tmp_path / "msg", "--out", tmp_path / "x",
                      "--emit-partials", tmp_path / "p"], capsys)
    assert rc == 1 and ":2:" in err
    assert_single_line_error(err)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["msg"]


def _llr_file(path, bits_lines, scale=1e9):
    vals = [scale * (1 - 2 * int(b)) for line in bits_lines for b in line]
    path.write_text("".join(f"{v!r}\n" for v in vals))


@pytest.mark.parametrize("strategy", ["sw", "ind", "full"])
@pytest.mark.parametrize("decoder", [["--decoder", "sc"], ["--decoder", "scl", "--list-size", "4"]])
def test_roundtrip_and_streaming(tmp_path, capsys, strategy, decoder):
    code = ["--n", 32, "--m", 8, "--k", 12, "--design-snr", 1.0, "--strategy", strategy]
    rng = np.random.default_rng(1)
    msgs = ["".join(map(str, rng.integers(0, 2, 12))) for _ in range(5)]
    (tmp_path / "msg").write_text("\n".join(msgs) + "\n")
    assert run(["encode", *code, "--message", tmp_path / "msg", "--out", tmp_path / "x"], capsys)[0] == 0
    _llr_file(tmp_path / "llr", lines(tmp_path / "x"))
    rc, out, _ = run(["decode", *code, *decoder, "--llr", tmp_path / "llr"], capsys)
    assert rc == 0 and out.splitlines() == msgs
    if strategy == "sw":
        rc, out, _ = run(["decode", *code, *decoder, "--llr", tmp_path / "llr", "--streaming",
                          "--out", tmp_path / "dec"], capsys)
        assert rc == 0 and lines(tmp_path / "dec") == msgs
        assert len(out.splitlines()) == 5 * 4 and out.startswith("window 1 ")


def test_streaming_reports_each_window_in_order(tmp_path, capsys):
    code = ["--n", 16, "--m", 4, "--k", 16, "--design-snr", 1.0]
    (tmp_path / "x").write_text("1011001110001111\n")
    rc, out, _ = run(["encode", *code, "--message", tmp_path / "x", "--out", tmp_path / "c"], capsys)
    _llr_file(tmp_path / "llr", lines(tmp_path / "c"))
    rc, out, _ = run(["decode", *code, "--llr", tmp_path / "llr", "--streaming"], capsys)
    assert out.splitlines() == ["window 1 1011", "window 2 0011", "window 3 1000", "window 4 1111"]


def test_decode_input_errors(tmp_path, capsys):
    (tmp_path / "short").write_text("1.0\n" * 5)
    rc, _, err = run(["decode", *CODE, "--llr", tmp_path / "short", "--out", tmp_path / "o"], capsys)
    assert rc == 1 and "N=8" in err and "got 5" in err
    assert_single_line_error(err)
    (tmp_path / "bad").write_text("1.0\n2.0\nabc\n" + "1.0\n" * 5)
    rc, _, err = run(["decode", *CODE, "--llr", tmp_path / "bad"], capsys)
    assert rc == 1 and ":3:" in err
    rc, _, err = run(["decode", *CODE, "--llr", tmp_path / "short", "--streaming"], capsys)
    assert rc == 1 and "got 5" in err
    assert not (tmp_path / "o").exists()


def test_roundtrip_random_codes(tmp_path, capsys):
    rng = np.random.default_rng(2)
    for trial in range(100):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(0, n + 1))
        N, M = 2**n, 2**m
        K = int(rng.integers(0, N + 1))
        channel = ["--channel", "bec", "--design-snr", str(rng.uniform(0.05, 0.95))] \
            if trial % 2 else ["--design-snr", str(rng.uniform(-2, 5))]
        code = ["--n", N, "--m", M, "--k", K, *channel]
        base = tmp_path / f"t{trial}"
        assert run(["construct", *code, "--out", base], capsys)[0] == 0
        msg = "".join(map(str, rng.integers(0, 2, K)))
        (tmp_path / "m").write_text(msg + "\n")
        assert run(["encode", *code, "--info", f"{base}.info", "--message", tmp_path / "m",
                    "--out", tmp_path / "x"], capsys)[0] == 0
        _llr_file(tmp_path / "y", lines(tmp_path / "x"), scale=3.0)
        rc, out, _ = run(["decode", *code, "--info", f"{base}.info", "--llr", tmp_path / "y"], capsys)
        assert rc == 0 and out == msg + "\n", (N, M, K)


def test_sweep_bound_only_and_reproducible(tmp_path, capsys):
    code = ["--n", 64, "--m", 16, "--k", 32]
    rc, out, _ = run(["sweep", *code, "--strategy", "sw,ind,full", "--ebn0", "1:3:1", "--bound-only"], capsys)
    rows = out.splitlines()
    assert rc == 0 and rows[0] == "strategy,decoder,list_size,N,M,K,ebn0_db,source,frames,errors,bler"
    assert len(rows) == 10 and all(r.split(",")[7:10] == ["bound", "0", "0"] for r in rows[1:])
    args = ["sweep", *code, "--ebn0", "0,2", "--decoder", "scl", "--list-size", 2, "--seed", 5,
            "--max-frames", 300, "--max-errors", 20]
    assert run([*args, "--out", tmp_path / "a.csv"], capsys)[0] == 0
    assert run([*args, "--out", tmp_path / "b.csv"], capsys)[0] == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert lines(tmp_path / "a.csv")[1].startswith("sw,scl,2,64,16,32,0.0,simulation,")


def test_sweep_bec(capsys):
    rc, out, _ = run(["sweep", "--n", 16, "--m", 4, "--k", 8, "--channel", "bec", "--ebn0", "0.0,0.3",
                      "--max-frames", 100, "--max-errors", 10], capsys)
    assert rc == 0
    assert out.splitlines()[1].split(",")[8:10] == ["100", "0"]


def test_target_snr_command(capsys):
    rc, out, _ = run(["target-snr", "--n", 256, "--m", 64, "--k", 128, "--strategy", "sw,full"], capsys)
    rows = out.splitlines()
    assert rc == 0 and rows[0] == "strategy,N,M,K,target_bler,ebn0_db" and len(rows) == 3
    sw, full = (float(r.split(",")[-1]) for r in rows[1:])
    assert full <= sw
    rc, _, err = run(["target-snr", "--n", 256, "--m", 64, "--k", 128, "--target", "1e-300"], capsys)
    assert rc == 1 and "bracketed" in err


def test_config_file_and_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep settings\nn = 64\nm = 16\nk = 32\nebn0 = 1,2\nbound_only = true\n"
                   "strategy = ind\n")
    rc, out, _ = run(["sweep", "--config", cfg], capsys)
    assert rc == 0 and out.splitlines()[1].startswith("ind,sc,1,64,16,32,1.0,bound")
    rc, out, _ = run(["sweep", "--config", cfg, "--strategy", "full", "--k", "16"], capsys)
    assert out.splitlines()[1].startswith("full,sc,1,64,16,16,1.0,bound")
    cfg.write_text("n = 64\nm = 16\ncolour = red\n")
    rc, _, err = run(["sweep", "--config", cfg], capsys)
    assert rc == 2 and ":3:" in err and "colour" in err
    rc, _, err = run(["sweep", "--config", tmp_path / "missing.cfg"], capsys)
    assert rc == 2


def test_module_entry_point_and_env(tmp_path):
    env = dict(os.environ, POLAR_SWIN_THREADS="many")
    proc = subprocess.run([sys.executable, "-m", "polar_swin", "sweep", "--n", "8", "--m", "4",
                           "--k", "4", "--ebn0", "1", "--max-frames", "10"],
                          capture_output=True, text=True, env=env)
    assert proc.returncode != 0 and "POLAR_SWIN_THREADS" in proc.stderr
    assert proc.stderr.count("\n") == 1
    proc = subprocess.run([sys.executable, "-m", "polar_swin", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "target-snr" in proc.stdout
