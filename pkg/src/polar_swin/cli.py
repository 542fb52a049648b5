"""Command-line front end: ``construct``, ``encode``, ``decode``, ``sweep``, ``target-snr``.

Text formats
  bits      ``0``/``1`` characters, one vector per line
  LLRs      one decimal float per line, frames back to back
  profiles  ``index value`` per line
  index set one index per line

Every option can also come from ``--config FILE`` holding ``key = value``
lines (``#`` starts a comment); options given on the command line win.
Exit status is 0 on success, 2 for invalid arguments or configuration and 1
for bad input data or other failures.  Output files are written to temporary
names and renamed into place only once the command has succeeded.
"""

from __future__ import annotations

import argparse
import io
import logging
import os
import sys
import tempfile
from contextlib import contextmanager
from typing import Dict, Iterator, List, Optional, TextIO

import numpy as np

from . import analysis
from .analysis import BracketError, StopRule, Strategy
from .construction import design_full, design_ind, design_sw
from .core import AWGN, BEC, CodeConfig, index_set
from .encoder import accumulate_batch, build_input_batch, polar_encode_batch
from .sliding_window import SlidingWindowDecoder, restrict_info_set

PROG = "polar-swin"


class UsageError(Exception):
    """Invalid arguments or configuration (exit status 2)."""


class InputError(Exception):
    """Malformed input data (exit status 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# argument handling

def _float_list(text: str) -> List[float]:
    """``1,2,3`` or an inclusive range ``start:stop:step``."""
    out = []
    for part in text.replace(",", " ").split():
        if ":" in part:
            try:
                a, b, step = (float(v) for v in part.split(":"))
            except ValueError:
                raise argparse.ArgumentTypeError(f"bad range {part!r}, expected start:stop:step")
            if step <= 0 or b < a:
                raise argparse.ArgumentTypeError(f"bad range {part!r}")
            count = int(np.floor((b - a) / step + 1e-9)) + 1
            out.extend(round(a + i * step, 10) for i in range(count))
        else:
            try:
                out.append(float(part))
            except ValueError:
                raise argparse.ArgumentTypeError(f"not a number: {part!r}")
    return out


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {v}")
    return v


def _code_options(p: argparse.ArgumentParser, strategies_list: bool = False):
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--n", type=int, required=True, help="code length N")
    p.add_argument("--m", type=int, required=True, help="window length M")
    p.add_argument("--k", type=int, required=True, help="information length K")
    if strategies_list:
        p.add_argument("--strategy", default="sw",
                       help="sw, ind or full; a comma-separated list runs each in turn")
    else:
        p.add_argument("--strategy", choices=analysis.VARIANTS, default="sw")
    p.add_argument("--channel", choices=("awgn", "bec"), default="awgn")
    p.add_argument("--design-snr", type=float,
                   help="design Eb/N0 in dB (erasure probability for --channel bec)")
    p.add_argument("--out", help="output path (default: standard output)")
    p.add_argument("--verbose", action="store_true")


def _decoder_options(p: argparse.ArgumentParser):
    p.add_argument("--decoder", choices=("sc", "scl"), default="sc")
    p.add_argument("--list-size", type=_positive_int, default=8)
    p.add_argument("--minsum", action="store_true", help="min-sum instead of exact boxplus")
    p.add_argument("--list-scope", choices=("carried", "per_window"), default="carried")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PROG, description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("construct", help="reliability profile and frozen set")
    _code_options(p)

    p = sub.add_parser("encode", help="encode messages into codewords")
    _code_options(p)
    p.add_argument("--message", help="message file (default: standard input)")
    p.add_argument("--info", help="information set file from 'construct'")
    p.add_argument("--emit-partials", metavar="PATH",
                   help="also write the per-block partial codewords, one per line")

    p = sub.add_parser("decode", help="decode channel LLRs into messages")
    _code_options(p)
    _decoder_options(p)
    p.add_argument("--llr", help="LLR file (default: standard input)")
    p.add_argument("--info", help="information set file from 'construct'")
    p.add_argument("--streaming", action="store_true",
                   help="decode window by window as LLRs arrive, reporting each window")

    p = sub.add_parser("sweep", help="BLER versus Eb/N0, simulated or bound")
    _code_options(p, strategies_list=True)
    _decoder_options(p)
    p.add_argument("--ebn0", type=_float_list, required=True,
                   help="Eb/N0 grid in dB (erasure probabilities for --channel bec)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-frames", type=_positive_int, default=StopRule.max_frames)
    p.add_argument("--max-errors", type=_positive_int, default=StopRule.max_errors)
    p.add_argument("--bound-only", action="store_true", help="analytic SC bound, no simulation")

    p = sub.add_parser("target-snr", help="Eb/N0 at which the SC bound reaches a target BLER")
    _code_options(p, strategies_list=True)
    p.add_argument("--target", type=float, default=1e-3, help="target BLER")
    return parser


def _option_table(parser: argparse.ArgumentParser, command: str) -> Dict[str, argparse.Action]:
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    table = {}
    for action in sub.choices[command]._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                table[opt[2:].replace("_", "-")] = action
    return table


def config_tokens(path: str, options: Dict[str, argparse.Action]) -> List[str]:
    """Turn a key=value file into command-line tokens."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}")
    tokens = []
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        action = options.get(key)
        if action is None or key in ("config", "help"):
            raise UsageError(f"{path}:{no}: unknown key {key!r}")
        if action.nargs == 0:
            if value.lower() in ("1", "true", "yes", "on"):
                tokens.append("--" + key)
            elif value.lower() not in ("0", "false", "no", "off"):
                raise UsageError(f"{path}:{no}: {key} expects true or false, got {value!r}")
        else:
            tokens += ["--" + key, value]
    return tokens


def parse_args(argv: List[str]) -> argparse.Namespace:
    parser = build_parser()
    pre = _Parser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        command = next((a for a in argv if a in COMMANDS), None)
        if command is None:
            raise UsageError("--config needs a subcommand")
        pos = argv.index(command) + 1
        argv = argv[:pos] + config_tokens(known.config, _option_table(parser, command)) + argv[pos:]
    return parser.parse_args(argv)


# ---------------------------------------------------------------------------
# code and design from arguments

def _config(args) -> CodeConfig:
    try:
        return CodeConfig(args.n, args.m, args.k)
    except ValueError as exc:
        raise UsageError(str(exc))


def _design_channel(args, config: CodeConfig, required: bool = True):
    if args.design_snr is None:
        if required:
            raise UsageError("design-snr is required (or pass --info)")
        return None
    try:
        if args.channel == "bec":
            return BEC(args.design_snr)
        return AWGN(args.design_snr, max(config.K, 1) / config.N)
    except ValueError as exc:
        raise UsageError(f"design-snr: {exc}")


def _strategies(args) -> List[str]:
    names = [s.strip() for s in str(args.strategy).split(",") if s.strip()]
    for s in names:
        if s not in analysis.VARIANTS:
            raise UsageError(f"strategy: unknown value {s!r} (choose from sw, ind, full)")
    if not names:
        raise UsageError("strategy: empty list")
    return names


def _info_set(args, config: CodeConfig, strategy: str) -> np.ndarray:
    """Global information indices, from ``--info`` or from the design channel."""
    if getattr(args, "info", None):
        info = read_index_file(args.info, config.N)
        if info.size != config.K:
            raise InputError(f"{args.info}: information set has {info.size} entries, K={config.K}")
        return info
    design = _design_channel(args, config)
    if strategy == "sw":
        return design_sw(config, design).info
    if strategy == "full":
        return design_full(config.N, config.K, design).info
    blocks = design_ind(config.N, config.M, config.K, design)
    return np.concatenate([d.info + s * config.M for s, d in enumerate(blocks)]).astype(np.int64)


# ---------------------------------------------------------------------------
# file formats

def _open_input(path: Optional[str]) -> TextIO:
    if path is None or path == "-":
        return sys.stdin
    try:
        return open(path, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}")


def _label(path):
    return path if path and path != "-" else "<stdin>"


def read_bit_lines(path: Optional[str], length: int) -> np.ndarray:
    fh = _open_input(path)
    rows = []
    try:
        for no, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line and length:
                continue
            if set(line) - {"0", "1"}:
                raise InputError(f"{_label(path)}:{no}: bits must be 0/1 characters")
            if len(line) != length:
                raise InputError(f"{_label(path)}:{no}: expected {length} bits, got {len(line)}")
            rows.append(np.frombuffer(line.encode(), dtype=np.uint8) - ord("0"))
    finally:
        if fh is not sys.stdin:
            fh.close()
    if not rows:
        raise InputError(f"{_label(path)}: no messages")
    return np.array(rows, dtype=np.uint8).reshape(len(rows), length)


def _parse_llr(text: str, path, no: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise InputError(f"{_label(path)}:{no}: not a number: {text!r}")
    if np.isnan(v):
        raise InputError(f"{_label(path)}:{no}: LLR must not be NaN")
    return v


def iter_llrs(path: Optional[str]) -> Iterator[float]:
    fh = _open_input(path)
    try:
        for no, raw in enumerate(fh, 1):
            line = raw.strip()
            if line:
                yield _parse_llr(line, path, no)
    finally:
        if fh is not sys.stdin:
            fh.close()


def read_index_file(path: str, N: int) -> np.ndarray:
    values = []
    fh = _open_input(path)
    try:
        for no, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            try:
                values.append(int(line.split()[0]))
            except ValueError:
                raise InputError(f"{path}:{no}: not an index: {line!r}")
    finally:
        fh.close()
    try:
        return index_set(values, N)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}")


def format_bits(rows) -> str:
    return "".join("".join("01"[b] for b in row) + "\n" for row in np.atleast_2d(rows))


class Outputs:
    """Collects output files and commits them together, or not at all."""

    def __init__(self):
        self._pending = []

    def add(self, path: Optional[str], text: str):
        if path is None or path == "-":
            self._pending.append((None, text))
            return
        directory = os.path.dirname(os.path.abspath(path))
        try:
            fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
        except OSError as exc:
            raise InputError(f"cannot write {path}: {exc.strerror}")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        self._pending.append((path, tmp))

    def commit(self):
        for path, payload in self._pending:
            if path is None:
                sys.stdout.write(payload)
            else:
                os.replace(payload, path)
        sys.stdout.flush()
        self._pending = []

    def discard(self):
        for path, payload in self._pending:
            if path is not None and os.path.exists(payload):
                os.unlink(payload)
        self._pending = []


@contextmanager
def _outputs():
    out = Outputs()
    try:
        yield out
        out.commit()
    finally:
        out.discard()


# ---------------------------------------------------------------------------
# commands

def cmd_construct(args) -> int:
    config = _config(args)
    design = _design_channel(args, config)
    (strategy,) = _strategies(args)
    if strategy == "sw":
        d = design_sw(config, design)
        profile, info, frozen = d.profile.values, d.info, d.frozen
    elif strategy == "full":
        d = design_full(config.N, config.K, design)
        profile, info, frozen = d.profile.values, d.info, d.frozen
    else:
        blocks = design_ind(config.N, config.M, config.K, design)
        profile = np.concatenate([b.profile.values for b in blocks])
        info = np.concatenate([b.info + s * config.M for s, b in enumerate(blocks)])
        frozen = np.concatenate([b.frozen + s * config.M for s, b in enumerate(blocks)])
    base = args.out or f"{strategy}_N{config.N}_M{config.M}_K{config.K}"
    with _outputs() as out:
        out.add(base + ".profile", "".join(f"{i} {v!r}\n" for i, v in enumerate(profile.tolist())))
        out.add(base + ".frozen", "".join(f"{i}\n" for i in frozen.tolist()))
        out.add(base + ".info", "".join(f"{i}\n" for i in info.tolist()))
    print(f"frozen={frozen.size} info={info.size} files={base}.{{profile,frozen,info}}")
    return 0


def _layout(strategy: str, config: CodeConfig):
    """``(S, M)`` of the accumulation used to encode a strategy's frames."""
    if strategy == "sw":
        return config.S, config.M
    if strategy == "full":
        return 1, config.N
    return 1, config.M  # each block on its own


def cmd_encode(args) -> int:
    config = _config(args)
    (strategy,) = _strategies(args)
    info = _info_set(args, config, strategy)
    messages = read_bit_lines(args.message, config.K)
    u = build_input_batch(messages, info, config.N)
    S, M = _layout(strategy, config)
    if strategy == "ind":
        x = accumulate_batch(u.reshape(-1, M), 1, M).reshape(u.shape)
    else:
        x = accumulate_batch(u, S, M)
    with _outputs() as out:
        out.add(args.out, format_bits(x))
        if args.emit_partials:
            blocks = config.M if strategy != "full" else config.N
            t = polar_encode_batch(u.reshape(-1, blocks))
            out.add(args.emit_partials, format_bits(t))
    return 0


def _decoder_for(args, config: CodeConfig, info) -> SlidingWindowDecoder:
    mode = "minsum" if args.minsum else "exact"
    L = args.list_size if args.decoder == "scl" else 1
    return SlidingWindowDecoder(config, info, args.decoder, L, mode, args.list_scope)


def _decode_frames(args, config, strategy, info, Y):
    if strategy == "sw":
        return _decoder_for(args, config, info).decode(Y)
    if strategy == "full":
        return _decoder_for(args, CodeConfig(config.N, config.N, config.K), info).decode(Y)
    parts = []
    for s in range(config.S):
        local = restrict_info_set(info, s + 1, config.M)
        block = CodeConfig(config.M, config.M, local.size)
        parts.append(_decoder_for(args, block, local).decode(Y[:, s * config.M:(s + 1) * config.M]))
    return np.concatenate(parts, axis=1)


def cmd_decode(args) -> int:
    config = _config(args)
    (strategy,) = _strategies(args)
    info = _info_set(args, config, strategy)
    if args.streaming:
        if strategy != "sw":
            raise UsageError("streaming: only the sw strategy decodes window by window")
        return _decode_streaming(args, config, info)
    llrs = np.fromiter(iter_llrs(args.llr), dtype=float)
    if llrs.size == 0 or llrs.size % config.N:
        raise InputError(f"{_label(args.llr)}: expected a multiple of N={config.N} LLRs, "
                         f"got {llrs.size}")
    u = _decode_frames(args, config, strategy, info, llrs.reshape(-1, config.N))
    with _outputs() as out:
        out.add(args.out, format_bits(u[:, info]))
    return 0


def _decode_streaming(args, config: CodeConfig, info) -> int:
    """Push every ``M`` LLRs into the decoder and print ``window <s> <bits>``
    (the information bits of window ``s``) as soon as a window is final.

    Decoded messages go to ``--out`` in the batch format once all input is read.
    """
    dec = _decoder_for(args, config, info)
    frames, window, chunk = [], [], []

    def emit(decisions):
        for u in decisions:
            s = len(window)
            local = restrict_info_set(info, s + 1, config.M)
            window.append(u[0])
            print(f"window {s + 1} {format_bits(u[0][local]).strip()}", flush=True)

    for v in iter_llrs(args.llr):
        chunk.append(v)
        if len(chunk) < config.M:
            continue
        emit(dec.push(np.array(chunk)))
        chunk = []
        if dec.received == config.S:
            emit(dec.finish())
            frames.append(np.concatenate(window))
            window = []
            dec.reset()
    if chunk or dec.received or not frames:
        got = len(frames) * config.N + dec.received * config.M + len(chunk)
        raise InputError(f"{_label(args.llr)}: expected a multiple of N={config.N} LLRs, got {got}")
    if args.out and args.out != "-":
        with _outputs() as out:
            out.add(args.out, format_bits(np.array(frames)[:, info]))
    return 0


def _stop(args) -> StopRule:
    return StopRule(args.max_frames, args.max_errors)


def cmd_sweep(args) -> int:
    config = _config(args)
    strategies = _strategies(args)
    design = _design_channel(args, config, required=False)
    if design is not None:
        config = CodeConfig(config.N, config.M, config.K, design)
    if args.channel == "bec":
        if args.bound_only:
            raise UsageError("bound-only: the SC bound is defined for the AWGN channel only")
        for d in args.ebn0:
            if not 0.0 <= d <= 1.0:
                raise UsageError(f"ebn0: erasure probability {d} outside [0, 1]")
    if args.bound_only and args.decoder != "sc":
        raise UsageError("bound-only: bounds exist for SC decoding only")
    mode = "minsum" if args.minsum else "exact"
    L = args.list_size if args.decoder == "scl" else 1
    rows = []
    for name in strategies:
        st = Strategy(name, args.decoder, L, mode, args.list_scope)
        if args.bound_only:
            points = analysis.bound_sweep(config, st, args.ebn0)
        else:
            points = analysis.snr_sweep(config, st, args.ebn0, _stop(args), args.seed, args.channel)
        rows.extend(analysis.csv_rows(config, st, points))
    buf = io.StringIO()
    analysis.write_csv(buf, rows)
    with _outputs() as out:
        out.add(args.out, buf.getvalue())
    return 0


def cmd_target_snr(args) -> int:
    config = _config(args)
    if args.channel != "awgn":
        raise UsageError("channel: target-snr uses the AWGN bound")
    if not 0.0 < args.target < 1.0:
        raise UsageError(f"target: BLER must lie in (0, 1), got {args.target}")
    design = _design_channel(args, config, required=False)
    if design is not None:
        config = CodeConfig(config.N, config.M, config.K, design)
    lines = ["strategy,N,M,K,target_bler,ebn0_db\n"]
    for name in _strategies(args):
        try:
            g = analysis.target_snr(config, Strategy(name), args.target)
        except BracketError as exc:
            raise InputError(f"{name}: {exc}")
        lines.append(f"{name},{config.N},{config.M},{config.K},{args.target!r},{g:.4f}\n")
    with _outputs() as out:
        out.add(args.out, "".join(lines))
    return 0


COMMANDS = {
    "construct": cmd_construct,
    "encode": cmd_encode,
    "decode": cmd_decode,
    "sweep": cmd_sweep,
    "target-snr": cmd_target_snr,
}


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv and argv[0] in ("-h", "--help"):
            build_parser().print_help()
            return 0
        args = parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format=f"{PROG}: %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except (InputError, ValueError, OSError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        print(f"{PROG}: interrupted", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
