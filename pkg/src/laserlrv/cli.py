"""Command-line interface.

    laserlrv estimate  < series.txt        streaming LRV, NDJSON records
    laserlrv lrcm      < rows.csv          streaming LRCM, NDJSON records
    laserlrv bench --model I --n 10000     Monte Carlo MSE table (CSV)
    laserlrv halfwidth --eps 0.05 < x.txt  half-width stopping rule

Exit codes: 0 success, 1 usage error, 2 data error, 3 the stopping rule
never fired.
"""
from __future__ import annotations

import argparse
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Iterator, List, Optional, Sequence

import numpy as np

from .batched import BatchLaser
from .inference import run_halfwidth
from .multivariate import LrcmStream, pd_adjust
from .nuisance import AutoLaser, make_estimator, oracle_config
from .ramping import RampedLaser
from .simgen import gen_many, get_model, replicate_seeds, true_targets
from .stream import LaserConfig

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NOSTOP = 0, 1, 2, 3

_NUMBER = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
BENCH_CHUNK = 50


class CliError(Exception):
    def __init__(self, code: int, msg: str):
        super().__init__(msg)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_USAGE, message)


# ---------------------------------------------------------------- formatting

def fmt(v) -> str:
    """JSON text for a number with 17 significant digits (null if not finite)."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(fmt(u) for u in v) + "]"
    if v is None:
        return "null"
    v = float(v)
    if not math.isfinite(v):
        return "null"
    text = format(v, ".17g")
    return text if any(ch in text for ch in ".en") else text + ".0"


def record(pairs) -> str:
    return "{" + ", ".join(f'"{k}": {fmt(v)}' for k, v in pairs) + "}"


# ---------------------------------------------------------------------- input

def _parse_value(tok: str, lineno: int) -> float:
    tok = tok.strip()
    if not _NUMBER.fullmatch(tok):
        raise CliError(EXIT_DATA, f"line {lineno}: cannot parse {tok!r} as a number")
    v = float(tok)
    if not math.isfinite(v):
        raise CliError(EXIT_DATA, f"line {lineno}: value out of range")
    return v


def read_values(stream) -> Iterator[float]:
    for lineno, line in enumerate(stream, start=1):
        if line.strip():
            yield _parse_value(line, lineno)


def read_rows(stream, d: Optional[int] = None) -> Iterator[np.ndarray]:
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        row = np.array([_parse_value(tok, lineno) for tok in line.split(",")])
        if d is None:
            d = row.size
        elif row.size != d:
            raise CliError(EXIT_DATA, f"line {lineno}: expected {d} fields, got {row.size}")
        yield row


def _open(path: str):
    if path == "-":
        return sys.stdin
    try:
        return open(path, encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_DATA, f"cannot open {path}: {exc.strerror}") from None


# -------------------------------------------------------------------- options

def _estimator_flags(p: argparse.ArgumentParser, phi_default: float = 1.0) -> None:
    p.add_argument("--q", type=int, default=1, help="taper exponent")
    p.add_argument("--phi", type=float, default=phi_default, help="memory parameter (1 or >= 2)")
    p.add_argument("--auto", action="store_true", help="select Psi, Theta from the data")
    p.add_argument("--kappa", type=float, help="use the optimal parameters for this kappa")
    for name, default in (("Psi", 1.0), ("psi", None), ("Theta", 1.0), ("theta", None)):
        p.add_argument(f"--{name}", type=float, default=None,
                       help=f"schedule coefficient (default {default if default else '1/(1+2q)'})")
    p.add_argument("--s0", type=int, help="floor for s (default 5 with --auto, else 0)")
    p.add_argument("--t0", type=int, help="floor for t (default 5 with --auto, else 0)")
    p.add_argument("--mean", choices=("unknown", "known_zero"), default="unknown")
    p.add_argument("--every", type=int, default=0,
                   help="mini-batch stride m; 0 updates per observation")
    p.add_argument("--input", default="-", help="input file (default stdin)")


def config_from(args) -> LaserConfig:
    explicit = [getattr(args, k) is not None for k in ("Psi", "psi", "Theta", "theta")]
    if (args.auto or args.kappa is not None) and any(explicit):
        raise CliError(EXIT_USAGE, "--auto/--kappa cannot be combined with explicit Psi/psi/Theta/theta")
    if args.auto and args.kappa is not None:
        raise CliError(EXIT_USAGE, "--auto and --kappa are mutually exclusive")
    if args.every < 0:
        raise CliError(EXIT_USAGE, "--every must be nonnegative")
    if args.every > 1 and args.phi != 1:
        raise CliError(EXIT_USAGE, "mini-batch updates need --phi 1")
    if args.kappa is not None and not args.kappa > 0:
        raise CliError(EXIT_USAGE, "--kappa must be positive")
    rate = 1.0 / (1 + 2 * args.q) if args.q >= 1 else 1.0 / 3.0
    try:
        return LaserConfig(
            q=args.q, phi=args.phi,
            Psi=1.0 if args.Psi is None else args.Psi,
            psi=rate if args.psi is None else args.psi,
            Theta=1.0 if args.Theta is None else args.Theta,
            theta=rate if args.theta is None else args.theta,
            s0=args.s0, t0=args.t0, mean_mode=args.mean, auto=args.auto)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None


def _batches(items: Iterator, m: int) -> Iterator[list]:
    block: list = []
    for it in items:
        block.append(it)
        if len(block) == m:
            yield block
            block = []
    if block:
        yield block


def _drive(est, items: Iterator, every: int, emit) -> int:
    """Feed ``items`` to ``est`` and call ``emit`` at each checkpoint.

    A stride of 1 goes through the per-observation path, so it reproduces
    ``every=0`` exactly.
    """
    if every <= 1:
        for it in items:
            est.update(it)
            if every:
                emit()
        if est.n and not every:
            emit()
        return est.n
    for block in _batches(items, every):
        est.update_block(np.asarray(block))
        emit()
    return est.n


def _kappa_pair(est) -> list:
    return [("kappa", est.kappa)] if isinstance(est, AutoLaser) else []


# ---------------------------------------------------------------- subcommands

def cmd_estimate(args, out) -> int:
    cfg = config_from(args)
    est = make_estimator(cfg, minibatch=args.every > 1, hold=False, kappa=args.kappa)
    src = _open(args.input)

    def emit():
        out.write(record([("n", est.n), ("estimate", est.estimate()), ("s", est.s),
                          ("t", est.t)] + _kappa_pair(est)) + "\n")

    n = _drive(est, read_values(src), args.every, emit)
    if n == 0:
        raise CliError(EXIT_DATA, "empty input")
    return EXIT_OK


def cmd_lrcm(args, out) -> int:
    cfg = config_from(args)
    src = _open(args.input)
    rows = read_rows(src)
    try:
        first = next(rows)
    except StopIteration:
        raise CliError(EXIT_DATA, "empty input") from None
    d = first.size
    c = None
    if args.c:
        c = np.array([_parse_value(tok, 0) for tok in args.c.split(",")])
        if c.size != d:
            raise CliError(EXIT_USAGE, f"--c needs {d} entries")
    st = LrcmStream(d, cfg, c, minibatch=args.every > 1, hold=False, kappa=args.kappa)

    def emit():
        S = st.estimate()
        pairs = [("n", st.n), ("s", st.s), ("t", st.t)] + _kappa_pair(st._est)
        if args.pd_adjust:
            try:
                S = pd_adjust(S, st.n)
            except ValueError as exc:
                raise CliError(EXIT_DATA, f"n={st.n}: {exc}") from None
        out.write(record(pairs + [("estimate", [list(r) for r in S])]) + "\n")

    def chain():
        yield first
        yield from rows

    _drive(st, chain(), args.every, emit)
    return EXIT_OK


def cmd_halfwidth(args, out) -> int:
    cfg = config_from(args)
    if args.every:
        raise CliError(EXIT_USAGE, "halfwidth updates per observation; drop --every")
    if not (args.eps > 0 and 0 < args.alpha < 1 and args.pen >= 0):
        raise CliError(EXIT_USAGE, "need --eps > 0, 0 < --alpha < 1 and --pen >= 0")
    est = make_estimator(cfg, kappa=args.kappa)
    res = run_halfwidth(read_values(_open(args.input)), est, args.eps, args.alpha, args.pen)
    if est.n == 0:
        raise CliError(EXIT_DATA, "empty input")
    out.write(record([("n_star", res.n_star), ("stopped", res.n_star is not None),
                      ("n", est.n), ("mean", res.mean), ("halfwidth", res.halfwidth),
                      ("estimate", res.estimate)]) + "\n")
    return EXIT_OK if res.n_star is not None else EXIT_NOSTOP


# ---------------------------------------------------------------------- bench

def bartlett_bandwidth(kappa1: float, n: int) -> float:
    """AMSE-optimal Bartlett bandwidth (3/2)^(1/3) kappa^(2/3) n^(1/3), at least 1."""
    return max(1.0, (1.5 * kappa1 ** 2 * n) ** (1.0 / 3.0))


def bartlett_columns(x: np.ndarray, ell: float) -> np.ndarray:
    """Bartlett estimate for every column of ``x``."""
    n = x.shape[0]
    y = x - x.mean(axis=0)
    total = np.einsum("ij,ij->j", y, y)
    k = 1
    while k < ell and k < n:
        total = total + 2.0 * (1.0 - k / ell) * np.einsum("ij,ij->j", y[k:], y[:-k])
        k += 1
    return total / n


def bench_chunk(task):
    """Squared errors of the three estimators for one chunk of replicates."""
    model_name, n, seeds, checkpoints, sigma2, kappa1 = task
    x = gen_many(get_model(model_name), n, seeds)
    reps = x.shape[1]
    marks = set(checkpoints)
    err = np.empty((3, len(checkpoints), reps))
    l11 = BatchLaser(oracle_config(1, 1, kappa1), reps)
    l12 = RampedLaser(oracle_config(1, 2, kappa1))
    j = 0
    for i in range(n):
        l11.update(x[i])
        l12.update(x[i])
        if i + 1 in marks:
            m = i + 1
            err[0, j] = (l11.estimate() - sigma2) ** 2
            err[1, j] = (np.asarray(l12.estimate()) - sigma2) ** 2
            err[2, j] = (bartlett_columns(x[:m], bartlett_bandwidth(kappa1, m)) - sigma2) ** 2
            j += 1
    return err


def _workers(reps: int) -> int:
    cap = os.environ.get("LRV_THREADS")
    try:
        limit = int(cap) if cap else (os.cpu_count() or 1)
    except ValueError:
        raise CliError(EXIT_USAGE, "LRV_THREADS must be an integer") from None
    return max(1, min(limit, math.ceil(reps / BENCH_CHUNK)))


def bench_table(model_name: str, n: int, reps: int, seed: int, checkpoints: Sequence[int],
                kappa1: Optional[float] = None, sigma2: Optional[float] = None,
                workers: int = 1) -> List[dict]:
    """MSE of LASER(1,1), LASER(1,2) and Bartlett at each checkpoint."""
    model = get_model(model_name)
    tgt = true_targets(model)
    if sigma2 is None:
        if tgt is None:
            raise ValueError("true LRV unknown for this model; pass sigma2")
        sigma2 = tgt.sigma2
    if kappa1 is None:
        if tgt is None:
            raise ValueError("kappa unknown for this model; pass kappa1")
        kappa1 = tgt.kappa1
    seeds = replicate_seeds(seed, reps)
    tasks = [(model_name, n, seeds[i:i + BENCH_CHUNK], list(checkpoints), sigma2, kappa1)
             for i in range(0, reps, BENCH_CHUNK)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(bench_chunk, tasks))
    else:
        parts = [bench_chunk(t) for t in tasks]
    err = np.concatenate(parts, axis=2)
    mse = err.mean(axis=2)
    rows = []
    for j, m in enumerate(checkpoints):
        rows.append({"n": m, "laser11": mse[0, j], "laser12": mse[1, j], "bart": mse[2, j],
                     "ratio_laser11": mse[0, j] / mse[2, j],
                     "ratio_laser12": mse[1, j] / mse[2, j]})
    return rows


def default_checkpoints(n: int) -> list:
    pts = []
    p = 1000
    while p < n:
        pts.append(p)
        p *= 10
    return pts + [n]


def cmd_bench(args, out) -> int:
    if args.n < 10 or args.reps < 1:
        raise CliError(EXIT_USAGE, "need --n >= 10 and --reps >= 1")
    if args.checkpoints:
        try:
            cps = sorted({int(v) for v in args.checkpoints.split(",")})
        except ValueError:
            raise CliError(EXIT_USAGE, "--checkpoints must be comma-separated integers") from None
        if cps[0] < 2 or cps[-1] > args.n:
            raise CliError(EXIT_USAGE, f"checkpoints must lie in 2..{args.n}")
    else:
        cps = default_checkpoints(args.n)
    try:
        get_model(args.model)
        rows = bench_table(args.model, args.n, args.reps, args.seed, cps, args.kappa,
                           args.sigma2, _workers(args.reps))
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None
    cols = ["n", "laser11", "laser12", "bart", "ratio_laser11", "ratio_laser12"]
    out.write(",".join(cols) + "\n")
    for r in rows:
        out.write(",".join(fmt(r[c]) for c in cols) + "\n")
    return EXIT_OK


# ----------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="laserlrv", description="Streaming long-run variance estimation.")
    sub = p.add_subparsers(dest="cmd", parser_class=_Parser)
    sub.required = True

    e = sub.add_parser("estimate", help="LRV of a univariate stream")
    _estimator_flags(e)
    e.set_defaults(fn=cmd_estimate)

    m = sub.add_parser("lrcm", help="long-run covariance matrix of a vector stream")
    _estimator_flags(m)
    m.add_argument("--c", help="reference weights, comma separated (default all ones)")
    m.add_argument("--pd-adjust", action="store_true", help="clip correlation eigenvalues")
    m.set_defaults(fn=cmd_lrcm)

    b = sub.add_parser("bench", help="Monte Carlo MSE comparison on a test model")
    b.add_argument("--model", default="I", help="I, II, III or IV")
    b.add_argument("--n", type=int, default=10000)
    b.add_argument("--reps", type=int, default=500)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--checkpoints", help="comma-separated sample sizes (default 1e3, 1e4, ..., n)")
    b.add_argument("--kappa", type=float, help="override kappa_1 for the oracle parameters")
    b.add_argument("--sigma2", type=float, help="override the true LRV")
    b.set_defaults(fn=cmd_bench)

    h = sub.add_parser("halfwidth", help="half-width stopping rule on a stream")
    _estimator_flags(h, phi_default=2.0)
    h.add_argument("--eps", type=float, required=True, help="tolerance")
    h.add_argument("--alpha", type=float, default=0.05)
    h.add_argument("--pen", type=int, default=500, help="penalty p(n) = eps for n <= pen")
    h.set_defaults(fn=cmd_halfwidth)
    return p


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return args.fn(args, out)
    except CliError as exc:
        err.write(f"laserlrv: {exc}\n")
        return exc.code
    except ValueError as exc:
        err.write(f"laserlrv: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
