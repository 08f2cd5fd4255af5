"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``acceptance N: PASS|FAIL`` line with the measured
numbers, then asserts.  Run ``pytest tests/test_acceptance.py -v`` (or
``scripts/run_acceptance.py``) to see the lines.
"""
import math
import time

import numpy as np
import pytest

from laserlrv import (
    AutoLaser, BartlettWindow, BatchLaser, LaserConfig, LaserStream, LaserWindow, LrcmStream, MiniBatchLaser,
    PdAdjustment, RampedLaser, amse_constant, bartlett, block_starts, config_schedule, gen, gen_many,
    held_schedule, optimal_params, pd_adjust, psi_star, quadratic_form, replicate_seeds,
    run_halfwidth, split_blocks, stride_checkpoints, terminal_n, theta_star, true_targets, welford,
)
from laserlrv.cli import bench_table, _workers
from laserlrv.inference import indicator_penalty, sigma_from
from laserlrv.simgen import MODELS, Arma

from helpers import rel_err


@pytest.fixture
def report(capsys):
    def emit(num, ok, detail):
        with capsys.disabled():
            print(f"\nacceptance {num}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return emit


def ar_series(rng, n):
    a = rng.uniform(-0.8, 0.9)
    e = rng.standard_normal(n + 50)
    x = np.empty(n + 50)
    prev = 0.0
    for i, v in enumerate(e):
        prev = a * prev + v
        x[i] = prev
    return x[50:] * rng.uniform(0.2, 5) + rng.uniform(-5, 5)


def replay(sched, n):
    """s_1..s_n and t_n produced by a schedule function."""
    s, t, out = 0, 1, []
    for m in range(1, n + 1):
        s, t = sched(m, s, t)
        out.append(s)
    return out, t


def random_case(rng):
    """A (series, config, mode) draw with Theta >= phi * Psi at a shared rate.

    That keeps t at or above the effective window, so the taper weights stay
    nonnegative and the estimate is well conditioned relative to its terms.
    """
    n = int(rng.integers(50, 2001))
    q = int(rng.integers(1, 4))
    phi = int(rng.choice([1, 2, 3]))
    rate = rng.uniform(0.2, 0.5)
    Psi = rng.uniform(0.5, 3.0)
    cfg = LaserConfig(q=q, phi=phi, Psi=Psi, psi=rate, Theta=phi * Psi * rng.uniform(1, 2), theta=rate,
                      mean_mode=str(rng.choice(["unknown", "unknown", "known_zero"])))
    if phi > 1:
        mode = "ramped"
    else:
        mode = str(rng.choice(["online", "auto", "minibatch"]))
        if mode == "auto":
            cfg = LaserConfig(q=q, auto=True, mean_mode=cfg.mean_mode)
    return ar_series(rng, n), cfg, mode


def case_error(x, cfg, mode, rng):
    n = len(x)
    km = 0.0 if cfg.known_zero else None
    if mode == "minibatch":
        hold = bool(rng.integers(0, 2))
        cps = sorted(set(rng.choice(np.arange(1, n + 1), size=min(n, 12), replace=False).tolist()) | {n})
        mb = MiniBatchLaser(cfg, hold=hold)
        sched = config_schedule(cfg)
        if hold:
            sched = held_schedule(sched, block_starts(cps))
        s_seq, _ = replay(sched, n)
        worst = 0.0
        for c, block in zip(cps, split_blocks(x, cps)):
            mb.update_block(block)
            if c >= 2:
                ref = quadratic_form(x[:c], LaserWindow(cfg.q, mb.t, s_seq[:c]), known_mean=km)
                worst = max(worst, rel_err(mb.estimate(), ref))
        return worst
    if mode == "ramped":
        est = RampedLaser(cfg)
    elif mode == "auto":
        est = AutoLaser(cfg)
    else:
        est = LaserStream(cfg)
    s_seq = []
    worst = 0.0
    mid = n // 2
    for i, v in enumerate(x, start=1):
        est.update(v)
        s_seq.append(est.s)
        if i in (mid, n) and i >= 2:
            ref = quadratic_form(x[:i], LaserWindow(cfg.q, est.t, s_seq), known_mean=km)
            worst = max(worst, rel_err(est.estimate(), ref))
    return worst


def test_criterion_1_oracle_equivalence(report):
    rng = np.random.default_rng(20240101)
    t0 = time.perf_counter()
    worst, modes = 0.0, {}
    for _ in range(200):
        x, cfg, mode = random_case(rng)
        err = case_error(x, cfg, mode, rng)
        worst = max(worst, err)
        modes[mode] = modes.get(mode, 0) + 1
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 60
    assert report(1, ok, f"max rel err {worst:.2e} over 200 cases {modes}, {dt:.1f}s")


def test_criterion_2_reductions(report):
    rng = np.random.default_rng(2)
    worst = [0.0, 0.0, 0.0]
    for _ in range(100):
        x = ar_series(rng, int(rng.integers(20, 600)))
        ell = int(rng.integers(1, 30))
        st0 = LaserStream(LaserConfig(), lambda n, s, t: (0, 1))
        st0.extend(x)
        worst[0] = max(worst[0], rel_err(st0.estimate(), welford(x)))
        stb = LaserStream(LaserConfig(q=1), lambda n, s, t, ell=ell: (min(n - 1, ell - 1), ell))
        stb.extend(x)
        worst[1] = max(worst[1], rel_err(stb.estimate(), bartlett(x, ell)))
        worst[2] = max(worst[2], rel_err(bartlett(x, ell), quadratic_form(x, BartlettWindow(ell))))
    ok = max(worst) <= 1e-12
    assert report(2, ok, "welford {:.1e}, laser->bartlett {:.1e}, bartlett->oracle {:.1e}".format(*worst))


def test_criterion_3_closed_forms(report):
    P1, P2 = psi_star(1, 1, 1.0), psi_star(1, 2, 1.0)
    errs = [
        abs(P1 - (30 / 19) ** (1 / 3)),
        abs(theta_star(1, 1, 1.0, P1) / P1 - 13 / 12),
        abs(P2 - (10 / 7) ** (1 / 3)),
        abs(theta_star(1, 2, 1.0, P2) / P2 - 8 / 7),
    ]
    ok = max(errs) <= 1e-12
    assert report(3, ok, f"max abs error {max(errs):.1e}")


def test_criterion_4_amse_table(report):
    rows = []
    ok = True
    for q, phi, base, target in [(1, 1, 2.29, 0.96), (1, 2, 2.29, 1.01), (3, 1, 3.39, 0.98)]:
        o = optimal_params(q, phi, 1.0)
        r = 1 / (1 + 2 * q)
        ratio = amse_constant(r, o.Psi_star, r, o.Theta_star, q, phi, 1.0) / base
        ok &= abs(ratio - target) <= 0.01
        rows.append(f"q{q}phi{phi}={ratio:.4f}")
    assert report(4, ok, ", ".join(rows))


@pytest.mark.slow
def test_criterion_5_monte_carlo_mse(report):
    t0 = time.perf_counter()
    rows = bench_table("I", 10 ** 4, 500, 20240101, [10 ** 4], workers=_workers(500))
    dt = time.perf_counter() - t0
    r = rows[0]
    lb = r["ratio_laser11"]
    ll = r["laser12"] / r["laser11"]
    ok = lb <= 1.15 and ll <= 1.10 and dt < 300
    assert report(5, ok, f"laser11/bart {lb:.4f}, laser12/laser11 {ll:.4f}, {dt:.1f}s")


def stored_scalars(obj, seen=None):
    """Count numbers reachable from ``obj`` through attributes and containers."""
    seen = set() if seen is None else seen
    if id(obj) in seen:
        return 0
    seen.add(id(obj))
    if isinstance(obj, (bool, int, float, np.number)):
        return 1
    if isinstance(obj, np.ndarray):
        return obj.size
    if isinstance(obj, dict):
        return sum(stored_scalars(v, seen) for v in obj.values())
    if isinstance(obj, (list, tuple)) or type(obj).__name__ == "deque":
        return sum(stored_scalars(v, seen) for v in obj)
    if hasattr(obj, "__dict__") and not callable(obj):
        return stored_scalars(vars(obj), seen)
    return 0


def test_criterion_6_constant_space(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    est = RampedLaser(LaserConfig(q=1, phi=2))
    counts = {}
    n = 0
    for target in (10 ** 3, 10 ** 6):
        for v in rng.standard_normal(target - n).tolist():
            est.update(v)
        n = target
        counts[n] = (stored_scalars(est._engine), est.scalar_count())
    cfg = LaserConfig(q=2, Psi=2.0, psi=0.4)
    st_ = LaserStream(cfg)
    bound_ok = True
    for m, v in enumerate(rng.standard_normal(20000).tolist(), start=1):
        st_.update(v)
        bound_ok &= st_.buffer_len <= cfg.Psi * m ** cfg.psi + 1
    dt = time.perf_counter() - t0
    ok = counts[10 ** 3] == counts[10 ** 6] and bound_ok and dt < 60
    assert report(6, ok, f"scalars at 1e3 / 1e6: {counts[10 ** 3]} / {counts[10 ** 6]}, "
                         f"phi=1 buffer bound held: {bound_ok}, {dt:.1f}s")


def test_criterion_7_minibatch_equivalence(report):
    rng = np.random.default_rng(7)
    worst = 0.0
    n = 1500
    random_grid = sorted(set(rng.choice(np.arange(1, n + 1), 40, replace=False).tolist()) | {n})
    grids = {"stride1": stride_checkpoints(n, 1), "stride97": stride_checkpoints(n, 97),
             "random": random_grid}
    for q in (1, 2, 3):
        x = ar_series(rng, n)
        cfg = LaserConfig(q=q, Psi=1.5)
        for cps in grids.values():
            online = LaserStream(cfg, held_schedule(config_schedule(cfg), block_starts(cps)))
            mb = MiniBatchLaser(cfg, hold=True)
            marks = iter(cps)
            nxt = next(marks)
            blocks = iter(split_blocks(x, cps))
            for i, v in enumerate(x, start=1):
                online.update(v)
                if i == nxt:
                    mb.update_block(next(blocks))
                    worst = max(worst, rel_err(mb.estimate(), online.estimate(), 1e-300))
                    assert (mb.s, mb.t) == (online.s, online.t)
                    nxt = next(marks, None)
    ok = worst <= 1e-10
    assert report(7, ok, f"max rel err {worst:.2e} over grids {list(grids)} and q=1,2,3")


@pytest.mark.slow
def test_criterion_8_auto_selector(report):
    t0 = time.perf_counter()
    model = MODELS["I"]
    tgt = true_targets(model)
    seeds = replicate_seeds(8, 100)
    cfg = LaserConfig(q=1, auto=True)
    auto = BatchLaser(cfg, 100)
    oracle = BatchLaser(cfg, 100, kappa=tgt.kappa1)
    devs = {}
    x = gen_many(model, 10 ** 5, seeds)
    for i in range(10 ** 5):
        auto.update(x[i])
        oracle.update(x[i])
        if i + 1 in (10 ** 4, 10 ** 5):
            a, o = auto.estimate(), oracle.estimate()
            devs[i + 1] = float(np.median(np.abs(a - o) / o))
    med = float(np.median(auto.estimate()))
    dt = time.perf_counter() - t0
    ok = abs(med / tgt.sigma2 - 1) <= 0.15 and all(v <= 0.25 for v in devs.values())
    assert report(8, ok, f"median auto {med:.3f} vs 9, median |auto-oracle|/oracle "
                         f"{devs[10 ** 4]:.4f} (1e4), {devs[10 ** 5]:.4f} (1e5), {dt:.1f}s")


def test_criterion_9_multivariate(report):
    rng = np.random.default_rng(9)
    worst = 0.0
    for d in (1, 2, 3, 4):
        for q, phi in ((1, 1), (2, 2), (3, 1)):
            n = 500
            x = np.column_stack([ar_series(rng, n) for _ in range(d)])
            x[:, 1:] += 0.5 * x[:, :1]
            st_ = LrcmStream(d, LaserConfig(q=q, phi=phi, Psi=1.2, Theta=2.5 * phi))
            s_seq = []
            for row in x:
                st_.update(row)
                s_seq.append(st_.s)
            direct = quadratic_form(x, LaserWindow(q, st_.t, s_seq))
            worst = max(worst, rel_err(st_.estimate(), direct))
    floor_gap, sym = math.inf, True
    for _ in range(200):
        d = int(rng.integers(1, 8))
        A = rng.standard_normal((d, d))
        S = A + A.T
        S[np.diag_indices(d)] = np.abs(np.diag(S)) + 0.05
        n = int(rng.integers(10, 10 ** 5))
        adj = PdAdjustment()
        out = pd_adjust(S, n, adj)
        r = np.sqrt(np.diag(S))
        lam = np.linalg.eigvalsh(out / np.outer(r, r))
        floor_gap = min(floor_gap, lam.min() - (adj.floor(n, d) - 1e-9))
        sym &= bool(np.array_equal(out, out.T))
    ok = worst <= 1e-10 and floor_gap >= 0 and sym
    assert report(9, ok, f"polarization max rel err {worst:.2e}, eigen floor margin "
                         f"{floor_gap:.2e}, symmetric {sym}")


def test_criterion_10_halfwidth(report):
    rng = np.random.default_rng(10)
    grid = np.linspace(0.02, 0.5, 20)
    mono = True
    for _ in range(50):
        x = rng.standard_normal(3000) * rng.uniform(0.5, 2)
        est = LaserStream(LaserConfig(q=1))
        sig = []
        for v in x:
            est.update(v)
            sig.append(sigma_from(est.estimate()))
        ns = [terminal_n(sig, e, 0.05, indicator_penalty(e, 500)) for e in grid]
        ns = [math.inf if v is None else v for v in ns]
        mono &= all(a >= b for a, b in zip(ns, ns[1:]))
    target = (1.959963984540054 / 0.05) ** 2
    stars = []
    for s in replicate_seeds(2024, 50):
        res = run_halfwidth(gen(Arma(0.0, 0.0, 1.0, 0.0), 6000, s),
                            RampedLaser(LaserConfig(q=1, phi=2)), 0.05, 0.05, 500)
        stars.append(math.inf if res.n_star is None else res.n_star)
    stars = np.array(stars)
    within = float(np.mean(np.abs(stars / target - 1) <= 0.3))
    med = float(np.median(stars))
    ok = mono and within == 1.0
    assert report(10, ok, f"n*(eps) nonincreasing on 50 paths: {mono}; IID n* median {med:.0f} "
                          f"vs {target:.1f}, share within 30%: {within:.2f}")
