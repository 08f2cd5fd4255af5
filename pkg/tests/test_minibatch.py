import numpy as np
import pytest
from hypothesis import given, strategies as st

from laserlrv import (
    LaserConfig, LaserStream, LaserWindow, MiniBatchLaser, block_starts, config_schedule,
    held_schedule, quadratic_form, split_blocks, stride_checkpoints,
)

from helpers import ar1, rel_err


def online_at(x, cfg, checkpoints, hold=True):
    sched = config_schedule(cfg)
    if hold:
        sched = held_schedule(sched, block_starts(checkpoints))
    st_ = LaserStream(cfg, sched)
    out = {}
    marks = set(checkpoints)
    for i, v in enumerate(x, start=1):
        st_.update(v)
        if i in marks:
            out[i] = (st_.estimate(), st_.s, st_.t)
    return out


def batch_at(x, cfg, checkpoints, hold=True):
    mb = MiniBatchLaser(cfg, hold=hold)
    out = {}
    for c, block in zip(checkpoints, split_blocks(x, checkpoints)):
        mb.update_block(block)
        out[c] = (mb.estimate(), mb.s, mb.t)
    return out


GRIDS = {
    "given": [100, 250, 1000],
    "stride1": list(range(1, 301)),
    "stride97": stride_checkpoints(1000, 97),
}


@pytest.mark.parametrize("q", [1, 2, 3])
@pytest.mark.parametrize("grid", sorted(GRIDS))
@pytest.mark.parametrize("hold", [True, False])
def test_equals_online(q, grid, hold, rng):
    cps = GRIDS[grid]
    x = ar1(rng, cps[-1], 0.6, mu=1.0)
    cfg = LaserConfig(q=q, Psi=1.5)
    a, b = online_at(x, cfg, cps, hold), batch_at(x, cfg, cps, hold)
    for c in cps:
        assert b[c][1:] == a[c][1:]
        assert rel_err(b[c][0], a[c][0]) < 1e-10


def test_random_grid_against_oracle(rng):
    cps = sorted(set(rng.integers(2, 800, 25).tolist())) + [800]
    x = rng.standard_normal(800)
    cfg = LaserConfig(q=2)
    sched = held_schedule(config_schedule(cfg), block_starts(cps))
    s_seq, s, t = [0], 0, 1
    for n in range(2, 801):
        s, t = sched(n, s, t)
        s_seq.append(s)
    b = batch_at(x, cfg, cps)
    for c in cps:
        ref = quadratic_form(x[:c], LaserWindow(2, b[c][2], s_seq[:c]))
        assert rel_err(b[c][0], ref) < 1e-10


def test_hold_freezes_block_start(rng):
    cfg = LaserConfig(Psi=3.0)
    mb = MiniBatchLaser(cfg)
    mb.update_block(rng.standard_normal(10))
    s_before = mb.s
    mb.update_block(rng.standard_normal(1))
    assert mb.s == s_before


def test_blocks_of_one_reproduce_online(rng):
    x = rng.standard_normal(200)
    cfg = LaserConfig(q=3)
    on = LaserStream(cfg)
    mb = MiniBatchLaser(cfg, hold=False)
    for v in x:
        on.update(v)
        mb.update(v)
        assert (mb.s, mb.t) == (on.s, on.t)
        assert rel_err(mb.estimate(), on.estimate()) < 1e-10 or abs(on.estimate()) < 1e-12


def test_trivial_blocks():
    mb = MiniBatchLaser(LaserConfig())
    assert mb.estimate() == 0.0
    mb.update_block([2.0])
    assert mb.estimate() == 0.0
    mb.update_block(np.full(50, 2.0))
    assert mb.estimate() == 0.0
    z = MiniBatchLaser(LaserConfig(q=2))
    z.update_block(np.zeros(100))
    assert z.estimate() == 0.0


def test_vector_items(rng):
    x = rng.standard_normal((300, 3))
    mb = MiniBatchLaser(LaserConfig(q=2), hold=False)
    for block in np.array_split(x, 7):
        mb.update_block(block)
    for k in range(3):
        on = LaserStream(LaserConfig(q=2))
        on.extend(x[:, k])
        assert rel_err(mb.estimate()[k], on.estimate()) < 1e-10


def test_work_proportional_to_block(rng):
    mb = MiniBatchLaser(LaserConfig(q=2))
    mb.update_block(rng.standard_normal(1000))
    ops = []
    for _ in range(3):
        before = mb.ops
        mb.update_block(rng.standard_normal(500))
        ops.append(mb.ops - before)
    big = MiniBatchLaser(LaserConfig(q=2))
    big.update_block(rng.standard_normal(200000))
    before = big.ops
    big.update_block(rng.standard_normal(500))
    assert big.ops - before <= 2 * max(ops)


def test_buffer_is_window_sized(rng):
    mb = MiniBatchLaser(LaserConfig())
    for block in np.array_split(rng.standard_normal(5000), 9):
        mb.update_block(block)
        assert mb.buffer_len == mb.s + 1


def test_validation():
    mb = MiniBatchLaser(LaserConfig())
    with pytest.raises(ValueError):
        mb.update_block([])
    with pytest.raises(ValueError):
        mb.update_block([1.0, np.inf])
    with pytest.raises(ValueError):
        MiniBatchLaser(LaserConfig(phi=2))
    with pytest.raises(ValueError):
        split_blocks(np.zeros(5), [3, 2])
    with pytest.raises(ValueError):
        stride_checkpoints(10, 0)


def test_helpers():
    assert block_starts([100, 250, 1000]) == [2, 101, 251]
    assert stride_checkpoints(10, 4) == [4, 8, 10]
    assert [len(b) for b in split_blocks(np.zeros(10), [4, 8, 10])] == [4, 4, 2]


@given(st.lists(st.integers(1, 40), min_size=1, max_size=12), st.integers(1, 3), st.booleans())
def test_arbitrary_block_sizes(sizes, q, hold):
    cps = list(np.cumsum(sizes))
    x = np.sin(np.arange(cps[-1]) * 0.7) * 3 + np.cos(np.arange(cps[-1]) ** 1.3)
    cfg = LaserConfig(q=q)
    a, b = online_at(x, cfg, cps, hold), batch_at(x, cfg, cps, hold)
    for c in cps:
        assert b[c][1:] == a[c][1:]
        assert abs(b[c][0] - a[c][0]) <= 1e-10 * max(abs(a[c][0]), 1e-2)
