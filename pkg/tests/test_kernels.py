import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dagsim import _rng, kernels
from dagsim._rng import Stream
from dagsim.leaves import GrowthConfig, grow_round
from dagsim.ledger import DagLedger

HAS_EXT = kernels._compiled is not None
needs_ext = pytest.mark.skipif(not HAS_EXT, reason="compiled extension not built")
BACKENDS = ["python"] + (["cython"] if HAS_EXT else [])


def test_rng_scalar_matches_array():
    key = _rng.seed_key(17)
    counters = np.arange(50, dtype=np.uint64)
    arr = _rng.uniform_array(np.full(50, key, dtype=np.uint64), counters)
    assert [float(x) for x in arr] == [_rng.uniform(key, c) for c in range(50)]
    idx = np.arange(5, dtype=np.uint64)
    assert [int(x) for x in _rng.derive_array(key, idx)] == [_rng.derive(key, i) for i in range(5)]


def test_uniforms_in_unit_interval():
    u = Stream.from_seed(3).uniforms(10000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 4 * math.sqrt(1 / 12 / len(u))


def test_stream_counter_advances():
    s = Stream.from_seed(1)
    a = s.uniforms(3)
    b = s.uniforms(2)
    assert np.array_equal(np.concatenate([a, b]), Stream.from_seed(1).uniforms(5))


def test_pure_python_env_selects_fallback():
    code = "from dagsim import kernels; print(kernels.BACKEND)"
    env = {**os.environ, "DAGSIM_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_ext
def test_default_backend_is_compiled():
    assert kernels.BACKEND == "cython"


@needs_ext
@given(st.integers(0, 2**63), st.integers(1, 40), st.integers(2, 120), st.data())
def test_backend_parity_leaves(seed, s, rounds, data):
    key = _rng.seed_key(seed)
    inject = data.draw(st.integers(0, rounds - 1))
    stop = data.draw(st.booleans())
    a = kernels.simulate_leaves(key, s, rounds, inject, stop, backend="python")
    b = kernels.simulate_leaves(key, s, rounds, inject, stop, backend="cython")
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


@needs_ext
@given(st.integers(0, 2**63), st.integers(1, 64), st.integers(1, 40))
def test_backend_parity_referenced(seed, L, s):
    key = _rng.seed_key(seed)
    assert np.array_equal(kernels.sample_referenced(key, L, s, 200, backend="python"),
                          kernels.sample_referenced(key, L, s, 200, backend="cython"))


@needs_ext
@given(st.integers(0, 2**63), st.floats(0, 1), st.integers(1, 700))
def test_backend_parity_walk(seed, p, horizon):
    key = _rng.seed_key(seed)
    assert np.array_equal(kernels.walk_exits(key, 300, horizon, p, backend="python"),
                          kernels.walk_exits(key, 300, horizon, p, backend="cython"))


def _ledger_growth(cfg, trial, inject=None):
    """Reference run through the full ledger; returns sizes, X and psi per round."""
    ledger = DagLedger.with_genesis()
    stream = Stream(cfg.trial_key(trial), 0)
    sizes, xs, psi = [1], [0], [0]
    target = None
    for r in range(1, cfg.rounds + 1):
        summary = grow_round(ledger, cfg.s, stream)
        if r == inject:
            target = summary.new_blocks[0]
        sizes.append(summary.leaves_after)
        xs.append(summary.referenced)
        if target is None:
            psi.append(0)
        else:
            covered = ledger.all_descendants(target) | {target}
            psi.append(len(ledger.leaf_set() & covered))
    return np.array(sizes), np.array(xs), np.array(psi)


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("s, rounds, inject", [(1, 10, 3), (3, 25, 5), (8, 30, 1), (16, 12, 4)])
def test_kernel_matches_ledger_growth(backend, s, rounds, inject):
    cfg = GrowthConfig(s, rounds, seed=11)
    sizes, xs, psi = _ledger_growth(cfg, trial=2, inject=inject)
    run = kernels.simulate_leaves(cfg.trial_key(2), s, rounds, inject, backend=backend)
    assert np.array_equal(run.leaf_sizes, sizes)
    assert np.array_equal(run.referenced, xs)
    assert np.array_equal(run.psi, psi)
    covered_at = [r for r in range(inject + 1, rounds + 1) if psi[r] == sizes[r]]
    assert run.cover_round == (covered_at[0] if covered_at else -1)


@pytest.mark.parametrize("backend", BACKENDS)
def test_referenced_counts_distinct_leaves(backend):
    # X for s draws at fixed L, rebuilt from the same counters
    key = _rng.seed_key(4)
    L, s, draws = 9, 5, 30
    got = kernels.sample_referenced(key, L, s, draws, backend=backend)
    for d in range(draws):
        hit = set()
        for k in range(s):
            c = 2 * (d * s + k)
            a = int(_rng.uniform(key, c) * L)
            b = int(_rng.uniform(key, c + 1) * (L - 1))
            b += b >= a
            hit |= {a, b}
        assert got[d] == len(hit)


@pytest.mark.parametrize("backend", BACKENDS)
def test_walk_exits_match_scalar_walk(backend):
    key = _rng.seed_key(8)
    p, horizon = 0.55, 60
    got = kernels.walk_exits(key, 40, horizon, p, backend=backend)
    for t in range(40):
        k = _rng.derive(key, t)
        pos, exit_step = 0, horizon + 1
        for i in range(horizon):
            pos += 1 if _rng.uniform(k, i) < p else -1
            if pos < 0:
                exit_step = i + 1
                break
        assert got[t] == exit_step
