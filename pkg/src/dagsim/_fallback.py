"""Pure numpy kernels; the reference twin of ``_ckernels.pyx``.

Every function fills caller-provided int64 buffers and consumes the same
counter-based draws as the compiled version, so outputs match bit for bit.
"""

from __future__ import annotations

import numpy as np

from ._rng import derive_array, uniform_array

_WALK_BLOCK = 256


def _pairs(u0: np.ndarray, u1: np.ndarray, n_leaves: int):
    if n_leaves == 1:
        zero = np.zeros(u0.shape, dtype=np.int64)
        return zero, zero
    a = (u0 * n_leaves).astype(np.int64)
    b = (u1 * (n_leaves - 1)).astype(np.int64)
    b += b >= a
    return a, b


def simulate_leaves(key, s, rounds, inject_round, stop_on_cover, leaf_sizes, referenced, psi):
    """Round-synchronous leaf growth from a single genesis leaf.

    Returns ``(rounds_run, cover_round)``; ``cover_round`` is -1 if the
    injected block never covered the leaf set (or nothing was injected).
    """
    cov = np.zeros(1, dtype=np.uint8)
    leaf_sizes[0] = 1
    referenced[0] = 0
    psi[0] = 0
    cover_round = -1
    r = 0
    for r in range(1, rounds + 1):
        n_leaves = cov.shape[0]
        u = uniform_array(key, np.arange(2 * (r - 1) * s, 2 * r * s, dtype=np.uint64))
        a, b = _pairs(u[0::2], u[1::2], n_leaves)
        hit = np.zeros(n_leaves, dtype=bool)
        hit[a] = True
        hit[b] = True
        new = cov[a] | cov[b]
        if r == inject_round:
            new[0] = 1
        cov = np.concatenate([cov[~hit], new])
        referenced[r] = int(hit.sum())
        leaf_sizes[r] = cov.shape[0]
        psi[r] = int(cov.sum()) if inject_round > 0 and r >= inject_round else 0
        if cover_round < 0 and inject_round > 0 and r > inject_round and psi[r] == leaf_sizes[r]:
            cover_round = r
            if stop_on_cover:
                break
    return r, cover_round


def sample_referenced(key, n_leaves, s, out):
    """Distinct leaves hit by ``s`` blocks choosing pairs among ``n_leaves`` leaves, per draw."""
    draws = out.shape[0]
    u = uniform_array(key, np.arange(2 * draws * s, dtype=np.uint64)).reshape(draws, s, 2)
    a, b = _pairs(u[:, :, 0], u[:, :, 1], n_leaves)
    both = np.sort(np.concatenate([a, b], axis=1), axis=1)
    out[:] = 1 + (np.diff(both, axis=1) != 0).sum(axis=1)


def walk_exits(key, horizon, p, out):
    """First step at which a +/-1 walk from 0 goes negative, or ``horizon + 1``."""
    trials = out.shape[0]
    keys = derive_array(key, np.arange(trials, dtype=np.uint64))
    out[:] = horizon + 1
    active = np.arange(trials)
    pos = np.zeros(trials, dtype=np.int64)
    start = 0
    while start < horizon and active.size:
        width = min(_WALK_BLOCK, horizon - start)
        counters = np.arange(start, start + width, dtype=np.uint64)
        u = uniform_array(keys[active][:, None], counters[None, :])
        path = pos[active][:, None] + np.cumsum(np.where(u < p, 1, -1), axis=1)
        below = path < 0
        fell = below.any(axis=1)
        first = below.argmax(axis=1)
        out[active[fell]] = start + first[fell] + 1
        pos[active] = path[:, -1]
        active = active[~fell]
        start += width
