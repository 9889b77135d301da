"""Expected payoffs in the selection game.

A miner's utility is affine in its own row: ``U_i = sum_j pi_ij * M_ij`` where
the marginal ``M_ij = p_j * E[u_i / (u_i + sum of powers of others on j)]``.
Two routes compute the marginals: subset enumeration (exact, any numeric
type) and a power-sum distribution DP (numpy floats, used by the solver).
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import reduce
from typing import NamedTuple

import numpy as np

from .model import SelectionGame, StrategyProfile, check_compatible

EXACT_MAX_MINERS = 20
_DP_MAX_WIDTH = 1 << 16


def enumerated_marginals(game: SelectionGame, rows, i: int) -> list:
    """Marginals of miner ``i`` by enumerating every competitor subset per transaction."""
    m = game.m
    if m > EXACT_MAX_MINERS:
        raise ValueError(f"exact enumeration supports at most {EXACT_MAX_MINERS} miners, got {m}")
    others = [h for h in range(m) if h != i]
    ui = game.powers[i]
    out = []
    for j, pj in enumerate(game.rewards):
        acc = 0

        def visit(pos, prob, load):
            nonlocal acc
            if pos == len(others):
                acc = acc + prob * (ui / (ui + load))
                return
            h = others[pos]
            q = rows[h][j]
            if q != 1:
                visit(pos + 1, prob * (1 - q), load)
            if q != 0:
                visit(pos + 1, prob * q, load + game.powers[h])

        visit(0, Fraction(1) if _exact_rows(rows) else 1.0, Fraction(0))
        out.append(pj * acc if _exact_rows(rows) else float(pj) * float(acc))
    return out


def _exact_rows(rows) -> bool:
    return all(isinstance(x, (int, Fraction)) for r in rows for x in r)


def exact_utility(game: SelectionGame, profile: StrategyProfile, i: int):
    """Expected reward of miner ``i``; a Fraction when the profile is exact."""
    check_compatible(game, profile)
    marg = enumerated_marginals(game, profile.rows, i)
    return sum((pi * mj for pi, mj in zip(profile.rows[i], marg) if pi != 0), Fraction(0) if profile.exact else 0.0)


# -- float DP over integer-scaled power sums ------------------------------

def integer_powers(game: SelectionGame) -> np.ndarray | None:
    """Powers scaled to coprime integers, or None if the total would be too large."""
    lcm = reduce(math.lcm, (u.denominator for u in game.powers), 1)
    ints = [int(u * lcm) for u in game.powers]
    g = reduce(math.gcd, ints)
    ints = [x // g for x in ints]
    if sum(ints) > _DP_MAX_WIDTH:
        return None
    return np.array(ints, dtype=np.int64)


class MarginalSolver:
    """Float marginals for every miner of one game; reusable across profiles."""

    def __init__(self, game: SelectionGame):
        self.game = game
        self.p = game.rewards_array()
        self.w = integer_powers(game)
        self.u = game.powers_array()

    def marginals(self, P: np.ndarray, i: int) -> np.ndarray:
        if self.w is None:
            return self._marginals_dict(P, i)
        w = self.w
        width = int(w.sum() - w[i]) + 1
        n = P.shape[1]
        dist = np.zeros((n, width))
        dist[:, 0] = 1.0
        top = 0
        for h in range(P.shape[0]):
            if h == i:
                continue
            q = P[h][:, None]
            wh = int(w[h])
            old = dist[:, : top + 1].copy()
            dist[:, : top + 1] = old * (1.0 - q)
            dist[:, wh : wh + top + 1] += old * q
            top += wh
        share = w[i] / (w[i] + np.arange(width))
        return self.p * (dist @ share)

    def _marginals_dict(self, P, i):
        u = self.u
        out = np.empty(P.shape[1])
        for j in range(P.shape[1]):
            dist = {0.0: 1.0}
            for h in range(P.shape[0]):
                if h == i:
                    continue
                q = P[h, j]
                nxt: dict = {}
                for load, pr in dist.items():
                    if q != 1.0:
                        nxt[load] = nxt.get(load, 0.0) + pr * (1.0 - q)
                    if q != 0.0:
                        key = load + u[h]
                        nxt[key] = nxt.get(key, 0.0) + pr * q
                dist = nxt
            out[j] = self.p[j] * sum(pr * u[i] / (u[i] + load) for load, pr in dist.items())
        return out

    def all_marginals(self, P: np.ndarray) -> np.ndarray:
        return np.stack([self.marginals(P, i) for i in range(P.shape[0])])

    def regrets(self, P: np.ndarray) -> np.ndarray:
        M = self.all_marginals(P)
        return np.maximum(M.max(axis=1) - np.einsum("ij,ij->i", P, M), 0.0)


def marginal_values(game: SelectionGame, profile: StrategyProfile, i: int):
    """Exact marginals for exact profiles, float DP marginals otherwise."""
    check_compatible(game, profile)
    if profile.exact:
        return enumerated_marginals(game, profile.rows, i)
    return list(MarginalSolver(game).marginals(profile.as_array(), i))


class MonteCarloEstimate(NamedTuple):
    mean: float
    stderr: float
    samples: int


def sample_picks(profile: StrategyProfile | np.ndarray, samples: int, rng: np.random.Generator) -> np.ndarray:
    """Independent picks per miner, shape ``(samples, m)``."""
    P = profile.as_array() if isinstance(profile, StrategyProfile) else profile
    cdf = np.cumsum(P, axis=1)
    u = rng.random((samples, P.shape[0]))
    picks = np.empty((samples, P.shape[0]), dtype=np.int64)
    for h in range(P.shape[0]):
        picks[:, h] = np.searchsorted(cdf[h], u[:, h], side="right")
    return np.minimum(picks, P.shape[1] - 1)


def mc_utility(game: SelectionGame, profile: StrategyProfile, i: int, samples: int, seed: int) -> MonteCarloEstimate:
    """Monte Carlo estimate of miner ``i``'s utility; bit-identical for a fixed seed."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    check_compatible(game, profile)
    rng = np.random.default_rng(seed)
    picks = sample_picks(profile, samples, rng)
    u = game.powers_array()
    p = game.rewards_array()
    same = picks == picks[:, [i]]
    load = same @ u
    payoff = p[picks[:, i]] * u[i] / load
    if samples < 2 or payoff.min() == payoff.max():
        se = 0.0  # a constant payoff has no sampling error; std() would return rounding noise
    else:
        se = float(payoff.std(ddof=1) / math.sqrt(samples))
    return MonteCarloEstimate(float(payoff.mean()), se, samples)


class BestResponse(NamedTuple):
    index: int
    marginals: list


def best_response(game: SelectionGame, profile: StrategyProfile, i: int) -> BestResponse:
    """Pure best response of miner ``i``; ties go to the smallest transaction index."""
    marg = marginal_values(game, profile, i)
    best = 0
    for j in range(1, len(marg)):
        if marg[j] > marg[best]:
            best = j
    return BestResponse(best, marg)


def regret(game: SelectionGame, profile: StrategyProfile, i: int):
    """Largest gain miner ``i`` could get by deviating alone (always >= 0)."""
    marg = marginal_values(game, profile, i)
    current = sum(pi * mj for pi, mj in zip(profile.rows[i], marg))
    gain = max(marg) - current
    return gain if gain > 0 else gain * 0
