from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import SelectionGame, StrategyProfile
from .utility import MarginalSolver, enumerated_marginals

DAMPING = 0.2
DEFAULT_EPS = 1e-6
# the float DP stops a little inside the target so exact re-checks stay below it
_STOP_MARGIN = 1e-3
# entries this small are dropped after convergence if the cleaned profile still qualifies
_SNAP = 1e-3


@dataclass
class EquilibriumReport:
    profile: StrategyProfile
    regrets: list[float]
    iterations: int
    converged: bool
    tolerance: float

    @property
    def max_regret(self) -> float:
        return max(self.regrets)

    def record(self) -> dict:
        return {
            "profile": [list(r) for r in self.profile.rows],
            "regrets": list(self.regrets),
            "max_regret": self.max_regret,
            "iterations": self.iterations,
            "converged": self.converged,
            "tolerance": self.tolerance,
        }


def random_interior_profile(m: int, n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.dirichlet(np.ones(n), size=m)


def find_equilibrium(
    game: SelectionGame,
    eps: float = DEFAULT_EPS,
    max_iters: int = 2000,
    seed: int = 0,
    damping: float = DAMPING,
) -> EquilibriumReport:
    """Damped sequential best-response dynamics towards an eps-Nash profile.

    ``eps`` is relative to the largest reward. Each sweep visits miners in
    order; a miner whose regret exceeds the tolerance moves its row a step
    ``damping`` towards its pure best response. A sweep in which nobody
    moves certifies every regret against the final profile. Probabilities
    below ``_SNAP`` are then dropped if the cleaned profile still passes.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    tol = eps * float(game.max_reward)
    stop = tol * (1.0 - _STOP_MARGIN)
    rng = np.random.default_rng(seed)
    P = random_interior_profile(game.m, game.n, rng)
    solver = MarginalSolver(game)
    # a lone miner faces no one to oscillate against, so it jumps straight to its best response
    step = 1.0 if game.m == 1 else damping
    regrets = np.zeros(game.m)
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        moved = False
        for i in range(game.m):
            M = solver.marginals(P, i)
            best = int(np.argmax(M))
            regrets[i] = max(M[best] - float(P[i] @ M), 0.0)
            if regrets[i] > stop:
                row = (1.0 - step) * P[i]
                row[best] += step
                P[i] = row / row.sum()
                moved = True
        if not moved:
            converged = True
            break
    if converged:
        Q = np.where(P < _SNAP, 0.0, P)
        Q /= Q.sum(axis=1, keepdims=True)
        snapped = solver.regrets(Q)
        if (snapped <= stop).all():
            P, regrets = Q, snapped
    else:
        regrets = solver.regrets(P)
    return EquilibriumReport(StrategyProfile(P), [float(r) for r in regrets], it, converged, tol)


def exact_regrets(game: SelectionGame, profile: StrategyProfile) -> list[Fraction]:
    """Deviation scan over pure strategies with exact rational arithmetic."""
    prof = profile if profile.exact else profile.as_fractions()
    out = []
    for i in range(game.m):
        marg = enumerated_marginals(game, prof.rows, i)
        current = sum(pi * mj for pi, mj in zip(prof.rows[i], marg))
        out.append(max(max(marg) - current, Fraction(0)))
    return out


def simplex_grid(n: int, grid: int):
    """All probability vectors with coordinates in multiples of 1/grid."""
    for cuts in itertools.combinations(range(grid + n - 1), n - 1):
        parts, prev = [], -1
        for c in cuts + (grid + n - 1,):
            parts.append(c - prev - 1)
            prev = c
        yield tuple(Fraction(k, grid) for k in parts)


def grid_tolerance(game: SelectionGame, grid: int) -> float:
    """Regret slack that keeps a grid neighbour of every exact equilibrium.

    Rounding each row within its own support moves opponents' probabilities
    by at most n/grid in L1, and each marginal by at most the largest reward
    per unit of that movement; a miner's regret moves by at most twice that.
    """
    pmax = float(game.max_reward)
    return 2.0 * pmax * (game.m - 1) * game.n / grid + 1e-12 * pmax


def brute_force_nash(game: SelectionGame, grid: int = 10, tol: float | None = None) -> list[tuple[StrategyProfile, float]]:
    """Every grid profile whose max regret (by subset enumeration) is within ``tol``.

    Sorted by regret, then lexicographically.
    """
    if game.m > 3 or game.n > 3:
        raise ValueError("brute force is limited to m <= 3 and n <= 3")
    if grid < 1:
        raise ValueError("grid must be >= 1")
    tol = grid_tolerance(game, grid) if tol is None else tol
    points = [tuple(float(x) for x in pt) for pt in simplex_grid(game.n, grid)]
    found = []
    for rows in itertools.product(points, repeat=game.m):
        worst = 0.0
        for i in range(game.m):
            marg = enumerated_marginals(game, rows, i)
            gain = max(marg) - sum(pi * mj for pi, mj in zip(rows[i], marg))
            worst = max(worst, gain)
            if worst > tol:
                break
        if worst <= tol:
            found.append((StrategyProfile(rows), worst))
    found.sort(key=lambda item: (item[1], item[0].rows))
    return found
