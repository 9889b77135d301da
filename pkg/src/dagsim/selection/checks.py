from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import SelectionGame, StrategyProfile, check_compatible
from .utility import sample_picks

FAIRNESS_HEAVY = 12
INEQ_MAX_N = 16


@dataclass
class DistinctCount:
    counts: np.ndarray
    mean: float
    stderr: float

    def histogram(self) -> dict[int, int]:
        values, freq = np.unique(self.counts, return_counts=True)
        return {int(v): int(f) for v, f in zip(values, freq)}


def distinct_count(game: SelectionGame, profile: StrategyProfile, trials: int, seed: int) -> DistinctCount:
    """Distribution of how many different transactions get mined in one round.

    Each contested transaction still yields exactly one block, so the block
    count equals the number of distinct picks.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    check_compatible(game, profile)
    picks = sample_picks(profile, trials, np.random.default_rng(seed))
    srt = np.sort(picks, axis=1)
    counts = 1 + (np.diff(srt, axis=1) != 0).sum(axis=1)
    se = float(counts.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return DistinctCount(counts, float(counts.mean()), se)


@dataclass
class FairnessReport:
    column_sums: list[float]
    heavy_threshold: float
    light_threshold: float
    triggered: bool
    light_columns: list[int]

    @property
    def holds(self) -> bool:
        return not (self.triggered and self.light_columns)


def fairness_check(profile: StrategyProfile, delta, eps: float = 0.0) -> FairnessReport:
    """If some transaction draws total probability >= 12*delta, every one must draw >= 1/2.

    ``eps`` widens the lower threshold to ``1/2 - 10*eps*m`` for approximate equilibria.
    """
    sums = [float(s) for s in profile.column_sums()]
    heavy = FAIRNESS_HEAVY * float(delta)
    light = 0.5 - 10.0 * eps * profile.m
    triggered = any(s >= heavy for s in sums)
    return FairnessReport(sums, heavy, light, triggered, [j for j, s in enumerate(sums) if s < light])


@dataclass(frozen=True)
class InequalityInstance:
    a: tuple[Fraction, ...]
    k: int
    delta: Fraction
    m: int

    def __post_init__(self):
        a = tuple(Fraction(x) for x in self.a)
        delta = Fraction(self.delta)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "delta", delta)
        if delta <= 0 or (1 / delta).denominator != 1:
            raise ValueError("1/delta must be a positive integer")
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.k * delta >= 1:
            raise ValueError("k * delta must be < 1")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if any(x < 0 or x > delta for x in a):
            raise ValueError("every a_i must lie in [0, delta]")
        if sum(a) != 1:
            raise ValueError("a must sum to 1")

    @property
    def zeta(self) -> Fraction:
        return self.k * self.delta


@dataclass(frozen=True)
class InequalityResult:
    lhs: Fraction
    rhs: float
    holds: bool


def _exp_exceeds(k: int, target: Fraction) -> bool:
    """Decide ``e**k > target`` exactly using rational Taylor bounds."""
    term = Fraction(1)
    partial = Fraction(1)
    i = 0
    while True:
        i += 1
        term = term * k / i
        partial += term
        if partial > target:
            return True
        if i + 2 > k:
            # remaining tail < next_term * (i+2)/(i+2-k)
            tail = term * k / (i + 1) * Fraction(i + 2, i + 2 - k)
            if partial + tail <= target:
                return False


def lemma_ineq_check(inst: InequalityInstance) -> InequalityResult:
    """Sum over k-subsets of (subset mass)**m against e**k * zeta**(m-k).

    The left side is enumerated exactly; the comparison is exact too.
    """
    n = len(inst.a)
    if n > INEQ_MAX_N:
        raise ValueError(f"enumeration is limited to n <= {INEQ_MAX_N}")
    lhs = sum((sum(s) ** inst.m for s in itertools.combinations(inst.a, inst.k)), Fraction(0))
    zeta = inst.zeta
    scale = zeta ** (inst.m - inst.k)
    # e**k is irrational, so it never equals the rational ratio
    holds = _exp_exceeds(inst.k, lhs / scale)
    rhs = math.exp(inst.k) * float(zeta) ** (inst.m - inst.k)
    return InequalityResult(lhs, rhs, holds)


def random_instance(rng: np.random.Generator, n_max: int = 12, m_max: int = 30) -> InequalityInstance:
    """A random valid instance; masses are moved between coordinates in exact steps."""
    inv = int(rng.integers(2, n_max + 1))
    n = int(rng.integers(inv, n_max + 1))
    k = int(rng.integers(1, inv))
    m = int(rng.integers(1, m_max + 1))
    delta = Fraction(1, inv)
    a = [delta] * inv + [Fraction(0)] * (n - inv)
    a = [a[i] for i in rng.permutation(n)]
    for _ in range(4 * n):
        i, j = (int(x) for x in rng.choice(n, size=2, replace=False))
        room = min(a[i], delta - a[j])
        step = room * Fraction(int(rng.integers(0, 101)), 100)
        a[i] -= step
        a[j] += step
    return InequalityInstance(tuple(a), k, delta, m)
