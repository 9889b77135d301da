"""Leaf-set growth, descendant coverage and the biased-walk survival estimate.

Each round, ``s`` new blocks each reference an unordered pair of distinct
leaves drawn uniformly from the leaf set as it stood at the start of the
round. With a single leaf both references name it.

Coverage times are reported in blocks appended after the target's round
(rounds times ``s``); rounds are kept alongside.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from ._rng import Stream, derive, seed_key
from .ledger import BlockId, DagLedger, atomic_write_text


@dataclass(frozen=True)
class GrowthConfig:
    s: int
    rounds: int
    seed: int
    epsilon: float | None = None

    def __post_init__(self):
        if self.s < 1:
            raise ValueError("s must be >= 1")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")

    def in_bound_regime(self) -> bool:
        """Whether s > 1/epsilon**3, the regime the high-probability bounds assume."""
        return self.epsilon is not None and self.s > 1.0 / self.epsilon**3

    def trial_key(self, trial: int) -> int:
        return derive(seed_key(self.seed), trial)


@dataclass
class LeafTrace:
    s: int
    leaf_sizes: np.ndarray  # |L_0| .. |L_T|
    referenced: np.ndarray  # X_t for t >= 1; index 0 unused
    psi: np.ndarray | None = None

    @property
    def rounds(self) -> int:
        return len(self.leaf_sizes) - 1

    def bookkeeping_holds(self) -> np.ndarray:
        """Per round: |L_{t+1}| == |L_t| - X_{t+1} + s."""
        return self.leaf_sizes[1:] == self.leaf_sizes[:-1] - self.referenced[1:] + self.s

    def fraction_above(self, bound: float) -> float:
        """Share of rounds t >= 1 whose leaf set exceeds ``bound``."""
        return float((self.leaf_sizes[1:] > bound).mean())

    def records(self) -> list[dict]:
        psi = self.psi if self.psi is not None else np.zeros_like(self.leaf_sizes)
        return [
            {"t": t, "leaves": int(L), "referenced": int(x), "psi": int(p)}
            for t, (L, x, p) in enumerate(zip(self.leaf_sizes, self.referenced, psi))
        ]

    def write_csv(self, path) -> None:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["t", "leaves", "referenced", "psi"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.records())
        atomic_write_text(path, buf.getvalue())


@dataclass
class CoverageTrace:
    s: int
    target_round: int
    leaf_sizes: np.ndarray
    psi: np.ndarray
    cover_round: int

    @property
    def covered(self) -> bool:
        return self.cover_round >= 0

    @property
    def rounds_to_cover(self) -> float:
        return self.cover_round - self.target_round if self.covered else math.inf

    @property
    def blocks_to_cover(self) -> float:
        return self.rounds_to_cover * self.s

    def absorbed(self) -> bool:
        """Once every leaf descends from the target, that stays true."""
        if not self.covered:
            return True
        tail = slice(self.cover_round, None)
        return bool((self.psi[tail] == self.leaf_sizes[tail]).all())


@dataclass(frozen=True)
class WalkSpec:
    p: float
    horizon: int
    step: int = 1

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.horizon < 1 or self.step < 1:
            raise ValueError("horizon and step must be >= 1")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def limit(self) -> float:
        """Survival probability as the horizon grows: (p - q)/p when p > q, else 0."""
        return (self.p - self.q) / self.p if self.p > self.q else 0.0


@dataclass
class WalkEstimate:
    spec: WalkSpec
    survival: float
    stderr: float
    trials: int

    @property
    def limit(self) -> float:
        return self.spec.limit

    def z_score(self) -> float:
        if self.stderr == 0:
            return 0.0 if self.survival == self.limit else math.inf
        return (self.survival - self.limit) / self.stderr


@dataclass
class RoundSummary:
    referenced: int
    leaves_before: int
    leaves_after: int
    new_blocks: list[BlockId] = field(default_factory=list)


def grow_round(ledger: DagLedger, s: int, stream: Stream) -> RoundSummary:
    """Append ``s`` blocks, each referencing two leaves of the round-start snapshot."""
    if not len(ledger):
        raise ValueError("ledger has no genesis")
    snapshot = ledger.sorted_leaves()
    n_leaves = len(snapshot)
    u = stream.uniforms(2 * s)
    rnd = ledger.current_round + 1
    hit = set()
    new = []
    for k in range(s):
        if n_leaves == 1:
            a = b = 0
        else:
            a = int(u[2 * k] * n_leaves)
            b = int(u[2 * k + 1] * (n_leaves - 1))
            if b >= a:
                b += 1
        hit.update((a, b))
        refs = (snapshot[a], snapshot[b])
        new.append(ledger.append_block(refs, f"tx{len(ledger)}", k, rnd))
    return RoundSummary(len(hit), n_leaves, len(ledger.leaf_set()), new)


def run_growth(config: GrowthConfig, trial: int = 0, backend: str | None = None) -> LeafTrace:
    run = kernels.simulate_leaves(config.trial_key(trial), config.s, config.rounds, backend=backend)
    return LeafTrace(config.s, run.leaf_sizes, run.referenced)


def coverage_time(config: GrowthConfig, inject_round: int, trial: int = 0,
                  stop_on_cover: bool = True, backend: str | None = None) -> CoverageTrace:
    """Track leaves descending from the first block created in ``inject_round``.

    Coverage is the first later round at which every leaf descends from
    (or is) the target; from then on every appended block is a descendant.
    """
    if not 1 <= inject_round < config.rounds:
        raise ValueError("inject_round must satisfy 1 <= inject_round < rounds")
    run = kernels.simulate_leaves(config.trial_key(trial), config.s, config.rounds,
                                  inject_round, stop_on_cover, backend=backend)
    return CoverageTrace(config.s, inject_round, run.leaf_sizes, run.psi, run.cover_round)


@dataclass
class CoverageStudy:
    s: int
    blocks: np.ndarray  # blocks to cover per trial; inf when not covered
    recurrence_lhs: float
    recurrence_rhs: float

    @property
    def median_blocks(self) -> float:
        return float(np.median(self.blocks))

    @property
    def median_rounds(self) -> float:
        return self.median_blocks / self.s

    def fraction_within(self, blocks: float) -> float:
        return float((self.blocks <= blocks).mean())

    @property
    def recurrence_holds(self) -> bool:
        """Mean next-round coverage is at least psi * (1 + 1/(|L| - 1)) summed over partial rounds."""
        return self.recurrence_lhs >= self.recurrence_rhs


def coverage_study(config: GrowthConfig, inject_round: int, trials: int, backend: str | None = None) -> CoverageStudy:
    blocks = np.empty(trials)
    lhs = rhs = 0.0
    for t in range(trials):
        tr = coverage_time(config, inject_round, trial=t, backend=backend)
        blocks[t] = tr.blocks_to_cover
        psi = tr.psi[inject_round:]
        L = tr.leaf_sizes[inject_round:]
        partial = (psi[:-1] >= 1) & (psi[:-1] <= L[:-1] - 1)
        lhs += float(psi[1:][partial].sum())
        rhs += float((psi[:-1] * (1.0 + 1.0 / np.maximum(L[:-1] - 1, 1)))[partial].sum())
    return CoverageStudy(config.s, blocks, lhs, rhs)


def verification_depth(s: int, c: float) -> int:
    """ceil(c * s * log2 s), at least 1."""
    return max(1, math.ceil(c * s * math.log2(s))) if s > 1 else 1


@dataclass
class SweepRow:
    s: int
    depth: int
    median_blocks: float
    median_rounds: float
    fraction_covered: float
    trials: int

    def record(self) -> dict:
        return {
            "s": self.s,
            "depth_blocks": self.depth,
            "median_blocks": self.median_blocks,
            "median_rounds": self.median_rounds,
            "fraction_covered": self.fraction_covered,
            "trials": self.trials,
        }


def finality_sweep(s_values, c: float = 4.0, trials: int = 100, seed: int = 0,
                   inject_round: int = 50, backend: str | None = None) -> list[SweepRow]:
    """Coverage delay per s against the verification depth ceil(c s log2 s).

    Rows trade throughput (s) against how long finality takes.
    """
    rows = []
    for s in s_values:
        depth = verification_depth(s, c)
        rounds = inject_round + max(4 * math.ceil(depth / s), 200)
        study = coverage_study(GrowthConfig(s, rounds, seed), inject_round, trials, backend=backend)
        rows.append(SweepRow(s, depth, study.median_blocks, study.median_rounds,
                             study.fraction_within(depth), trials))
    return rows


def walk_exits(spec: WalkSpec, trials: int, seed: int, backend: str | None = None) -> np.ndarray:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    # a +/-step walk stays non-negative exactly when the +/-1 walk does
    return kernels.walk_exits(seed_key(seed), trials, spec.horizon, spec.p, backend=backend)


def walk_survival(spec: WalkSpec, trials: int, seed: int, backend: str | None = None) -> WalkEstimate:
    """Monte Carlo estimate of Pr(walk stays >= 0 for all steps up to the horizon)."""
    exits = walk_exits(spec, trials, seed, backend)
    f = float((exits > spec.horizon).mean())
    return WalkEstimate(spec, f, math.sqrt(f * (1.0 - f) / trials), trials)


def survival_curve(p: float, horizons, trials: int, seed: int, backend: str | None = None) -> list[float]:
    """Survival at several horizons from one set of walks (common random numbers)."""
    exits = walk_exits(WalkSpec(p, max(horizons)), trials, seed, backend)
    return [float((exits > n).mean()) for n in horizons]


def expected_referenced(n_leaves: int, s: int) -> Fraction:
    """E[X] = L - L (1 - 2/L)^s for L >= 2."""
    L = Fraction(n_leaves)
    return L - L * (1 - 2 / L) ** s


def referenced_bracket(n_leaves: int, s: int) -> tuple[Fraction, Fraction]:
    return Fraction(2 * s) - Fraction(2 * s * (s - 1), n_leaves), Fraction(2 * s)


def referenced_draws(n_leaves: int, s: int, draws: int, seed: int, backend: str | None = None) -> np.ndarray:
    """X for ``draws`` independent rounds at a fixed leaf count."""
    return kernels.sample_referenced(seed_key(seed), n_leaves, s, draws, backend=backend)
