"""Transaction rewards, the depth-weighted verification split and settlement.

All amounts are :class:`fractions.Fraction`; conservation checks are exact.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable

from .ledger import BlockId, DagLedger, LedgerError, atomic_write_text


def as_fraction(x) -> Fraction:
    if isinstance(x, float):
        # decimal literal, not the binary expansion
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class RewardSchedule:
    vrf: Fraction
    depth: int
    parts: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.parts) != self.depth:
            raise ValueError("need one part per depth")
        if any(a >= b for a, b in zip(self.parts, self.parts[1:])):
            raise ValueError("parts must be strictly increasing")
        if sum(self.parts) != self.vrf:
            raise ValueError("parts must sum to vrf")

    def part(self, k: int) -> Fraction:
        return self.parts[k - 1]


def make_schedule(vrf, depth: int) -> RewardSchedule:
    """Split ``vrf`` over depths 1..depth with weights proportional to k."""
    vrf = as_fraction(vrf)
    if vrf <= 0:
        raise ValueError("vrf must be positive")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    total = depth * (depth + 1)
    return RewardSchedule(vrf, depth, tuple(vrf * 2 * k / total for k in range(1, depth + 1)))


class TransactionPool:
    """Transaction rewards whose max/min ratio stays within ``delta``."""

    def __init__(self, delta, rewards: dict | None = None):
        self.delta = as_fraction(delta)
        if self.delta < 1:
            raise ValueError("delta must be >= 1")
        self.rewards: dict[Hashable, Fraction] = {}
        for tx, p in (rewards or {}).items():
            self.add(tx, p)

    def add(self, tx: Hashable, reward) -> None:
        reward = as_fraction(reward)
        if reward <= 0:
            raise ValueError("transaction rewards must be positive")
        if tx in self.rewards:
            raise ValueError(f"transaction {tx!r} already pooled")
        values = list(self.rewards.values()) + [reward]
        if max(values) > self.delta * min(values):
            raise ValueError(f"reward {reward} breaks the spread cap {self.delta}")
        self.rewards[tx] = reward

    def remove(self, tx: Hashable) -> Fraction:
        return self.rewards.pop(tx)

    def reward(self, tx: Hashable) -> Fraction:
        return self.rewards.get(tx, Fraction(0))

    def spread(self) -> Fraction:
        if not self.rewards:
            return Fraction(1)
        return max(self.rewards.values()) / min(self.rewards.values())

    def __len__(self):
        return len(self.rewards)


@dataclass(frozen=True)
class Credit:
    source: BlockId
    depth: int
    amount: Fraction


@dataclass
class VerificationPayout:
    block: BlockId
    producer: Hashable
    credits: list[Credit]

    @property
    def total(self) -> Fraction:
        return sum((c.amount for c in self.credits), Fraction(0))

    def by_miner(self) -> dict[Hashable, Fraction]:
        return {self.producer: self.total}


def verification_payouts(ledger: DagLedger, b: BlockId, schedule: RewardSchedule) -> VerificationPayout:
    """Credits earned by the producer of ``b`` for verifying its ancestors.

    Each ancestor X at distance k pays vrf_k split evenly over its live
    distance-k descendants.
    """
    if not ledger.is_live(b):
        ledger.block(b)
        raise LedgerError(f"block {b} is abandoned")
    credits = []
    for k in range(1, schedule.depth + 1):
        for x in sorted(ledger.ancestors_at(b, k)):
            share = len(ledger.descendants_at(x, k, live=True))
            credits.append(Credit(x, k, schedule.part(k) / share))
    return VerificationPayout(b, ledger.block(b).producer, credits)


@dataclass
class Settlement:
    block: BlockId
    producer: Hashable
    tx_reward: Fraction
    verification: Fraction

    @property
    def amount(self) -> Fraction:
        return self.tx_reward + self.verification


@dataclass
class PayoutLedger:
    """Pending rewards per block, moved to accrued balances on finalization."""

    schedule: RewardSchedule
    pool: TransactionPool
    accrued: dict[Hashable, Fraction] = field(default_factory=dict)
    pending: set[BlockId] = field(default_factory=set)
    settled: dict[BlockId, Settlement] = field(default_factory=dict)

    def register(self, b: BlockId) -> None:
        if b in self.settled or b in self.pending:
            raise ValueError(f"block {b} already registered")
        self.pending.add(b)

    def settle_finalized(self, ledger: DagLedger, depth: int, threshold: int) -> list[BlockId]:
        return settle_finalized(ledger, self, depth, threshold)

    def pending_amounts(self, ledger: DagLedger) -> dict[Hashable, Fraction]:
        out: dict[Hashable, Fraction] = {}
        for b in self.pending:
            if not ledger.is_live(b):
                continue
            blk = ledger.block(b)
            amount = self.pool.reward(blk.tx) + verification_payouts(ledger, b, self.schedule).total
            out[blk.producer] = out.get(blk.producer, Fraction(0)) + amount
        return out

    def report_rows(self, ledger: DagLedger) -> list[dict]:
        pending = self.pending_amounts(ledger)
        counts: dict[Hashable, int] = {}
        for s in self.settled.values():
            counts[s.producer] = counts.get(s.producer, 0) + 1
        miners = sorted(set(self.accrued) | set(pending) | set(counts), key=str)
        return [
            {
                "miner": m,
                "accrued": str(self.accrued.get(m, Fraction(0))),
                "pending": str(pending.get(m, Fraction(0))),
                "settled_blocks": counts.get(m, 0),
            }
            for m in miners
        ]

    def write_report(self, ledger: DagLedger, path) -> None:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["miner", "accrued", "pending", "settled_blocks"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.report_rows(ledger))
        atomic_write_text(path, buf.getvalue())


def settle_finalized(ledger: DagLedger, payouts: PayoutLedger, depth: int, threshold: int) -> list[BlockId]:
    """Move every pending, live, now-finalized block to accrued; each block at most once."""
    newly = []
    for b in sorted(payouts.pending):
        if not ledger.is_live(b) or not ledger.is_finalized(b, depth, threshold):
            continue
        blk = ledger.block(b)
        vp = verification_payouts(ledger, b, payouts.schedule)
        s = Settlement(b, blk.producer, payouts.pool.reward(blk.tx), vp.total)
        payouts.accrued[blk.producer] = payouts.accrued.get(blk.producer, Fraction(0)) + s.amount
        payouts.settled[b] = s
        newly.append(b)
    payouts.pending.difference_update(newly)
    return newly
