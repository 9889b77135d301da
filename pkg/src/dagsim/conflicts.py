"""Largest-weighted-descendants (LWD) resolution of conflicting blocks."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .ledger import BlockId, DagLedger, LedgerError, atomic_write_text


class ConflictError(LedgerError):
    pass


@dataclass(frozen=True)
class ConflictDecision:
    round: int
    winner: BlockId
    loser: BlockId
    winner_weight: int
    loser_weight: int
    abandoned: frozenset

    def record(self) -> dict:
        return {
            "round": self.round,
            "winner": self.winner.index,
            "loser": self.loser.index,
            "winner_weight": self.winner_weight,
            "loser_weight": self.loser_weight,
            "abandoned": sorted(b.index for b in self.abandoned),
        }


def register_conflict(ledger: DagLedger, b: BlockId, b2: BlockId) -> None:
    if b == b2:
        raise ConflictError("a block cannot conflict with itself")
    for x in (b, b2):
        ledger.block(x)
        if x in ledger.abandoned:
            raise ConflictError(f"block {x} is already abandoned")
    pair = frozenset((b, b2))
    if pair in ledger.conflicts or pair in ledger.resolved:
        raise ConflictError(f"conflict {sorted(pair)} already registered")
    ledger.conflicts.add(pair)


def weight(ledger: DagLedger, b: BlockId) -> int:
    """Unit block weights: the number of live descendants."""
    return len(ledger.all_descendants(b, live=True))


def resolve_conflict(ledger: DagLedger, b: BlockId, b2: BlockId) -> ConflictDecision:
    """Keep the block with more live descendants; abandon the other and everything below it.

    Ties go to the smaller block id.
    """
    pair = frozenset((b, b2))
    if pair in ledger.resolved:
        raise ConflictError(f"conflict {sorted(pair)} already resolved")
    if pair not in ledger.conflicts:
        raise ConflictError(f"{b} and {b2} are not a registered conflicting pair")
    if b in ledger.abandoned or b2 in ledger.abandoned:
        raise ConflictError("one side of the conflict was abandoned by an earlier resolution")
    wb, wb2 = weight(ledger, b), weight(ledger, b2)
    if (wb, -b.index) > (wb2, -b2.index):
        winner, loser, ww, wl = b, b2, wb, wb2
    else:
        winner, loser, ww, wl = b2, b, wb2, wb
    dropped = frozenset({loser} | ledger.all_descendants(loser))
    ledger.abandon(dropped)
    ledger.conflicts.discard(pair)
    ledger.resolved.add(pair)
    return ConflictDecision(ledger.current_round, winner, loser, ww, wl, dropped)


def resolve_all(ledger: DagLedger) -> list[ConflictDecision]:
    """Resolve open conflicts oldest-first, skipping pairs already decided by an abandonment."""
    decisions = []
    for pair in sorted(ledger.conflicts, key=lambda p: sorted(p)):
        x, y = sorted(pair)
        if pair not in ledger.conflicts:
            continue
        if x in ledger.abandoned or y in ledger.abandoned:
            ledger.conflicts.discard(pair)
            ledger.resolved.add(pair)
            continue
        decisions.append(resolve_conflict(ledger, x, y))
    return decisions


def write_decision_log(decisions, path) -> None:
    atomic_write_text(path, "".join(json.dumps(d.record(), sort_keys=True) + "\n" for d in decisions))
