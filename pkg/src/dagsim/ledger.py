"""Reference DAG ledger: blocks, reachability, distance layers and leaves.

References are stored child -> parent. ``distance(a, b)`` counts hops from
``a`` down to ``b``, so ``b`` is a descendant of ``a`` when it is finite and
positive.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Hashable, Iterable, NamedTuple

INFINITE = math.inf


class LedgerError(ValueError):
    """Raised when an operation would violate a ledger invariant."""


class UnknownBlock(LedgerError, KeyError):
    pass


class BlockId(NamedTuple):
    """Creation index plus round stamp; ordering is by creation index."""

    index: int
    round: int

    def __str__(self) -> str:
        return f"b{self.index}@{self.round}"


@dataclass(frozen=True)
class Block:
    id: BlockId
    refs: tuple[BlockId, ...]
    tx: Hashable
    producer: Hashable
    round: int

    @property
    def parents(self) -> tuple[BlockId, ...]:
        # (L, L) in the single-leaf case counts as one parent
        return tuple(dict.fromkeys(self.refs))


class DagLedger:
    """Append-only reference DAG with conflict and abandonment bookkeeping."""

    def __init__(self):
        self.blocks: dict[BlockId, Block] = {}
        self.children: dict[BlockId, list[BlockId]] = {}
        self.abandoned: set[BlockId] = set()
        self.conflicts: set[frozenset] = set()
        self.resolved: set[frozenset] = set()
        self._by_index: list[BlockId] = []
        self._tx_blocks: dict[Hashable, set[BlockId]] = {}
        self._leaves: set[BlockId] = set()
        # leaf set as it stood when the latest round began
        self._snap_round: int | None = None
        self._round_leaves: frozenset = frozenset()

    @classmethod
    def with_genesis(cls, tx: Hashable = "genesis", producer: Hashable = "genesis") -> "DagLedger":
        ledger = cls()
        ledger.append_block((), tx, producer, 0)
        return ledger

    def __len__(self) -> int:
        return len(self.blocks)

    def __contains__(self, b) -> bool:
        return b in self.blocks

    def __iter__(self):
        return iter(self._by_index)

    @property
    def genesis(self) -> BlockId:
        if not self._by_index:
            raise LedgerError("ledger is empty")
        return self._by_index[0]

    @property
    def current_round(self) -> int:
        return self._by_index[-1].round if self._by_index else 0

    def block(self, b: BlockId) -> Block:
        try:
            return self.blocks[b]
        except KeyError:
            raise UnknownBlock(f"unknown block {b!r}") from None

    def by_index(self, index: int) -> BlockId:
        return self._by_index[index]

    def is_live(self, b: BlockId) -> bool:
        return b in self.blocks and b not in self.abandoned

    def blocks_with_tx(self, tx: Hashable) -> set[BlockId]:
        return {b for b in self._tx_blocks.get(tx, ()) if b not in self.abandoned}

    # -- mutation --------------------------------------------------------

    def append_block(
        self,
        refs: Iterable[BlockId],
        tx: Hashable,
        producer: Hashable,
        round: int,
        *,
        allow_conflict: bool = False,
        leaves: Iterable[BlockId] | None = None,
    ) -> BlockId:
        """Append a block referencing two earlier blocks (none for genesis).

        ``leaves`` is the leaf set the producer chose from (default: the
        leaf set at the start of ``round``); a doubled reference is legal
        only if it has exactly one leaf.

        A transaction already carried by a live block is refused unless
        ``allow_conflict`` is set, in which case the clash is registered as
        a conflict pair for later LWD resolution.
        """
        refs = tuple(refs)
        if not self.blocks:
            if refs:
                raise LedgerError("genesis takes no references")
            if round != 0:
                raise LedgerError("genesis is created in round 0")
        else:
            if len(refs) != 2:
                raise LedgerError(f"a block references exactly 2 blocks, got {len(refs)}")
            for r in refs:
                self.block(r)
                if r in self.abandoned:
                    raise LedgerError(f"reference {r} is abandoned")
            if round != self._snap_round:
                self._snap_round, self._round_leaves = round, frozenset(self._leaves)
            seen = self._round_leaves if leaves is None else set(leaves)
            if refs[0] == refs[1] and not (len(seen) == 1 and refs[0] in seen):
                raise LedgerError("both references name the same block but the round began with more than one leaf")
            if round < self.current_round:
                raise LedgerError(f"round {round} precedes the latest round {self.current_round}")
        clashes = self.blocks_with_tx(tx)
        if clashes and not allow_conflict:
            raise LedgerError(f"transaction {tx!r} is already included in {sorted(clashes)}")

        bid = BlockId(len(self._by_index), round)
        block = Block(bid, refs, tx, producer, round)
        self.blocks[bid] = block
        self.children[bid] = []
        self._by_index.append(bid)
        self._tx_blocks.setdefault(tx, set()).add(bid)
        for p in block.parents:
            self.children[p].append(bid)
            self._leaves.discard(p)
        self._leaves.add(bid)
        for other in sorted(clashes):
            self.conflicts.add(frozenset((other, bid)))
        return bid

    def abandon(self, blocks: Iterable[BlockId]) -> None:
        blocks = set(blocks)
        if self._by_index and self.genesis in blocks:
            raise LedgerError("genesis can never be abandoned")
        self.abandoned |= blocks
        self._leaves = {
            b for b in self._by_index
            if b not in self.abandoned and not any(c not in self.abandoned for c in self.children[b])
        }

    # -- queries ---------------------------------------------------------

    def _layers(self, b: BlockId, step, limit: int | None = None):
        """Yield (distance, block) in BFS order following ``step``."""
        self.block(b)
        seen = {b}
        frontier = [b]
        k = 0
        while frontier and (limit is None or k < limit):
            k += 1
            nxt = []
            for x in frontier:
                for y in step(x):
                    if y not in seen:
                        seen.add(y)
                        nxt.append(y)
                        yield k, y
            frontier = nxt

    def _parents(self, b):
        return self.blocks[b].parents

    def _children(self, b):
        return self.children[b]

    def distance(self, a: BlockId, b: BlockId) -> float:
        """Shortest number of hops from ``a`` down to descendant ``b``; ``inf`` if none."""
        self.block(a)
        self.block(b)
        if a == b:
            return 0
        # ancestors of b have smaller creation indices, so stop below a
        for k, x in self._layers(b, lambda y: [p for p in self._parents(y) if p.index >= a.index]):
            if x == a:
                return k
        return INFINITE

    def ancestors_at(self, b: BlockId, k: int) -> set[BlockId]:
        """Blocks at shortest distance exactly ``k`` above ``b``."""
        if k < 1:
            raise ValueError("k must be >= 1")
        return {x for d, x in self._layers(b, self._parents, k) if d == k}

    def descendants_at(self, b: BlockId, k: int, *, live: bool = False) -> set[BlockId]:
        """Blocks at shortest distance exactly ``k`` below ``b``.

        With ``live=True`` abandoned blocks are dropped; since abandonment is
        closed under descendants this does not change any live distance.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        out = {x for d, x in self._layers(b, self._children, k) if d == k}
        return out - self.abandoned if live else out

    def ancestors_within(self, b: BlockId, depth: int) -> set[BlockId]:
        return {x for _, x in self._layers(b, self._parents, depth)}

    def all_descendants(self, b: BlockId, *, live: bool = False) -> set[BlockId]:
        out = {x for _, x in self._layers(b, self._children)}
        return out - self.abandoned if live else out

    def leaf_set(self) -> set[BlockId]:
        """Live blocks without live children."""
        return set(self._leaves)

    def sorted_leaves(self) -> list[BlockId]:
        return sorted(self._leaves)

    def is_finalized(self, b: BlockId, depth: int, threshold: int) -> bool:
        if depth < 1:
            raise ValueError("depth must be >= 1")
        if threshold < 0:
            raise ValueError("threshold must be >= 0")
        self.block(b)
        if b == self.genesis:
            return True
        return len(self.ancestors_within(b, depth)) > threshold

    def check_acyclic(self) -> bool:
        """Every reference points to a strictly earlier block (so a topological order exists)."""
        return all(p.index < b.index for b, blk in self.blocks.items() for p in blk.refs)

    # -- flat-file export ------------------------------------------------

    def records(self) -> list[dict]:
        return [
            {
                "id": b.index,
                "round": b.round,
                "refs": [r.index for r in self.blocks[b].refs],
                "tx": self.blocks[b].tx,
                "producer": self.blocks[b].producer,
            }
            for b in self._by_index
        ]

    def export_jsonl(self, path) -> None:
        lines = "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records())
        atomic_write_text(path, lines)

    @classmethod
    def import_jsonl(cls, path) -> "DagLedger":
        ledger = cls()
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                rec = json.loads(line)
                if rec["id"] != len(ledger):
                    raise LedgerError(f"line {lineno}: ids must be consecutive from 0, got {rec['id']}")
                refs = [ledger.by_index(i) for i in rec["refs"]]
                ledger.append_block(refs, rec["tx"], rec["producer"], rec["round"], allow_conflict=True)
        return ledger


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
