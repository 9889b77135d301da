"""Brute-force reference implementations used to cross-check the fast paths.

Nothing here shares code with :mod:`dagsim.ledger` queries beyond reading the
raw parent lists.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction


def parent_map(ledger) -> dict:
    return {b: tuple(dict.fromkeys(ledger.blocks[b].refs)) for b in ledger.blocks}


def all_path_lengths(parents: dict) -> dict:
    """Every directed path length between every pair.

    Returns ``{(ancestor, descendant): set of path lengths}``. Path-length
    sets are memoised per block instead of walking paths one by one, but the
    result still covers every path, not only shortest ones.
    """
    memo: dict = {}

    def above(b):
        if b not in memo:
            acc: dict = {}
            for p in parents[b]:
                acc.setdefault(p, set()).add(1)
                for a, ls in above(p).items():
                    acc.setdefault(a, set()).update(l + 1 for l in ls)
            memo[b] = acc
        return memo[b]

    lengths = {}
    for b in sorted(parents):
        for a, ls in above(b).items():
            lengths[(a, b)] = ls
    return lengths


def distances(parents: dict) -> dict:
    """Shortest path length for every connected ordered pair, plus zeros on the diagonal."""
    out = {(a, b): min(ls) for (a, b), ls in all_path_lengths(parents).items()}
    for b in parents:
        out[(b, b)] = 0
    return out


def distance(dist: dict, a, b):
    return dist.get((a, b), math.inf)


def ancestors_at(dist: dict, b, k: int) -> set:
    return {a for (a, d), v in dist.items() if d == b and v == k and a != b}


def descendants_at(dist: dict, b, k: int) -> set:
    return {d for (a, d), v in dist.items() if a == b and v == k and a != d}


def leaves(parents: dict, abandoned=frozenset()) -> set:
    live = {b for b in parents if b not in abandoned}
    referenced = {p for b in live for p in parents[b]}
    return live - referenced


def reachable_from(parents: dict, b) -> set:
    """Descendants of ``b``: every block with a parent chain reaching ``b``."""
    out = set()
    for x in parents:
        stack = list(parents[x])
        seen = set()
        while stack:
            y = stack.pop()
            if y == b:
                out.add(x)
                break
            if y not in seen:
                seen.add(y)
                stack.extend(parents[y])
    return out


def verification_credits(ledger, b, parts, abandoned=frozenset()) -> dict:
    """``{(source, depth): amount}`` credited to ``b`` from the path-enumeration distances."""
    dist = distances(parent_map(ledger))
    out = {}
    for k, part in enumerate(parts, 1):
        for x in ancestors_at(dist, b, k):
            share = len(descendants_at(dist, x, k) - set(abandoned))
            out[(x, k)] = Fraction(part) / share
    return out


def subset_marginals(powers, rows, i):
    """Per-transaction value of miner ``i`` picking it, by enumerating every joint pick of the others.

    Enumerates all n**(m-1) opponent pick vectors, so tiny games only.
    """
    m, n = len(rows), len(rows[0])
    others = [h for h in range(m) if h != i]
    totals = [0] * n
    for picks in itertools.product(range(n), repeat=len(others)):
        prob = 1
        for h, j in zip(others, picks):
            prob = prob * rows[h][j]
        if prob == 0:
            continue
        for j in range(n):
            contest = powers[i] + sum(powers[h] for h, pj in zip(others, picks) if pj == j)
            totals[j] = totals[j] + prob * Fraction(powers[i]) / contest
    return totals
