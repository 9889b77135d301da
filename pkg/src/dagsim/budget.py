"""Verification-budget feasibility: can a node verify its share within the finality delay?"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .rewards import as_fraction


@dataclass(frozen=True)
class BudgetQuery:
    alpha: Fraction
    throughput: Fraction
    delay: Fraction
    verify_time: Fraction

    def __init__(self, alpha, throughput, delay, verify_time):
        vals = [as_fraction(x) for x in (alpha, throughput, delay, verify_time)]
        if any(v <= 0 for v in vals):
            raise ValueError("all budget inputs must be positive")
        if vals[0] > 1:
            raise ValueError("alpha must lie in (0, 1]")
        for name, v in zip(("alpha", "throughput", "delay", "verify_time"), vals):
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class BudgetVerdict:
    required: Fraction
    capacity: Fraction

    @property
    def feasible(self) -> bool:
        return self.required <= self.capacity

    def record(self) -> dict:
        return {"required": str(self.required), "capacity": str(self.capacity), "feasible": self.feasible}


def budget_check(q: BudgetQuery) -> BudgetVerdict:
    """Required verifications alpha*n_b against capacity delay/verify_time."""
    return BudgetVerdict(q.alpha * q.throughput, q.delay / q.verify_time)


@dataclass(frozen=True)
class Threshold:
    last_feasible: int  # 0 if even m = 1 is infeasible
    first_infeasible: int | None  # None if never infeasible up to the search cap


def infeasibility_threshold(alpha, delay, verify_time,
                            throughput: Callable[[int], object] = lambda m: m,
                            cap: int = 1 << 62) -> Threshold:
    """Smallest node count m whose throughput makes the budget infeasible.

    ``throughput`` must be non-decreasing in m. Exact rational arithmetic.
    """

    def feasible(m: int) -> bool:
        return budget_check(BudgetQuery(alpha, throughput(m), delay, verify_time)).feasible

    if not feasible(1):
        return Threshold(0, 1)
    lo, hi = 1, 2
    while feasible(hi):
        if hi >= cap:
            return Threshold(cap, None)
        lo, hi = hi, min(2 * hi, cap)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return Threshold(lo, hi)
