from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..rewards import as_fraction


@dataclass(frozen=True)
class SelectionGame:
    """One-shot game: m miners with powers pick one of n pooled transactions.

    Rewards are kept sorted non-increasing, so index 0 is the richest
    transaction and ties in best responses go to the larger reward.
    """

    powers: tuple[Fraction, ...]
    rewards: tuple[Fraction, ...]
    delta: Fraction

    def __init__(self, powers: Sequence, rewards: Sequence, delta=None):
        powers = tuple(as_fraction(u) for u in powers)
        rewards = tuple(as_fraction(p) for p in rewards)
        if not powers or not rewards:
            raise ValueError("need at least one miner and one transaction")
        if any(u <= 0 for u in powers):
            raise ValueError("powers must be positive")
        if any(p <= 0 for p in rewards):
            raise ValueError("rewards must be positive")
        if any(a < b for a, b in zip(rewards, rewards[1:])):
            raise ValueError("rewards must be sorted non-increasing")
        spread = rewards[0] / rewards[-1]
        delta = spread if delta is None else as_fraction(delta)
        if delta < 1 or spread > delta:
            raise ValueError(f"reward spread {spread} exceeds delta {delta}")
        object.__setattr__(self, "powers", powers)
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "delta", delta)

    @property
    def m(self) -> int:
        return len(self.powers)

    @property
    def n(self) -> int:
        return len(self.rewards)

    @property
    def max_reward(self) -> Fraction:
        return self.rewards[0]

    def rewards_array(self) -> np.ndarray:
        return np.array([float(p) for p in self.rewards])

    def powers_array(self) -> np.ndarray:
        return np.array([float(u) for u in self.powers])

    def scaled(self, reward_factor=1, power_factor=1) -> "SelectionGame":
        return SelectionGame(
            [u * as_fraction(power_factor) for u in self.powers],
            [p * as_fraction(reward_factor) for p in self.rewards],
            self.delta,
        )

    def record(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "delta": str(self.delta),
            "powers": [str(u) for u in self.powers],
            "rewards": [str(p) for p in self.rewards],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "SelectionGame":
        game = cls(rec["powers"], rec["rewards"], rec.get("delta"))
        if "m" in rec and rec["m"] != game.m or "n" in rec and rec["n"] != game.n:
            raise ValueError("m/n do not match the powers/rewards lists")
        return game

    @classmethod
    def load(cls, path) -> "SelectionGame":
        with open(path) as fh:
            return cls.from_record(json.load(fh))


class StrategyProfile:
    """Mixed strategies, one probability row per miner.

    Rows keep whatever numeric type they were given, so a profile built from
    Fractions gives exact utilities.
    """

    def __init__(self, rows):
        rows = [list(r) for r in (rows.tolist() if isinstance(rows, np.ndarray) else rows)]
        if not rows or len({len(r) for r in rows}) != 1:
            raise ValueError("profile rows must be non-empty and equally long")
        for i, r in enumerate(rows):
            if any(x < 0 for x in r):
                raise ValueError(f"row {i} has a negative probability")
            total = sum(r)
            if isinstance(total, (int, Fraction)):
                ok = total == 1
            else:
                ok = abs(total - 1) <= 1e-12
            if not ok:
                raise ValueError(f"row {i} sums to {total}, not 1")
        self.rows = tuple(tuple(r) for r in rows)

    @classmethod
    def pure(cls, picks: Sequence[int], n: int, exact: bool = True) -> "StrategyProfile":
        one, zero = (Fraction(1), Fraction(0)) if exact else (1.0, 0.0)
        return cls([[one if j == pick else zero for j in range(n)] for pick in picks])

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def n(self) -> int:
        return len(self.rows[0])

    @property
    def exact(self) -> bool:
        return all(isinstance(x, (int, Fraction)) for r in self.rows for x in r)

    def as_array(self) -> np.ndarray:
        return np.array([[float(x) for x in r] for r in self.rows])

    def as_fractions(self) -> "StrategyProfile":
        # Fraction(float) is exact; dividing by the exact row sum removes the
        # sub-1e-12 float drift so each row sums to exactly 1
        rows = []
        for r in self.rows:
            fr = [Fraction(x) for x in r]
            total = sum(fr)
            rows.append([x / total for x in fr])
        return StrategyProfile(rows)

    def with_row(self, i: int, row) -> "StrategyProfile":
        rows = list(self.rows)
        rows[i] = tuple(row)
        return StrategyProfile(rows)

    def column_sums(self) -> list:
        return [sum(r[j] for r in self.rows) for j in range(self.n)]

    def __eq__(self, other):
        return isinstance(other, StrategyProfile) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        return f"StrategyProfile({[list(map(str, r)) for r in self.rows]})"


def check_compatible(game: SelectionGame, profile: StrategyProfile) -> None:
    if profile.m != game.m or profile.n != game.n:
        raise ValueError(f"profile is {profile.m}x{profile.n} but the game is {game.m}x{game.n}")
