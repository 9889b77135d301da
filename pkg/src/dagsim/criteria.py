"""The acceptance battery: one function per criterion, pinned seeds, two suite sizes.

Each criterion returns a :class:`CriterionResult` whose ``details`` are plain
JSON values, so a re-run with the same seeds must reproduce them byte for
byte.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import spearmanr

from . import oracles
from .budget import infeasibility_threshold, budget_check, BudgetQuery
from .conflicts import register_conflict, resolve_conflict
from .leaves import (
    GrowthConfig,
    WalkSpec,
    expected_referenced,
    finality_sweep,
    referenced_bracket,
    referenced_draws,
    run_growth,
    survival_curve,
    walk_survival,
)
from .ledger import DagLedger
from .rewards import make_schedule, verification_payouts
from .selection import (
    SelectionGame,
    StrategyProfile,
    brute_force_nash,
    distinct_count,
    exact_regrets,
    exact_utility,
    fairness_check,
    find_equilibrium,
    lemma_ineq_check,
    mc_utility,
    random_instance,
)


@dataclass
class CriterionResult:
    key: str
    title: str
    passed: bool
    details: dict

    def summary_record(self) -> str:
        return json.dumps({"key": self.key, "passed": self.passed, "details": self.details}, sort_keys=True)


PINNED_SEEDS = {
    "dag_oracle": 101,
    "reward_conservation": 202,
    "utility_oracle": 303,
    "equilibrium_soundness": 404,
    "throughput": 505,
    "fairness": 606,
    "lemma_ineq": 707,
    "leaf_bound": 808,
    "referenced_mean": 909,
    "walk_limit": 1010,
    "finality_scaling": 1111,
    "budget_threshold": 1212,
}

SUITES = {
    "full": {
        "dag_oracle": {"dags": 200, "max_blocks": 30},
        "reward_conservation": {"dags": 100, "max_blocks": 30},
        "utility_oracle": {"games": 50, "max_miners": 6, "mc_samples": 20000},
        "equilibrium_soundness": {"games": 40, "grid": 10},
        "throughput": {"miners": [5, 10, 15, 20], "seeds": 50, "trials": 400},
        "fairness": {"equilibria": 100},
        "lemma_ineq": {"instances": 500, "n_max": 12, "m_max": 30},
        "leaf_bound": {"s": [4, 16, 64], "rounds": 5000, "seeds": 20},
        "referenced_mean": {"s": [4, 16], "multiples": [4, 8], "draws": 10000},
        "walk_limit": {"p": [0.7, 0.9], "horizon": 10000, "trials": 100000,
                       "low_p": 0.4, "low_horizons": [100, 1000, 10000]},
        "finality_scaling": {"s": [4, 16, 64], "trials": 200, "c": 4.0},
        "budget_threshold": {"cases": [["1/10", "1", "1/100"], ["1/3", "2", "1/7"], ["1", "5", "1/20"], ["7/10", "3", "1/1000"]]},
    },
    "fast": {
        "dag_oracle": {"dags": 30, "max_blocks": 20},
        "reward_conservation": {"dags": 20, "max_blocks": 20},
        "utility_oracle": {"games": 10, "max_miners": 4, "mc_samples": 5000},
        "equilibrium_soundness": {"games": 10, "grid": 6},
        "throughput": {"miners": [5, 10, 15, 20], "seeds": 5, "trials": 200},
        "fairness": {"equilibria": 20},
        "lemma_ineq": {"instances": 60, "n_max": 10, "m_max": 30},
        "leaf_bound": {"s": [4, 16], "rounds": 1000, "seeds": 3},
        "referenced_mean": {"s": [4, 16], "multiples": [4, 8], "draws": 10000},
        "walk_limit": {"p": [0.7, 0.9], "horizon": 2000, "trials": 20000,
                       "low_p": 0.4, "low_horizons": [100, 1000, 2000]},
        "finality_scaling": {"s": [4, 16, 64], "trials": 40, "c": 4.0},
        "budget_threshold": {"cases": [["1/10", "1", "1/100"]]},
    },
}


def _f(x: float) -> float:
    """Round floats for stable, readable records."""
    return float(f"{x:.12g}")


# -- random instance generators ------------------------------------------

def random_dag(rng: np.random.Generator, n_blocks: int) -> DagLedger:
    """Genesis plus blocks each referencing two distinct random earlier live blocks."""
    ledger = DagLedger.with_genesis()
    for i in range(1, n_blocks):
        if i == 1:
            refs = (ledger.genesis, ledger.genesis)
        else:
            a, b = rng.choice(i, size=2, replace=False)
            refs = (ledger.by_index(int(a)), ledger.by_index(int(b)))
        ledger.append_block(refs, f"tx{i}", f"miner{int(rng.integers(0, 5))}", i)
    return ledger


def random_rational_row(rng: np.random.Generator, n: int, denom: int = 12) -> list[Fraction]:
    cuts = sorted(int(x) for x in rng.integers(0, denom + 1, size=n - 1))
    edges = [0] + cuts + [denom]
    return [Fraction(edges[j + 1] - edges[j], denom) for j in range(n)]


def random_game(rng: np.random.Generator, m: int, n: int, delta: int = 3, max_power: int = 4) -> SelectionGame:
    powers = [int(x) for x in rng.integers(1, max_power + 1, size=m)]
    low = Fraction(int(rng.integers(1, 10)))
    rewards = sorted((low * Fraction(int(rng.integers(10, 10 * delta + 1)), 10) for _ in range(n)), reverse=True)
    return SelectionGame(powers, rewards, delta)


# -- criteria ------------------------------------------------------------

def dag_oracle(cfg: dict, seed: int) -> CriterionResult:
    rng = np.random.default_rng(seed)
    mismatches = 0
    checks = 0
    for _ in range(cfg["dags"]):
        ledger = random_dag(rng, int(rng.integers(2, cfg["max_blocks"] + 1)))
        parents = oracles.parent_map(ledger)
        dist = oracles.distances(parents)
        blocks = list(ledger)
        max_k = len(blocks)
        for a in blocks:
            for b in blocks:
                checks += 1
                mismatches += ledger.distance(a, b) != oracles.distance(dist, a, b)
            for k in range(1, max_k + 1):
                checks += 2
                mismatches += ledger.ancestors_at(a, k) != oracles.ancestors_at(dist, a, k)
                mismatches += ledger.descendants_at(a, k) != oracles.descendants_at(dist, a, k)
            checks += 1
            mismatches += ledger.all_descendants(a) != oracles.reachable_from(parents, a)
        checks += 1
        mismatches += ledger.leaf_set() != oracles.leaves(parents)
    return CriterionResult("dag_oracle", "DAG queries match brute-force path enumeration",
                           mismatches == 0, {"dags": cfg["dags"], "checks": checks, "mismatches": mismatches})


def reward_conservation(cfg: dict, seed: int) -> CriterionResult:
    rng = np.random.default_rng(seed)
    layers = 0
    violations = 0
    for d in range(cfg["dags"]):
        ledger = random_dag(rng, int(rng.integers(3, cfg["max_blocks"] + 1)))
        if d % 2 == 1 and len(ledger) > 3:
            x, y = (ledger.by_index(int(i)) for i in rng.choice(np.arange(1, len(ledger)), size=2, replace=False))
            register_conflict(ledger, x, y)
            resolve_conflict(ledger, x, y)
        for depth in (1, 2, 3):
            schedule = make_schedule(Fraction(int(rng.integers(1, 50)), int(rng.integers(1, 7))), depth)
            emitted = defaultdict(Fraction)
            for b in ledger:
                if not ledger.is_live(b):
                    continue
                for c in verification_payouts(ledger, b, schedule).credits:
                    emitted[(c.source, c.depth)] += c.amount
            for x in ledger:
                if not ledger.is_live(x):
                    continue
                for k in range(1, depth + 1):
                    if ledger.descendants_at(x, k, live=True):
                        layers += 1
                        violations += emitted.get((x, k), Fraction(0)) != schedule.part(k)
                    else:
                        violations += (x, k) in emitted
    return CriterionResult("reward_conservation", "Per-depth verification credits sum to vrf_k exactly",
                           violations == 0, {"dags": cfg["dags"], "layers": layers, "violations": violations})


def utility_oracle(cfg: dict, seed: int) -> CriterionResult:
    rng = np.random.default_rng(seed)
    affine_fail = 0
    mc_fail = 0
    worst_z = 0.0
    for g in range(cfg["games"]):
        m = int(rng.integers(1, cfg["max_miners"] + 1))
        n = int(rng.integers(1, 5))
        game = random_game(rng, m, n)
        rows = [random_rational_row(rng, n) for _ in range(m)]
        i = int(rng.integers(0, m))
        r1, r2 = random_rational_row(rng, n), random_rational_row(rng, n)
        u1 = exact_utility(game, StrategyProfile(rows).with_row(i, r1), i)
        u2 = exact_utility(game, StrategyProfile(rows).with_row(i, r2), i)
        for lam in (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(1)):
            mixed = [lam * a + (1 - lam) * b for a, b in zip(r1, r2)]
            u = exact_utility(game, StrategyProfile(rows).with_row(i, mixed), i)
            affine_fail += u != lam * u1 + (1 - lam) * u2
        prof = StrategyProfile(rows)
        exact = float(exact_utility(game, prof, i))
        est = mc_utility(game, prof, i, cfg["mc_samples"], seed=seed * 1000 + g)
        if est.stderr == 0:
            mc_fail += abs(est.mean - exact) > 1e-12 * max(1.0, abs(exact))
        else:
            z = abs(est.mean - exact) / est.stderr
            worst_z = max(worst_z, z)
            mc_fail += z > 4
    return CriterionResult("utility_oracle", "Utility is affine in own row; Monte Carlo agrees with enumeration",
                           affine_fail == 0 and mc_fail == 0,
                           {"games": cfg["games"], "affine_failures": affine_fail, "mc_failures": mc_fail,
                            "worst_z": _f(worst_z)})


def equilibrium_soundness(cfg: dict, seed: int) -> CriterionResult:
    rng = np.random.default_rng(seed)
    converged = 0
    bad = 0
    worst = 0.0
    for g in range(cfg["games"]):
        game = random_game(rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)))
        rep = find_equilibrium(game, eps=1e-6, seed=seed * 100 + g)
        if not rep.converged:
            continue
        converged += 1
        limit = Fraction(1, 10**6) * game.max_reward
        regs = exact_regrets(game, rep.profile)
        worst = max(worst, float(max(regs) / game.max_reward))
        bad += max(regs) > limit
    sym = SelectionGame([1, 1], [1, 1])
    found = {prof for prof, _ in brute_force_nash(sym, grid=cfg["grid"])}
    anti = {StrategyProfile([[1.0, 0.0], [0.0, 1.0]]), StrategyProfile([[0.0, 1.0], [1.0, 0.0]])}
    recovered = anti <= found
    return CriterionResult("equilibrium_soundness", "Converged equilibria have exact regret <= 1e-6 max p; brute force finds both anti-coordination profiles",
                           bad == 0 and converged > 0 and recovered,
                           {"games": cfg["games"], "converged": converged, "violations": bad,
                            "worst_relative_regret": _f(worst), "anti_coordination_recovered": recovered})


def throughput(cfg: dict, seed: int) -> CriterionResult:
    means = []
    per_m = {}
    ok = True
    for m in cfg["miners"]:
        rng = np.random.default_rng([seed, m])
        vals = []
        for t in range(cfg["seeds"]):
            powers = [int(x) for x in rng.integers(1, 5, size=m)]
            game = SelectionGame(powers, [1] * (2 * m), 1)
            rep = find_equilibrium(game, eps=1e-6, seed=seed + 1000 * m + t)
            if rep.converged:
                vals.append(distinct_count(game, rep.profile, cfg["trials"], seed=seed + 7 * t + m).mean)
        mean = float(np.mean(vals)) if vals else 0.0
        means.append(mean)
        per_m[str(m)] = {"converged": len(vals), "mean_distinct": _f(mean), "floor": 0.3 * m}
        ok &= bool(vals) and mean >= 0.3 * m
    rho = float(spearmanr(cfg["miners"], means).statistic) if len(set(means)) > 1 else 0.0
    ok &= rho > 0.9
    return CriterionResult("throughput", "Distinct blocks at equilibrium >= 0.3 m and increasing in m",
                           ok, {"per_m": per_m, "spearman": _f(rho)})


def _fairness_game(rng: np.random.Generator, delta: int, crowded: bool) -> SelectionGame:
    if crowded:
        n = int(rng.integers(2, 4))
        m = 12 * delta * n + int(rng.integers(0, 10))
        powers = [1] * m
    else:
        n = int(rng.integers(2, 7))
        m = int(rng.integers(2, 31))
        powers = [int(x) for x in rng.integers(1, 4, size=m)]
    rewards = sorted((Fraction(int(rng.integers(10, 10 * delta + 1)), 10) for _ in range(n)), reverse=True)
    return SelectionGame(powers, rewards, delta)


def fairness(cfg: dict, seed: int) -> CriterionResult:
    rng = np.random.default_rng(seed)
    target = cfg["equilibria"]
    converged = triggered = violations = attempts = 0
    by_delta = defaultdict(int)
    while converged < target and attempts < 4 * target:
        delta = (1, 2, 5)[attempts % 3]
        game = _fairness_game(rng, delta, crowded=attempts % 4 == 0)
        eps = 1e-6
        rep = find_equilibrium(game, eps=eps, seed=seed + attempts)
        attempts += 1
        if not rep.converged:
            continue
        converged += 1
        by_delta[str(delta)] += 1
        report = fairness_check(rep.profile, game.delta, eps=eps)
        triggered += report.triggered
        violations += not report.holds
    return CriterionResult("fairness", "No equilibrium has a 12-delta-heavy column alongside a column below 1/2",
                           violations == 0 and converged >= target,
                           {"equilibria": converged, "attempts": attempts, "triggered": triggered,
                            "violations": violations, "by_delta": dict(sorted(by_delta.items()))})


def lemma_ineq(cfg: dict, seed: int) -> CriterionResult:
    rng = np.random.default_rng(seed)
    fails = 0
    tight = 0.0
    failing = []
    for _ in range(cfg["instances"]):
        inst = random_instance(rng, cfg["n_max"], cfg["m_max"])
        res = lemma_ineq_check(inst)
        if not res.holds:
            fails += 1
            failing.append({"n": len(inst.a), "k": inst.k, "delta": str(inst.delta), "m": inst.m,
                            "lhs": str(res.lhs), "rhs": _f(res.rhs)})
        if res.rhs > 0:
            tight = max(tight, float(res.lhs) / res.rhs)
    return CriterionResult("lemma_ineq", "k-subset power sums stay below e^k zeta^(m-k)",
                           fails == 0, {"instances": cfg["instances"], "failures": fails, "max_lhs_over_rhs": _f(tight),
                                         "failing": failing})


def leaf_bound(cfg: dict, seed: int) -> CriterionResult:
    rows = {}
    ok = True
    for s in cfg["s"]:
        worst = 0.0
        identity = True
        peak = 0
        for t in range(cfg["seeds"]):
            trace = run_growth(GrowthConfig(s, cfg["rounds"], seed), trial=1000 * s + t)
            worst = max(worst, trace.fraction_above(5 * s))
            identity &= bool(trace.bookkeeping_holds().all())
            peak = max(peak, int(trace.leaf_sizes.max()))
        rows[str(s)] = {"worst_fraction_above_5s": _f(worst), "bookkeeping": identity, "max_leaves": peak}
        ok &= worst < 0.01 and identity
    return CriterionResult("leaf_bound", "Leaf set stays within 5s on > 99% of rounds; bookkeeping exact",
                           ok, rows)


def referenced_mean(cfg: dict, seed: int) -> CriterionResult:
    rows = {}
    ok = True
    for s in cfg["s"]:
        for mult in cfg["multiples"]:
            L = mult * s
            x = referenced_draws(L, s, cfg["draws"], seed=seed + L * 31 + s)
            mean = float(x.mean())
            se = float(x.std(ddof=1) / math.sqrt(len(x)))
            exp = float(expected_referenced(L, s))
            lo, hi = referenced_bracket(L, s)
            z = abs(mean - exp) / se
            inside = float(lo) <= mean <= float(hi)
            rows[f"s={s},L={L}"] = {"mean": _f(mean), "expected": _f(exp), "z": _f(z),
                                    "bracket": [_f(float(lo)), _f(float(hi))], "inside": inside}
            ok &= z <= 4 and inside
    return CriterionResult("referenced_mean", "Mean referenced leaves matches L - L(1-2/L)^s and the 2s bracket",
                           ok, rows)


def walk_limit(cfg: dict, seed: int) -> CriterionResult:
    rows = {}
    ok = True
    for p in cfg["p"]:
        est = walk_survival(WalkSpec(p, cfg["horizon"]), cfg["trials"], seed=seed + int(p * 100))
        z = est.z_score()
        rows[f"p={p}"] = {"survival": _f(est.survival), "limit": _f(est.limit), "stderr": _f(est.stderr), "z": _f(z)}
        ok &= abs(z) <= 3
    curve = survival_curve(cfg["low_p"], cfg["low_horizons"], cfg["trials"], seed=seed + 40)
    decreasing = all(a >= b for a, b in zip(curve, curve[1:])) and curve[0] > curve[-1]
    rows[f"p={cfg['low_p']}"] = {"horizons": cfg["low_horizons"], "survival": [_f(c) for c in curve],
                                 "decreasing": decreasing}
    ok &= decreasing
    return CriterionResult("walk_limit", "Walk survival matches (p-q)/p; vanishes for p < q", ok, rows)


def finality_scaling(cfg: dict, seed: int) -> CriterionResult:
    sweep = finality_sweep(cfg["s"], c=cfg["c"], trials=cfg["trials"], seed=seed)
    ratios = [r.median_blocks / (r.s * math.log2(r.s)) for r in sweep]
    c_fit = math.sqrt(max(ratios) * min(ratios))
    fit_ok = all(c_fit / 2 <= x <= 2 * c_fit for x in ratios)
    cover_ok = all(r.fraction_covered >= 0.95 for r in sweep)
    details = {"c_fit": _f(c_fit), "fit_within_factor_2": fit_ok,
               "rows": [{**{k: (_f(v) if isinstance(v, float) else v) for k, v in r.record().items()},
                         "ratio": _f(x)} for r, x in zip(sweep, ratios)]}
    return CriterionResult("finality_scaling", "Coverage delay scales as s log s; depth 4 s log2 s covers >= 95%",
                           fit_ok and cover_ok, details)


def budget_threshold(cfg: dict, seed: int) -> CriterionResult:
    rows = []
    ok = True
    for alpha, delay, tau in cfg["cases"]:
        a, c0, t = Fraction(alpha), Fraction(delay), Fraction(tau)
        exact = math.floor(c0 / (t * a))
        th = infeasibility_threshold(a, c0, t)
        probes = [m for m in (exact - 2, exact - 1, exact, exact + 1, exact + 2, 2 * exact + 5) if m >= 1]
        consistent = all(budget_check(BudgetQuery(a, m, c0, t)).feasible == (m <= exact) for m in probes)
        good = th.last_feasible == exact and th.first_infeasible == exact + 1 and consistent
        rows.append({"alpha": alpha, "delay": delay, "verify_time": tau, "threshold": th.last_feasible,
                     "expected": exact, "ok": good})
        ok &= good
    return CriterionResult("budget_threshold", "Budget turns infeasible exactly above c0/(alpha tau)", ok, {"cases": rows})


CRITERIA = [
    ("C01", dag_oracle),
    ("C02", reward_conservation),
    ("C03", utility_oracle),
    ("C04", equilibrium_soundness),
    ("C05", throughput),
    ("C06", fairness),
    ("C07", lemma_ineq),
    ("C08", leaf_bound),
    ("C09", referenced_mean),
    ("C10", walk_limit),
    ("C11", finality_scaling),
    ("C12", budget_threshold),
]


def run_criterion(name: str, suite: str = "full", seeds: dict | None = None) -> CriterionResult:
    seeds = PINNED_SEEDS if seeds is None else seeds
    fn = dict((f.__name__, f) for _, f in CRITERIA)[name]
    return fn(SUITES[suite][name], seeds[name])


@dataclass
class SuiteReport:
    suite: str
    results: list[CriterionResult]
    deterministic: bool | None = None  # None when the re-run was skipped

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results) and self.deterministic is not False

    def rows(self) -> list[dict]:
        out = [{"id": cid, "key": r.key, "passed": r.passed, "title": r.title}
               for (cid, _), r in zip(CRITERIA, self.results)]
        if self.deterministic is not None:
            out.append({"id": "C13", "key": "determinism", "passed": self.deterministic,
                        "title": "Re-running every criterion reproduces its summary record byte for byte"})
        return out

    def table(self) -> str:
        lines = [f"{'id':<4} {'result':<6} criterion"]
        for row in self.rows():
            lines.append(f"{row['id']:<4} {'PASS' if row['passed'] else 'FAIL':<6} {row['key']}: {row['title']}")
        return "\n".join(lines) + "\n"

    def dumps(self) -> str:
        """Deterministic JSONL: one record per criterion (no timings)."""
        return "".join(r.summary_record() + "\n" for r in self.results)


def check_seeds(seeds: dict) -> dict:
    from .config import ConfigError

    missing = [name for _, f in CRITERIA if (name := f.__name__) not in seeds]
    if missing:
        raise ConfigError(f"pinned seeds missing for {missing}")
    bad = [k for k, v in seeds.items() if not isinstance(v, int) or isinstance(v, bool)]
    if bad:
        raise ConfigError(f"seeds must be integers: {bad}")
    return seeds


def reproduce_all(suite: str = "fast", seeds: dict | None = None, *, rerun: bool = True,
                  progress=None) -> SuiteReport:
    """Run the whole battery; with ``rerun`` each criterion runs twice and the records are compared."""
    from .config import ConfigError

    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; expected one of {sorted(SUITES)}")
    seeds = check_seeds(PINNED_SEEDS if seeds is None else seeds)
    results = []
    same = True
    for cid, fn in CRITERIA:
        res = fn(SUITES[suite][fn.__name__], seeds[fn.__name__])
        if rerun:
            again = fn(SUITES[suite][fn.__name__], seeds[fn.__name__])
            same &= again.summary_record() == res.summary_record()
        results.append(res)
        if progress is not None:
            progress(cid, res)
    return SuiteReport(suite, results, same if rerun else None)
