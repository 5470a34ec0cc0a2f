"""Self-check suites surfaced by the `verify` CLI command.

Each check exercises one of the library's core contracts at desk scale and
returns a (name, passed, detail) row.  The fast level keeps models at n <= 12
and finishes in seconds; the full level raises sizes to n <= 16 and adds the
statistical checks (hash uniformity, randomized query coverage).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gf2
from .estimator import adawish_from_oracle, sandwich_bounds, wish_from_oracle
from .logspace import LN2
from .model import (
    WeightedModel,
    exact_log_partition,
    exact_quantiles,
    gen_clique_ising,
    gen_grid_ising,
)
from .optbench import compute_opt, gen_adversarial_pair, regret_bound, synthetic_oracle
from .oracle import (
    MapSolver,
    OracleConfig,
    QueryLedger,
    XorOracle,
    map_solve,
    sample_parity_system,
)
from .seeds import rng_from


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _mixed_models(count: int, max_n: int, seed: int) -> list[WeightedModel]:
    rng = np.random.default_rng(seed)
    models = []
    for k in range(count):
        kind = k % 3
        if kind == 0:
            n = int(rng.integers(4, min(10, max_n) + 1))
            models.append(gen_clique_ising(n, coupling_w=0.1, seed=int(rng.integers(0, 2**31))))
        elif kind == 1:
            rows = int(rng.integers(2, 4))
            cols = int(rng.integers(2, max(3, max_n // rows) + 1))
            while rows * cols > max_n:
                cols -= 1
            models.append(gen_grid_ising(rows, cols, coupling_w=float(rng.uniform(0.2, 1.5)), seed=int(rng.integers(0, 2**31))))
        else:
            models.append(_random_factor_model(int(rng.integers(4, max_n + 1)), rng))
    return models


def _random_factor_model(n: int, rng: np.random.Generator) -> WeightedModel:
    from .model import Factor

    n_factors = int(rng.integers(n, 2 * n + 1))
    factors = []
    for _ in range(n_factors):
        arity = int(rng.integers(1, min(3, n) + 1))
        scope = tuple(int(v) for v in rng.choice(n, size=arity, replace=False))
        table = rng.normal(0.0, 1.5, size=1 << arity)
        factors.append(Factor(scope, table))
    return WeightedModel(n, tuple(factors), name=f"random-n{n}")


def check_gf2_counts(trials: int = 25, seed: int = 11) -> CheckResult:
    """Rank-based solution counts match brute-force enumeration."""
    rng = np.random.default_rng(seed)
    for t in range(trials):
        n = int(rng.integers(1, 9))
        m = int(rng.integers(0, n + 2))
        system = sample_parity_system(n, m, rng)
        reduced = gf2.row_reduce(system)
        brute = sum(1 for x in range(1 << n) if gf2.satisfies(system, x))
        if brute != reduced.solution_count:
            return CheckResult("gf2 solution counts", False, f"trial {t}: {brute} != {reduced.solution_count}")
    return CheckResult("gf2 solution counts", True, f"{trials} random systems")


def check_sandwich(models: list[WeightedModel]) -> CheckResult:
    """Quantile-derived bounds bracket the exact integral within a factor 2."""
    tol = 1e-9
    for model in models:
        log_w = exact_log_partition(model)
        lo, up = sandwich_bounds(exact_quantiles(model))
        if not (lo <= log_w + tol and log_w <= up + tol and up <= lo + LN2 + tol):
            return CheckResult("quantile sandwich", False, model.name)
    return CheckResult("quantile sandwich", True, f"{len(models)} models")


def check_schedules(models: list[WeightedModel], betas=(1.1, 2.0, 10.0)) -> CheckResult:
    """Exact-oracle schedules land within their approximation factors."""
    tol = 1e-9
    for model in models:
        curve = exact_quantiles(model)
        log_w = exact_log_partition(model)
        full = wish_from_oracle(synthetic_oracle(curve, "exact"))
        if abs(full.log_w - log_w) > LN2 + tol:
            return CheckResult("schedule accuracy", False, f"{model.name}: full sweep off")
        for beta in betas:
            adaptive = adawish_from_oracle(synthetic_oracle(curve, "exact"), beta)
            if abs(adaptive.log_w - log_w) > math.log(2 * beta) + tol:
                return CheckResult("schedule accuracy", False, f"{model.name}: beta={beta}")
            if adaptive.ledger.distinct_queries > model.n + 1:
                return CheckResult("schedule accuracy", False, f"{model.name}: query budget")
    return CheckResult("schedule accuracy", True, f"{len(models)} models x {len(betas)} betas")


def check_regret(n_curves: int = 30, n: int = 64, beta: float = 2.0, seed: int = 5) -> CheckResult:
    """Adaptive query counts stay within the greedy-OPT regret budget."""
    from .optbench import gen_geometric_curve, gen_kvalued_curve

    rng = np.random.default_rng(seed)
    for t in range(n_curves):
        if t % 2 == 0:
            k = int(rng.integers(2, 6))
            bps = sorted(rng.choice(np.arange(1, n), size=k - 1, replace=False).tolist())
            vals = np.cumsum(-rng.uniform(1.0, 12.0, size=k)) + 40.0
            curve = gen_kvalued_curve(n, vals.tolist(), bps)
        else:
            curve = gen_geometric_curve(n, float(rng.uniform(1.01, 4.0)))
        result = adawish_from_oracle(synthetic_oracle(curve, "exact"), beta)
        opt = compute_opt(curve, 2 * beta, "greedy")
        budget = regret_bound(opt.opt_size, n)
        if result.ledger.distinct_queries > budget:
            return CheckResult("regret budget", False, f"curve {t}: {result.ledger.distinct_queries} > {budget}")
    return CheckResult("regret budget", True, f"{n_curves} curves at n={n}")


def check_adversarial_stub(n_curves: int = 10, beta: float = 2.0, seed: int = 7) -> CheckResult:
    """Worst-case neighbor answers keep the output within 2^(2c) * beta."""
    from .optbench import gen_geometric_curve

    rng = np.random.default_rng(seed)
    for t in range(n_curves):
        n = int(rng.integers(8, 33))
        curve = gen_geometric_curve(n, float(rng.uniform(1.0, 3.0)), top=float(rng.uniform(-2, 2)))
        implied, _ = sandwich_bounds(curve)
        for c in (2, 3):
            for policy in ("always_upper", "always_lower", "seeded"):
                oracle = synthetic_oracle(curve, "neighbor-stub", c=c, policy=policy, seed=t)
                result = adawish_from_oracle(oracle, beta)
                bound = 2 * c * LN2 + math.log(beta) + 1e-9
                if abs(result.log_w - implied) > bound:
                    return CheckResult("adversarial stub", False, f"curve {t} c={c} {policy}")
    return CheckResult("adversarial stub", True, f"{n_curves} curves, both c, all policies")


def check_adversarial_pair() -> CheckResult:
    """Block sums of the lower-bound construction match the closed forms."""
    prev_ratio = 0.0
    for n in (64, 256, 1024):
        pair = gen_adversarial_pair(n, 2.0)
        for brute, closed in (
            (pair.w1_brute_force, pair.w1_closed_form),
            (pair.w2_brute_force, pair.w2_closed_form),
        ):
            if abs(brute - closed) > 1e-9 * abs(closed):
                return CheckResult("adversarial pair", False, f"n={n}")
        ratio = pair.w2_brute_force / pair.w1_brute_force
        if ratio <= prev_ratio or ratio >= 4.0:
            return CheckResult("adversarial pair", False, f"ratio not increasing toward 4 at n={n}")
        prev_ratio = ratio
    return CheckResult("adversarial pair", True, "closed forms match, ratio increasing")


def check_solver_agreement(trials: int = 40, seed: int = 3) -> CheckResult:
    """Branch and bound agrees with solution-space enumeration."""
    rng = np.random.default_rng(seed)
    models = _mixed_models(6, 12, seed)
    for t in range(trials):
        model = models[t % len(models)]
        m = int(rng.integers(0, 7))
        system = sample_parity_system(model.n, m, rng)
        a = map_solve(model, system, MapSolver("enumerate"))
        b = map_solve(model, system, MapSolver("branch_and_bound"))
        same = a.log_value == b.log_value or abs(a.log_value - b.log_value) <= 1e-9
        if a.feasible != b.feasible or not same:
            return CheckResult("solver agreement", False, f"trial {t} on {model.name}")
    return CheckResult("solver agreement", True, f"{trials} constrained instances")


def check_hash_uniformity(samples: int = 20000, seed: int = 17) -> CheckResult:
    """Sampled (A, d) hashes two fixed points uniformly over bucket pairs."""
    n, m = 8, 3
    x1, x2 = 0b10110001, 0b01110010
    rng = rng_from(seed, 0xA5)
    counts = np.zeros((1 << m, 1 << m), dtype=np.int64)
    for _ in range(samples):
        system = sample_parity_system(n, m, rng)
        d = gf2.pack_bits(list(system.rhs))
        h1 = gf2.evaluate(system, x1) ^ d
        h2 = gf2.evaluate(system, x2) ^ d
        counts[h1, h2] += 1
    tv = 0.5 * float(np.abs(counts / samples - 1.0 / counts.size).sum())
    return CheckResult(
        "hash pair uniformity", tv <= 0.03, f"total variation {tv:.4f} over {counts.size} cells"
    )


def check_xor_coverage(seeds: int = 40, threshold: float = 0.8) -> CheckResult:
    """Randomized query medians land between the c-shifted quantiles."""
    model = gen_grid_ising(2, 5, coupling_w=1.0, seed=3)
    curve = exact_quantiles(model)
    n = model.n
    c, reps = 2, 30
    solver = MapSolver("branch_and_bound")
    hits = np.zeros(n + 1, dtype=np.int64)
    for s in range(seeds):
        config = OracleConfig(kind="neighbor", c=c, T=reps, master_seed=s)
        oracle = XorOracle(model, config, solver, QueryLedger())
        for i in range(n + 1):
            m = oracle.query(i)
            if curve[min(i + c, n)] - 1e-12 <= m <= curve[max(i - c, 0)] + 1e-12:
                hits[i] += 1
    freq = hits / seeds
    ok = bool(np.all(freq >= threshold))
    return CheckResult(
        "xor median coverage",
        ok,
        f"min per-index frequency {freq.min():.3f} over {seeds} seeds (threshold {threshold})",
    )


def run_checks(level: str = "fast") -> list[CheckResult]:
    if level not in ("fast", "full"):
        raise ValueError(f"unknown level {level!r}")
    max_n = 12 if level == "fast" else 16
    models = _mixed_models(9 if level == "fast" else 15, max_n, seed=23)
    checks = [
        check_gf2_counts(),
        check_sandwich(models),
        check_schedules(models),
        check_regret(),
        check_adversarial_stub(),
        check_adversarial_pair(),
        check_solver_agreement(),
    ]
    if level == "full":
        checks.append(check_hash_uniformity())
        checks.append(check_xor_coverage())
    return checks
