"""Constrained MAP solving and the quantile oracles built on it.

`map_solve` maximises log w(x) subject to parity constraints A x = d (mod 2),
either by enumerating the GF(2) solution space or by depth-first branch and
bound with XOR propagation.  `xor_query` estimates the 2^i-th largest weight
as the median of T constrained maxima under independently sampled random
(A, d) pairs with i rows.

All oracles answer through a QueryLedger that memoises by query index, so a
repeated query is never recomputed and the number of distinct queries can be
audited afterwards.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from . import gf2
from .errors import StructuralError, TooLarge
from .logspace import NEG_INF
from .model import ENUMERATION_LIMIT, QuantileCurve, WeightedModel, exact_quantiles, log_weights_at
from .seeds import mix64, rng_from, unit_from

_ENUM_BLOCK = 1 << 18


# ---------------------------------------------------------------------------
# MAP solving


@dataclass(frozen=True)
class MapSolver:
    """Solver choice and optional search limits.

    Enumeration is exact up to n <= 24.  Branch and bound is exact whenever it
    finishes within the limits; otherwise the incumbent is returned and the
    result is flagged inexact (a lower bound on the true maximum).
    """

    strategy: str = "branch_and_bound"
    node_limit: int | None = None
    time_limit: float | None = None

    def __post_init__(self):
        if self.strategy not in ("branch_and_bound", "enumerate"):
            raise StructuralError(f"unknown strategy {self.strategy!r}")


@dataclass(frozen=True)
class MapResult:
    log_value: float
    assignment: int | None
    exact: bool
    feasible: bool
    nodes: int = 0


def sample_parity_system(n: int, m: int, rng: np.random.Generator) -> gf2.Gf2System:
    """Uniform m x n 0/1 constraint matrix and uniform right-hand side."""
    if m == 0:
        return gf2.Gf2System(n, (), ())
    bits = rng.integers(0, 2, size=(m, n), dtype=np.uint8)
    rows = tuple(
        int.from_bytes(np.packbits(bits[r], bitorder="little").tobytes(), "little")
        for r in range(m)
    )
    rhs = tuple(int(b) for b in rng.integers(0, 2, size=m, dtype=np.uint8))
    return gf2.Gf2System(n, rows, rhs)


def _solve_enumerate(model: WeightedModel, reduced: gf2.ReducedSystem) -> MapResult:
    if model.n > ENUMERATION_LIMIT:
        raise TooLarge(f"enumeration limited to n <= {ENUMERATION_LIMIT}, got {model.n}")
    particular = reduced.particular_solution()
    basis = reduced.null_basis()
    sols = np.array([particular], dtype=np.int64)
    for vec in basis:
        sols = np.concatenate([sols, sols ^ np.int64(vec)])
    best_val = NEG_INF
    best_idx = None
    for start in range(0, sols.size, _ENUM_BLOCK):
        block = sols[start : start + _ENUM_BLOCK]
        w = log_weights_at(model, block)
        k = int(np.argmax(w))
        if w[k] > best_val:
            best_val = float(w[k])
            best_idx = int(block[k])
    return MapResult(best_val, best_idx, exact=True, feasible=True, nodes=int(sols.size))


def _solve_branch_and_bound(
    model: WeightedModel,
    reduced: gf2.ReducedSystem,
    node_limit: int | None,
    time_limit: float | None,
) -> MapResult:
    n = model.n
    # Factors are scored the moment their highest variable is assigned; the
    # optimistic bound for depth d pre-sums the per-factor maxima of all
    # factors not yet scored at d.
    completing: list[list[tuple[tuple[int, ...], np.ndarray]]] = [[] for _ in range(n)]
    const_term = 0.0
    for f in model.factors:
        if f.scope:
            completing[max(f.scope)].append((f.scope, f.log_table))
        else:
            const_term += float(f.log_table[0])
    bound_tail = [0.0] * (n + 1)
    for v in range(n - 1, -1, -1):
        bound_tail[v] = bound_tail[v + 1] + sum(float(np.max(t)) for _, t in completing[v])
    # A reduced row is decided once its highest variable is assigned; in
    # depth-first order over variables 0..n-1 that variable is forced by the
    # earlier ones.
    rows_ending: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for row, b in zip(reduced.rows, reduced.rhs):
        v = row.bit_length() - 1
        rows_ending[v].append((row & ~(1 << v), b))

    best = NEG_INF
    best_assign: int | None = None
    nodes = 0
    exhausted = False
    deadline = time.monotonic() + time_limit if time_limit is not None else None

    def factor_sum(v: int, mask: int) -> float:
        total = 0.0
        for scope, table in completing[v]:
            idx = 0
            for u in scope:
                idx = (idx << 1) | ((mask >> u) & 1)
            total += float(table[idx])
        return total

    def descend(v: int, mask: int, g: float) -> None:
        nonlocal best, best_assign, nodes, exhausted
        if exhausted:
            return
        nodes += 1
        if node_limit is not None and nodes > node_limit:
            exhausted = True
            return
        if deadline is not None and nodes & 0x3FF == 0 and time.monotonic() > deadline:
            exhausted = True
            return
        if v == n:
            if g > best:
                best = g
                best_assign = mask
            return
        if g + bound_tail[v] <= best:
            return
        ending = rows_ending[v]
        if ending:
            need = ending[0][1] ^ ((mask & ending[0][0]).bit_count() & 1)
            for m2, b2 in ending[1:]:
                if b2 ^ ((mask & m2).bit_count() & 1) != need:
                    return
            values = (need,)
        else:
            values = (0, 1)
        for val in values:
            child = mask | (val << v)
            descend(v + 1, child, g + factor_sum(v, child))

    descend(0, 0, const_term)
    return MapResult(
        best,
        best_assign,
        exact=not exhausted,
        feasible=True,
        nodes=nodes,
    )


def map_solve(model: WeightedModel, system: gf2.Gf2System, solver: MapSolver | None = None) -> MapResult:
    """max log w(x) subject to the parity system; empty systems mean unconstrained."""
    if system.cols != model.n:
        raise StructuralError(f"system over {system.cols} columns, model has {model.n} variables")
    solver = solver or MapSolver()
    reduced = gf2.row_reduce(system)
    if not reduced.consistent:
        return MapResult(NEG_INF, None, exact=True, feasible=False)
    if solver.strategy == "enumerate":
        return _solve_enumerate(model, reduced)
    return _solve_branch_and_bound(model, reduced, solver.node_limit, solver.time_limit)


# ---------------------------------------------------------------------------
# Oracle configuration and ledger


@dataclass(frozen=True)
class OracleConfig:
    """Which oracle backs the quantile queries, and its parameters.

    kind "exact" reads the true quantile curve (n <= 24); "pointwise" is the
    exact value under a deterministic multiplicative jitter within
    [1/gamma, gamma]; "neighbor" runs the randomized XOR query.
    """

    kind: str = "neighbor"
    c: int = 5
    T: int | None = None
    delta: float = 0.01
    alpha: float | None = None
    gamma: float = 1.0
    master_seed: int = 0

    def __post_init__(self):
        if self.kind not in ("exact", "pointwise", "neighbor"):
            raise StructuralError(f"unknown oracle kind {self.kind!r}")
        if not 0.0 < self.delta < 1.0:
            raise StructuralError("delta must be in (0, 1)")
        if self.gamma < 1.0:
            raise StructuralError("gamma must be >= 1")
        if self.kind == "neighbor" and self.c < 2:
            raise StructuralError("neighbor oracle needs c >= 2")
        if self.T is not None and self.T < 1:
            raise StructuralError("T must be >= 1")

    def resolved_alpha(self) -> float:
        if self.alpha is not None:
            return self.alpha
        if self.c == 5:
            return 0.078
        raise StructuralError(f"no default alpha for c={self.c}; pass alpha explicitly")

    def repetitions(self, n: int) -> int:
        """T, or its default ceil(ln(1/delta)/alpha * ln n) once n is known."""
        if self.T is not None:
            return self.T
        if n < 2:
            return 1
        return math.ceil(math.log(1.0 / self.delta) / self.resolved_alpha() * math.log(n))


@dataclass
class QueryLedger:
    """Memo table plus counters for auditing oracle traffic.

    distinct_queries only grows when a new index is computed; repeat accesses
    are cache hits.  map_calls counts actual MAP solver invocations.
    guarantee_void flips when any solve came back inexact.
    """

    memo: dict[int, float] = field(default_factory=dict)
    distinct_queries: int = 0
    map_calls: int = 0
    cache_hits: int = 0
    trace: list[tuple[int, int, float]] = field(default_factory=list)
    guarantee_void: bool = False
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def lookup(self, index: int) -> float | None:
        with self._lock:
            if index in self.memo:
                self.cache_hits += 1
                return self.memo[index]
        return None

    def record(self, index: int, value: float, depth: int) -> float:
        with self._lock:
            if index in self.memo:
                # a concurrent computation landed first; keep its value
                self.cache_hits += 1
                return self.memo[index]
            self.memo[index] = value
            self.distinct_queries += 1
            self.trace.append((index, depth, value))
            return value

    def queried_indices(self) -> set[int]:
        return set(self.memo)


# ---------------------------------------------------------------------------
# Quantile oracles


class QuantileOracle:
    """Base: memoised point queries plus index-appropriate lower/upper reads."""

    kind = "abstract"

    def __init__(self, n: int, ledger: QueryLedger | None = None):
        self.n = n
        self.ledger = ledger if ledger is not None else QueryLedger()

    def _compute(self, i: int) -> float:
        raise NotImplementedError

    def query(self, i: int, depth: int = 0) -> float:
        if not 0 <= i <= self.n:
            raise StructuralError(f"query index {i} outside 0..{self.n}")
        hit = self.ledger.lookup(i)
        if hit is not None:
            return hit
        return self.ledger.record(i, self._compute(i), depth)

    def approx(self, i: int, depth: int = 0) -> float:
        return self.query(i, depth)

    def lower(self, i: int, depth: int = 0) -> float:
        return self.query(i, depth)

    def upper(self, i: int, depth: int = 0) -> float:
        return self.query(i, depth)


class ExactCurveOracle(QuantileOracle):
    kind = "exact"

    def __init__(self, curve: QuantileCurve, ledger: QueryLedger | None = None):
        super().__init__(curve.n, ledger)
        self.curve = curve

    def _compute(self, i: int) -> float:
        return self.curve[i]


class PointwiseCurveOracle(QuantileOracle):
    """Exact quantile scaled by a deterministic per-index factor in [1/gamma, gamma]."""

    kind = "pointwise"

    def __init__(
        self,
        curve: QuantileCurve,
        gamma: float,
        master_seed: int = 0,
        ledger: QueryLedger | None = None,
    ):
        if gamma < 1.0:
            raise StructuralError("gamma must be >= 1")
        super().__init__(curve.n, ledger)
        self.curve = curve
        self.gamma = gamma
        self.master_seed = master_seed
        self._log_gamma = math.log(gamma)

    def _compute(self, i: int) -> float:
        u = 2.0 * unit_from(self.master_seed, 0x9077, i) - 1.0
        return self.curve[i] + u * self._log_gamma

    def lower(self, i: int, depth: int = 0) -> float:
        return self.query(i, depth) - self._log_gamma

    def upper(self, i: int, depth: int = 0) -> float:
        return self.query(i, depth) + self._log_gamma


class XorOracle(QuantileOracle):
    """Randomized constrained-MAP median; lower/upper shift the index by c."""

    kind = "neighbor"

    def __init__(
        self,
        model: WeightedModel,
        config: OracleConfig,
        solver: MapSolver | None = None,
        ledger: QueryLedger | None = None,
    ):
        super().__init__(model.n, ledger)
        self.model = model
        self.config = config
        self.solver = solver or MapSolver()

    def _compute(self, i: int) -> float:
        reps = self.config.repetitions(self.n)
        values = []
        seen: dict[tuple, MapResult] = {}
        for t in range(reps):
            rng = rng_from(self.config.master_seed, i, t)
            system = sample_parity_system(self.n, i, rng)
            key = (system.rows, system.rhs)
            result = seen.get(key)
            if result is None:
                result = map_solve(self.model, system, self.solver)
                seen[key] = result
                self.ledger.map_calls += 1
                if not result.exact:
                    self.ledger.guarantee_void = True
            values.append(result.log_value)
        values.sort()
        # lower middle for even counts: never overestimates the median
        return values[(len(values) - 1) // 2]

    def lower(self, i: int, depth: int = 0) -> float:
        return self.query(min(i + self.config.c, self.n), depth)

    def upper(self, i: int, depth: int = 0) -> float:
        return self.query(max(i - self.config.c, 0), depth)


class NeighborStubOracle(QuantileOracle):
    """Deterministic worst-case neighbor oracle over a known curve.

    Answers stay inside the sandwich [b_{min(i+c,n)}, b_{max(i-c,0)}] by
    construction.  Index 0 answers b_0 exactly, mirroring the real XOR query,
    which is deterministic there (zero constraint rows); without that the
    approximation guarantee is unprovable for curves dominated by the top
    weight.
    """

    kind = "neighbor"
    policies = ("always_upper", "always_lower", "seeded")

    def __init__(
        self,
        curve: QuantileCurve,
        c: int,
        policy: str = "seeded",
        master_seed: int = 0,
        ledger: QueryLedger | None = None,
    ):
        if policy not in self.policies:
            raise StructuralError(f"unknown policy {policy!r}")
        if c < 2:
            raise StructuralError("neighbor stub needs c >= 2")
        super().__init__(curve.n, ledger)
        self.curve = curve
        self.c = c
        self.policy = policy
        self.master_seed = master_seed

    def _picked_index(self, i: int) -> int:
        if i == 0:
            return 0
        lo = max(i - self.c, 0)
        hi = min(i + self.c, self.n)
        if self.policy == "always_upper":
            return lo
        if self.policy == "always_lower":
            return hi
        span = hi - lo + 1
        return lo + mix64(self.master_seed, 0x57AB, i) % span

    def _compute(self, i: int) -> float:
        return self.curve[self._picked_index(i)]

    def lower(self, i: int, depth: int = 0) -> float:
        return self.query(min(i + self.c, self.n), depth)

    def upper(self, i: int, depth: int = 0) -> float:
        return self.query(max(i - self.c, 0), depth)


def adversarial_neighbor_stub(
    curve: QuantileCurve, c: int, policy: str, seed: int = 0
) -> NeighborStubOracle:
    return NeighborStubOracle(curve, c, policy, master_seed=seed)


def make_oracle(
    model: WeightedModel,
    config: OracleConfig,
    solver: MapSolver | None = None,
    ledger: QueryLedger | None = None,
) -> QuantileOracle:
    """Bind a model to the configured oracle kind.

    Exact and pointwise kinds enumerate the true quantile curve up front and
    are therefore limited to n <= 24.
    """
    if config.kind == "neighbor":
        return XorOracle(model, config, solver, ledger)
    if model.n > ENUMERATION_LIMIT:
        raise TooLarge(
            f"{config.kind} oracle needs the exact curve; n={model.n} exceeds {ENUMERATION_LIMIT}"
        )
    curve = exact_quantiles(model)
    if config.kind == "exact":
        return ExactCurveOracle(curve, ledger)
    return PointwiseCurveOracle(curve, config.gamma, config.master_seed, ledger)


# Free-function convenience wrappers.  Each binds a transient oracle around
# the shared ledger; for exact/pointwise kinds that recomputes the quantile
# curve, so hot paths should bind once with make_oracle instead.


def xor_query(
    i: int,
    model: WeightedModel,
    config: OracleConfig,
    ledger: QueryLedger,
    solver: MapSolver | None = None,
) -> float:
    return XorOracle(model, config, solver, ledger).query(i)


def approx_query(i, model, config, ledger, solver=None) -> float:
    return make_oracle(model, config, solver, ledger).approx(i)


def lower_bound_query(i, model, config, ledger, solver=None) -> float:
    return make_oracle(model, config, solver, ledger).lower(i)


def upper_bound_query(i, model, config, ledger, solver=None) -> float:
    return make_oracle(model, config, solver, ledger).upper(i)
