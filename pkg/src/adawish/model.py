"""Weighted binary models and exact desk-scale references.

A model is a product of non-negative factors over n binary variables, stored
in the log domain (-inf = zero weight): log w(x) = sum_f table_f[x restricted
to scope_f].  Assignments are indexed by bitmask with bit v = variable v.
Factor tables follow the UAI convention: the last scope variable varies
fastest.

Enumeration helpers (`exact_log_partition`, `exact_quantiles`,
`log_weight_table`) are guarded to n <= 24 and evaluate in fixed-size blocks
with a fixed reduction order, so results are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from .errors import InvalidSize, ParseError, StructuralError, TooLarge, UnsupportedCardinality
from .logspace import NEG_INF, log_sum_exp

ENUMERATION_LIMIT = 24
_BLOCK = 1 << 18


@dataclass(frozen=True)
class Factor:
    scope: tuple[int, ...]
    log_table: np.ndarray  # flat, length 2^len(scope), last scope var fastest

    def __post_init__(self):
        object.__setattr__(self, "scope", tuple(int(v) for v in self.scope))
        table = np.asarray(self.log_table, dtype=float)
        object.__setattr__(self, "log_table", table)
        if len(set(self.scope)) != len(self.scope):
            raise StructuralError(f"duplicate variable in scope {self.scope}")
        if table.ndim != 1 or table.size != 1 << len(self.scope):
            raise StructuralError(
                f"table size {table.size} does not match scope arity {len(self.scope)}"
            )
        if np.any(np.isnan(table)) or np.any(table == np.inf):
            raise StructuralError("factor entries must be finite or -inf")

    def entry_index(self, assignment_mask: int) -> int:
        idx = 0
        for v in self.scope:
            idx = (idx << 1) | ((assignment_mask >> v) & 1)
        return idx


@dataclass(frozen=True)
class WeightedModel:
    n: int
    factors: tuple[Factor, ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if self.n < 0:
            raise StructuralError("negative variable count")
        for f in self.factors:
            if any(v < 0 or v >= self.n for v in f.scope):
                raise StructuralError(f"scope {f.scope} outside {self.n} variables")


@dataclass(frozen=True)
class QuantileCurve:
    """Non-increasing log-weights b_0 >= b_1 >= ... >= b_n.

    When derived from a model, b_i is the log-weight of the 2^i-th largest
    assignment (1-based rank).
    """

    n: int
    log_values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.log_values, dtype=float)
        object.__setattr__(self, "log_values", vals)
        if vals.shape != (self.n + 1,):
            raise StructuralError(f"curve over n={self.n} needs {self.n + 1} values, got {vals.shape}")
        if np.any(np.isnan(vals)):
            raise StructuralError("curve values must not be NaN")
        if np.any(vals[:-1] < vals[1:]):
            raise StructuralError("curve values must be non-increasing")

    def __getitem__(self, i: int) -> float:
        return float(self.log_values[i])


def _as_mask(assignment, n: int) -> int:
    if isinstance(assignment, (int, np.integer)):
        mask = int(assignment)
        if mask < 0 or mask >> n:
            raise StructuralError(f"assignment mask outside {n} variables")
        return mask
    bits = list(assignment)
    if len(bits) != n:
        raise StructuralError(f"assignment length {len(bits)} != n={n}")
    mask = 0
    for i, b in enumerate(bits):
        if b not in (0, 1):
            raise StructuralError(f"assignment bit {i} must be 0 or 1")
        mask |= int(b) << i
    return mask


def log_weight(model: WeightedModel, assignment) -> float:
    """log w(x); -inf when any factor vanishes."""
    mask = _as_mask(assignment, model.n)
    total = 0.0
    for f in model.factors:
        total += float(f.log_table[f.entry_index(mask)])
        if total == NEG_INF:
            return NEG_INF
    return total


def log_weights_at(model: WeightedModel, indices: np.ndarray) -> np.ndarray:
    """Vectorised log w over an array of assignment bitmasks."""
    idx = np.asarray(indices, dtype=np.int64)
    out = np.zeros(idx.shape, dtype=float)
    for f in model.factors:
        entry = np.zeros(idx.shape, dtype=np.int64)
        for v in f.scope:
            entry = (entry << 1) | ((idx >> v) & 1)
        out += f.log_table[entry]
    return out


def log_weight_table(model: WeightedModel) -> np.ndarray:
    """All 2^n log-weights, indexed by assignment bitmask (n <= 24)."""
    if model.n > ENUMERATION_LIMIT:
        raise TooLarge(f"n={model.n} exceeds enumeration limit {ENUMERATION_LIMIT}")
    size = 1 << model.n
    table = np.empty(size, dtype=float)
    for start in range(0, size, _BLOCK):
        stop = min(start + _BLOCK, size)
        table[start:stop] = log_weights_at(model, np.arange(start, stop, dtype=np.int64))
    return table


def exact_log_partition(model: WeightedModel) -> float:
    """log sum_x w(x) by enumeration; block-wise with a fixed reduction order."""
    if model.n > ENUMERATION_LIMIT:
        raise TooLarge(f"n={model.n} exceeds enumeration limit {ENUMERATION_LIMIT}")
    size = 1 << model.n
    partials = []
    for start in range(0, size, _BLOCK):
        stop = min(start + _BLOCK, size)
        block = log_weights_at(model, np.arange(start, stop, dtype=np.int64))
        partials.append(log_sum_exp(block))
    return log_sum_exp(partials)


def exact_quantiles(model: WeightedModel) -> QuantileCurve:
    """The 2^i-th largest log-weight for i = 0..n (n <= 24)."""
    table = log_weight_table(model)
    table[::-1].sort()  # descending
    ranks = (1 << np.arange(model.n + 1)) - 1
    return QuantileCurve(model.n, table[ranks].copy())


# ---------------------------------------------------------------------------
# UAI text format


def _tokens(text: str):
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        for tok in body.split():
            yield tok, lineno


class _TokenReader:
    def __init__(self, text: str):
        self._gen = _tokens(text)
        self.line = 0

    def next(self, what: str) -> str:
        try:
            tok, self.line = next(self._gen)
        except StopIteration:
            raise ParseError(f"unexpected end of file while reading {what}", self.line) from None
        return tok

    def next_int(self, what: str, minimum: int | None = None) -> int:
        tok = self.next(what)
        try:
            value = int(tok)
        except ValueError:
            raise ParseError(f"expected integer for {what}, got {tok!r}", self.line) from None
        if minimum is not None and value < minimum:
            raise ParseError(f"{what} must be >= {minimum}, got {value}", self.line)
        return value

    def next_float(self, what: str) -> float:
        tok = self.next(what)
        try:
            return float(tok)
        except ValueError:
            raise ParseError(f"expected number for {what}, got {tok!r}", self.line) from None

    def expect_end(self):
        try:
            tok, line = next(self._gen)
        except StopIteration:
            return
        raise ParseError(f"unexpected trailing token {tok!r}", line)


def parse_uai(text: str, name: str = "uai") -> WeightedModel:
    """Parse UAI MARKOV/BAYES text into a model (binary variables only).

    Tables are converted to the log domain; both headers are treated as plain
    factor products since only the total weight is of interest here.
    """
    rd = _TokenReader(text)
    header = rd.next("header").upper()
    if header not in ("MARKOV", "BAYES"):
        raise ParseError(f"unknown header {header!r}, expected MARKOV or BAYES", rd.line)
    n = rd.next_int("variable count", minimum=0)
    for v in range(n):
        card = rd.next_int(f"cardinality of variable {v}")
        if card != 2:
            raise UnsupportedCardinality(
                f"variable {v} has cardinality {card}; only binary variables are supported",
                rd.line,
            )
    n_factors = rd.next_int("factor count", minimum=0)
    scopes: list[tuple[int, ...]] = []
    for k in range(n_factors):
        size = rd.next_int(f"scope size of factor {k}", minimum=0)
        scope = tuple(rd.next_int(f"scope variable of factor {k}") for _ in range(size))
        for v in scope:
            if v < 0 or v >= n:
                raise ParseError(f"factor {k} references variable {v} outside 0..{n - 1}", rd.line)
        if len(set(scope)) != len(scope):
            raise ParseError(f"factor {k} repeats a variable in its scope", rd.line)
        scopes.append(scope)
    factors = []
    for k, scope in enumerate(scopes):
        size = rd.next_int(f"table size of factor {k}", minimum=0)
        if size != 1 << len(scope):
            raise ParseError(
                f"factor {k} table size {size} != 2^{len(scope)}", rd.line
            )
        entries = np.empty(size, dtype=float)
        for j in range(size):
            val = rd.next_float(f"table entry of factor {k}")
            if val < 0:
                raise ParseError(f"factor {k} entry {j} is negative ({val})", rd.line)
            entries[j] = math.log(val) if val > 0 else NEG_INF
        factors.append(Factor(scope, entries))
    rd.expect_end()
    return WeightedModel(n, tuple(factors), name=name)


def serialize_uai(model: WeightedModel) -> str:
    """Model back to UAI MARKOV text; 17 significant digits round-trip exactly."""
    lines = ["MARKOV", str(model.n), " ".join(["2"] * model.n), str(len(model.factors))]
    for f in model.factors:
        lines.append(" ".join([str(len(f.scope))] + [str(v) for v in f.scope]))
    lines.append("")
    for f in model.factors:
        lines.append(str(f.log_table.size))
        lines.append(" ".join(f"{math.exp(x):.17g}" if x > NEG_INF else "0" for x in f.log_table))
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Experiment-style instance generators.  Deterministic under (params, seed):
# draws happen in a fixed documented order from one PCG64 stream.


def gen_clique_ising(n: int, coupling_w: float = 0.1, seed: int = 0) -> WeightedModel:
    """Fully connected Ising model over x in {0,1}^n.

    log w(x) = -sum_{i<j} w_ij x_i x_j with w_ij drawn uniformly from
    [0, coupling_w * sqrt(j - i)].  Two closed chains over floor(0.3 n)
    randomly chosen vertices each overlay extra repulsive strengths drawn from
    [0, 100 * coupling_w]; chain strengths add to the base couplings.

    Draw order: base couplings in (i, j) lexicographic order, then per chain
    its vertex tour, then its edge strengths.
    """
    if n < 4:
        raise InvalidSize(f"clique model needs n >= 4, got {n}")
    rng = np.random.default_rng(seed)
    coupling = {}
    for i in range(n):
        for j in range(i + 1, n):
            coupling[(i, j)] = rng.uniform(0.0, coupling_w * math.sqrt(j - i))
    chain_len = int(0.3 * n)
    for _ in range(2):
        if chain_len < 2:
            break
        tour = rng.permutation(n)[:chain_len]
        strengths = rng.uniform(0.0, 100.0 * coupling_w, size=chain_len)
        for k in range(chain_len):
            a, b = int(tour[k]), int(tour[(k + 1) % chain_len])
            # chain of length 2 closes onto a single doubled edge
            key = (min(a, b), max(a, b))
            coupling[key] += strengths[k]
    factors = []
    for (i, j), w_ij in sorted(coupling.items()):
        table = np.array([0.0, 0.0, 0.0, -w_ij])
        factors.append(Factor((i, j), table))
    return WeightedModel(n, tuple(factors), name=f"clique-n{n}-w{coupling_w}-s{seed}")


def gen_grid_ising(rows: int, cols: int, coupling_w: float, seed: int = 0) -> WeightedModel:
    """Grid Ising model over spins s in {-1,+1} stored as bits (0 -> -1).

    log w(s) = sum_i f_i s_i + sum_{(i,j) in grid} w_ij s_i s_j with fields
    f_i ~ U[-0.1, 0.1] and couplings w_ij ~ U[-w, w].  A rectangle of
    ceil(rows/2) x ceil(cols/2) cells at a seed-determined position has its
    couplings amplified by 10 (an edge counts as inside when both endpoints
    are).

    Draw order: fields in row-major order, then couplings (right edge then
    down edge per cell, row-major), then the rectangle corner.
    """
    if rows < 2 or cols < 2:
        raise InvalidSize(f"grid must be at least 2x2, got {rows}x{cols}")
    rng = np.random.default_rng(seed)
    n = rows * cols
    var = lambda r, c: r * cols + c
    fields = rng.uniform(-0.1, 0.1, size=n)
    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append(((r, c), (r, c + 1), rng.uniform(-coupling_w, coupling_w)))
            if r + 1 < rows:
                edges.append(((r, c), (r + 1, c), rng.uniform(-coupling_w, coupling_w)))
    box_r, box_c = math.ceil(rows / 2), math.ceil(cols / 2)
    r0 = int(rng.integers(0, rows - box_r + 1))
    c0 = int(rng.integers(0, cols - box_c + 1))
    inside = lambda rc: r0 <= rc[0] < r0 + box_r and c0 <= rc[1] < c0 + box_c

    factors = []
    for i in range(n):
        f_i = float(fields[i])
        factors.append(Factor((i,), np.array([-f_i, +f_i])))
    for a, b, w_ab in edges:
        w_ab = float(w_ab) * (10.0 if inside(a) and inside(b) else 1.0)
        i, j = var(*a), var(*b)
        # s_i * s_j = +1 when the stored bits agree
        table = np.array([+w_ab, -w_ab, -w_ab, +w_ab])
        factors.append(Factor((i, j), table))
    return WeightedModel(
        n, tuple(factors), name=f"grid-{rows}x{cols}-w{coupling_w}-s{seed}"
    )
