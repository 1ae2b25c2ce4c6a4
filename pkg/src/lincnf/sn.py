"""Digit-layer sorting-network encodings of `sum a_i x_i <= a0`.

Coefficients are split into base-b digits.  Layer j sums the digit-j
contributions (each order bit of x_i replicated A_{i,j} times) together
with the carries of layer j-1 (every b-th output), producing the order
encoding of y_j = floor(y_{j-1}/b) + sum_i A_{i,j} x_i.

Two bound styles:
  * tare: a dummy always-true term pads the bound to b^(m+1)-1, so the
    single unit clause not(y_m >= b) enforces the constraint.  Compact but
    tied to one bound.
  * overflow digits (opt): no tare; auxiliary variables o_j^k capture
    "digit j of the running sum is >= k", and any bound (including later,
    smaller ones) is a handful of clauses over them - the incremental path
    used during optimization.

The improved layout (plan mode) truncates layer j at b^(m-j+1) outputs,
merges the two shortest runs first, and passes runs involving only the
tare or a lone carry straight through, which also elides the layers above
the top coefficient digit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cnf import CnfBuilder, Lit
from .netblocks import merge_shape, smerge


def digits(a: int, b: int) -> tuple:
    """Base-b digits of a, least significant first; empty for 0."""
    if a < 0:
        raise ValueError("negative coefficient")
    out = []
    while a:
        out.append(a % b)
        a //= b
    return tuple(out)


def tare(a0: int, b: int) -> tuple[int, int]:
    """Layer count m and tare coefficient b^(m+1)-1-a0 (smallest valid m)."""
    m = 0
    while b ** (m + 1) <= a0:
        m += 1
    return m, b ** (m + 1) - 1 - a0


def replicate_inputs(bits, times: int) -> list:
    """Order bits of `times * x` from the order bits of x (unary constant
    multiplication: every threshold literal repeated)."""
    out = []
    for bit in bits:
        out.extend([bit] * times)
    return out


def floor_div_bits(bits, b: int) -> list:
    """Order bits of floor(z/b): every b-th threshold literal."""
    return list(bits[b - 1 :: b])


# ---------------------------------------------------------------------------
# layer driver, shared by the emitting and the counting paths


class _EmitOps:
    def __init__(self, db):
        self.db = db
        self.clauses0 = len(db.clauses)

    def merge(self, a, b, cap):
        return smerge(a, b, cap, self.db)

    @staticmethod
    def length(run):
        return len(run)

    @staticmethod
    def truncate(run, cap):
        return run[:cap]

    def cost(self):
        return len(self.db.clauses) - self.clauses0


class _CountOps:
    """Mirrors _EmitOps on run lengths only."""

    def __init__(self):
        self.nclauses = 0
        self.nvars = 0

    def merge(self, a, b, cap):
        out, nv, nc = merge_shape(a, b, cap)
        self.nvars += nv
        self.nclauses += nc
        return out

    @staticmethod
    def length(run):
        return run

    @staticmethod
    def truncate(run, cap):
        return min(run, cap)

    def cost(self):
        return self.nclauses


@dataclass
class LayerPlan:
    base: int
    m: int
    improved: bool
    caps: tuple
    clause_count: int = 0


def _merge_runs(runs, cap, improved, ops):
    """Combine sorted runs into one; greedy two-shortest when improved,
    balanced adjacent rounds otherwise."""
    if not runs:
        return None
    if improved:
        work = [(ops.length(r), i, r) for i, r in enumerate(runs)]
        created = len(work)
        import heapq

        heapq.heapify(work)
        while len(work) > 1:
            la, _, a = heapq.heappop(work)
            lb, _, b = heapq.heappop(work)
            merged = ops.merge(a, b, cap)
            heapq.heappush(work, (ops.length(merged), created, merged))
            created += 1
        return work[0][2]
    while len(runs) > 1:
        nxt = []
        for i in range(0, len(runs) - 1, 2):
            a, b = runs[i], runs[i + 1]
            nxt.append(ops.merge(a, b, ops.length(a) + ops.length(b)))
        if len(runs) % 2:
            nxt.append(runs[-1])
        runs = nxt
    return runs[0]


def _run_layers(term_runs, digit_rows, nlayers, b, caps, tare_run, tare_digits, improved, ops):
    """Build layers 0..nlayers-1; returns the per-layer output runs.

    term_runs[i]: order bits of x_i (or its length, counting mode);
    digit_rows[i]: digit vector of a_i; tare_run: single always-true
    threshold literal of the tare term (None without tare).
    """
    outputs = []
    carry = None
    empty = [] if not isinstance(ops, _CountOps) else 0
    for j in range(nlayers):
        runs = []
        if carry is not None and ops.length(carry) > 0:
            runs.append(carry)
        for run, row in zip(term_runs, digit_rows):
            d = row[j] if j < len(row) else 0
            if d > 0 and ops.length(run) > 0:
                if isinstance(ops, _CountOps):
                    runs.append(run * d)
                else:
                    runs.append(replicate_inputs(run, d))
        tcount = tare_digits[j] if j < len(tare_digits) else 0
        cap = caps[j] if caps is not None else (1 << 60)
        if improved:
            inner_cap = max(cap - tcount, 0)
            merged = _merge_runs(runs, inner_cap, True, ops)
            merged = empty if merged is None else ops.truncate(merged, inner_cap)
            if isinstance(ops, _CountOps):
                y = min(tcount + merged, cap)
            else:
                y = ([tare_run] * tcount + merged)[:cap]
        else:
            if tcount:
                if isinstance(ops, _CountOps):
                    runs.append(tcount)
                else:
                    runs.append([tare_run] * tcount)
            merged = _merge_runs(runs, cap, False, ops)
            y = empty if merged is None else merged
        outputs.append(y)
        if isinstance(ops, _CountOps):
            carry = y // b
        else:
            carry = floor_div_bits(y, b)
    return outputs


# ---------------------------------------------------------------------------
# tare-style fixed-bound encoding


@dataclass
class SnTareResult:
    b: int
    m: int
    layers: list  # per-layer output literal lists
    tare_lit: Lit | None
    bound_lit: Lit | None  # the literal forced false, when one is needed
    layer_clauses: int = 0


def sn_tare_encode(nc, ctx, db: CnfBuilder, b: int, improved: bool = False) -> SnTareResult:
    """Fixed-bound digit-layer encoding with a tare term."""
    if nc.bound < 0:
        db.add_clause([])
        return SnTareResult(b, 0, [], None, None)
    m, tare_coeff = tare(nc.bound, b)
    limit = b ** (m + 1)
    term_runs = []
    digit_rows = []
    for t in nc.terms:
        bits = ctx.order_bits(t)
        if t.coeff >= limit:
            # a single unit of this term already exceeds the padded bound
            db.add_clause([-bits[0]])
            continue
        term_runs.append(bits)
        digit_rows.append(digits(t.coeff, b))
    tare_digits = digits(tare_coeff, b)
    tare_lit = None
    if tare_coeff > 0:
        tare_lit = db.new_var("tare", f"b{b}")
        db.add_clause([tare_lit])
    caps = tuple(b ** (m - j + 1) for j in range(m + 1)) if improved else None
    ops = _EmitOps(db)
    layers = _run_layers(
        term_runs, digit_rows, m + 1, b, caps, tare_lit, tare_digits, improved, ops
    )
    layer_clauses = ops.cost()
    bound_lit = None
    if len(layers[m]) >= b:
        bound_lit = layers[m][b - 1]
        db.add_clause([-bound_lit])
    return SnTareResult(b, m, layers, tare_lit, bound_lit, layer_clauses)


# ---------------------------------------------------------------------------
# overflow-digit encoding for incremental bounds


@dataclass
class OptDigits:
    b: int
    m: int
    layers: list
    o: list  # o[j][k-1] -> Lit or None (constant false)
    layer_clauses: int = 0
    bounds_added: list = field(default_factory=list)


def sn_opt_encode(nc, ctx, db: CnfBuilder, b: int, improved: bool = False) -> OptDigits:
    """Digit layers without a tare plus the per-layer overflow-digit
    variables o_j^k ("digit j of the sum is at least k"); no bound clauses
    are emitted yet."""
    total = nc.max_sum()
    m = 0
    while b ** (m + 1) <= total:
        m += 1
    term_runs = [ctx.order_bits(t) for t in nc.terms]
    digit_rows = [digits(t.coeff, b) for t in nc.terms]
    caps = tuple(b ** (m - j + 1) for j in range(m + 1)) if improved else None
    ops = _EmitOps(db)
    layers = _run_layers(term_runs, digit_rows, m + 1, b, caps, None, (), improved, ops)
    layer_clauses = ops.cost()
    o: list[list] = []
    for j in range(m + 1):
        bits = layers[j]
        ej = len(bits)
        row: list = []
        for k in range(1, b):
            terms = []
            for l in range(k, ej + 1, b):
                upper = l + b - k
                terms.append((bits[l - 1], bits[upper - 1] if upper <= ej else None))
            if not terms:
                row.append(None)
                continue
            ov = db.new_var("odigit", f"y{j}%{b}>={k}")
            for pos, upper in terms:
                clause = [-pos]
                if upper is not None:
                    clause.append(upper)
                clause.append(ov)
                db.add_clause(clause)
            row.append(ov)
        o.append(row)
    return OptDigits(b, m, layers, o, layer_clauses)


def sn_opt_bound(od: OptDigits, bound: int, db: CnfBuilder) -> int:
    """Constrain the encoded sum to <= bound; callable repeatedly with
    decreasing bounds.  Returns the number of clauses added."""
    b, m = od.b, od.m
    if bound < 0:
        db.add_clause([])
        return 1
    if bound >= b ** (m + 1):
        raise ValueError("bound exceeds the digit range of the encoding")
    eps = list(digits(bound, b)) + [0] * (m + 1 - len(digits(bound, b)))
    added = 0
    for j1 in range(m + 1):
        if eps[j1] >= b - 1:
            continue
        lead = od.o[j1][eps[j1]]  # o_{j1}^{eps+1}
        if lead is None:
            continue  # constant false: clause trivially satisfied
        clause = [-lead]
        satisfied = False
        for j2 in range(j1 + 1, m + 1):
            if eps[j2] > 0:
                oj2 = od.o[j2][eps[j2] - 1]
                if oj2 is None:
                    satisfied = True
                    break
                clause.append(-oj2)
        if satisfied:
            continue
        db.add_clause(clause)
        added += 1
    od.bounds_added.append(bound)
    return added


# ---------------------------------------------------------------------------
# planning and base search


def plan_layers(nc, b: int, mode: str, improved: bool = True) -> LayerPlan:
    """Cost a layer layout without emitting anything."""
    if mode == "tare":
        if nc.bound < 0:
            return LayerPlan(b, 0, improved, (), 0)
        m, tare_coeff = tare(nc.bound, b)
        limit = b ** (m + 1)
        runs = [t.dom for t in nc.terms if t.coeff < limit]
        rows = [digits(t.coeff, b) for t in nc.terms if t.coeff < limit]
        tare_digits = digits(tare_coeff, b)
    elif mode == "opt":
        total = nc.max_sum()
        m = 0
        while b ** (m + 1) <= total:
            m += 1
        runs = [t.dom for t in nc.terms]
        rows = [digits(t.coeff, b) for t in nc.terms]
        tare_digits = ()
    else:
        raise ValueError(f"bad mode {mode!r}")
    caps = tuple(b ** (m - j + 1) for j in range(m + 1)) if improved else None
    ops = _CountOps()
    _run_layers(runs, rows, m + 1, b, caps, 1, tare_digits, improved, ops)
    return LayerPlan(b, m, improved, caps or (), ops.cost())


def choose_base(nc, mode: str, improved: bool = True) -> int:
    """Smallest-clause-count base in [2, 10] (ties go to the smaller base)."""
    best_b, best_cost = 2, None
    for b in range(2, 11):
        cost = plan_layers(nc, b, mode, improved).clause_count
        if best_cost is None or cost < best_cost:
            best_b, best_cost = b, cost
    return best_b
