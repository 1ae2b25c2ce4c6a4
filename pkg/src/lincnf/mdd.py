"""Interval-labeled multi-valued decision diagrams for `sum a_i x_i <= a0`.

Each node is labeled with the interval of right-hand sides for which the
sub-diagram represents the residual constraint; per-level stores map those
disjoint intervals to nodes, which both quasi-reduces the diagram during
construction and lets later builds with smaller bounds reuse every node
whose interval covers the new residual (the incremental optimization path).

The CNF encoding spends one variable per node kept after reduction and one
clause per edge: not(z_node) or not(y_i^j) or z_child, where y_i^0 is
constant true.  An edge whose child equals the previous value's child is
skipped (the previous clause is stronger), and chain nodes whose children
all coincide are bypassed entirely, re-instating long edges.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

from .cnf import CnfBuilder, Lit

INF = 1 << 60


def _clip(value: int) -> int:
    if value >= INF:
        return INF
    if value <= -INF:
        return -INF
    return value


def interval_combine(child_intervals, a_i: int, d_i: int):
    """Interval of a node from its children's intervals (child r via x = r)."""
    assert len(child_intervals) == d_i + 1
    lo = -INF
    hi = INF
    for r, (clo, chi) in enumerate(child_intervals):
        lo = max(lo, _clip(clo + r * a_i) if clo > -INF else -INF)
        hi = min(hi, _clip(chi + r * a_i) if chi < INF else INF)
    assert lo <= hi, "child intervals produced by construction cannot cross"
    return lo, hi


@dataclass
class MddNode:
    level: int  # 1-based variable index; n+1 for terminals
    children: tuple  # node ids, child j taken when x_level = j
    lo: int
    hi: int


class Mdd:
    """Quasi-reduced ordered decision diagram plus its interval stores."""

    FALSE = 0
    TRUE = 1

    def __init__(self, coeffs, doms):
        self.coeffs = tuple(coeffs)
        self.doms = tuple(doms)
        n = len(self.coeffs)
        self.n = n
        self.nodes: list[MddNode] = [
            MddNode(n + 1, (), -INF, -1),
            MddNode(n + 1, (), 0, INF),
        ]
        # per level, nodes sorted by interval start; levels 1..n+1
        self.store: list[list] = [[] for _ in range(n + 2)]
        self.store[n + 1] = [(-INF, -1, self.FALSE), (0, INF, self.TRUE)]
        self.root: int | None = None

    def is_terminal(self, nid: int) -> bool:
        return nid <= 1

    def search(self, level: int, bound: int):
        row = self.store[level]
        i = bisect_right(row, (bound, INF, INF)) - 1
        if i >= 0:
            lo, hi, nid = row[i]
            if lo <= bound <= hi:
                return nid
        return None

    def _insert(self, level: int, lo: int, hi: int, nid: int) -> None:
        row = self.store[level]
        row.insert(bisect_right(row, (lo, hi, nid)), (lo, hi, nid))

    def _build(self, level: int, bound: int) -> int:
        hit = self.search(level, bound)
        if hit is not None:
            return hit
        a, d = self.coeffs[level - 1], self.doms[level - 1]
        children = tuple(self._build(level + 1, bound - j * a) for j in range(d + 1))
        intervals = [(self.nodes[c].lo, self.nodes[c].hi) for c in children]
        lo, hi = interval_combine(intervals, a, d)
        assert lo <= bound <= hi
        nid = len(self.nodes)
        self.nodes.append(MddNode(level, children, lo, hi))
        self._insert(level, lo, hi, nid)
        return nid

    def build(self, bound: int) -> int:
        """Root for the given bound, reusing every covered node."""
        if bound < 0:
            root = self.FALSE
        elif bound >= sum(a * d for a, d in zip(self.coeffs, self.doms)):
            root = self.TRUE
        else:
            root = self._build(1, bound)
        self.root = root
        return root

    def node_count(self) -> int:
        return len(self.nodes)

    def interval(self, nid: int):
        node = self.nodes[nid]
        return node.lo, node.hi

    # -- reduction -------------------------------------------------------

    def collapse(self, nid: int) -> int:
        """Skip chain nodes whose children all coincide (long edges)."""
        node = self.nodes[nid]
        while node.children and all(c == node.children[0] for c in node.children):
            nid = node.children[0]
            node = self.nodes[nid]
        return nid

    def kept_nodes(self, root: int):
        """Reduced-diagram nodes reachable from `root`, breadth first."""
        start = self.collapse(root)
        if self.is_terminal(start):
            return []
        seen = {start}
        order = [start]
        queue = [start]
        while queue:
            nid = queue.pop(0)
            for c in self.nodes[nid].children:
                t = self.collapse(c)
                if not self.is_terminal(t) and t not in seen:
                    seen.add(t)
                    order.append(t)
                    queue.append(t)
        return order

    def reduced_size(self, root: int) -> int:
        """Nodes of the reduced diagram, terminals excluded."""
        return len(self.kept_nodes(root))


def mdd_create(coeffs, doms, bound: int) -> Mdd:
    mdd = Mdd(coeffs, doms)
    mdd.build(bound)
    return mdd


def mdd_extend(mdd: Mdd, bound: int) -> int:
    """Diagram for a smaller bound over the same sum; returns the new root."""
    return mdd.build(bound)


@dataclass
class MddEncodeState:
    """Z-variables and emitted nodes, kept across incremental re-encodes."""

    db: CnfBuilder
    zvars: dict = field(default_factory=dict)  # node id -> Lit
    emitted: set = field(default_factory=set)
    z_true: Lit | None = None
    z_false: Lit | None = None
    fresh_vars: int = 0

    def zvar(self, mdd: Mdd, nid: int) -> Lit:
        if nid == Mdd.TRUE:
            if self.z_true is None:
                self.z_true = self.db.new_var("mdd", "true")
                self.db.add_clause([self.z_true])
                self.fresh_vars += 1
            return self.z_true
        if nid == Mdd.FALSE:
            if self.z_false is None:
                self.z_false = self.db.new_var("mdd", "false")
                self.db.add_clause([-self.z_false])
                self.fresh_vars += 1
            return self.z_false
        z = self.zvars.get(nid)
        if z is None:
            node = mdd.nodes[nid]
            z = self.db.new_var("mdd", f"node@{node.level}[{node.lo},{node.hi}]")
            self.zvars[nid] = z
            self.fresh_vars += 1
        return z


def mdd_encode(mdd: Mdd, level_bits, db: CnfBuilder, state: MddEncodeState | None = None,
               root: int | None = None) -> MddEncodeState:
    """Emit the reduced two-clause-per-edge encoding into `db`.

    `level_bits[i-1]` lists the order literals of variable i (threshold j at
    index j-1).  Re-encoding after `mdd_extend` with the same state only
    emits nodes not seen before plus the new root unit.
    """
    if state is None:
        state = MddEncodeState(db)
    if root is None:
        root = mdd.root
    start = mdd.collapse(root)
    new_nodes = [n for n in mdd.kept_nodes(root) if n not in state.emitted]
    for nid in new_nodes:
        state.zvar(mdd, nid)
    # root unit (z_true / z_false units come from zvar allocation)
    db.add_clause([state.zvar(mdd, start)])
    for nid in new_nodes:
        node = mdd.nodes[nid]
        bits = level_bits[node.level - 1]
        zn = state.zvar(mdd, nid)
        for j, child in enumerate(node.children):
            if j > 0 and child == node.children[j - 1]:
                continue
            target = mdd.collapse(child)
            clause = [-zn]
            if j > 0:
                clause.append(-bits[j - 1])
            clause.append(state.zvar(mdd, target))
            db.add_clause(clause)
        state.emitted.add(nid)
    return state


# ---------------------------------------------------------------------------
# logarithmic-encoding front ends (binary-domain case of the same machinery)


def pb_terms_sorted(coeff_bit_pairs):
    """Stable ascending sort of (coefficient, literal) pairs."""
    return sorted(coeff_bit_pairs, key=lambda t: t[0])


def decompose_pow2(coeff_bit_pairs):
    """Split each coefficient into its powers of two (ascending)."""
    out = []
    for coeff, bit in coeff_bit_pairs:
        k = 0
        while coeff:
            if coeff & 1:
                out.append((1 << k, bit))
            coeff >>= 1
            k += 1
    return out


def bdd_front(coeff_bit_pairs, bound: int, mode: str, db: CnfBuilder,
              state: MddEncodeState | None = None):
    """Encode a pseudo-Boolean `sum coeff*bit <= bound` as a decision diagram.

    mode 'plain' sorts the terms by ascending coefficient; mode 'dec' first
    sorts, then decomposes every coefficient into powers of two and re-sorts
    (stable), which keeps the diagram narrow for large coefficients.  Each
    term becomes one binary level of the diagram; a literal may label
    several levels.
    """
    terms = pb_terms_sorted(coeff_bit_pairs)
    if mode == "dec":
        terms = pb_terms_sorted(decompose_pow2(terms))
    elif mode != "plain":
        raise ValueError(f"bad mode {mode!r}")
    coeffs = [c for c, _ in terms]
    mdd = Mdd(coeffs, [1] * len(coeffs))
    root = mdd.build(bound)
    level_bits = [[bit] for _, bit in terms]
    state = mdd_encode(mdd, level_bits, db, state=state, root=root)
    return terms, mdd, state
