"""Reusable Boolean circuit blocks.

Adders (half/full and recursive trees) are functionally defined in both
directions.  Sorters produce unary counts z_1 >= z_2 >= ... (z_i true iff
at least i inputs are true) and come in two flavours: totalizers, which
define their outputs in both directions, and odd-even sorting /
cardinality networks, which emit the true side only.

Small blocks use the direct construction without auxiliary variables:
sorts of up to four inputs, and merges where one side has at most two
literals.  Larger blocks recurse.

TRUE_LIT / FALSE_LIT sentinel inputs are constant-folded.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

from .cnf import FALSE_LIT, TRUE_LIT, CnfBuilder, Lit

DIRECT_SORT_MAX = 4
DIRECT_MERGE_SIDE = 2
_BACKWARD_PRODUCT_CAP = 64


def _is_const(lit: Lit) -> bool:
    return lit == TRUE_LIT or lit == FALSE_LIT


def half_adder(y1: Lit, y2: Lit, db: CnfBuilder):
    """Emit z0 + 2*z1 = y1 + y2 (7 clauses for variable inputs)."""
    if _is_const(y2) and not _is_const(y1):
        y1, y2 = y2, y1
    if y1 == FALSE_LIT:
        return y2, FALSE_LIT
    if y1 == TRUE_LIT:
        if y2 == TRUE_LIT:
            return FALSE_LIT, TRUE_LIT
        if y2 == FALSE_LIT:
            return TRUE_LIT, FALSE_LIT
        z0 = db.new_var("ha", "sum")
        db.add_clause([-y2, -z0])
        db.add_clause([y2, z0])
        return z0, y2
    if y1 == y2:
        return FALSE_LIT, y1
    if y1 == -y2:
        return TRUE_LIT, FALSE_LIT
    z0 = db.new_var("ha", "sum")
    z1 = db.new_var("ha", "carry")
    db.add_clause([-y1, -y2, -z0])
    db.add_clause([-y1, y2, z0])
    db.add_clause([y1, -y2, z0])
    db.add_clause([y1, y2, -z0])
    db.add_clause([-y1, -y2, z1])
    db.add_clause([y1, -z1])
    db.add_clause([y2, -z1])
    return z0, z1


def full_adder(y1: Lit, y2: Lit, y3: Lit, db: CnfBuilder):
    """Emit z0 + 2*z1 = y1 + y2 + y3 (14 clauses for variable inputs)."""
    ins = [y1, y2, y3]
    if FALSE_LIT in ins:
        ins.remove(FALSE_LIT)
        return half_adder(ins[0], ins[1], db)
    if TRUE_LIT in ins:
        ins.remove(TRUE_LIT)
        if TRUE_LIT in ins:
            ins.remove(TRUE_LIT)
            return ins[0], TRUE_LIT
        a, b = ins
        if a == b:
            return TRUE_LIT, a
        if a == -b:
            return FALSE_LIT, TRUE_LIT
        z0 = db.new_var("fa", "sum")
        z1 = db.new_var("fa", "carry")
        db.add_clause([-a, -b, z0])
        db.add_clause([a, b, z0])
        db.add_clause([-a, b, -z0])
        db.add_clause([a, -b, -z0])
        db.add_clause([-a, z1])
        db.add_clause([-b, z1])
        db.add_clause([a, b, -z1])
        return z0, z1
    if y1 == y2:
        z0, z1 = y3, y1
        return z0, z1
    if y2 == y3:
        return y1, y2
    if y1 == y3:
        return y2, y1
    if y1 == -y2 or y2 == -y3 or y1 == -y3:
        other = y3 if y1 == -y2 else (y1 if y2 == -y3 else y2)
        z0 = db.new_var("fa", "sum")
        db.add_clause([-other, -z0])
        db.add_clause([other, z0])
        return z0, other
    z0 = db.new_var("fa", "sum")
    z1 = db.new_var("fa", "carry")
    db.add_clause([-y1, -y2, -y3, z0])
    db.add_clause([-y1, -y2, y3, -z0])
    db.add_clause([-y1, y2, -y3, -z0])
    db.add_clause([-y1, y2, y3, z0])
    db.add_clause([y1, -y2, -y3, -z0])
    db.add_clause([y1, -y2, y3, z0])
    db.add_clause([y1, y2, -y3, z0])
    db.add_clause([y1, y2, y3, -z0])
    db.add_clause([-y1, -y2, z1])
    db.add_clause([-y1, -y3, z1])
    db.add_clause([-y2, -y3, z1])
    db.add_clause([y1, y2, -z1])
    db.add_clause([y1, y3, -z1])
    db.add_clause([y2, y3, -z1])
    return z0, z1


def add_words(u, v, db: CnfBuilder):
    """Ripple-combine two binary words (LSB first); result one bit wider."""
    width = max(len(u), len(v))
    u = list(u) + [FALSE_LIT] * (width - len(u))
    v = list(v) + [FALSE_LIT] * (width - len(v))
    out = []
    carry = None
    for i in range(width):
        if i == 0:
            s, carry = half_adder(u[0], v[0], db)
        else:
            s, carry = full_adder(u[i], v[i], carry, db)
        out.append(s)
    out.append(carry)
    while len(out) > 1 and out[-1] == FALSE_LIT:
        out.pop()
    return out


def adder_tree(inputs, db: CnfBuilder):
    """Binary count of the true inputs, built from half/full adders.

    Recursion: 2 inputs -> half adder, 3 -> full adder, more -> split in
    halves (first half the larger) and ripple-combine the two words.
    """
    n = len(inputs)
    if n == 0:
        return []
    if n == 1:
        return [inputs[0]]
    if n == 2:
        z0, z1 = half_adder(inputs[0], inputs[1], db)
        return [z0, z1]
    if n == 3:
        z0, z1 = full_adder(inputs[0], inputs[1], inputs[2], db)
        return [z0, z1]
    mid = (n + 1) // 2
    left = adder_tree(inputs[:mid], db)
    right = adder_tree(inputs[mid:], db)
    return add_words(left, right, db)


# ---------------------------------------------------------------------------
# totalizers


def totalizer_sort(inputs, db: CnfBuilder):
    """Tree-shaped unary sum with outputs defined in both directions.

    Each output z_i is the disjunction over term pairs (w_j and w'_k with
    j+k=i) of the two half counts.  The reverse direction distributes over
    the terms; when that product would explode the quadratic pair form
    (w_{j+1} or w'_{k+1} or not z_{j+k+1}) is emitted instead.
    """
    n = len(inputs)
    if n == 1:
        return [inputs[0]]
    mid = (n + 1) // 2
    a = totalizer_sort(inputs[:mid], db)
    b = totalizer_sort(inputs[mid:], db)
    p, q = len(a), len(b)
    z = [db.new_var("tot", f"ge{i}") for i in range(1, n + 1)]
    for i in range(1, n + 1):
        terms = []
        for j in range(min(i, p), max(0, i - q) - 1, -1):
            k = i - j
            term = []
            if j >= 1:
                term.append(a[j - 1])
            if k >= 1:
                term.append(b[k - 1])
            terms.append(term)
        for term in terms:
            db.add_clause([-l for l in term] + [z[i - 1]])
        prod = 1
        for term in terms:
            prod *= len(term)
        if prod <= _BACKWARD_PRODUCT_CAP:
            for combo in itertools.product(*terms):
                db.add_clause(list(combo) + [-z[i - 1]])
        else:
            for j in range(0, p + 1):
                k = i - 1 - j
                if k < 0 or k > q:
                    continue
                clause = []
                if j < p:
                    clause.append(a[j])
                if k < q:
                    clause.append(b[k])
                clause.append(-z[i - 1])
                db.add_clause(clause)
    return z


# ---------------------------------------------------------------------------
# odd-even sorting and cardinality networks (true side only)


def _direct_sort(inputs, out_n, db: CnfBuilder):
    z = [db.new_var("sort", f"ge{t}") for t in range(1, out_n + 1)]
    for t in range(1, out_n + 1):
        for subset in itertools.combinations(inputs, t):
            db.add_clause([-l for l in subset] + [z[t - 1]])
    return z


def _direct_merge(a, b, out_n, db: CnfBuilder):
    z = [db.new_var("merge", f"ge{t}") for t in range(1, out_n + 1)]
    la, lb = len(a), len(b)
    for t in range(1, out_n + 1):
        for i in range(min(t, la), max(0, t - lb) - 1, -1):
            j = t - i
            clause = []
            if i >= 1:
                clause.append(-a[i - 1])
            if j >= 1:
                clause.append(-b[j - 1])
            clause.append(z[t - 1])
            db.add_clause(clause)
    return z


def smerge(a, b, cap: int, db: CnfBuilder):
    """Merge two sorted unary vectors, materializing at most `cap` outputs."""
    a = [l for l in a if l != FALSE_LIT]
    b = [l for l in b if l != FALSE_LIT]
    la, lb = len(a), len(b)
    out_n = min(cap, la + lb)
    if out_n <= 0:
        return []
    if la == 0:
        return b[:out_n]
    if lb == 0:
        return a[:out_n]
    if min(la, lb) <= DIRECT_MERGE_SIDE:
        return _direct_merge(a, b, out_n, db)
    d = smerge(a[0::2], b[0::2], cap // 2 + 1, db)
    e = smerge(a[1::2], b[1::2], cap // 2, db)
    out = [d[0]]
    i = 1
    while len(out) < out_n:
        has_e = i - 1 < len(e)
        has_d = i < len(d)
        if has_e and has_d:
            zo = db.new_var("merge", f"ge{len(out) + 1}")
            db.add_clause([-e[i - 1], zo])
            db.add_clause([-d[i], zo])
            out.append(zo)
            if len(out) < out_n:
                za = db.new_var("merge", f"ge{len(out) + 1}")
                db.add_clause([-e[i - 1], -d[i], za])
                out.append(za)
            i += 1
        elif has_e:
            out.append(e[i - 1])
            i += 1
        elif has_d:
            out.append(d[i])
            i += 1
        else:
            break
    return out


def sorted_count_network(inputs, cap: int, db: CnfBuilder):
    """Unary count of true inputs; only the first `cap` outputs materialized."""
    inputs = [l for l in inputs if l != FALSE_LIT]
    n = len(inputs)
    out_n = min(cap, n)
    if out_n <= 0:
        return []
    if n <= DIRECT_SORT_MAX:
        return _direct_sort(inputs, out_n, db)
    mid = (n + 1) // 2
    a = sorted_count_network(inputs[:mid], cap, db)
    b = sorted_count_network(inputs[mid:], cap, db)
    return smerge(a, b, cap, db)


def oe_sort(inputs, db: CnfBuilder):
    return sorted_count_network(inputs, len(inputs), db)


def oe_merge(a, b, db: CnfBuilder):
    return smerge(a, b, len(a) + len(b), db)


def card_network(inputs, k: int, db: CnfBuilder):
    """First k+1 unary count outputs (k >= 1)."""
    return sorted_count_network(inputs, k + 1, db)


def simplified_merge(a, b, k: int, db: CnfBuilder):
    return smerge(a, b, k + 1, db)


# ---------------------------------------------------------------------------
# size prediction (mirrors the emitters exactly; used by base-search costing)


@lru_cache(maxsize=None)
def merge_shape(la: int, lb: int, cap: int):
    """(outputs, vars, clauses) that smerge(a, b, cap) would emit."""
    out_n = min(cap, la + lb)
    if out_n <= 0 or la == 0 or lb == 0:
        return min(out_n, la + lb) if out_n > 0 else 0, 0, 0
    if min(la, lb) <= DIRECT_MERGE_SIDE:
        nclauses = 0
        for t in range(1, out_n + 1):
            nclauses += min(t, la) - max(0, t - lb) + 1
        return out_n, out_n, nclauses
    do, dv, dc = merge_shape((la + 1) // 2, (lb + 1) // 2, cap // 2 + 1)
    eo, ev, ec = merge_shape(la // 2, lb // 2, cap // 2)
    nvars, nclauses = dv + ev, dc + ec
    produced = 1
    i = 1
    while produced < out_n:
        has_e = i - 1 < eo
        has_d = i < do
        if has_e and has_d:
            nvars += 1
            nclauses += 2
            produced += 1
            if produced < out_n:
                nvars += 1
                nclauses += 1
                produced += 1
            i += 1
        elif has_e or has_d:
            produced += 1
            i += 1
        else:
            break
    return produced, nvars, nclauses


@lru_cache(maxsize=None)
def sort_shape(n: int, cap: int):
    """(outputs, vars, clauses) that sorted_count_network would emit."""
    out_n = min(cap, n)
    if out_n <= 0:
        return 0, 0, 0
    if n <= DIRECT_SORT_MAX:
        nclauses = 0
        from math import comb

        for t in range(1, out_n + 1):
            nclauses += comb(n, t)
        return out_n, out_n, nclauses
    mid = (n + 1) // 2
    ao, av, ac = sort_shape(mid, cap)
    bo, bv, bc = sort_shape(n - mid, cap)
    mo, mv, mc = merge_shape(ao, bo, cap)
    return mo, av + bv + mv, ac + bc + mc
