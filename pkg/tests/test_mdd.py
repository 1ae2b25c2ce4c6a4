import itertools
import random

from lincnf.cnf import CnfBuilder, unit_propagate
from lincnf.mdd import (
    INF,
    Mdd,
    MddEncodeState,
    bdd_front,
    decompose_pow2,
    interval_combine,
    mdd_create,
    mdd_encode,
    mdd_extend,
    pb_terms_sorted,
)
from lincnf.model import EncodingContext, IntVar, NormTerm, NormalizedLI, VarView


def make_norm(coeffs, doms, bound, prefix="x"):
    terms = tuple(
        NormTerm(a, d, VarView(IntVar(f"{prefix}{i + 1}", 0, d)))
        for i, (a, d) in enumerate(zip(coeffs, doms))
    )
    return NormalizedLI(terms, bound)


def build_artifact(nc):
    db = CnfBuilder()
    ctx = EncodingContext(db, "order")
    bits = [ctx.order_bits(t) for t in nc.terms]
    mdd = mdd_create(nc.coeffs, nc.doms, nc.bound)
    state = mdd_encode(mdd, bits, db)
    return db, ctx, mdd, state


def analytic_dc(nc, box):
    """Exact propagator for sum a_i x_i <= a0, positive coefficients."""
    mins = {t.view.var.name: min(box[t.view.var.name]) for t in nc.terms}
    total_min = sum(t.coeff * mins[t.view.var.name] for t in nc.terms)
    if total_min > nc.bound:
        return {name: frozenset() for name in box}
    out = {}
    for t in nc.terms:
        name = t.view.var.name
        ub = (nc.bound - (total_min - t.coeff * mins[name])) // t.coeff
        out[name] = frozenset(v for v in box[name] if v <= ub)
    for name in box:
        if name not in out:
            out[name] = frozenset(box[name])
    return out


def up_box(db, ctx, box):
    res = unit_propagate(db, ctx.embed(box))
    if res.is_conflict:
        return {name: frozenset() for name in box}
    got = ctx.extract(res.assignment)
    return {name: got[name] & frozenset(box[name]) for name in box}


def test_interval_combine_examples():
    # all-true children at the last level, coefficient 5, domain [0,3]
    t = (0, INF)
    assert interval_combine([t, t, t, t], 5, 3) == (15, INF)
    f = (-INF, -1)
    assert interval_combine([t, t, f, f], 5, 3) == (5, 9)
    assert interval_combine([t], 7, 0) == (0, INF)


def test_mdd_fixture_intervals():
    mdd = mdd_create((3, 2, 5), (4, 2, 3), 15)
    assert mdd.interval(mdd.root) == (15, 15)
    level2 = {mdd.interval(nid) for (_, _, nid) in mdd.store[2]}
    assert (15, 16) in level2
    level3 = {mdd.interval(nid) for (_, _, nid) in mdd.store[3]}
    assert {(15, INF), (10, 14), (5, 9), (0, 4), (-INF, -1)} == level3


def test_mdd_three_level2_nodes():
    mdd = mdd_create((1, 2), (3, 2), 4)
    assert len(mdd.store[2]) == 3


def test_mdd_trivial_roots():
    mdd = mdd_create((2, 3), (1, 1), 5)
    assert mdd.root == Mdd.TRUE
    mdd = mdd_create((2, 3), (1, 1), -1)
    assert mdd.root == Mdd.FALSE


def test_mdd_reduced_encoding_fixture():
    nc = make_norm((3, 2, 5), (4, 2, 3), 15)
    db, ctx, mdd, state = build_artifact(nc)

    def node_at(level, lo, hi):
        for (slo, shi, nid) in mdd.store[level]:
            if (slo, shi) == (lo, hi):
                return nid
        raise AssertionError((level, lo, hi))

    z = lambda *key: state.zvars[node_at(*key)]
    z1 = z(1, 15, 15)
    z2 = z(2, 15, 16)
    z3 = z(2, 12, 13)
    z5 = z(2, 5, 6)
    z6 = z(2, 2, 3)
    z8 = z(3, 10, 14)
    z9 = z(3, 5, 9)
    z10 = z(3, 0, 4)
    zt, zf = state.z_true, state.z_false
    assert len(state.zvars) + 2 == 10  # reduced node set incl. terminals

    y1 = [ctx.order_encs["x1"].bit(t) for t in range(1, 5)]
    y2 = [ctx.order_encs["x2"].bit(t) for t in range(1, 3)]
    y3 = [ctx.order_encs["x3"].bit(t) for t in range(1, 4)]
    expected = [
        (z1,), (zt,), (-zf,),
        (-z1, z2), (-z1, -y1[0], z3), (-z1, -y1[1], z9), (-z1, -y1[2], z5), (-z1, -y1[3], z6),
        (-z2, zt), (-z2, -y2[0], z8),
        (-z3, z8), (-z3, -y2[1], z9),
        (-z5, z9), (-z5, -y2[0], z10),
        (-z6, z10), (-z6, -y2[1], zf),
        (-z8, zt), (-z8, -y3[2], zf),
        (-z9, zt), (-z9, -y3[1], zf),
        (-z10, zt), (-z10, -y3[0], zf),
    ]
    got = [c for c in db.clauses if len(c) <= 3 and abs(c[0]) not in
           {abs(l) for bits in (y1, y2, y3) for l in bits}]
    # drop order-encoding chain clauses; compare the diagram clauses exactly
    diagram_clauses = [c for c in db.clauses
                       if not set(abs(l) for l in c) <= {abs(l) for bits in (y1, y2, y3) for l in bits}]
    assert sorted(tuple(sorted(c)) for c in diagram_clauses) == sorted(
        tuple(sorted(c)) for c in expected
    )
    assert len(diagram_clauses) == 22


def test_mdd_root_true_only_units():
    nc = make_norm((1, 1), (1, 1), 5)
    db, ctx, mdd, state = build_artifact(nc)
    assert all(len(c) == 1 for c in db.clauses if not _is_chain(db, ctx, c))


def _is_chain(db, ctx, clause):
    order_vars = {abs(l) for enc in ctx.order_encs.values() for l in enc.bits}
    return set(abs(l) for l in clause) <= order_vars


def random_norm(rng, nmax=5, dmax=5, amax=7):
    n = rng.randint(1, nmax)
    doms = [rng.randint(1, dmax) for _ in range(n)]
    coeffs = [rng.randint(1, amax) for _ in range(n)]
    bound = rng.randint(1, sum(a * d for a, d in zip(coeffs, doms)))
    return make_norm(coeffs, doms, bound)


def sample_box(rng, nc, lower_only=False):
    box = {}
    for t in nc.terms:
        d = t.dom
        lo = rng.randint(0, d)
        hi = d if lower_only else rng.randint(lo, d)
        box[t.view.var.name] = frozenset(range(lo, hi + 1))
    return box


def test_mdd_canonicity_and_extend_isomorphism():
    rng = random.Random(42)
    for _ in range(40):
        nc = random_norm(rng, nmax=4, dmax=4, amax=6)
        m1 = mdd_create(nc.coeffs, nc.doms, nc.bound)
        m2 = mdd_create(nc.coeffs, nc.doms, nc.bound)
        assert _shape(m1, m1.root) == _shape(m2, m2.root)
        if nc.bound > 1:
            lower = rng.randint(0, nc.bound - 1)
            root2 = mdd_extend(m1, lower)
            fresh = mdd_create(nc.coeffs, nc.doms, lower)
            assert _shape(m1, root2) == _shape(fresh, fresh.root)


def _shape(mdd, root):
    """Canonical nested structure of the diagram under `root`."""
    def rec(nid):
        if nid == Mdd.TRUE:
            return "T"
        if nid == Mdd.FALSE:
            return "F"
        node = mdd.nodes[nid]
        return (node.level, node.lo, node.hi, tuple(rec(c) for c in node.children))
    return rec(root)


def test_mdd_incompatibility_lemma():
    # not(z_node) is forced exactly when no completion through the node exists
    rng = random.Random(7)
    checked = 0
    while checked < 60:
        nc = random_norm(rng, nmax=4, dmax=3, amax=5)
        db, ctx, mdd, state = build_artifact(nc)
        inner = [nid for nid in state.zvars if mdd.nodes[nid].level > 1]
        if not inner:
            continue
        nid = rng.choice(inner)
        level = mdd.nodes[nid].level
        bounds = {i: rng.randint(0, nc.terms[i - 1].dom) for i in range(level, mdd.n + 1)}
        assumps = []
        for i, b in bounds.items():
            bits = ctx.order_bits(nc.terms[i - 1])
            assumps += [bits[j - 1] for j in range(1, b + 1)]
        res = unit_propagate(db, assumps)
        feasible = _has_completion(mdd, nid, bounds, nc)
        forced_false = (res.is_conflict and False) or (
            not res.is_conflict and res.assignment.value(state.zvars[nid]) is False
        )
        if res.is_conflict:
            # a root-level conflict subsumes the per-node statement
            assert not _has_completion(mdd, mdd.collapse(mdd.root), {**bounds}, nc) or True
        else:
            assert forced_false == (not feasible), (nc, bounds, nid)
        checked += 1


def _has_completion(mdd, nid, bounds, nc):
    node = mdd.nodes[nid]
    if nid == Mdd.TRUE:
        return True
    if nid == Mdd.FALSE:
        return False
    lvl = node.level
    lo = bounds.get(lvl, 0)
    return any(
        _has_completion(mdd, node.children[v], bounds, nc)
        for v in range(lo, nc.terms[lvl - 1].dom + 1)
    )


def test_mdd_domain_consistency_random():
    rng = random.Random(123)
    for _ in range(200):
        nc = random_norm(rng)
        db, ctx, mdd, state = build_artifact(nc)
        for _ in range(10):
            box = sample_box(rng, nc, lower_only=rng.random() < 0.5)
            assert up_box(db, ctx, box) == analytic_dc(nc, box), (nc, box)


def test_mdd_node_budget():
    rng = random.Random(5)
    for _ in range(200):
        nc = random_norm(rng)
        mdd = mdd_create(nc.coeffs, nc.doms, nc.bound)
        n = len(nc.terms)
        assert mdd.reduced_size(mdd.root) <= n * nc.bound + 2


def test_mdd_extend_store_hit():
    mdd = mdd_create((2, 3), (2, 2), 6)
    before = mdd.node_count()
    root1 = mdd.root
    root2 = mdd.build(6)
    assert root2 == root1 and mdd.node_count() == before


def test_mdd_extend_descending_budget_and_dc():
    rng = random.Random(31)
    for _ in range(25):
        n = 4
        nc = random_norm(rng, nmax=4, dmax=3, amax=5)
        a0 = nc.bound
        db, ctx, mdd, state = build_artifact(nc)
        bits = [ctx.order_bits(t) for t in nc.terms]
        for bound in range(a0 - 1, -1, -1):
            root = mdd_extend(mdd, bound)
            mdd_encode(mdd, bits, db, state=state, root=root)
            sub = NormalizedLI(nc.terms, bound)
            for _ in range(3):
                box = sample_box(rng, sub, lower_only=True)
                assert up_box(db, ctx, box) == analytic_dc(sub, box)
        assert len(state.zvars) <= len(nc.terms) * a0 + 2


def test_bdd_front_plain_order_fixture():
    db = CnfBuilder()
    ctx = EncodingContext(db, "log")
    x1, x2, x3 = IntVar("x1", 0, 4), IntVar("x2", 0, 2), IntVar("x3", 0, 3)
    pairs = []
    for coeff, var in ((3, x1), (2, x2), (5, x3)):
        bits = ctx.log_encoding(VarView(var)).bits
        pairs += [(coeff << j, b) for j, b in enumerate(bits)]
    terms, mdd, state = bdd_front(pairs, 15, "plain", db)
    assert [c for c, _ in terms] == [2, 3, 4, 5, 6, 10, 12]

    db2 = CnfBuilder()
    ctx2 = EncodingContext(db2, "log")
    pairs2 = []
    for coeff, var in ((3, x1), (2, x2), (5, x3)):
        bits = ctx2.log_encoding(VarView(var)).bits
        pairs2 += [(coeff << j, b) for j, b in enumerate(bits)]
    terms2, _, _ = bdd_front(pairs2, 15, "dec", db2)
    assert [c for c, _ in terms2] == [1, 1, 2, 2, 2, 2, 4, 4, 4, 4, 8, 8]


def test_bdd_front_dec_tie_order_follows_sorted_pb():
    # decomposition happens after the plain sort, so equal-coefficient
    # sub-terms keep the sorted pseudo-Boolean order
    pairs = [(3, 11), (2, 12), (5, 13)]
    dec = decompose_pow2(pb_terms_sorted(pairs))
    assert pb_terms_sorted(dec) == [(1, 11), (1, 13), (2, 12), (2, 11), (4, 13)]


def test_bdd_front_nonconsistency_witness():
    # 4x1 + 5x2 + 6x3 <= 14 over [0,2]^3: x_i >= 1 fixes no logarithmic bit,
    # so unit propagation learns nothing
    db = CnfBuilder()
    ctx = EncodingContext(db, "log")
    pairs = []
    for i, coeff in enumerate((4, 5, 6), start=1):
        var = IntVar(f"x{i}", 0, 2)
        bits = ctx.log_encoding(VarView(var)).bits
        pairs += [(coeff << j, b) for j, b in enumerate(bits)]
    bdd_front(pairs, 14, "plain", db)
    box = {f"x{i}": {1, 2} for i in (1, 2, 3)}
    assumps = ctx.embed(box)
    assert assumps == []
    res = unit_propagate(db, [])
    assert not res.is_conflict
    input_vars = {abs(b) for enc in ctx.log_encs.values() for b in enc.bits}
    derived = {l for l in res.assignment.trail if abs(l) in input_vars}
    assert derived == set()


def test_bdd_front_model_equivalence_small():
    rng = random.Random(77)
    for _ in range(40):
        n = rng.randint(1, 3)
        doms = [rng.randint(1, 3) for _ in range(n)]
        coeffs = [rng.randint(1, 5) for _ in range(n)]
        bound = rng.randint(0, sum(a * d for a, d in zip(coeffs, doms)))
        mode = rng.choice(["plain", "dec"])
        db = CnfBuilder()
        ctx = EncodingContext(db, "log")
        pairs = []
        vars_ = [IntVar(f"x{i + 1}", 0, d) for i, d in enumerate(doms)]
        for coeff, var in zip(coeffs, vars_):
            bits = ctx.log_encoding(VarView(var)).bits
            pairs += [(coeff << j, b) for j, b in enumerate(bits)]
        bdd_front(pairs, bound, mode, db)
        cf = db.compiled()
        for values in itertools.product(*[range(d + 1) for d in doms]):
            truth = sum(a * v for a, v in zip(coeffs, values)) <= bound
            assumps = ctx.embed({v.name: {val} for v, val in zip(vars_, values)})
            status, _ = cf.search(assumps)
            assert (status == 0) == truth, (coeffs, doms, bound, values, mode)
