"""Flat-array unit propagation and DPLL search kernels.

The clause database is compiled to CSR-style int32 arrays (literals,
clause offsets, and per-literal occurrence lists).  The two kernels below
are written against those arrays only, so the same source runs either
JIT-compiled through numba or interpreted on plain numpy buffers.  Set
``LINCNF_JIT=0`` to force the interpreted path; it is also used
automatically when numba is not installed.
"""

import os

import numpy as np


def _jit_requested() -> bool:
    flag = os.environ.get("LINCNF_JIT", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


JIT_ENABLED = False
if _jit_requested():
    try:
        from numba import njit

        JIT_ENABLED = True
    except ImportError:
        JIT_ENABLED = False

if JIT_ENABLED:
    _compiled = njit(cache=True)
else:
    def _compiled(fn):
        return fn


# Assignment codes in `values`: 0 undefined, 1 true, -1 false.
# Status codes returned by the kernels.
OK = 0
CONFLICT = 1


@_compiled
def _enqueue(lit, values, trail, ntrail):
    """Assign `lit` true. Returns new trail length, or -1 on contradiction."""
    v = lit if lit > 0 else -lit
    s = 1 if lit > 0 else -1
    cur = values[v]
    if cur == 0:
        values[v] = s
        trail[ntrail] = lit
        return ntrail + 1
    if cur == s:
        return ntrail
    return -1


@_compiled
def _propagate_from(lits, starts, occ_starts, occ_items, values, trail, head, ntrail):
    """Run unit propagation from trail position `head` to fixpoint.

    Returns (status, ntrail, conflict_clause_index).
    """
    while head < ntrail:
        lit = trail[head]
        head += 1
        # Visit clauses containing the negation of the newly-true literal.
        neg = -lit
        nv = neg if neg > 0 else -neg
        code = 2 * nv + (0 if neg > 0 else 1)
        for oi in range(occ_starts[code], occ_starts[code + 1]):
            ci = occ_items[oi]
            sat = False
            nundef = 0
            implied = 0
            for k in range(starts[ci], starts[ci + 1]):
                lk = lits[k]
                vk = lk if lk > 0 else -lk
                sk = 1 if lk > 0 else -1
                val = values[vk]
                if val == sk:
                    sat = True
                    break
                if val == 0:
                    nundef += 1
                    implied = lk
                    if nundef > 1:
                        break
            if sat or nundef > 1:
                continue
            if nundef == 0:
                return CONFLICT, ntrail, ci
            ntrail2 = _enqueue(implied, values, trail, ntrail)
            # implied is undefined here, so enqueue cannot contradict
            ntrail = ntrail2
    return OK, ntrail, -1


@_compiled
def propagate(lits, starts, occ_starts, occ_items, unit_lits, unit_idx, assumps, values, trail):
    """Unit propagation under assumption literals.

    `unit_lits`/`unit_idx` carry the database's unit clauses, which seed
    propagation (occurrence lists only fire on newly assigned variables).
    `values` must be zeroed by the caller.  Returns
    (status, trail_length, conflict_clause_index).
    """
    ntrail = 0
    for i in range(assumps.shape[0]):
        ntrail2 = _enqueue(assumps[i], values, trail, ntrail)
        if ntrail2 < 0:
            return CONFLICT, ntrail, -1
        ntrail = ntrail2
    for i in range(unit_lits.shape[0]):
        ntrail2 = _enqueue(unit_lits[i], values, trail, ntrail)
        if ntrail2 < 0:
            return CONFLICT, ntrail, unit_idx[i]
        ntrail = ntrail2
    return _propagate_from(lits, starts, occ_starts, occ_items, values, trail, 0, ntrail)


@_compiled
def search(lits, starts, occ_starts, occ_items, unit_lits, unit_idx, nvars, assumps, values, trail):
    """Complete DPLL: branch on the lowest unassigned variable, true first.

    Chronological backtracking; deterministic.  Returns (status, trail_length)
    with the model left in `values` when SAT.
    """
    status, ntrail, _ = propagate(
        lits, starts, occ_starts, occ_items, unit_lits, unit_idx, assumps, values, trail
    )
    if status == CONFLICT:
        return CONFLICT, ntrail

    dec_pos = np.empty(nvars + 1, np.int32)
    dec_var = np.empty(nvars + 1, np.int32)
    flipped = np.empty(nvars + 1, np.int8)
    ndec = 0

    while True:
        v = 1
        while v <= nvars and values[v] != 0:
            v += 1
        if v > nvars:
            return OK, ntrail
        dec_pos[ndec] = ntrail
        dec_var[ndec] = v
        flipped[ndec] = 0
        ndec += 1
        values[v] = 1
        trail[ntrail] = v
        ntrail += 1
        while True:
            status, ntrail, _ = _propagate_from(
                lits, starts, occ_starts, occ_items, values, trail, ntrail - 1, ntrail
            )
            if status == OK:
                break
            # undo to the most recent decision that can still be flipped
            while ndec > 0 and flipped[ndec - 1] == 1:
                pos = dec_pos[ndec - 1]
                for t in range(pos, ntrail):
                    lt = trail[t]
                    values[lt if lt > 0 else -lt] = 0
                ntrail = pos
                ndec -= 1
            if ndec == 0:
                return CONFLICT, ntrail
            pos = dec_pos[ndec - 1]
            for t in range(pos, ntrail):
                lt = trail[t]
                values[lt if lt > 0 else -lt] = 0
            ntrail = pos
            dv = dec_var[ndec - 1]
            flipped[ndec - 1] = 1
            values[dv] = -1
            trail[ntrail] = -dv
            ntrail += 1
