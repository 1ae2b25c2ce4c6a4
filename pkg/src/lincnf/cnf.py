"""Clause database, unit propagation and DIMACS I/O.

Literals are DIMACS-style signed ints: variable ids are 1-based, `-v`
negates.  Two sentinel literals TRUE_LIT / FALSE_LIT may appear in clauses
handed to :meth:`CnfBuilder.add_clause`; they are simplified away at
insertion (a clause containing TRUE_LIT is dropped, FALSE_LIT literals are
removed).  Emitters use them for constant inputs so that fixed wiring never
produces junk clauses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels

Lit = int
VarId = int
Clause = tuple  # tuple of Lit

TRUE_LIT: Lit = 1 << 30
FALSE_LIT: Lit = -TRUE_LIT

MAX_VARS = (1 << 30) - 1


class CnfError(Exception):
    pass


class DimacsFormatError(CnfError):
    def __init__(self, message, line_no):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def neg(lit: Lit) -> Lit:
    return -lit


class CnfBuilder:
    """Growable clause database with fresh-variable allocation.

    Single writer; a finished builder can be shared read-only across
    threads (unit_propagate does not mutate it).
    """

    def __init__(self):
        self.num_vars: int = 0
        self.clauses: list[Clause] = []
        self.roles: list[tuple[str, str]] = []  # parallel to var ids, 0-based
        self._compiled = None
        self._true_lit: Lit | None = None

    def new_var(self, role: str = "", detail: str = "") -> VarId:
        if self.num_vars >= MAX_VARS:
            raise CnfError("variable counter overflow")
        self.num_vars += 1
        self.roles.append((role, detail))
        return self.num_vars

    def new_vars(self, n: int, role: str = "", detail: str = "") -> list[VarId]:
        return [self.new_var(role, f"{detail}[{i}]" if detail else str(i)) for i in range(n)]

    def true_lit(self) -> Lit:
        """A shared variable fixed true by a unit clause (allocated lazily)."""
        if self._true_lit is None:
            v = self.new_var("const", "true")
            self.add_clause([v])
            self._true_lit = v
        return self._true_lit

    def add_clause(self, lits) -> None:
        seen = set()
        out = []
        for l in lits:
            if l == TRUE_LIT:
                return
            if l == FALSE_LIT:
                continue
            if not isinstance(l, (int, np.integer)) or l == 0:
                raise CnfError(f"bad literal {l!r}")
            v = l if l > 0 else -l
            if v > self.num_vars:
                raise CnfError(f"literal {l} references unallocated variable")
            if -l in seen:
                return  # tautology
            if l not in seen:
                seen.add(l)
                out.append(int(l))
        self.clauses.append(tuple(out))
        self._compiled = None

    def add_clauses(self, clause_iter) -> None:
        for c in clause_iter:
            self.add_clause(c)

    def stats(self) -> tuple[int, int]:
        return self.num_vars, len(self.clauses)

    def compiled(self) -> "CompiledFormula":
        if self._compiled is None or self._compiled.num_clauses != len(self.clauses):
            self._compiled = CompiledFormula(self.num_vars, self.clauses)
        return self._compiled


class CompiledFormula:
    """CSR arrays for the kernels, plus per-literal occurrence lists."""

    def __init__(self, num_vars: int, clauses):
        self.num_vars = num_vars
        self.num_clauses = len(clauses)
        self.has_empty = any(len(c) == 0 for c in clauses)
        nlits = sum(len(c) for c in clauses)
        lits = np.empty(nlits, np.int32)
        starts = np.empty(len(clauses) + 1, np.int32)
        pos = 0
        for i, c in enumerate(clauses):
            starts[i] = pos
            for l in c:
                lits[pos] = l
                pos += 1
        starts[len(clauses)] = pos
        # occurrence lists: literal code = 2*var + (0 if positive else 1)
        ncodes = 2 * (num_vars + 1)
        counts = np.zeros(ncodes + 1, np.int32)
        codes = 2 * np.abs(lits) + (lits < 0)
        np.add.at(counts, codes + 1, 1)
        occ_starts = np.cumsum(counts, dtype=np.int32)
        occ_items = np.empty(nlits, np.int32)
        fill = occ_starts[:-1].copy()
        for i in range(len(clauses)):
            for k in range(starts[i], starts[i + 1]):
                c = codes[k]
                occ_items[fill[c]] = i
                fill[c] += 1
        self.lits = lits
        self.starts = starts
        self.occ_starts = occ_starts
        self.occ_items = occ_items
        units = [(c[0], i) for i, c in enumerate(clauses) if len(c) == 1]
        self.unit_lits = np.array([u for u, _ in units], np.int32)
        self.unit_idx = np.array([i for _, i in units], np.int32)
        # reusable buffers (single-threaded use per formula)
        self._values = np.zeros(num_vars + 1, np.int8)
        self._trail = np.empty(num_vars + 2, np.int32)

    def propagate(self, assumps):
        """Returns (status, values, trail_array, conflict_clause_index)."""
        if self.has_empty:
            return _kernels.CONFLICT, self._values, np.empty(0, np.int32), self._empty_idx()
        a = np.asarray(list(assumps), np.int32) if not isinstance(assumps, np.ndarray) else assumps
        values = self._values
        values[:] = 0
        status, ntrail, ci = _kernels.propagate(
            self.lits, self.starts, self.occ_starts, self.occ_items,
            self.unit_lits, self.unit_idx, a, values, self._trail,
        )
        return status, values, self._trail[:ntrail], ci

    def search(self, assumps):
        """Returns (status, values)."""
        if self.has_empty:
            return _kernels.CONFLICT, self._values
        a = np.asarray(list(assumps), np.int32) if not isinstance(assumps, np.ndarray) else assumps
        values = self._values
        values[:] = 0
        status, _ = _kernels.search(
            self.lits, self.starts, self.occ_starts, self.occ_items,
            self.unit_lits, self.unit_idx, self.num_vars, a, values, self._trail,
        )
        return status, values

    def _empty_idx(self):
        for i in range(self.num_clauses):
            if self.starts[i] == self.starts[i + 1]:
                return i
        return -1


class PartialAssignment:
    """Consistent set of literals plus the order they were assigned in."""

    def __init__(self, lits=()):
        self.polarity: dict[VarId, bool] = {}
        self.trail: list[Lit] = []
        for l in lits:
            self.assign(l)

    def assign(self, lit: Lit) -> None:
        v = abs(lit)
        want = lit > 0
        cur = self.polarity.get(v)
        if cur is None:
            self.polarity[v] = want
            self.trail.append(lit)
        elif cur != want:
            raise CnfError(f"contradictory literal {lit} in partial assignment")

    def lits(self) -> list[Lit]:
        return list(self.trail)

    def value(self, lit: Lit):
        v = self.polarity.get(abs(lit))
        if v is None:
            return None
        return v if lit > 0 else not v

    def __contains__(self, lit: Lit) -> bool:
        return self.value(lit) is True

    def __len__(self):
        return len(self.trail)


@dataclass
class PropResult:
    conflict: Clause | None
    assignment: PartialAssignment = field(default_factory=PartialAssignment)

    @property
    def is_conflict(self) -> bool:
        return self.conflict is not None


def _as_lits(assumptions) -> list[Lit]:
    if isinstance(assumptions, PartialAssignment):
        return assumptions.lits()
    return list(assumptions)


def unit_propagate(db: CnfBuilder, assumptions=()) -> PropResult:
    """Unit-propagation fixpoint of `db` under `assumptions`.

    The fixpoint is unique, so clause visitation order does not matter.
    A conflict is a normal result carrying the violated clause (an empty
    tuple when the contradiction comes from the assumptions themselves or
    an empty clause in the database).
    """
    lits = _as_lits(assumptions)
    cf = db.compiled()
    status, values, trail, ci = cf.propagate(lits)
    if status == _kernels.CONFLICT:
        clause = db.clauses[ci] if ci >= 0 else ()
        pa = PartialAssignment()
        for l in trail:
            pa.assign(int(l))
        return PropResult(conflict=clause, assignment=pa)
    pa = PartialAssignment()
    for l in trail:
        pa.assign(int(l))
    return PropResult(conflict=None, assignment=pa)


def write_dimacs(db: CnfBuilder, sink) -> None:
    """Standard DIMACS CNF: `p cnf V C` header then 0-terminated clauses."""
    close = False
    if isinstance(sink, str):
        sink = open(sink, "w")
        close = True
    try:
        sink.write(f"p cnf {db.num_vars} {len(db.clauses)}\n")
        for c in db.clauses:
            sink.write(" ".join(str(l) for l in c))
            sink.write(" 0\n" if c else "0\n")
    finally:
        if close:
            sink.close()


def parse_dimacs(source) -> CnfBuilder:
    close = False
    if isinstance(source, str):
        source = open(source)
        close = True
    try:
        db = CnfBuilder()
        header = None
        pending: list[int] = []
        nclauses = 0
        for line_no, raw in enumerate(source, start=1):
            line = raw.strip()
            if not line or line.startswith("c"):
                continue
            if line.startswith("p"):
                if header is not None:
                    raise DimacsFormatError("duplicate header", line_no)
                parts = line.split()
                if len(parts) != 4 or parts[1] != "cnf":
                    raise DimacsFormatError(f"malformed header {line!r}", line_no)
                try:
                    nv, nclauses = int(parts[2]), int(parts[3])
                except ValueError:
                    raise DimacsFormatError(f"malformed header {line!r}", line_no)
                header = (nv, nclauses)
                for _ in range(nv):
                    db.new_var()
                continue
            if header is None:
                raise DimacsFormatError("clause before header", line_no)
            try:
                nums = [int(t) for t in line.split()]
            except ValueError:
                raise DimacsFormatError(f"bad clause token in {line!r}", line_no)
            for x in nums:
                if x == 0:
                    db.clauses.append(tuple(pending))
                    pending = []
                else:
                    if abs(x) > db.num_vars:
                        raise DimacsFormatError(f"literal {x} exceeds header", line_no)
                    pending.append(x)
        if pending:
            raise DimacsFormatError("unterminated clause at end of input", line_no)
        if header is not None and len(db.clauses) != nclauses:
            raise DimacsFormatError(
                f"header promised {nclauses} clauses, got {len(db.clauses)}", line_no
            )
        db._compiled = None
        return db
    finally:
        if close:
            source.close()


def write_role_map(db: CnfBuilder, sink) -> None:
    """One line per named variable: ROLE<TAB>DETAILS<TAB>VARID."""
    close = False
    if isinstance(sink, str):
        sink = open(sink, "w")
        close = True
    try:
        for i, (role, detail) in enumerate(db.roles, start=1):
            if role:
                sink.write(f"{role}\t{detail}\t{i}\n")
    finally:
        if close:
            sink.close()
