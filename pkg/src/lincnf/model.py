"""Integer variables, linear constraints, and their propositional encodings.

Every encoder consumes the canonical form `sum a_i * x_i <= a0` with
`a_i > 0` and `x_i` in `[0, d_i]`.  :func:`normalize` rewrites the five
relational operators into that form, shifting variables with nonzero lower
bounds (x' = x - l) and reflecting negatively-weighted ones (x' = u - x).
The shift/reflection is recorded in a view so that order-encoding literals
of the transformed variable remap onto the bits of the original variable;
each original variable owns a single set of order bits shared by every
constraint it appears in.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cnf import CnfBuilder, Lit


class ModelError(Exception):
    pass


class ModelFormatError(ModelError):
    def __init__(self, message, line_no):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class IntVar:
    name: str
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ModelError(f"variable {self.name}: empty domain [{self.lo},{self.hi}]")


RELOPS = ("<=", ">=", "=", "<", ">")


class LinearConstraint:
    """sum of coeff*var terms compared to an integer right-hand side.

    A variable appearing several times has its coefficients merged.
    """

    def __init__(self, terms, relop: str, rhs: int):
        if relop not in RELOPS:
            raise ModelError(f"bad relational operator {relop!r}")
        merged: dict[str, list] = {}
        for coeff, var in terms:
            if var.name in merged:
                merged[var.name][0] += coeff
            else:
                merged[var.name] = [coeff, var]
        self.terms = tuple((c, v) for c, v in merged.values() if c != 0)
        self.relop = relop
        self.rhs = rhs

    def __repr__(self):
        body = " + ".join(f"{c}*{v.name}" for c, v in self.terms)
        return f"LinearConstraint({body} {self.relop} {self.rhs})"


class _FixedOne:
    """Placeholder variable of the trivially-false constraint 1*t <= 0.

    Its single order bit is hard-wired true, so any encoder turns the
    constraint into an immediate propositional contradiction.
    """

    def __repr__(self):
        return "FIXED_ONE"


FIXED_ONE = _FixedOne()


@dataclass(frozen=True)
class VarView:
    """Transformed variable x' over [0, hi-lo]: x - lo, or hi - x if negated."""

    var: IntVar
    negated: bool = False

    @property
    def dom(self) -> int:
        return self.var.hi - self.var.lo

    def to_norm(self, v: int) -> int:
        return self.var.hi - v if self.negated else v - self.var.lo

    def from_norm(self, w: int) -> int:
        return self.var.hi - w if self.negated else w + self.var.lo


@dataclass(frozen=True)
class BitsView:
    """A derived quantity whose order bits already live in the builder
    (e.g. the bounded sum variable introduced by coefficient grouping)."""

    name: str
    bits: tuple


@dataclass(frozen=True)
class NormTerm:
    coeff: int
    dom: int
    view: object  # VarView | BitsView | FIXED_ONE


@dataclass(frozen=True)
class NormalizedLI:
    """sum coeff_i * t_i <= bound with coeff_i > 0 and t_i in [0, dom_i]."""

    terms: tuple
    bound: int

    @property
    def coeffs(self):
        return tuple(t.coeff for t in self.terms)

    @property
    def doms(self):
        return tuple(t.dom for t in self.terms)

    def max_sum(self) -> int:
        return sum(t.coeff * t.dom for t in self.terms)

    def trivially_true(self) -> bool:
        return self.bound >= self.max_sum()


def _norm_le(terms, a0: int) -> NormalizedLI:
    merged: dict[str, list] = {}
    for coeff, var in terms:
        if var.name in merged:
            merged[var.name][0] += coeff
        else:
            merged[var.name] = [coeff, var]
    out = []
    for coeff, var in merged.values():
        dom = var.hi - var.lo
        if coeff == 0:
            continue
        if dom == 0:
            a0 -= coeff * var.lo
            continue
        if coeff > 0:
            a0 -= coeff * var.lo
            out.append(NormTerm(coeff, dom, VarView(var, negated=False)))
        else:
            a0 -= coeff * var.hi
            out.append(NormTerm(-coeff, dom, VarView(var, negated=True)))
    if not out:
        if a0 >= 0:
            return NormalizedLI((), a0)
        return NormalizedLI((NormTerm(1, 1, FIXED_ONE),), 0)
    return NormalizedLI(tuple(out), a0)


def normalize(c: LinearConstraint) -> list[NormalizedLI]:
    """Rewrite any relop into one or two canonical <= constraints."""
    neg_terms = [(-a, x) for a, x in c.terms]
    if c.relop == "<=":
        return [_norm_le(c.terms, c.rhs)]
    if c.relop == "<":
        return [_norm_le(c.terms, c.rhs - 1)]
    if c.relop == ">=":
        return [_norm_le(neg_terms, -c.rhs)]
    if c.relop == ">":
        return [_norm_le(neg_terms, -c.rhs - 1)]
    # equality: conjunction of <= and >=; domain consistency is not
    # guaranteed across the split (each half propagates on its own)
    return [_norm_le(c.terms, c.rhs), _norm_le(neg_terms, -c.rhs)]


@dataclass(frozen=True)
class OrderEncoding:
    """Threshold bits y^i <-> x >= i for i in [lo+1, hi], with chain clauses."""

    var: IntVar
    bits: tuple

    def bit(self, threshold: int) -> Lit:
        """Literal for x >= threshold (lo+1 <= threshold <= hi)."""
        return self.bits[threshold - self.var.lo - 1]


@dataclass(frozen=True)
class LogEncoding:
    """Binary bits of a [0, d] quantity, with lexicographic bound clauses."""

    d: int
    bits: tuple


def order_encode(x: IntVar, db: CnfBuilder) -> OrderEncoding:
    width = x.hi - x.lo
    bits = tuple(db.new_var("order", f"{x.name}>={x.lo + 1 + i}") for i in range(width))
    for k in range(width - 1):
        db.add_clause([-bits[k + 1], bits[k]])
    return OrderEncoding(x, bits)


def bit_of(i: int, d: int) -> int:
    return (d >> i) & 1


def lex_bound_clauses(bits, d: int):
    """Clauses forcing the word (LSB-first `bits`) to be <= d.

    Uses the subsumption-simplified form: for every zero bit of d, the one
    bits of d above it cannot all be set together with it.
    """
    m = len(bits)
    out = []
    for i in range(m - 1, -1, -1):
        if bit_of(i, d) == 0:
            clause = [-bits[j] for j in range(m - 1, i, -1) if bit_of(j, d) == 1]
            clause.append(-bits[i])
            out.append(clause)
    return out


def log_encode_width(d: int) -> int:
    return d.bit_length() if d > 0 else 0


def log_encode(name: str, d: int, db: CnfBuilder) -> LogEncoding:
    """Allocate binary bits for a quantity over [0, d] (d >= 0)."""
    m = log_encode_width(d)
    bits = tuple(db.new_var("logbit", f"{name}.{i}") for i in range(m))
    if d != (1 << m) - 1:
        for clause in lex_bound_clauses(bits, d):
            db.add_clause(clause)
    return LogEncoding(d, bits)


class EncodingContext:
    """Owns the variable encodings of one artifact: the (Y, F, e) triple.

    mode 'order': each original variable gets one shared set of order bits;
    transformed views remap thresholds onto those bits.
    mode 'log': each (variable, reflection) pair gets its own binary bits,
    since reflected values are not bitwise-renamable.
    """

    def __init__(self, db: CnfBuilder, mode: str):
        if mode not in ("order", "log"):
            raise ModelError(f"bad encoding mode {mode!r}")
        self.db = db
        self.mode = mode
        self.order_encs: dict[str, OrderEncoding] = {}
        self.log_encs: dict[tuple, LogEncoding] = {}
        self._vars: dict[str, IntVar] = {}
        self._fixed_one: Lit | None = None

    # -- allocation ------------------------------------------------------

    def order_encoding(self, var: IntVar) -> OrderEncoding:
        enc = self.order_encs.get(var.name)
        if enc is None:
            enc = order_encode(var, self.db)
            self.order_encs[var.name] = enc
            self._vars[var.name] = var
        return enc

    def log_encoding(self, view: VarView) -> LogEncoding:
        key = (view.var.name, view.negated)
        enc = self.log_encs.get(key)
        if enc is None:
            tag = f"{view.var.name}{'~' if view.negated else ''}"
            enc = log_encode(tag, view.dom, self.db)
            self.log_encs[key] = enc
            self._vars[view.var.name] = view.var
        return enc

    def fixed_one_lit(self) -> Lit:
        if self._fixed_one is None:
            v = self.db.new_var("const", "one")
            self.db.add_clause([v])
            self._fixed_one = v
        return self._fixed_one

    # -- literal access --------------------------------------------------

    def order_bits(self, term: NormTerm) -> list[Lit]:
        """Literals for t >= 1 .. t >= dom of the (possibly transformed) term."""
        view = term.view
        if view is FIXED_ONE:
            return [self.fixed_one_lit()]
        if isinstance(view, BitsView):
            return list(view.bits)
        enc = self.order_encoding(view.var)
        dom = view.dom
        if not view.negated:
            return [enc.bit(j + view.var.lo) for j in range(1, dom + 1)]
        return [-enc.bit(view.var.hi - j + 1) for j in range(1, dom + 1)]

    def log_bits(self, term: NormTerm) -> list[Lit]:
        view = term.view
        if view is FIXED_ONE:
            return [self.fixed_one_lit()]
        if isinstance(view, BitsView):
            raise ModelError("grouped sum variables have no binary encoding")
        return list(self.log_encoding(view).bits)

    def bool_lit(self, var: IntVar) -> Lit:
        if (var.lo, var.hi) != (0, 1):
            raise ModelError(f"{var.name} is not Boolean")
        if self.mode == "order":
            return self.order_encoding(var).bit(1)
        return self.log_encoding(VarView(var)).bits[0]

    # -- the maps e and e^-1 ----------------------------------------------

    def embed(self, box: dict) -> list[Lit]:
        """e(D'): literals fixed by a domain box over the original variables."""
        lits: list[Lit] = []
        for name, values in box.items():
            var = self._vars.get(name)
            if var is None:
                continue
            vals = sorted(values)
            if not vals:
                raise ModelError(f"cannot embed empty domain of {name}")
            lo_v, hi_v = vals[0], vals[-1]
            enc = self.order_encs.get(name)
            if enc is not None:
                for t in range(var.lo + 1, lo_v + 1):
                    lits.append(enc.bit(t))
                for t in range(hi_v + 1, var.hi + 1):
                    lits.append(-enc.bit(t))
            for (vname, negated), lenc in self.log_encs.items():
                if vname != name:
                    continue
                view = VarView(var, negated)
                tvals = [view.to_norm(v) for v in vals]
                for i, b in enumerate(lenc.bits):
                    ones = [((w >> i) & 1) for w in tvals]
                    if all(ones):
                        lits.append(b)
                    elif not any(ones):
                        lits.append(-b)
        return lits

    def extract(self, values) -> dict:
        """e^-1: tightest domain box whose embedding the assignment contains.

        `values` indexes variable ids: >0 true, <0 false, 0 undefined
        (the kernel's int8 array), or a PartialAssignment.
        """
        if hasattr(values, "polarity"):
            pol = values.polarity
            val = lambda v: 0 if v not in pol else (1 if pol[v] else -1)
        else:
            val = lambda v: values[v]
        box = {}
        for name, var in self._vars.items():
            domain = set(range(var.lo, var.hi + 1))
            enc = self.order_encs.get(name)
            if enc is not None:
                # value v is compatible iff no true threshold exceeds it and
                # no false threshold is at or below it; signals an empty
                # domain when the bits violate the threshold chain
                lo_v, hi_v = var.lo, var.hi
                for t in range(var.lo + 1, var.hi + 1):
                    s = val(enc.bit(t))
                    if s == 1 and t > lo_v:
                        lo_v = t
                    elif s == -1:
                        hi_v = min(hi_v, t - 1)
                domain &= set(range(lo_v, hi_v + 1))
            for (vname, negated), lenc in self.log_encs.items():
                if vname != name:
                    continue
                view = VarView(var, negated)
                keep = set()
                for v in range(var.lo, var.hi + 1):
                    w = view.to_norm(v)
                    ok = True
                    for i, b in enumerate(lenc.bits):
                        s = val(b)
                        if s != 0 and ((w >> i) & 1) != (s == 1):
                            ok = False
                            break
                    if ok:
                        keep.add(v)
                domain &= keep
            box[name] = frozenset(domain)
        return box


# ---------------------------------------------------------------------------
# model text format


@dataclass
class Model:
    variables: dict[str, IntVar] = field(default_factory=dict)
    constraints: list[LinearConstraint] = field(default_factory=list)
    bool_clauses: list[list[tuple[int, str]]] = field(default_factory=list)
    objective: tuple[str, list] | None = None  # ("min"|"max", [(coeff, var), ...])

    def add_var(self, name, lo, hi):
        if name in self.variables:
            raise ModelError(f"duplicate variable {name}")
        v = IntVar(name, lo, hi)
        self.variables[name] = v
        return v


def _parse_terms(tokens, line_no):
    terms = []
    sign = 1
    expect_term = True
    for tok in tokens:
        if tok == "+":
            if expect_term:
                raise ModelFormatError("dangling '+'", line_no)
            sign, expect_term = 1, True
        elif tok == "-":
            if expect_term:
                raise ModelFormatError("dangling '-'", line_no)
            sign, expect_term = -1, True
        else:
            if not expect_term:
                raise ModelFormatError(f"missing operator before {tok!r}", line_no)
            if "*" not in tok:
                raise ModelFormatError(f"expected <int>*<name>, got {tok!r}", line_no)
            cs, name = tok.split("*", 1)
            try:
                coeff = int(cs)
            except ValueError:
                raise ModelFormatError(f"bad coefficient in {tok!r}", line_no)
            terms.append((sign * coeff, name))
            sign, expect_term = 1, False
    if expect_term:
        raise ModelFormatError("trailing operator", line_no)
    return terms


def parse_model(source) -> Model:
    """One directive per line; `#` starts a comment.

    var <name> <lo> <hi> | bool <name> | lin <terms> <relop> <int> |
    min <terms> | max <terms> | clause <+/-name>...
    """
    if isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = source.read().splitlines()
    model = Model()
    for line_no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head, rest = parts[0], parts[1:]
        if head == "var":
            if len(rest) != 3:
                raise ModelFormatError("var needs <name> <lo> <hi>", line_no)
            try:
                model.add_var(rest[0], int(rest[1]), int(rest[2]))
            except ValueError:
                raise ModelFormatError("bad var bounds", line_no)
            except ModelError as e:
                raise ModelFormatError(str(e), line_no)
        elif head == "bool":
            if len(rest) != 1:
                raise ModelFormatError("bool needs <name>", line_no)
            model.add_var(rest[0], 0, 1)
        elif head == "lin":
            relop_at = next((i for i, t in enumerate(rest) if t in RELOPS), None)
            if relop_at is None or relop_at != len(rest) - 2:
                raise ModelFormatError("lin needs <terms> <relop> <int>", line_no)
            terms = _parse_terms(rest[:relop_at], line_no)
            try:
                rhs = int(rest[-1])
            except ValueError:
                raise ModelFormatError("bad right-hand side", line_no)
            resolved = []
            for coeff, name in terms:
                if name not in model.variables:
                    raise ModelFormatError(f"unknown variable {name!r}", line_no)
                resolved.append((coeff, model.variables[name]))
            model.constraints.append(LinearConstraint(resolved, rest[relop_at], rhs))
        elif head in ("min", "max"):
            if model.objective is not None:
                raise ModelFormatError("more than one objective", line_no)
            terms = _parse_terms(rest, line_no)
            resolved = []
            for coeff, name in terms:
                if name not in model.variables:
                    raise ModelFormatError(f"unknown variable {name!r}", line_no)
                resolved.append((coeff, model.variables[name]))
            model.objective = (head, resolved)
        elif head == "clause":
            lits = []
            for tok in rest:
                sgn = 1
                name = tok
                if tok.startswith("-"):
                    sgn, name = -1, tok[1:]
                elif tok.startswith("+"):
                    name = tok[1:]
                if name not in model.variables:
                    raise ModelFormatError(f"unknown variable {name!r}", line_no)
                if (model.variables[name].lo, model.variables[name].hi) != (0, 1):
                    raise ModelFormatError(f"{name} in clause is not Boolean", line_no)
                lits.append((sgn, name))
            if not lits:
                raise ModelFormatError("empty clause directive", line_no)
            model.bool_clauses.append(lits)
        else:
            raise ModelFormatError(f"unknown directive {head!r}", line_no)
    return model
