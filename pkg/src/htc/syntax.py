"""Abstract syntax for theories and rules over conditional linear constraints.

All nodes are immutable (frozen dataclasses), hashable and freely shareable.
The surface language includes comparison relations beyond ``<=``, ``def``
atoms and aggregate expressions; the desugaring pass removes all of them,
leaving only ``<=`` atoms over linear expressions, Boolean atoms and the
connectives of the core formula language.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce
from typing import Iterator, Union

from .errors import BudgetError, DomainError, FreshNameError

# --------------------------------------------------------------------------
# Domain values


@dataclass(frozen=True)
class Truth:
    """The Boolean domain value, kept distinct from int to avoid bool/int mixups."""

    def __repr__(self):
        return "t"


@dataclass(frozen=True)
class Undefined:
    """Marker for an undefined term position in a substituted atom."""

    def __repr__(self):
        return "u"


TRUE = Truth()
U = Undefined()

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
RESERVED_NAME_RE = re.compile(r"^__(?:min|max|c)\d+$")

DEFAULT_INTERVAL = (0, 9)


def _check_int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeError(f"{what} must be an int, got {value!r}")
    return value


@dataclass(frozen=True)
class DomainSpec:
    """Finite enumeration universe: integer variables with intervals, Boolean variables.

    ``int_vars`` is a name-sorted tuple of ``(name, lo, hi)``; ``bool_vars``
    a name-sorted tuple of names.  Boolean variables range over {t}.
    """

    int_vars: tuple = ()
    bool_vars: tuple = ()

    def __post_init__(self):
        seen = set()
        for name, lo, hi in self.int_vars:
            if not _NAME_RE.match(name):
                raise DomainError(f"bad variable name {name!r}")
            _check_int(lo, "interval bound")
            _check_int(hi, "interval bound")
            if lo > hi:
                raise DomainError(f"empty interval {lo}..{hi} for {name}")
            if name in seen:
                raise DomainError(f"variable {name} declared twice")
            seen.add(name)
        for name in self.bool_vars:
            if not _NAME_RE.match(name):
                raise DomainError(f"bad variable name {name!r}")
            if name in seen:
                raise DomainError(f"variable {name} declared twice")
            seen.add(name)

    @classmethod
    def make(cls, ints=None, bools=()) -> "DomainSpec":
        """Build a spec from ``{name: (lo, hi)}`` and an iterable of Boolean names."""
        ints = dict(ints or {})
        int_vars = tuple(sorted((n, lo, hi) for n, (lo, hi) in ints.items()))
        bool_vars = tuple(sorted(bools))
        return cls(int_vars, bool_vars)

    def variables(self) -> tuple:
        """All declared names, sorted."""
        return tuple(sorted([n for n, _, _ in self.int_vars] + list(self.bool_vars)))

    def is_declared(self, name: str) -> bool:
        return self.is_int(name) or self.is_bool(name)

    def is_int(self, name: str) -> bool:
        return any(n == name for n, _, _ in self.int_vars)

    def is_bool(self, name: str) -> bool:
        return name in self.bool_vars

    def interval(self, name: str) -> tuple:
        for n, lo, hi in self.int_vars:
            if n == name:
                return (lo, hi)
        raise DomainError(f"{name} is not a declared integer variable")

    def domain_values(self, name: str) -> tuple:
        """The (ordered) domain of one variable; undefined is not included."""
        if self.is_bool(name):
            return (TRUE,)
        lo, hi = self.interval(name)
        return tuple(range(lo, hi + 1))

    def with_int_var(self, name: str, lo: int, hi: int) -> "DomainSpec":
        if self.is_declared(name):
            raise DomainError(f"variable {name} declared twice")
        return DomainSpec(
            tuple(sorted(self.int_vars + ((name, lo, hi),))), self.bool_vars
        )

    def merged(self, other: "DomainSpec") -> "DomainSpec":
        """Union of two specs; shared names must agree."""
        ints = {n: (lo, hi) for n, lo, hi in self.int_vars}
        for n, lo, hi in other.int_vars:
            if n in ints and ints[n] != (lo, hi):
                raise DomainError(f"conflicting intervals for {n}")
            ints[n] = (lo, hi)
        bools = set(self.bool_vars) | set(other.bool_vars)
        if set(ints) & bools:
            raise DomainError("a name is both integer and Boolean")
        return DomainSpec.make(ints, bools)

    def interpretation_count(self) -> int:
        """Number of here-and-there pairs over this spec: prod(2*|D_x| + 1)."""
        n = 1
        for name, lo, hi in self.int_vars:
            n *= 2 * (hi - lo + 1) + 1
        n *= 3 ** len(self.bool_vars)
        return n


DEFAULT_BUDGET = 10_000_000


def check_budget(spec: "DomainSpec", budget=None):
    """Refuse specs whose exhaustive enumeration would be too large."""
    limit = DEFAULT_BUDGET if budget is None else budget
    n = spec.interpretation_count()
    if n > limit:
        raise BudgetError(
            f"domain spec spans {n} interpretations, over the budget of {limit}"
        )


# --------------------------------------------------------------------------
# Terms and linear expressions


@dataclass(frozen=True)
class Const:
    value: int

    def __post_init__(self):
        _check_int(self.value, "constant")


@dataclass(frozen=True)
class Scaled:
    """coeff * var; Scaled(0, x) is kept distinct from Const(0) on purpose."""

    coeff: int
    var: str

    def __post_init__(self):
        _check_int(self.coeff, "coefficient")


LinearTerm = Union[Const, Scaled]


@dataclass(frozen=True)
class ConditionalTerm:
    """(then | else : condition); the condition must be condition-free."""

    then_term: LinearTerm
    else_term: LinearTerm
    condition: "Formula"

    def __post_init__(self):
        for kind in ("then_term", "else_term"):
            t = getattr(self, kind)
            if not isinstance(t, (Const, Scaled)):
                raise TypeError(f"{kind} must be a linear term, got {t!r}")
        if not is_condition_free(self.condition):
            raise ValueError("nested conditional expressions are not allowed")


@dataclass(frozen=True)
class AggregateElement:
    term: LinearTerm
    condition: "Formula"

    def __post_init__(self):
        if not isinstance(self.term, (Const, Scaled)):
            raise TypeError("aggregate element term must be a linear term")
        if not is_condition_free(self.condition):
            raise ValueError("aggregate element conditions must be condition-free")


@dataclass(frozen=True)
class Aggregate:
    """Surface aggregate expression; removed entirely by desugaring.

    ``count`` elements carry the implicit term 1.
    """

    func: str
    elements: tuple

    def __post_init__(self):
        if self.func not in ("sum", "count", "min", "max"):
            raise ValueError(f"unknown aggregate function {self.func!r}")
        if self.func == "count":
            for el in self.elements:
                if el.term != Const(1):
                    raise ValueError("count elements carry the implicit term 1")


Term = Union[Const, Scaled, ConditionalTerm, Undefined, Aggregate]


@dataclass(frozen=True)
class LinearExpr:
    """Finite ordered sum of terms; order and duplicates are significant."""

    items: tuple

    def __post_init__(self):
        if not self.items:
            raise ValueError("linear expressions must be non-empty")

    def __iter__(self) -> Iterator:
        return iter(self.items)


def expr(*items) -> LinearExpr:
    return LinearExpr(tuple(items))


def var_expr(name: str) -> LinearExpr:
    return LinearExpr((Scaled(1, name),))


def const_expr(value: int) -> LinearExpr:
    return LinearExpr((Const(value),))


def negated_term(term):
    """Branch-wise negation; definedness behaviour is preserved."""
    if isinstance(term, Const):
        return Const(-term.value)
    if isinstance(term, Scaled):
        return Scaled(-term.coeff, term.var)
    if isinstance(term, ConditionalTerm):
        return ConditionalTerm(
            negated_term(term.then_term), negated_term(term.else_term), term.condition
        )
    raise TypeError(f"cannot negate {term!r}")


# --------------------------------------------------------------------------
# Formulas

RELATIONS = ("<=", "<", "=", "!=", ">=", ">")


@dataclass(frozen=True)
class Bot:
    pass


@dataclass(frozen=True)
class Comparison:
    lhs: LinearExpr
    rel: str
    rhs: LinearExpr

    def __post_init__(self):
        if self.rel not in RELATIONS:
            raise ValueError(f"unknown relation {self.rel!r}")


@dataclass(frozen=True)
class Defined:
    """def(e): shorthand atom for e <= e, removed by desugaring."""

    arg: LinearExpr


@dataclass(frozen=True)
class BoolAtom:
    name: str


@dataclass(frozen=True)
class TruthConst:
    """Atom with a fixed truth value; produced only by variable substitution."""

    value: bool


@dataclass(frozen=True)
class And:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Or:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


Formula = Union[Bot, Comparison, Defined, BoolAtom, TruthConst, And, Or, Implies]

BOT = Bot()
TOP = Implies(BOT, BOT)


def Not(phi) -> Implies:
    return Implies(phi, BOT)


def is_negation(phi) -> bool:
    return isinstance(phi, Implies) and phi.rhs == BOT


def conj(parts) -> Formula:
    """Left-nested conjunction; empty becomes #true."""
    parts = list(parts)
    if not parts:
        return TOP
    return reduce(And, parts)


def disj(parts) -> Formula:
    """Left-nested disjunction; empty becomes #false."""
    parts = list(parts)
    if not parts:
        return BOT
    return reduce(Or, parts)


def conj2(a, b) -> Formula:
    """Conjunction that drops #true operands, to match the usual displayed forms."""
    if a == TOP:
        return b
    if b == TOP:
        return a
    return And(a, b)


def le(lhs: LinearExpr, rhs: LinearExpr) -> Comparison:
    return Comparison(lhs, "<=", rhs)


def defined(e: LinearExpr) -> Comparison:
    """Core form of def(e), the atom e <= e."""
    return le(e, e)


def eq_pair(lhs: LinearExpr, rhs: LinearExpr) -> And:
    """Core form of lhs = rhs, the conjunction (lhs <= rhs) & (rhs <= lhs)."""
    return And(le(lhs, rhs), le(rhs, lhs))


# --------------------------------------------------------------------------
# Assignments, rules, theories


@dataclass(frozen=True)
class Assignment:
    """x := lower .. upper (bounds may coincide, the sugar x := e)."""

    target: str
    lower: LinearExpr
    upper: LinearExpr

    @property
    def point(self) -> bool:
        return self.lower == self.upper


@dataclass(frozen=True)
class LCRule:
    """head_1 ; ... ; head_n  :-  pos_1, ..., pos_m, not neg_1, ..., not neg_k."""

    head: tuple = ()
    pos_body: tuple = ()
    neg_body: tuple = ()


Statement = Union[Formula, LCRule]


@dataclass(frozen=True)
class Theory:
    spec: DomainSpec
    statements: tuple = ()

    def __post_init__(self):
        undeclared = free_vars(self) - set(self.spec.variables())
        if undeclared:
            raise DomainError(f"undeclared variables: {', '.join(sorted(undeclared))}")
        for name in _bool_atom_names(self):
            if not self.spec.is_bool(name):
                raise DomainError(f"{name} is used as an atom but is not Boolean")
        for a in _assignments(self):
            if not self.spec.is_int(a.target):
                raise DomainError(f"assignment target {a.target} is not an integer variable")

    @property
    def formulas(self) -> tuple:
        return tuple(s for s in self.statements if not isinstance(s, LCRule))

    @property
    def rules(self) -> tuple:
        return tuple(s for s in self.statements if isinstance(s, LCRule))

    @property
    def is_lc_program(self) -> bool:
        return all(isinstance(s, LCRule) for s in self.statements)

    def extended(self, extra_statements) -> "Theory":
        return make_theory(self.spec, self.statements + tuple(extra_statements))

    def desugar(self) -> "Theory":
        return desugar_theory(self)


class LCProgram(Theory):
    """A theory whose every statement is a rule."""

    def __post_init__(self):
        super().__post_init__()
        if not self.is_lc_program:
            raise ValueError("LCProgram statements must all be rules")


def make_theory(spec: DomainSpec, statements) -> Theory:
    """Build a Theory, classified as LCProgram when every statement is a rule."""
    statements = tuple(statements)
    cls = LCProgram if all(isinstance(s, LCRule) for s in statements) else Theory
    return cls(spec, statements)


# --------------------------------------------------------------------------
# Variable collection and structural queries


def free_vars(obj) -> set:
    """Variables occurring syntactically in a term, formula, rule or theory."""
    out: set = set()
    _collect_vars(obj, out)
    return out


def _collect_vars(obj, out: set):
    if isinstance(obj, (Theory,)):
        for s in obj.statements:
            _collect_vars(s, out)
    elif isinstance(obj, LCRule):
        for a in obj.head:
            _collect_vars(a, out)
        for b in obj.pos_body + obj.neg_body:
            _collect_vars(b, out)
    elif isinstance(obj, Assignment):
        out.add(obj.target)
        _collect_vars(obj.lower, out)
        _collect_vars(obj.upper, out)
    elif isinstance(obj, LinearExpr):
        for item in obj.items:
            _collect_vars(item, out)
    elif isinstance(obj, Scaled):
        out.add(obj.var)
    elif isinstance(obj, (Const, Undefined, Bot, TruthConst)):
        pass
    elif isinstance(obj, ConditionalTerm):
        _collect_vars(obj.then_term, out)
        _collect_vars(obj.else_term, out)
        _collect_vars(obj.condition, out)
    elif isinstance(obj, Aggregate):
        for el in obj.elements:
            _collect_vars(el.term, out)
            _collect_vars(el.condition, out)
    elif isinstance(obj, Comparison):
        _collect_vars(obj.lhs, out)
        _collect_vars(obj.rhs, out)
    elif isinstance(obj, Defined):
        _collect_vars(obj.arg, out)
    elif isinstance(obj, BoolAtom):
        out.add(obj.name)
    elif isinstance(obj, (And, Or, Implies)):
        _collect_vars(obj.lhs, out)
        _collect_vars(obj.rhs, out)
    else:
        raise TypeError(f"cannot collect variables from {obj!r}")


def _bool_atom_names(obj) -> set:
    names: set = set()

    def walk(o):
        if isinstance(o, Theory):
            for s in o.statements:
                walk(s)
        elif isinstance(o, LCRule):
            for a in o.head:
                walk(a)
            for b in o.pos_body + o.neg_body:
                walk(b)
        elif isinstance(o, Assignment):
            walk(o.lower)
            walk(o.upper)
        elif isinstance(o, LinearExpr):
            for item in o.items:
                walk(item)
        elif isinstance(o, ConditionalTerm):
            walk(o.condition)
        elif isinstance(o, Aggregate):
            for el in o.elements:
                walk(el.condition)
        elif isinstance(o, BoolAtom):
            names.add(o.name)
        elif isinstance(o, Comparison):
            walk(o.lhs)
            walk(o.rhs)
        elif isinstance(o, Defined):
            walk(o.arg)
        elif isinstance(o, (And, Or, Implies)):
            walk(o.lhs)
            walk(o.rhs)

    walk(obj)
    return names


def _assignments(obj):
    if isinstance(obj, Theory):
        for r in obj.rules:
            yield from r.head
    elif isinstance(obj, LCRule):
        yield from obj.head


def is_condition_free(obj) -> bool:
    """True when no conditional term (or aggregate, which hides one) occurs."""
    if isinstance(obj, (ConditionalTerm, Aggregate)):
        return False
    if isinstance(obj, LinearExpr):
        return all(is_condition_free(i) for i in obj.items)
    if isinstance(obj, (Const, Scaled, Undefined, Bot, BoolAtom, TruthConst)):
        return True
    if isinstance(obj, Comparison):
        return is_condition_free(obj.lhs) and is_condition_free(obj.rhs)
    if isinstance(obj, Defined):
        return is_condition_free(obj.arg)
    if isinstance(obj, (And, Or, Implies)):
        return is_condition_free(obj.lhs) and is_condition_free(obj.rhs)
    raise TypeError(f"not a formula or expression: {obj!r}")


def is_core(obj) -> bool:
    """True when desugared: only <= atoms, Boolean atoms and connectives remain."""
    if isinstance(obj, Theory):
        return all(is_core(s) for s in obj.statements)
    if isinstance(obj, LCRule):
        return all(
            is_core_expr(a.lower) and is_core_expr(a.upper) for a in obj.head
        ) and all(is_core(b) for b in obj.pos_body + obj.neg_body)
    if isinstance(obj, (Bot, BoolAtom, TruthConst)):
        return True
    if isinstance(obj, Comparison):
        return obj.rel == "<=" and is_core_expr(obj.lhs) and is_core_expr(obj.rhs)
    if isinstance(obj, Defined):
        return False
    if isinstance(obj, (And, Or, Implies)):
        return is_core(obj.lhs) and is_core(obj.rhs)
    return False


def is_core_expr(e: LinearExpr) -> bool:
    for item in e.items:
        if isinstance(item, (Const, Scaled, Undefined)):
            continue
        if isinstance(item, ConditionalTerm):
            if not is_core(item.condition):
                return False
            continue
        return False
    return True


# --------------------------------------------------------------------------
# Fresh names


class FreshNames:
    """Supply of generated names __c<k>, __min<k>, __max<k>, one counter per family.

    Collisions with already-taken names raise; the supply is confined to a
    single transformation pass.
    """

    def __init__(self, taken=()):
        self._taken = set(taken)
        self._counters = {"c": 0, "min": 0, "max": 0}

    def fresh(self, family: str) -> str:
        if family not in self._counters:
            raise ValueError(f"unknown name family {family!r}")
        name = f"__{family}{self._counters[family]}"
        self._counters[family] += 1
        if name in self._taken:
            raise FreshNameError(f"generated name {name} collides with a declared variable")
        self._taken.add(name)
        return name


# --------------------------------------------------------------------------
# Desugaring: comparisons and def


def desugar_comparisons(phi):
    """Expand <, =, !=, >=, > and def into <= atoms, recursively.

    Conditions inside conditional terms and aggregate elements are expanded
    as well; aggregate structure itself is left alone.
    """
    if isinstance(phi, (Bot, BoolAtom, TruthConst)):
        return phi
    if isinstance(phi, Defined):
        e = _desugar_expr_conditions(phi.arg)
        return defined(e)
    if isinstance(phi, Comparison):
        lhs = _desugar_expr_conditions(phi.lhs)
        rhs = _desugar_expr_conditions(phi.rhs)
        return _expand_relation(lhs, phi.rel, rhs)
    if isinstance(phi, And):
        return And(desugar_comparisons(phi.lhs), desugar_comparisons(phi.rhs))
    if isinstance(phi, Or):
        return Or(desugar_comparisons(phi.lhs), desugar_comparisons(phi.rhs))
    if isinstance(phi, Implies):
        return Implies(desugar_comparisons(phi.lhs), desugar_comparisons(phi.rhs))
    raise TypeError(f"not a formula: {phi!r}")


def _expand_relation(lhs, rel, rhs):
    if rel == "<=":
        return le(lhs, rhs)
    if rel == "<":
        return And(le(lhs, rhs), Not(le(rhs, lhs)))
    if rel == "=":
        return And(le(lhs, rhs), le(rhs, lhs))
    if rel == "!=":
        return Or(_expand_relation(lhs, "<", rhs), _expand_relation(rhs, "<", lhs))
    if rel == ">=":
        return le(rhs, lhs)
    if rel == ">":
        return _expand_relation(rhs, "<", lhs)
    raise ValueError(rel)


def _desugar_expr_conditions(e: LinearExpr) -> LinearExpr:
    items = []
    for item in e.items:
        if isinstance(item, ConditionalTerm):
            items.append(
                ConditionalTerm(
                    item.then_term, item.else_term, desugar_comparisons(item.condition)
                )
            )
        elif isinstance(item, Aggregate):
            items.append(
                Aggregate(
                    item.func,
                    tuple(
                        AggregateElement(el.term, desugar_comparisons(el.condition))
                        for el in item.elements
                    ),
                )
            )
        else:
            items.append(item)
    return LinearExpr(tuple(items))


# --------------------------------------------------------------------------
# Desugaring: aggregates


def desugar_sum(agg: Aggregate) -> LinearExpr:
    """sum{l_1:f_1, ...} as the sum of conditional terms (l_i | 0 : f_i & def(l_i)).

    The def conjunct keeps undefined element terms out of the multiset
    instead of poisoning the whole sum; #true conditions are dropped so the
    guard is just def(l_i).  The empty sum is the constant 0.
    """
    if agg.func != "sum":
        raise ValueError("desugar_sum expects a sum aggregate")
    if not agg.elements:
        return const_expr(0)
    items = []
    for el in agg.elements:
        guard = conj2(el.condition, Defined(LinearExpr((el.term,))))
        items.append(ConditionalTerm(el.term, Const(0), guard))
    return LinearExpr(tuple(items))


def desugar_count(agg: Aggregate) -> Aggregate:
    """count{f_1, ...} as sum{1:f_1, ...}."""
    if agg.func != "count":
        raise ValueError("desugar_count expects a count aggregate")
    return Aggregate(
        "sum", tuple(AggregateElement(Const(1), el.condition) for el in agg.elements)
    )


def desugar_minmax(agg: Aggregate, fresh: FreshNames):
    """Replace min{s_i:f_i} (or max) by a fresh variable plus defining formulas.

    Returns ``(name, side_formulas)``.  The variable is defined exactly when
    some element is present, no element may be strictly smaller (min) or
    greater (max), and some element must reach it.  The side formulas still
    contain count aggregates and strict comparisons; they are meant to be fed
    back through the full desugaring pass.
    """
    if agg.func not in ("min", "max"):
        raise ValueError("desugar_minmax expects a min or max aggregate")
    name = fresh.fresh(agg.func)
    x = var_expr(name)

    def count_atom(rel, bound, element_rel=None):
        elements = []
        for el in agg.elements:
            s = LinearExpr((el.term,))
            if element_rel is None:
                sub = Defined(s)
            else:
                sub = Comparison(s, element_rel, x)
            elements.append(AggregateElement(Const(1), conj2(el.condition, sub)))
        cnt = LinearExpr((Aggregate("count", tuple(elements)),))
        return Comparison(cnt, rel, const_expr(bound))

    nonempty = count_atom(">=", 1)
    if agg.func == "min":
        none_beyond = count_atom("<=", 0, "<")
        some_reaches = count_atom(">=", 1, "<=")
    else:
        none_beyond = count_atom("<=", 0, ">")
        some_reaches = count_atom(">=", 1, ">=")
    side = (
        Implies(Defined(x), nonempty),
        Implies(nonempty, Defined(x)),
        Implies(Defined(x), And(none_beyond, some_reaches)),
    )
    return name, side


def linear_term_range(term: LinearTerm, spec: DomainSpec) -> tuple:
    """Value hull of a linear term over a spec (Boolean variables give (0, 0))."""
    if isinstance(term, Const):
        return (term.value, term.value)
    if isinstance(term, Scaled):
        if term.coeff == 0 or not spec.is_int(term.var):
            return (0, 0)
        lo, hi = spec.interval(term.var)
        a, b = term.coeff * lo, term.coeff * hi
        return (min(a, b), max(a, b))
    raise TypeError(f"not a linear term: {term!r}")


def _aggregate_hull(agg: Aggregate, spec: DomainSpec) -> tuple:
    ranges = [linear_term_range(el.term, spec) for el in agg.elements]
    if not ranges:
        return (0, 0)
    return (min(lo for lo, _ in ranges), max(hi for _, hi in ranges))


# --------------------------------------------------------------------------
# Desugaring: full pass over theories


def desugar_aggregates(thy: Theory) -> Theory:
    """Remove every aggregate, leaving extended relations and def in place.

    sum and count become conditional terms spliced into their expression;
    min/max mint fresh integer variables whose intervals hull the element
    term ranges, with their defining formulas appended after the original
    statements.  Idempotent.
    """
    fresh = FreshNames(thy.spec.variables())
    spec = thy.spec
    statements = []
    sides: list = []
    for stmt in thy.statements:
        if isinstance(stmt, LCRule):
            head = []
            for a in stmt.head:
                lo, spec = _replace_aggregates_expr(a.lower, fresh, spec, sides)
                if a.upper == a.lower:
                    up = lo
                else:
                    up, spec = _replace_aggregates_expr(a.upper, fresh, spec, sides)
                head.append(Assignment(a.target, lo, up))
            pos = []
            for b in stmt.pos_body:
                f, spec = _replace_aggregates_formula(b, fresh, spec, sides)
                pos.append(f)
            neg = []
            for b in stmt.neg_body:
                f, spec = _replace_aggregates_formula(b, fresh, spec, sides)
                neg.append(f)
            statements.append(LCRule(tuple(head), tuple(pos), tuple(neg)))
        else:
            f, spec = _replace_aggregates_formula(stmt, fresh, spec, sides)
            statements.append(f)
    done: list = []
    while sides:
        f, spec = _replace_aggregates_formula(sides.pop(0), fresh, spec, sides)
        done.append(f)
    statements.extend(done)
    return make_theory(spec, statements)


def desugar_theory(thy: Theory) -> Theory:
    """Remove aggregates, then extended relations and def, from every statement.

    The result is core: only <= atoms over linear expressions (possibly with
    conditional terms), Boolean atoms and connectives.  Idempotent.
    """
    thy = desugar_aggregates(thy)
    statements = []
    for stmt in thy.statements:
        if isinstance(stmt, LCRule):
            head = tuple(
                Assignment(
                    a.target,
                    _desugar_expr_conditions(a.lower),
                    _desugar_expr_conditions(a.upper),
                )
                for a in stmt.head
            )
            pos = tuple(desugar_comparisons(b) for b in stmt.pos_body)
            neg = tuple(desugar_comparisons(b) for b in stmt.neg_body)
            statements.append(LCRule(head, pos, neg))
        else:
            statements.append(desugar_comparisons(stmt))
    return make_theory(thy.spec, statements)


def _replace_aggregates_formula(phi, fresh, spec, sides):
    if isinstance(phi, (Bot, BoolAtom, TruthConst)):
        return phi, spec
    if isinstance(phi, Defined):
        e, spec = _replace_aggregates_expr(phi.arg, fresh, spec, sides)
        return Defined(e), spec
    if isinstance(phi, Comparison):
        lhs, spec = _replace_aggregates_expr(phi.lhs, fresh, spec, sides)
        rhs, spec = _replace_aggregates_expr(phi.rhs, fresh, spec, sides)
        return Comparison(lhs, phi.rel, rhs), spec
    if isinstance(phi, (And, Or, Implies)):
        lhs, spec = _replace_aggregates_formula(phi.lhs, fresh, spec, sides)
        rhs, spec = _replace_aggregates_formula(phi.rhs, fresh, spec, sides)
        return type(phi)(lhs, rhs), spec
    raise TypeError(f"not a formula: {phi!r}")


def _replace_aggregates_expr(e: LinearExpr, fresh, spec, sides):
    items = []
    for item in e.items:
        if isinstance(item, Aggregate):
            agg = item
            if agg.func == "count":
                agg = desugar_count(agg)
            if agg.func == "sum":
                items.extend(desugar_sum(agg).items)
            else:
                lo, hi = _aggregate_hull(agg, spec)
                name, side = desugar_minmax(agg, fresh)
                spec = spec.with_int_var(name, lo, hi)
                sides.extend(side)
                items.append(Scaled(1, name))
        else:
            items.append(item)
    return LinearExpr(tuple(items)), spec
