"""Satisfaction and model enumeration over finite domains.

Interpretations are pairs ``<h, t>`` of partial valuations with ``h``
included in ``t``.  A conditional term picks its "then" branch when the
condition holds at ``<h, t>``, its "else" branch when the condition fails at
``<t, t>``, and is undefined otherwise; an atom holds when ``h`` lies in the
denotation of the unfolded, condition-free atom.  Everything else is plain
here-and-there: implications are checked at both worlds, and a stable
(equilibrium) model is a total model ``<t, t>`` with no proper ``h`` below it
that still satisfies the theory.

The enumeration is exhaustive by design and refuses domain specs whose
interpretation count exceeds a budget (default 10**7).
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .syntax import (
    And,
    BoolAtom,
    Bot,
    Comparison,
    Const,
    ConditionalTerm,
    DEFAULT_BUDGET,
    Defined,
    DomainSpec,
    Implies,
    LinearExpr,
    Or,
    Scaled,
    Theory,
    TruthConst,
    TRUE,
    U,
    Undefined,
    check_budget as _check_budget_spec,
    desugar_comparisons,
    desugar_theory,
)


def _check_budget(spec: DomainSpec, budget):
    _check_budget_spec(spec, budget)


# --------------------------------------------------------------------------
# Valuations and interpretations


class Valuation:
    """Immutable partial map from variables to domain values.

    Undefined variables are simply absent, so subset comparison is plain
    set inclusion on the defined pairs.
    """

    __slots__ = ("_pairs", "_map", "_hash")

    def __init__(self, pairs=()):
        mapping = dict(pairs)
        self._pairs = tuple(sorted(mapping.items()))
        self._map = mapping
        self._hash = hash(self._pairs)

    def get(self, name):
        """The value of ``name``, or None when undefined."""
        return self._map.get(name)

    def defined(self, name) -> bool:
        return name in self._map

    def names(self) -> tuple:
        return tuple(n for n, _ in self._pairs)

    def items(self) -> tuple:
        return self._pairs

    def __len__(self):
        return len(self._pairs)

    def __eq__(self, other):
        return isinstance(other, Valuation) and self._pairs == other._pairs

    def __hash__(self):
        return self._hash

    def __repr__(self):
        inner = ", ".join(f"{n}={v!r}" for n, v in self._pairs)
        return "{" + inner + "}"

    def subset_of(self, other: "Valuation") -> bool:
        omap = other._map
        return all(omap.get(n) == v for n, v in self._pairs)

    def proper_subset_of(self, other: "Valuation") -> bool:
        return len(self._pairs) < len(other._pairs) and self.subset_of(other)

    def project(self, names) -> "Valuation":
        keep = set(names)
        return Valuation((n, v) for n, v in self._pairs if n in keep)

    def to_json(self) -> dict:
        return {n: (True if v == TRUE else v) for n, v in self._pairs}


@dataclass(frozen=True)
class Interpretation:
    h: Valuation
    t: Valuation

    def __post_init__(self):
        if not self.h.subset_of(self.t):
            raise ValueError("h must be a subset of t")

    @property
    def total(self) -> bool:
        return self.h == self.t

    def to_json(self) -> dict:
        return {"h": self.h.to_json(), "t": self.t.to_json()}


def valuation_key(spec: DomainSpec, v: Valuation) -> tuple:
    """Sort key: variables in name order, values ordered u < lo < .. < hi, u < t."""
    key = []
    for name in spec.variables():
        val = v.get(name)
        if val is None:
            key.append(0)
        elif val == TRUE:
            key.append(1)
        else:
            lo, _ = spec.interval(name)
            key.append(1 + val - lo)
    return tuple(key)


def enumerate_valuations(spec: DomainSpec, budget=None):
    """Every valuation over the spec exactly once, in lexicographic order."""
    _check_budget(spec, budget)
    return _iter_valuations(spec)


def _iter_valuations(spec: DomainSpec):
    names = spec.variables()
    choices = [(None,) + spec.domain_values(n) for n in names]
    for combo in itertools.product(*choices):
        yield Valuation(
            (n, v) for n, v in zip(names, combo) if v is not None
        )


def subvaluations(t: Valuation):
    """All h with h included in t, from empty to t itself (2**defined many)."""
    pairs = t.items()
    n = len(pairs)
    for mask in range(1 << n):
        yield Valuation(pairs[i] for i in range(n) if mask >> i & 1)


def proper_subvaluations(t: Valuation):
    pairs = t.items()
    n = len(pairs)
    for mask in range((1 << n) - 1):
        yield Valuation(pairs[i] for i in range(n) if mask >> i & 1)


# --------------------------------------------------------------------------
# Term and atom evaluation


def eval_term(h: Valuation, t: Valuation, term):
    """Unfold one term at <h, t>: linear terms pass through, conditional terms
    pick then/else/undefined.  Conditions may still carry surface relations."""
    if isinstance(term, (Const, Scaled, Undefined)):
        return term
    if isinstance(term, ConditionalTerm):
        ev = _Eval(h, t)
        cond = desugar_comparisons(term.condition)
        if ev.sat(cond):
            return term.then_term
        if not ev.total.sat(cond):
            return term.else_term
        return U
    raise TypeError(f"not a term: {term!r}")


def eval_atom(h: Valuation, t: Valuation, atom):
    """Replace every conditional term in the atom by its evaluation at <h, t>."""
    ev = _Eval(h, t)

    def unfold(e: LinearExpr) -> LinearExpr:
        items = []
        for item in e.items:
            if isinstance(item, ConditionalTerm):
                cond = desugar_comparisons(item.condition)
                if ev.sat(cond):
                    items.append(item.then_term)
                elif not ev.total.sat(cond):
                    items.append(item.else_term)
                else:
                    items.append(U)
            else:
                items.append(item)
        return LinearExpr(tuple(items))

    if isinstance(atom, Comparison):
        return Comparison(unfold(atom.lhs), atom.rel, unfold(atom.rhs))
    if isinstance(atom, Defined):
        return Defined(unfold(atom.arg))
    if isinstance(atom, (BoolAtom, TruthConst)):
        return atom
    raise TypeError(f"not a constraint atom: {atom!r}")


def eval_linear_expr(v: Valuation, e: LinearExpr):
    """Value of a condition-free expression: the integer sum, or U when any
    subterm is undefined (including t in an arithmetic position)."""
    total = 0
    for item in e.items:
        if isinstance(item, Const):
            total += item.value
        elif isinstance(item, Scaled):
            val = v.get(item.var)
            if not isinstance(val, int):
                return U
            total += item.coeff * val
        elif isinstance(item, Undefined):
            return U
        else:
            raise ValueError(f"expression is not condition-free: {item!r}")
    return total


def denotes(v: Valuation, atom) -> bool:
    """Membership of v in the denotation of a condition-free core atom."""
    if isinstance(atom, Comparison):
        if atom.rel != "<=":
            raise ValueError("denotation is defined on <= atoms; desugar first")
        a = eval_linear_expr(v, atom.lhs)
        b = eval_linear_expr(v, atom.rhs)
        return isinstance(a, int) and isinstance(b, int) and a <= b
    if isinstance(atom, BoolAtom):
        return v.get(atom.name) == TRUE
    if isinstance(atom, TruthConst):
        return atom.value
    raise TypeError(f"not a core constraint atom: {atom!r}")


def expr_value(h: Valuation, t: Valuation, e: LinearExpr):
    """Value under h of the expression unfolded at <h, t>; U when undefined."""
    val = _Eval(h, t)._expr_value(e)
    return U if val is None else val


def substitute_value(atom, name: str, value):
    """Syntactic substitution of a variable by a domain value in a
    condition-free atom.

    A scaled occurrence becomes the product constant when the value is an
    integer and the undefined marker otherwise (t has no arithmetic value);
    a Boolean atom becomes a fixed-truth atom.
    """
    if isinstance(atom, BoolAtom):
        if atom.name != name:
            return atom
        return TruthConst(value == TRUE)
    if isinstance(atom, TruthConst):
        return atom
    if isinstance(atom, Comparison):

        def sub(e: LinearExpr) -> LinearExpr:
            items = []
            for item in e.items:
                if isinstance(item, Scaled) and item.var == name:
                    if isinstance(value, int):
                        items.append(Const(item.coeff * value))
                    else:
                        items.append(U)
                elif isinstance(item, ConditionalTerm):
                    raise ValueError("substitution expects a condition-free atom")
                else:
                    items.append(item)
            return LinearExpr(tuple(items))

        return Comparison(sub(atom.lhs), atom.rel, sub(atom.rhs))
    raise TypeError(f"not a constraint atom: {atom!r}")


# --------------------------------------------------------------------------
# Satisfaction


class _Eval:
    """Memoizing satisfaction checker for one fixed pair (h, t).

    The evaluator for <t, t> is shared so that condition checks at the total
    world, and implication checks there, are computed once per t.
    """

    __slots__ = ("h", "t", "total", "_memo")

    def __init__(self, h: Valuation, t: Valuation, total=None):
        self.h = h
        self.t = t
        if h is t or h == t:
            self.total = self
        else:
            self.total = total if total is not None else _Eval(t, t)
        self._memo = {}

    def sat(self, phi) -> bool:
        key = id(phi)
        hit = self._memo.get(key)
        if hit is None:
            hit = self._compute(phi)
            self._memo[key] = hit
        return hit

    def _compute(self, phi) -> bool:
        tp = type(phi)
        if tp is Comparison:
            if phi.rel != "<=":
                raise ValueError("satisfaction requires a desugared formula")
            a = self._expr_value(phi.lhs)
            if a is None:
                return False
            b = self._expr_value(phi.rhs)
            return b is not None and a <= b
        if tp is BoolAtom:
            return self.h.get(phi.name) == TRUE
        if tp is And:
            return self.sat(phi.lhs) and self.sat(phi.rhs)
        if tp is Or:
            return self.sat(phi.lhs) or self.sat(phi.rhs)
        if tp is Implies:
            total = self.total
            if total.sat(phi.lhs) and not total.sat(phi.rhs):
                return False
            return not self.sat(phi.lhs) or self.sat(phi.rhs)
        if tp is Bot:
            return False
        if tp is TruthConst:
            return phi.value
        if tp is Defined:
            raise ValueError("satisfaction requires a desugared formula")
        raise TypeError(f"not a formula: {phi!r}")

    def _expr_value(self, e: LinearExpr):
        """Integer value under h of e unfolded at (h, t); None when undefined."""
        acc = 0
        h = self.h
        for item in e.items:
            tp = type(item)
            if tp is Const:
                acc += item.value
                continue
            if tp is ConditionalTerm:
                if self.sat(item.condition):
                    item = item.then_term
                elif not self.total.sat(item.condition):
                    item = item.else_term
                else:
                    return None
                if type(item) is Const:
                    acc += item.value
                    continue
            if tp is Undefined:
                return None
            val = h.get(item.var)
            if not isinstance(val, int):
                return None
            acc += item.coeff * val
        return acc


def satisfies(interp: Interpretation, phi) -> bool:
    """<h, t> |= phi for a desugared formula."""
    return _Eval(interp.h, interp.t).sat(phi)


# --------------------------------------------------------------------------
# Model enumeration


def _prepare(theory: Theory, budget):
    from .transforms import theory_formulas

    thy = desugar_theory(theory)
    _check_budget(thy.spec, budget)
    return thy, theory_formulas(thy)


def _scan_stable(spec, formulas, start, stop):
    out = []
    gen = itertools.islice(_iter_valuations(spec), start, stop)
    for t in gen:
        ev_t = _Eval(t, t)
        if not all(ev_t.sat(f) for f in formulas):
            continue
        for h in proper_subvaluations(t):
            ev = _Eval(h, t, total=ev_t)
            if all(ev.sat(f) for f in formulas):
                break
        else:
            out.append(t)
    return out


def _scan_ht(spec, formulas, start, stop):
    out = []
    gen = itertools.islice(_iter_valuations(spec), start, stop)
    for t in gen:
        ev_t = _Eval(t, t)
        for h in subvaluations(t):
            ev = ev_t if h == t else _Eval(h, t, total=ev_t)
            if all(ev.sat(f) for f in formulas):
                out.append(Interpretation(h, t))
    return out


def _parallel(scan, spec, formulas, jobs):
    total = 1
    for n in spec.variables():
        total *= len(spec.domain_values(n)) + 1
    chunk = max(1, -(-total // jobs))
    ranges = [(i, min(i + chunk, total)) for i in range(0, total, chunk)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = pool.map(scan, *zip(*[(spec, formulas, a, b) for a, b in ranges]))
        out = []
        for part in parts:
            out.extend(part)
    return out


def stable_models(theory: Theory, budget=None, jobs=1) -> list:
    """All equilibrium valuations t, in lexicographic order.

    Rules are read as their implication form (assignment heads expand to the
    double-negated definedness guard plus the bounding conjunction); the
    theory is desugared first, so min/max aggregates add their auxiliary
    variables to the enumeration alphabet.
    """
    thy, formulas = _prepare(theory, budget)
    if jobs > 1:
        return _parallel(_scan_stable, thy.spec, formulas, jobs)
    return _scan_stable(thy.spec, formulas, None, None)


def ht_models(theory: Theory, budget=None, jobs=1) -> list:
    """All interpretations <h, t> over the spec satisfying every statement."""
    thy, formulas = _prepare(theory, budget)
    if jobs > 1:
        return _parallel(_scan_ht, thy.spec, formulas, jobs)
    return _scan_ht(thy.spec, formulas, None, None)


# --------------------------------------------------------------------------
# Supportedness


def is_supported(t: Valuation, program: Theory) -> bool:
    """Every defined variable of t has a supporting rule.

    A rule supports x when it carries an assignment x := a..b whose bounds
    evaluate (under t) to integers enclosing t(x), no assignment to another
    variable in the same head is satisfied by t, and t satisfies the body.
    """
    program = desugar_theory(program)
    ev = _Eval(t, t)
    return all(_value_supported(ev, t, x, program.rules) for x in t.names())


def _value_supported(ev: _Eval, t: Valuation, x: str, rules) -> bool:
    from .transforms import assignment_formula

    d = t.get(x)
    for rule in rules:
        for a in rule.head:
            if a.target != x:
                continue
            lo = ev._expr_value(a.lower)
            hi = ev._expr_value(a.upper)
            if lo is None or hi is None or not isinstance(d, int):
                continue
            if not lo <= d <= hi:
                continue
            if any(
                ev.sat(assignment_formula(other))
                for other in rule.head
                if other.target != x
            ):
                continue
            if all(ev.sat(b) for b in rule.pos_body) and not any(
                ev.sat(b) for b in rule.neg_body
            ):
                return True
    return False
