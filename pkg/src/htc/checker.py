"""Equivalence oracles and property suites.

Two theories are equivalent when they have the same here-and-there models,
stably equivalent when their stable models agree (optionally after
projection), and strongly equivalent for a projection when the projected
stable models agree under every added context theory.  The last condition
quantifies over all contexts; the sampled check here enumerates a finite,
deterministic family and is falsification-oriented only.

The property suites re-run the package's structural laws (persistence,
negation, term persistence, the five denotation conditions, supportedness,
rule unfolding, faithfulness of conditional-term elimination) on seeded
random corpora and report the first counterexample, shrunk to a locally
minimal instance.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .parser import pretty_print
from .semantics import (
    Interpretation,
    Valuation,
    _Eval,
    _iter_valuations,
    expr_value,
    ht_models,
    subvaluations,
    valuation_key,
)
from .syntax import (
    And,
    Assignment,
    BOT,
    BoolAtom,
    Bot,
    Comparison,
    Const,
    ConditionalTerm,
    DomainSpec,
    Implies,
    LCRule,
    LinearExpr,
    Not,
    Or,
    Scaled,
    TOP,
    Theory,
    TruthConst,
    U,
    check_budget,
    desugar_comparisons,
    desugar_theory,
    free_vars,
    le,
    make_theory,
)
from .transforms import eliminate_conditionals, theory_formulas, unfold_rule

# --------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class Witness:
    """Evidence for a 'different' verdict; re-checkable against both sides."""

    side: str
    interpretation: Optional[Interpretation] = None
    valuation: Optional[Valuation] = None
    context: Optional[tuple] = None

    def to_json(self) -> dict:
        out = {"side": self.side}
        if self.interpretation is not None:
            out["interpretation"] = self.interpretation.to_json()
        if self.valuation is not None:
            out["valuation"] = self.valuation.to_json()
        if self.context is not None:
            out["context"] = [pretty_print(f) for f in self.context]
        return out


@dataclass(frozen=True)
class EquivReport:
    verdict: str
    witness: Optional[Witness] = None
    projection: Optional[tuple] = None

    def __post_init__(self):
        if (self.verdict == "different") != (self.witness is not None):
            raise ValueError("witness present iff verdict is 'different'")

    @property
    def equal(self) -> bool:
        return self.verdict == "equal"

    def to_json(self) -> dict:
        out = {"verdict": self.verdict}
        if self.projection is not None:
            out["projection"] = sorted(self.projection)
        out["witness"] = self.witness.to_json() if self.witness else None
        return out


# --------------------------------------------------------------------------
# Model tables

# A table maps each candidate t (in enumeration order) to the tuple of all h
# below it with <h, t> satisfying the theory.  Stable models and stable
# models under added contexts are read off the table without re-evaluating
# the base theory.


def _ht_table(thy: Theory, budget=None):
    thy = desugar_theory(thy)
    check_budget(thy.spec, budget)
    formulas = theory_formulas(thy)
    table = []
    for t in _iter_valuations(thy.spec):
        ev_t = _Eval(t, t)
        hs = []
        for h in subvaluations(t):
            ev = ev_t if h == t else _Eval(h, t, total=ev_t)
            if all(ev.sat(f) for f in formulas):
                hs.append(h)
        table.append((t, tuple(hs)))
    return thy.spec, table


def _stable_under(table, extra=()):
    """Stable models of the tabled theory extended with ``extra`` formulas."""
    out = []
    for t, hs in table:
        if not hs or hs[-1] != t:
            continue
        ev_t = _Eval(t, t)
        if not all(ev_t.sat(f) for f in extra):
            continue
        stable = True
        for h in hs:
            if h == t:
                continue
            ev = _Eval(h, t, total=ev_t)
            if all(ev.sat(f) for f in extra):
                stable = False
                break
        if stable:
            out.append(t)
    return out


# --------------------------------------------------------------------------
# Equivalence checks


def equivalent(a: Theory, b: Theory, budget=None) -> EquivReport:
    """Same here-and-there models?  Both theories must share one spec."""
    a, b = desugar_theory(a), desugar_theory(b)
    if a.spec != b.spec:
        raise ValueError("theories must share a domain spec")
    ma = set(ht_models(a, budget=budget))
    mb = set(ht_models(b, budget=budget))
    if ma == mb:
        return EquivReport("equal")
    spec = a.spec

    def key(i):
        return (valuation_key(spec, i.t), valuation_key(spec, i.h))

    only_a = sorted(ma - mb, key=key)
    only_b = sorted(mb - ma, key=key)
    if only_a and (not only_b or key(only_a[0]) <= key(only_b[0])):
        w = Witness("left-only", interpretation=only_a[0])
    else:
        w = Witness("right-only", interpretation=only_b[0])
    return EquivReport("different", w)


def _projection(a: Theory, b: Theory, project):
    if project is None:
        if a.spec != b.spec:
            raise ValueError("theories must share a spec unless a projection is given")
        return tuple(a.spec.variables())
    names = tuple(sorted(project))
    for name in names:
        for spec in (a.spec, b.spec):
            if not spec.is_declared(name):
                raise ValueError(f"projection variable {name} is not declared")
        if a.spec.is_int(name) != b.spec.is_int(name) or (
            a.spec.is_int(name) and a.spec.interval(name) != b.spec.interval(name)
        ):
            raise ValueError(f"specs disagree on projection variable {name}")
    return names


def stable_equivalent(a: Theory, b: Theory, project=None, budget=None) -> EquivReport:
    """Same stable models, after projecting onto ``project`` when given."""
    a, b = desugar_theory(a), desugar_theory(b)
    names = _projection(a, b, project)
    _, ta = _ht_table(a, budget)
    _, tb = _ht_table(b, budget)
    sa = {t.project(names) for t in _stable_under(ta)}
    sb = {t.project(names) for t in _stable_under(tb)}
    projection = names if project is not None else None
    if sa == sb:
        return EquivReport("equal", projection=projection)
    w = _valuation_witness(a.spec, sa, sb)
    return EquivReport("different", w, projection=projection)


def _valuation_witness(spec, sa, sb, context=None):
    def key(v):
        return valuation_key(spec, v)

    only_a = sorted(sa - sb, key=key)
    only_b = sorted(sb - sa, key=key)
    if only_a and (not only_b or key(only_a[0]) <= key(only_b[0])):
        return Witness("left-only", valuation=only_a[0], context=context)
    return Witness("right-only", valuation=only_b[0], context=context)


def strong_equiv_sampled(
    a: Theory, b: Theory, project=None, contexts=(), budget=None
) -> EquivReport:
    """Projected stable-model equality under every context in the family.

    Contexts are tuples of formulas over the projection variables.  A pass
    means no counterexample was found within the family, nothing more.
    """
    a, b = desugar_theory(a), desugar_theory(b)
    names = _projection(a, b, project)
    _, ta = _ht_table(a, budget)
    _, tb = _ht_table(b, budget)
    for ctx in contexts:
        ctx = tuple(desugar_comparisons(f) for f in ctx)
        sa = {t.project(names) for t in _stable_under(ta, ctx)}
        sb = {t.project(names) for t in _stable_under(tb, ctx)}
        if sa != sb:
            w = _valuation_witness(a.spec, sa, sb, context=ctx)
            return EquivReport("different", w, projection=tuple(names))
    return EquivReport("equal", projection=tuple(names))


def context_family(spec: DomainSpec, names=None, max_contexts=48):
    """Deterministic family of context theories over the given variables.

    Facts over every atom shape (Boolean atoms; variable-vs-constant bounds
    over a few interval values), rules between Boolean atoms, and all
    pairwise unions, truncated to ``max_contexts``.
    """
    names = tuple(sorted(names if names is not None else spec.variables()))
    bools = [n for n in names if spec.is_bool(n)]
    ints = [n for n in names if spec.is_int(n)]
    singles = []
    for p in bools:
        singles.append(BoolAtom(p))
    for x in ints:
        lo, hi = spec.interval(x)
        values = sorted({lo, (lo + hi) // 2, hi})
        xe = LinearExpr((Scaled(1, x),))
        for d in values:
            de = LinearExpr((Const(d),))
            singles.append(le(xe, de))
            singles.append(le(de, xe))
    for p in bools:
        for q in bools:
            if p != q:
                singles.append(Implies(BoolAtom(p), BoolAtom(q)))
    family = [(f,) for f in singles]
    for i in range(len(singles)):
        for j in range(i + 1, len(singles)):
            family.append((singles[i], singles[j]))
    return family[:max_contexts]


# --------------------------------------------------------------------------
# Random corpora

COEFF_RANGE = (-2, 2)


def _gen_linear_term(rng, spec):
    ints = [n for n, _, _ in spec.int_vars]
    if not ints or rng.random() < 0.3:
        return Const(rng.randint(*COEFF_RANGE))
    return Scaled(rng.randint(*COEFF_RANGE), rng.choice(ints))


def _gen_condition(rng, spec, depth=1):
    """Condition-free formula for use inside conditional terms."""
    if depth > 0 and rng.random() < 0.4:
        kind = rng.choice(["and", "or", "not", "imp"])
        l = _gen_condition(rng, spec, depth - 1)
        r = _gen_condition(rng, spec, depth - 1)
        return {"and": And(l, r), "or": Or(l, r), "not": Not(l), "imp": Implies(l, r)}[
            kind
        ]
    return _gen_atom(rng, spec, conditional_budget=None)


def _gen_expr(rng, spec, conditional_budget, max_terms=2):
    items = []
    for _ in range(rng.randint(1, max_terms)):
        if (
            conditional_budget is not None
            and conditional_budget[0] > 0
            and rng.random() < 0.35
        ):
            conditional_budget[0] -= 1
            items.append(
                ConditionalTerm(
                    _gen_linear_term(rng, spec),
                    _gen_linear_term(rng, spec),
                    _gen_condition(rng, spec),
                )
            )
        else:
            items.append(_gen_linear_term(rng, spec))
    return LinearExpr(tuple(items))


def _gen_atom(rng, spec, conditional_budget):
    bools = list(spec.bool_vars)
    if bools and rng.random() < 0.35:
        return BoolAtom(rng.choice(bools))
    rel = rng.choice(["<=", "<=", "<", "=", "!=", ">=", ">"])
    lhs = _gen_expr(rng, spec, conditional_budget)
    rhs = _gen_expr(rng, spec, conditional_budget)
    return Comparison(lhs, rel, rhs)


def gen_formula(rng, spec, depth=3, conditional_budget=None):
    """Random surface formula; at most ``depth`` connectives on any path."""
    if conditional_budget is None:
        conditional_budget = [2]
    if depth > 0 and rng.random() < 0.55:
        kind = rng.choice(["and", "or", "imp", "not"])
        l = gen_formula(rng, spec, depth - 1, conditional_budget)
        if kind == "not":
            return Not(l)
        r = gen_formula(rng, spec, depth - 1, conditional_budget)
        return {"and": And(l, r), "or": Or(l, r), "imp": Implies(l, r)}[kind]
    return _gen_atom(rng, spec, conditional_budget)


def gen_conditional_term(rng, spec):
    return ConditionalTerm(
        _gen_linear_term(rng, spec),
        _gen_linear_term(rng, spec),
        _gen_condition(rng, spec),
    )


def gen_assignment(rng, spec, conditional_budget=None):
    if conditional_budget is None:
        conditional_budget = [1]
    ints = [n for n, _, _ in spec.int_vars]
    target = rng.choice(ints)
    lower = _gen_expr(rng, spec, conditional_budget)
    if rng.random() < 0.3:
        return Assignment(target, lower, _gen_expr(rng, spec, conditional_budget))
    return Assignment(target, lower, lower)


def gen_lc_rule(rng, spec, max_head=2, max_body=2):
    budget = [2]
    head = tuple(gen_assignment(rng, spec, budget) for _ in range(rng.randint(0, max_head)))
    pos, neg = [], []
    for _ in range(rng.randint(0, max_body)):
        atom = _gen_atom(rng, spec, budget)
        (neg if rng.random() < 0.3 else pos).append(atom)
    return LCRule(head, tuple(pos), tuple(neg))


def gen_program(rng, spec, max_rules=3):
    rules = [gen_lc_rule(rng, spec) for _ in range(rng.randint(1, max_rules))]
    return make_theory(spec, rules)


def gen_theory_one_conditional(rng, spec):
    """A theory with exactly one conditional-term occurrence, also after
    desugaring (the carrying atom uses <=, which never duplicates terms)."""
    tau = gen_conditional_term(rng, spec)
    carrier = LinearExpr(
        (tau,) + tuple(_gen_linear_term(rng, spec) for _ in range(rng.randint(0, 1)))
    )
    other = _gen_expr(rng, spec, conditional_budget=None)
    atom = le(carrier, other) if rng.random() < 0.5 else le(other, carrier)
    shape = rng.random()
    if shape < 0.3:
        main = atom
    elif shape < 0.5:
        main = Not(atom)
    elif shape < 0.75:
        main = Implies(atom, gen_formula(rng, spec, depth=1, conditional_budget=[0]))
    else:
        main = Implies(gen_formula(rng, spec, depth=1, conditional_budget=[0]), atom)
    extras = [
        gen_formula(rng, spec, depth=1, conditional_budget=[0])
        for _ in range(rng.randint(0, 2))
    ]
    return make_theory(spec, [main] + extras)


DEFAULT_SUITE_SPEC = DomainSpec.make({"x": (0, 2), "y": (0, 2)}, ["p"])


# --------------------------------------------------------------------------
# Property suites


@dataclass(frozen=True)
class SuiteReport:
    suite: str
    seed: int
    count: int
    checked: int
    violations: int
    counterexample: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "count": self.count,
            "checked": self.checked,
            "violations": self.violations,
            "counterexample": self.counterexample,
        }


def _interpretations(spec):
    for t in _iter_valuations(spec):
        ev_t = _Eval(t, t)
        for h in subvaluations(t):
            ev = ev_t if h == t else _Eval(h, t, total=ev_t)
            yield h, t, ev, ev_t


def _check_persistence(rng, spec):
    phi = desugar_comparisons(gen_formula(rng, spec))
    for h, t, ev, ev_t in _interpretations(spec):
        if ev.sat(phi) and not ev_t.sat(phi):
            return {
                "formula": phi,
                "shrink": "formula",
                "detail": {"h": h.to_json(), "t": t.to_json()},
            }
    return None


def _check_negation(rng, spec):
    phi = desugar_comparisons(gen_formula(rng, spec))
    neg = Not(phi)
    for h, t, ev, ev_t in _interpretations(spec):
        if ev.sat(neg) != (not ev_t.sat(phi)):
            return {
                "formula": phi,
                "shrink": "formula",
                "detail": {"h": h.to_json(), "t": t.to_json()},
            }
    return None


def _check_term_persistence(rng, spec):
    tau = gen_conditional_term(rng, spec)
    tau = ConditionalTerm(
        tau.then_term, tau.else_term, desugar_comparisons(tau.condition)
    )
    e = LinearExpr((tau,))
    for t in _iter_valuations(spec):
        for h in subvaluations(t):
            here = expr_value(h, t, e)
            if here is not U and here != expr_value(t, t, e):
                return {
                    "term": pretty_print(e),
                    "detail": {"h": h.to_json(), "t": t.to_json()},
                }
    return None


def _check_denotation_laws(rng, spec):
    from .semantics import denotes, substitute_value

    atom = _gen_core_atom(rng, spec)
    valuations = list(_iter_valuations(spec))
    # condition 1: monotonicity
    for v2 in valuations:
        for v in subvaluations(v2):
            if denotes(v, atom) and not denotes(v2, atom):
                return {"atom": pretty_print(atom), "law": 1, "detail": v.to_json()}
    # condition 2: substituting a variable by its value
    for v in valuations:
        if not denotes(v, atom):
            continue
        for x in sorted(free_vars(atom)):
            if not denotes(v, substitute_value(atom, x, v.get(x))):
                return {"atom": pretty_print(atom), "law": 2, "detail": v.to_json()}
    # condition 3: only vars(c) matters
    relevant = sorted(free_vars(atom))
    seen = {}
    for v in valuations:
        key = tuple((x, v.get(x)) for x in relevant)
        d = denotes(v, atom)
        if key in seen and seen[key] != d:
            return {"atom": pretty_print(atom), "law": 3, "detail": v.to_json()}
        seen[key] = d
    # condition 4: undefined positions only weaken an atom
    cond_atom = _gen_conditional_atom(rng, spec)
    for v in valuations:
        subs = _conditional_substitutions(cond_atom)
        for with_u, with_s, with_s2 in subs:
            if denotes(v, with_u) and not (denotes(v, with_s) and denotes(v, with_s2)):
                return {"atom": pretty_print(cond_atom), "law": 4, "detail": v.to_json()}
    # condition 5: equal subexpressions are interchangeable
    s2 = _gen_linear_term(rng, spec)
    for v in valuations:
        for side, idx, s in _term_occurrences(atom):
            se, s2e = LinearExpr((s,)), LinearExpr((s2,))
            if denotes(v, le(se, s2e)) and denotes(v, le(s2e, se)):
                replaced = _replace_occurrence(atom, side, idx, s2)
                if denotes(v, atom) != denotes(v, replaced):
                    return {
                        "atom": pretty_print(atom),
                        "law": 5,
                        "detail": v.to_json(),
                    }
    return None


def _gen_core_atom(rng, spec):
    e1 = LinearExpr(tuple(_gen_linear_term(rng, spec) for _ in range(rng.randint(1, 2))))
    e2 = LinearExpr(tuple(_gen_linear_term(rng, spec) for _ in range(rng.randint(1, 2))))
    if spec.bool_vars and rng.random() < 0.2:
        return BoolAtom(rng.choice(list(spec.bool_vars)))
    return le(e1, e2)


def _gen_conditional_atom(rng, spec):
    items = (gen_conditional_term(rng, spec), _gen_linear_term(rng, spec))
    return le(LinearExpr(items), LinearExpr((_gen_linear_term(rng, spec),)))


def _conditional_substitutions(atom):
    out = []
    for side, idx, item in _term_occurrences(atom, conditional=True):
        out.append(
            (
                _replace_occurrence(atom, side, idx, U),
                _replace_occurrence(atom, side, idx, item.then_term),
                _replace_occurrence(atom, side, idx, item.else_term),
            )
        )
    return out


def _term_occurrences(atom, conditional=False):
    if not isinstance(atom, Comparison):
        return
    want = ConditionalTerm if conditional else (Const, Scaled)
    for side, e in (("lhs", atom.lhs), ("rhs", atom.rhs)):
        for idx, item in enumerate(e.items):
            if isinstance(item, want):
                yield side, idx, item


def _replace_occurrence(atom, side, idx, new_item):
    lhs, rhs = atom.lhs, atom.rhs
    e = lhs if side == "lhs" else rhs
    items = e.items[:idx] + (new_item,) + e.items[idx + 1 :]
    e2 = LinearExpr(items)
    if side == "lhs":
        return Comparison(e2, atom.rel, rhs)
    return Comparison(lhs, atom.rel, e2)


def _check_supportedness(rng, spec):
    from .semantics import is_supported

    program = gen_program(rng, spec)
    core = desugar_theory(program)
    _, table = _ht_table(core)
    models = _stable_under(table)
    for t in models:
        if not is_supported(t, core):
            return {
                "theory": core,
                "shrink": "theory",
                "detail": {"model": t.to_json(), "law": "lc-supported"},
            }
    unfolded = []
    for rule in core.rules:
        unfolded.extend(unfold_rule(rule))
    for t in models:
        if not _htc_supported(t, unfolded):
            return {
                "theory": core,
                "shrink": "theory",
                "detail": {"model": t.to_json(), "law": "htc-supported"},
            }
        if not _htc_supported_sharp(t, unfolded):
            return {
                "theory": core,
                "shrink": "theory",
                "detail": {"model": t.to_json(), "law": "htc-supported-sharp"},
            }
    return None


def _flatten(phi, cls):
    if isinstance(phi, cls):
        yield from _flatten(phi.lhs, cls)
        yield from _flatten(phi.rhs, cls)
    else:
        yield phi


def _structured_rules(rules):
    """Split implication-form rules into (head atoms, body literals)."""
    structured = []
    for r in rules:
        if isinstance(r, Implies) and r.rhs != BOT:
            body, head = r.lhs, r.rhs
        else:
            body, head = TOP, r
        head_atoms = () if isinstance(head, Bot) else tuple(_flatten(head, Or))
        body_lits = tuple(_flatten(body, And))
        structured.append((head_atoms, body_lits))
    return structured


def _htc_supported(t: Valuation, rules) -> bool:
    """Supportedness against rules whose heads are disjunctions of atoms."""
    ev = _Eval(t, t)
    structured = _structured_rules(rules)
    for x in t.names():
        if not _htc_var_supported(ev, x, structured):
            return False
    return True


def _htc_var_supported(ev, x, structured) -> bool:
    for head_atoms, body_lits in structured:
        for c in head_atoms:
            if x not in free_vars(c):
                continue
            if any(
                ev.sat(c2)
                for c2 in head_atoms
                if x not in free_vars(c2)
            ):
                continue
            if all(ev.sat(b) for b in body_lits if b != TOP):
                return True
    return False


def _htc_supported_sharp(t: Valuation, rules) -> bool:
    """Interpretation-level supportedness: undefining one variable leaves a
    rule whose head mentions it, whose other head atoms fail at the total
    world, and whose body still holds at the weakened pair."""
    ev_t = _Eval(t, t)
    structured = _structured_rules(rules)
    for x in t.names():
        h = Valuation((n, v) for n, v in t.items() if n != x)
        ev_h = _Eval(h, t, total=ev_t)
        ok = False
        for head_atoms, body_lits in structured:
            for c in head_atoms:
                if x not in free_vars(c):
                    continue
                if any(
                    ev_t.sat(c2) for c2 in head_atoms if x not in free_vars(c2)
                ):
                    continue
                if all(ev_h.sat(b) for b in body_lits if b != TOP):
                    ok = True
                    break
            if ok:
                break
        if not ok:
            return False
    return True


def _check_unfolding(rng, spec):
    rule = gen_lc_rule(rng, spec)
    core = desugar_theory(make_theory(spec, [rule]))
    rule = core.rules[0]
    base = ht_models(core)
    for distribute in (False, True):
        other = make_theory(spec, unfold_rule(rule, distribute=distribute))
        if set(ht_models(other)) != set(base):
            return {
                "theory": core,
                "shrink": "theory",
                "detail": {"distribute": distribute},
            }
    return None


def _check_delta_faithfulness(rng, spec):
    thy = desugar_theory(gen_theory_one_conditional(rng, spec))
    names = thy.spec.variables()
    translated = eliminate_conditionals(thy).theory()
    _, ta = _ht_table(thy)
    _, tb = _ht_table(translated)
    for ctx in [()] + context_family(thy.spec, names):
        sa = {t.project(names) for t in _stable_under(ta, ctx)}
        sb = {t.project(names) for t in _stable_under(tb, ctx)}
        if sa != sb:
            return {
                "theory": thy,
                "shrink": "theory",
                "detail": {"context": [pretty_print(f) for f in ctx]},
            }
    return None


_SUITES = {
    "persistence": _check_persistence,
    "negation": _check_negation,
    "term-persistence": _check_term_persistence,
    "denotation-laws": _check_denotation_laws,
    "supportedness": _check_supportedness,
    "unfolding": _check_unfolding,
    "delta-faithfulness": _check_delta_faithfulness,
}

SUITE_NAMES = tuple(sorted(_SUITES))


def _suite_item(suite: str, seed: int, i: int, spec: DomainSpec):
    rng = random.Random(seed * 1_000_003 + i)
    return _SUITES[suite](rng, spec)


def run_property_suite(
    suite: str, seed: int = 0, count: int = 50, spec=None, jobs: int = 1
) -> SuiteReport:
    """Run one suite over ``count`` seeded random instances.

    Deterministic for a fixed (suite, seed, count, spec): corpus items are
    independent, so with ``jobs`` they run in parallel and the lowest failing
    index is reported either way.  The first violation is shrunk before being
    reported.
    """
    if suite not in _SUITES:
        raise ValueError(f"unknown suite {suite!r}; pick one of {', '.join(SUITE_NAMES)}")
    spec = spec or DEFAULT_SUITE_SPEC
    check = _SUITES[suite]
    first = None
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = pool.map(
                _suite_item,
                [suite] * count,
                [seed] * count,
                range(count),
                [spec] * count,
            )
            for i, violation in enumerate(results):
                if violation is not None:
                    first = (i, violation)
                    break
    else:
        for i in range(count):
            violation = _suite_item(suite, seed, i, spec)
            if violation is not None:
                first = (i, violation)
                break
    if first is None:
        return SuiteReport(suite, seed, count, count, 0)
    i, violation = first
    violation = _shrink_violation(check, violation, spec)
    violation["item"] = i
    return SuiteReport(suite, seed, count, i + 1, 1, _render_violation(violation))


def _render_violation(v: dict) -> dict:
    out = {}
    for key, value in v.items():
        if key == "shrink":
            continue
        if isinstance(value, Theory):
            out[key] = pretty_print(value)
        elif key == "formula":
            out[key] = pretty_print(value)
        else:
            out[key] = value
    return out


def _shrink_violation(check, violation, spec):
    """Greedy shrink: re-run the failing law on smaller candidates."""
    if violation.get("shrink") == "theory":
        thy = violation["theory"]
        thy = _shrink_theory(thy, lambda cand: _still_fails_theory(check, cand))
        violation = dict(violation, theory=thy)
    elif violation.get("shrink") == "formula":
        phi = violation["formula"]
        fails = lambda cand: _still_fails_formula(check, cand, spec)
        violation = dict(violation, formula=_shrink_formula(phi, fails))
    return violation


def _still_fails_theory(check, thy) -> bool:
    if check is _check_supportedness:
        return _supportedness_fails(thy)
    if check is _check_unfolding:
        return _unfolding_fails(thy)
    if check is _check_delta_faithfulness:
        return _delta_fails(thy)
    return False


def _supportedness_fails(core) -> bool:
    from .semantics import is_supported

    try:
        _, table = _ht_table(core)
        models = _stable_under(table)
        if any(not is_supported(t, core) for t in models):
            return True
        unfolded = []
        for rule in core.rules:
            unfolded.extend(unfold_rule(rule))
        return any(
            not _htc_supported(t, unfolded) or not _htc_supported_sharp(t, unfolded)
            for t in models
        )
    except Exception:
        return False


def _unfolding_fails(core) -> bool:
    try:
        base = set(ht_models(core))
        for distribute in (False, True):
            formulas = []
            for stmt in core.statements:
                if isinstance(stmt, LCRule):
                    formulas.extend(unfold_rule(stmt, distribute=distribute))
                else:
                    formulas.append(stmt)
            if set(ht_models(make_theory(core.spec, formulas))) != base:
                return True
        return False
    except Exception:
        return False


def _delta_fails(thy) -> bool:
    try:
        names = thy.spec.variables()
        translated = eliminate_conditionals(thy).theory()
        if not stable_equivalent(thy, translated, project=names).equal:
            return True
        family = context_family(thy.spec, names)
        return not strong_equiv_sampled(
            thy, translated, project=names, contexts=family
        ).equal
    except Exception:
        return False


def _still_fails_formula(check, phi, spec) -> bool:
    try:
        if check is _check_persistence:
            for h, t, ev, ev_t in _interpretations(spec):
                if ev.sat(phi) and not ev_t.sat(phi):
                    return True
            return False
        if check is _check_negation:
            neg = Not(phi)
            for h, t, ev, ev_t in _interpretations(spec):
                if ev.sat(neg) != (not ev_t.sat(phi)):
                    return True
            return False
    except Exception:
        return False
    return False


def _shrink_theory(thy: Theory, fails) -> Theory:
    """Drop statements, then unused variables, while the violation persists."""
    statements = list(thy.statements)
    changed = True
    while changed:
        changed = False
        for i in range(len(statements)):
            cand = make_theory(thy.spec, statements[:i] + statements[i + 1 :])
            if fails(cand):
                statements.pop(i)
                changed = True
                break
    thy = make_theory(thy.spec, statements)
    used = free_vars(thy)
    ints = {n: (lo, hi) for n, lo, hi in thy.spec.int_vars if n in used}
    bools = [n for n in thy.spec.bool_vars if n in used]
    cand = make_theory(DomainSpec.make(ints, bools), statements)
    if fails(cand):
        return cand
    return thy


def _shrink_formula(phi, fails):
    """Descend into subformulas while the violation persists."""
    changed = True
    while changed:
        changed = False
        for sub in _immediate_subformulas(phi):
            if fails(sub):
                phi = sub
                changed = True
                break
    return phi


def _immediate_subformulas(phi):
    if isinstance(phi, (And, Or, Implies)):
        yield phi.lhs
        yield phi.rhs


# --------------------------------------------------------------------------
# Here-and-there tautology schemata (substitution instances stay tautologies)


def _iff(a, b):
    return And(Implies(a, b), Implies(b, a))


def ht_tautology_schemata():
    """Named builders for valid schemata; instantiating their metavariables
    with arbitrary formulas must yield tautologies."""

    def negneg_intro(g, f, s):
        return Implies(f, Not(Not(f)))

    def orimp(g, f, s):
        return _iff(
            Or(g, Implies(f, s)),
            And(Implies(f, Or(s, g)), Implies(Not(s), Or(Not(f), g))),
        )

    def nest_impl(g, f, s):
        return _iff(Implies(f, Implies(s, g)), Implies(And(f, s), g))

    def andimp(g, f, s):
        return _iff(Implies(f, And(s, g)), And(Implies(f, s), Implies(f, g)))

    def negneg(g, f, s):
        return _iff(Or(g, Not(Not(f))), Implies(Not(f), g))

    def df(g, f, s):
        return _iff(
            Or(g, And(Not(Not(f)), Implies(f, s))),
            And(Implies(f, Or(s, g)), And(Implies(Not(s), g), Implies(Not(f), g))),
        )

    return [
        ("negneg-intro", negneg_intro),
        ("orimp", orimp),
        ("nest-impl", nest_impl),
        ("andimp", andimp),
        ("negneg", negneg),
        ("df", df),
    ]


def is_ht_tautology(phi, spec, budget=None) -> bool:
    """Every interpretation over the spec satisfies phi."""
    thy = make_theory(spec, [phi])
    return len(ht_models(thy, budget=budget)) == spec.interpretation_count()
