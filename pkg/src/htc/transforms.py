"""Source-to-source transformations.

* assignment expansion: an assignment head ``x := a..b`` stands for the
  formula ``not not (def(a) & def(b)) & (def(a) & def(b) -> a <= x & x <= b)``;
  its non-directional reading is just the bounding conjunction;
* rule unfolding: a rule with assignment heads is equivalent to one
  implication per subset of its head, and those implications distribute
  further into rules whose heads are disjunctions of atoms and whose bodies
  are conjunctions of literals;
* normal form for linear constraints (constant right-hand side);
* elimination of conditional terms: each occurrence is replaced by a fresh
  variable pinned down by five defining implications.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .errors import TransformError
from .syntax import (
    And,
    Assignment,
    BOT,
    BoolAtom,
    Bot,
    Comparison,
    Const,
    ConditionalTerm,
    Defined,
    Implies,
    LCRule,
    LinearExpr,
    Not,
    Or,
    Scaled,
    TOP,
    Theory,
    TruthConst,
    check_budget,
    conj,
    const_expr,
    defined,
    desugar_aggregates,
    desugar_comparisons,
    desugar_theory,
    disj,
    eq_pair,
    FreshNames,
    le,
    linear_term_range,
    make_theory,
    negated_term,
    var_expr,
)

# --------------------------------------------------------------------------
# Assignments


@lru_cache(maxsize=None)
def phi(a: Assignment):
    """Non-directional version of an assignment: (lower <= x) & (x <= upper)."""
    x = var_expr(a.target)
    return And(le(a.lower, x), le(x, a.upper))


@lru_cache(maxsize=None)
def def_of(a: Assignment):
    """def(lower) & def(upper), collapsing to one conjunct for x := e."""
    if a.point:
        return defined(a.lower)
    return And(defined(a.lower), defined(a.upper))


@lru_cache(maxsize=None)
def assignment_formula(a: Assignment):
    """The directional reading: not not def(A) & (def(A) -> bounds hold)."""
    d = def_of(a)
    return And(Not(Not(d)), Implies(d, phi(a)))


def rule_formula(r: LCRule):
    """Implication form of a rule; facts collapse to their head."""
    head = disj(assignment_formula(a) for a in r.head)
    body_parts = list(r.pos_body) + [Not(b) for b in r.neg_body]
    if not body_parts:
        return head
    return Implies(conj(body_parts), head)


def theory_formulas(thy: Theory) -> tuple:
    """All statements as formulas, rules through their implication form."""
    return tuple(
        rule_formula(s) if isinstance(s, LCRule) else s for s in thy.statements
    )


# --------------------------------------------------------------------------
# Rule unfolding

UNFOLD_HEAD_LIMIT = 10


def unfold_rule(r: LCRule, distribute: bool = True, max_head: int = UNFOLD_HEAD_LIMIT):
    """Unfold a rule into implications free of assignment heads.

    One implication is produced per subset D of the head: the non-directional
    readings of D disjoined, guarded by the body, by def of every member of D
    and by the negated readings of the rest.  With ``distribute`` the
    implications are further split until heads are disjunctions of atoms and
    bodies conjunctions of literals.
    """
    heads = r.head
    if len(heads) > max_head:
        raise TransformError(
            f"refusing to unfold a rule with {len(heads)} head assignments"
        )
    base_body = list(r.pos_body) + [Not(b) for b in r.neg_body]
    psis = []
    for mask in range((1 << len(heads)) - 1, -1, -1):
        chosen = [a for i, a in enumerate(heads) if mask >> i & 1]
        rest = [a for i, a in enumerate(heads) if not mask >> i & 1]
        body_parts = base_body + [def_of(a) for a in chosen] + [Not(phi(a)) for a in rest]
        head = disj(phi(a) for a in chosen)
        psis.append(Implies(conj(body_parts), head) if body_parts else head)
    if not distribute:
        return psis
    out = []
    for psi in psis:
        out.extend(distribute_implication(psi))
    return out


def distribute_implication(psi):
    """Split one implication into rules: atom-disjunction heads, literal bodies."""
    if isinstance(psi, Implies):
        body, head = psi.lhs, psi.rhs
    else:
        body, head = TOP, psi
    rules = []
    for clause in _head_cnf(head):
        for lits in _body_dnf(body):
            rules.append(Implies(conj(lits), disj(clause)) if lits else disj(clause))
    return rules


def _is_atom(phi):
    return isinstance(phi, (Comparison, BoolAtom, TruthConst))


def _head_cnf(phi):
    if isinstance(phi, Bot):
        return [[]]
    if _is_atom(phi):
        return [[phi]]
    if isinstance(phi, And):
        return _head_cnf(phi.lhs) + _head_cnf(phi.rhs)
    if isinstance(phi, Or):
        return [a + b for a in _head_cnf(phi.lhs) for b in _head_cnf(phi.rhs)]
    raise TransformError(f"cannot distribute head {phi!r}")


def _body_dnf(phi):
    if phi == TOP:
        return [[]]
    if isinstance(phi, Bot):
        return []
    if _is_atom(phi):
        return [[phi]]
    if isinstance(phi, And):
        return [a + b for a in _body_dnf(phi.lhs) for b in _body_dnf(phi.rhs)]
    if isinstance(phi, Or):
        return _body_dnf(phi.lhs) + _body_dnf(phi.rhs)
    if isinstance(phi, Implies) and phi.rhs == BOT:
        return _negated_dnf(phi.lhs)
    raise TransformError(f"cannot distribute body part {phi!r}")


def _negated_dnf(phi):
    """Disjunctive normal form of ``not phi``, pushing negation inward.

    Uses the equivalences valid in here-and-there: both De Morgan laws,
    distribution of double negation over & and |, collapse of triple
    negation, and not (a -> b) == not not a & not b.
    """
    if phi == TOP:
        return []
    if isinstance(phi, Bot):
        return [[]]
    if _is_atom(phi):
        return [[Not(phi)]]
    if isinstance(phi, And):
        return _negated_dnf(phi.lhs) + _negated_dnf(phi.rhs)
    if isinstance(phi, Or):
        return [a + b for a in _negated_dnf(phi.lhs) for b in _negated_dnf(phi.rhs)]
    if isinstance(phi, Implies):
        if phi.rhs == BOT:
            return _doubly_negated_dnf(phi.lhs)
        return [
            a + b
            for a in _doubly_negated_dnf(phi.lhs)
            for b in _negated_dnf(phi.rhs)
        ]
    raise TransformError(f"cannot negate body part {phi!r}")


def _doubly_negated_dnf(phi):
    """Disjunctive normal form of ``not not phi``."""
    if phi == TOP:
        return [[]]
    if isinstance(phi, Bot):
        return []
    if _is_atom(phi):
        return [[Not(Not(phi))]]
    if isinstance(phi, And):
        return [
            a + b
            for a in _doubly_negated_dnf(phi.lhs)
            for b in _doubly_negated_dnf(phi.rhs)
        ]
    if isinstance(phi, Or):
        return _doubly_negated_dnf(phi.lhs) + _doubly_negated_dnf(phi.rhs)
    if isinstance(phi, Implies) and phi.rhs == BOT:
        return _negated_dnf(phi.lhs)
    raise TransformError(f"cannot doubly negate body part {phi!r}")


# --------------------------------------------------------------------------
# Normal form


def normalize_constraint(atom: Comparison) -> Comparison:
    """Move non-constant terms left (negated when crossing), constants right.

    Atoms whose right-hand side is already a single constant are returned
    unchanged.  Conditional terms move branch-wise, so definedness behaviour
    is identical before and after.
    """
    if atom.rel != "<=":
        raise TransformError("normal form is defined for <= atoms")
    if len(atom.rhs.items) == 1 and isinstance(atom.rhs.items[0], Const):
        return atom
    lhs_terms, lhs_const = _split_constants(atom.lhs)
    rhs_terms, rhs_const = _split_constants(atom.rhs)
    items = lhs_terms + [negated_term(t) for t in rhs_terms]
    new_lhs = LinearExpr(tuple(items)) if items else const_expr(0)
    return Comparison(new_lhs, "<=", const_expr(rhs_const - lhs_const))


def normalize_equality(lhs: LinearExpr, rhs: LinearExpr):
    """The pair of normal-form constraints equivalent to lhs = rhs.

    Written with every term on the left: first the negated right-hand side
    followed by the left-hand side (<= 0), then the same sum negated.
    """
    gamma = tuple(negated_term(t) for t in rhs.items) + lhs.items
    neg_gamma = tuple(negated_term(t) for t in gamma)
    zero = const_expr(0)
    return (
        Comparison(LinearExpr(gamma), "<=", zero),
        Comparison(LinearExpr(neg_gamma), "<=", zero),
    )


def _split_constants(e: LinearExpr):
    terms, const = [], 0
    for item in e.items:
        if isinstance(item, Const):
            const += item.value
        else:
            terms.append(item)
    return terms, const


# --------------------------------------------------------------------------
# Elimination of conditional terms


def delta(tau: ConditionalTerm, x_name: str) -> tuple:
    """The five implications pinning a fresh variable to a conditional term.

    In order: the two value implications (condition and definedness of the
    branch force the variable to equal it), the two reverse implications
    (definedness of the variable forces the equality), and the totality
    guard (a defined variable needs the condition decided).  Equalities are
    emitted as <= pairs.
    """
    x = var_expr(x_name)
    s = LinearExpr((tau.then_term,))
    s_else = LinearExpr((tau.else_term,))
    cond = desugar_comparisons(tau.condition)
    eq_then = eq_pair(x, s)
    eq_else = eq_pair(x, s_else)
    dx = defined(x)
    return (
        Implies(And(cond, defined(s)), eq_then),
        Implies(And(Not(cond), defined(s_else)), eq_else),
        Implies(And(cond, dx), eq_then),
        Implies(And(Not(cond), dx), eq_else),
        Implies(dx, Or(cond, Not(cond))),
    )


@dataclass(frozen=True)
class DeltaResult:
    """Outcome of eliminating conditional terms from a theory.

    ``rewritten`` holds the input with every conditional occurrence replaced
    by its fresh variable (declared in the extended spec); ``side`` the
    defining implications, one batch of five per occurrence; ``mapping`` the
    occurrences in replacement order.
    """

    rewritten: Theory
    side: tuple
    mapping: tuple

    def theory(self) -> Theory:
        """Rewritten statements plus side formulas, ready to solve."""
        return make_theory(self.rewritten.spec, self.rewritten.statements + self.side)


def eliminate_conditionals(theory: Theory, budget=None) -> DeltaResult:
    """Replace every conditional-term occurrence by a fresh variable.

    Aggregates are desugared first; occurrences are then replaced left to
    right in the surface statements (so an equality atom counts as one
    occurrence, not two), each with its own variable ``__c<k>`` whose
    interval hulls the two branch ranges.  Structural duplicates still get
    distinct variables.  Both the rewritten theory and the side formulas
    come out fully desugared and condition-free.
    """
    thy = desugar_aggregates(theory)
    fresh = FreshNames(thy.spec.variables())
    state = {"spec": thy.spec}
    mapping = []
    side = []

    def walk_expr(e: LinearExpr) -> LinearExpr:
        items = []
        for item in e.items:
            if isinstance(item, ConditionalTerm):
                name = fresh.fresh("c")
                lo1, hi1 = linear_term_range(item.then_term, state["spec"])
                lo2, hi2 = linear_term_range(item.else_term, state["spec"])
                state["spec"] = state["spec"].with_int_var(
                    name, min(lo1, lo2), max(hi1, hi2)
                )
                mapping.append((item, name))
                side.extend(delta(item, name))
                items.append(Scaled(1, name))
            else:
                items.append(item)
        return LinearExpr(tuple(items))

    def walk_formula(phi):
        if isinstance(phi, Comparison):
            return Comparison(walk_expr(phi.lhs), phi.rel, walk_expr(phi.rhs))
        if isinstance(phi, Defined):
            return Defined(walk_expr(phi.arg))
        if isinstance(phi, (Bot, BoolAtom, TruthConst)):
            return phi
        if isinstance(phi, (And, Or, Implies)):
            return type(phi)(walk_formula(phi.lhs), walk_formula(phi.rhs))
        raise TransformError(f"cannot rewrite {phi!r}")

    statements = []
    for stmt in thy.statements:
        if isinstance(stmt, LCRule):
            head = []
            for a in stmt.head:
                lower = walk_expr(a.lower)
                upper = lower if a.upper == a.lower else walk_expr(a.upper)
                head.append(Assignment(a.target, lower, upper))
            pos = tuple(walk_formula(b) for b in stmt.pos_body)
            neg = tuple(walk_formula(b) for b in stmt.neg_body)
            statements.append(LCRule(tuple(head), pos, neg))
        else:
            statements.append(walk_formula(stmt))
    rewritten = desugar_theory(make_theory(state["spec"], statements))
    check_budget(state["spec"], budget)
    return DeltaResult(rewritten, tuple(side), tuple(mapping))
