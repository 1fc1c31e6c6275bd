"""Differential check of the engine against a naive reference evaluator.

The reference below is written straight from the definitions, with no
sharing, no memoization and no fused evaluation paths, so a bug in the
engine's shortcuts cannot hide in both implementations.
"""

import random

from htc.checker import DEFAULT_SUITE_SPEC, gen_formula, gen_program
from htc.parser import parse_theory
from htc.semantics import (
    Interpretation,
    Valuation,
    enumerate_valuations,
    satisfies,
    stable_models,
    subvaluations,
)
from htc.syntax import (
    TRUE,
    And,
    BoolAtom,
    Bot,
    Comparison,
    Const,
    ConditionalTerm,
    Implies,
    Or,
    Scaled,
    TruthConst,
    Undefined,
    desugar_theory,
    make_theory,
)
from htc.transforms import theory_formulas

SPEC = DEFAULT_SUITE_SPEC


def ref_term_value(v, term):
    if isinstance(term, Const):
        return term.value
    if isinstance(term, Scaled):
        x = v.get(term.var)
        if not isinstance(x, int):
            return None
        return term.coeff * x
    return None  # undefined marker


def ref_expr_value(v, h, t, expr):
    total = 0
    for item in expr.items:
        if isinstance(item, ConditionalTerm):
            if ref_sat(h, t, item.condition):
                item = item.then_term
            elif not ref_sat(t, t, item.condition):
                item = item.else_term
            else:
                return None
        if isinstance(item, Undefined):
            return None
        value = ref_term_value(v, item)
        if value is None:
            return None
        total += value
    return total


def ref_sat(h, t, phi):
    if isinstance(phi, Bot):
        return False
    if isinstance(phi, TruthConst):
        return phi.value
    if isinstance(phi, BoolAtom):
        return h.get(phi.name) == TRUE
    if isinstance(phi, Comparison):
        assert phi.rel == "<="
        a = ref_expr_value(h, h, t, phi.lhs)
        b = ref_expr_value(h, h, t, phi.rhs)
        return a is not None and b is not None and a <= b
    if isinstance(phi, And):
        return ref_sat(h, t, phi.lhs) and ref_sat(h, t, phi.rhs)
    if isinstance(phi, Or):
        return ref_sat(h, t, phi.lhs) or ref_sat(h, t, phi.rhs)
    if isinstance(phi, Implies):
        for w in (h, t):
            if ref_sat(w, t, phi.lhs) and not ref_sat(w, t, phi.rhs):
                return False
        return True
    raise TypeError(phi)


def ref_stable_models(theory):
    theory = desugar_theory(theory)
    formulas = theory_formulas(theory)
    out = []
    for t in enumerate_valuations(theory.spec):
        if not all(ref_sat(t, t, f) for f in formulas):
            continue
        minimal = True
        for h in subvaluations(t):
            if h == t:
                continue
            if all(ref_sat(h, t, f) for f in formulas):
                minimal = False
                break
        if minimal:
            out.append(t)
    return out


class TestAgainstReference:
    def test_satisfaction_agrees_on_random_formulas(self):
        for i in range(80):
            rng = random.Random(41_000_003 + i)
            phi = desugar_theory(
                make_theory(SPEC, [gen_formula(rng, SPEC)])
            ).statements[0]
            for t in enumerate_valuations(SPEC):
                for h in subvaluations(t):
                    expected = ref_sat(h, t, phi)
                    assert satisfies(Interpretation(h, t), phi) == expected

    def test_stable_models_agree_on_random_programs(self):
        for i in range(25):
            rng = random.Random(42_000_003 + i)
            prog = gen_program(rng, SPEC)
            assert stable_models(prog) == ref_stable_models(prog)

    def test_stable_models_agree_on_shipped_programs(self):
        import pathlib

        programs = pathlib.Path(__file__).resolve().parent.parent / "programs"
        for name in ("vicious", "ysum", "ycond", "ycondp"):
            thy = parse_theory((programs / f"{name}.lc").read_text())
            assert stable_models(thy) == ref_stable_models(thy)
