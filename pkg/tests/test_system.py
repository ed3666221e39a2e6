import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from ppsolve.errors import PolicyError
from ppsolve.system import (
    MAXOF,
    MINOF,
    SINGLE,
    Equation,
    MaxMinPps,
    Monomial,
    Policy,
    ProbPolynomial,
    ValueVector,
    apply_policy,
    encoding_size,
    polynomial,
    population_value,
    validate,
)
from ppsolve.textio import parse_pps

import corpus


def simple(expr_terms, names=("x",)):
    return MaxMinPps((Equation(SINGLE, (polynomial(expr_terms),)),), names)


class TestValidate:
    def test_exact_sum_one_is_ok(self):
        pps = simple([(F(1, 2), {0: 2}), (F(1, 2), {})])
        assert validate(pps) == []

    def test_sum_above_one_reported(self):
        pps = simple([(F(3, 4), {0: 1}), (F(1, 2), {})])
        violations = validate(pps)
        assert len(violations) == 1
        assert "coefficient sum 5/4 > 1" in str(violations[0])
        assert violations[0].equation == 0

    def test_example_system_is_ok(self):
        assert validate(parse_pps(corpus.EX32_PPS)) == []

    def test_violations_are_data_not_raises(self):
        pps = simple([(2, {})])
        assert validate(pps)  # no exception


class TestEncodingSize:
    def test_constant_half(self):
        assert encoding_size(simple([(F(1, 2), {})])) == 5

    def test_identity_equation(self):
        assert encoding_size(simple([(1, {0: 1})])) == 6

    def test_adding_a_monomial_strictly_increases(self):
        base = simple([(F(1, 2), {})])
        bigger = simple([(F(1, 4), {}), (F(1, 4), {0: 1})])
        assert encoding_size(bigger) > encoding_size(base)

    def test_every_monomial_contributes(self):
        rng = random.Random(11)
        for _ in range(20):
            pps = corpus.random_maxminpps(rng, 3)
            assert encoding_size(pps) >= pps.n  # at least the per-equation bits


class TestMonomial:
    def test_zero_coefficient_rejected(self):
        with pytest.raises(ValueError):
            Monomial(0, ())

    def test_zero_exponent_rejected(self):
        with pytest.raises(ValueError):
            Monomial(1, ((0, 0),))

    def test_duplicate_merge_in_polynomial(self):
        p = ProbPolynomial((Monomial(F(1, 4), ((0, 1),)), Monomial(F(1, 4), ((0, 1),))))
        assert len(p.monomials) == 1
        assert p.monomials[0].coefficient == F(1, 2)


class TestClassify:
    def test_pure_and_single_branch(self):
        pps = MaxMinPps((
            Equation(MINOF, (polynomial([(1, {0: 1})]),)),
        ))
        assert pps.classify() == "pps"  # one branch is no choice

    def test_mixed(self):
        pps = MaxMinPps((
            Equation(MAXOF, (polynomial([(1, {0: 1})]), polynomial([(F(1, 2), {})]))),
            Equation(MINOF, (polynomial([(1, {0: 1})]), polynomial([(F(1, 2), {})]))),
        ))
        assert pps.classify() == "maxminpps"


class TestPolicy:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            Policy.of("min", {0: ((0, F(1, 2)), (1, F(1, 4)))})

    def test_zero_weights_normalized_away(self):
        pol = Policy.of("min", {0: ((0, F(1, 1)), (1, F(0, 1)))})
        assert pol.as_dict()[0] == 0  # collapsed to deterministic

    def test_randomized_kept(self):
        pol = Policy.of("min", {0: ((0, F(7, 8)), (1, F(1, 8)))})
        assert pol.as_dict()[0] == ((0, F(7, 8)), (1, F(1, 8)))
        assert not pol.is_deterministic


class TestApplyPolicy:
    def setup_method(self):
        self.pps = parse_pps(corpus.EX31_PPS)

    def test_empty_policies_identity(self):
        assert apply_policy(self.pps) == self.pps

    def test_deterministic_selection(self):
        fixed = apply_policy(self.pps, tau=Policy.of("min", {0: 0}))
        assert fixed.equations[0].kind == SINGLE
        assert fixed.equations[0].branches[0] == polynomial([(1, {0: 2})])

    def test_randomized_convex_combination(self):
        tau = Policy.of("min", {0: ((0, F(7, 8)), (1, F(1, 8)))})
        fixed = apply_policy(self.pps, tau=tau)
        expected = polynomial([(F(7, 8), {0: 2}), (F(1, 8), {1: 1})])
        assert fixed.equations[0].branches[0] == expected

    def test_wrong_player_rejected(self):
        with pytest.raises(PolicyError):
            apply_policy(self.pps, sigma=Policy.of("min", {0: 0}))

    def test_missing_choice_rejected(self):
        with pytest.raises(PolicyError):
            apply_policy(self.pps, tau=Policy.of("min", {}))


class TestPopulationValue:
    def test_direct_product(self):
        assert population_value([F(1, 2), F(1, 4)], {0: 2, 1: 1}) == F(1, 16)

    def test_empty_population(self):
        assert population_value([F(1, 2)], {}) == 1

    def test_zero_factor(self):
        assert population_value([F(0), F(1, 2)], {0: 1, 1: 5}) == 0

    @given(st.lists(st.fractions(min_value=0, max_value=1), min_size=1, max_size=4),
           st.dictionaries(st.integers(0, 3), st.integers(0, 3), max_size=3))
    def test_bounded_by_unit_interval(self, g, mu):
        mu = {k: v for k, v in mu.items() if k < len(g)}
        value = population_value(g, mu)
        assert 0 <= value <= 1


class TestEvaluateMonotone:
    def test_monotone_on_random_pairs(self):
        rng = random.Random(5)
        for _ in range(40):
            pps = corpus.random_maxminpps(rng, 4)
            lo = corpus.random_interior_point(rng, 4)
            hi = [min(F(1), v + F(rng.randint(0, 8), 64)) for v in lo]
            a = pps.evaluate(lo)
            b = pps.evaluate(hi)
            assert all(x <= y for x, y in zip(a, b))


class TestValueVector:
    def test_exact_entries_are_fractions(self):
        v = ValueVector.exact([1, F(1, 2)])
        assert all(isinstance(e, F) for e in v)

    def test_unit_box_check(self):
        assert ValueVector.floats([0.0, 1.0]).in_unit_box()
        assert not ValueVector.floats([1.5]).in_unit_box()
