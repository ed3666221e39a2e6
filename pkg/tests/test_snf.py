import random
from fractions import Fraction as F

import pytest

from ppsolve.errors import PreconditionError
from ppsolve.snf import (
    FormL,
    FormM,
    FormQ,
    SnfSystem,
    apply_policy_snf,
    dependency_graph,
    evaluate,
    extend_original_values,
    jacobian,
    linearize,
    policy_from_original,
    policy_to_original,
    snf_to_maxminpps,
    to_snf,
    value_iterate,
)
from ppsolve.system import MAXOF, MINOF, Policy, ValueVector, validate
from ppsolve.graphs import tarjan_sccs, bottom_sccs
from ppsolve.textio import parse_pps

import corpus
import oracles


def ex31_snf():
    return to_snf(parse_pps(corpus.EX31_PPS))


def ex32_snf():
    return to_snf(parse_pps(corpus.EX32_PPS))


class TestToSnf:
    def test_worked_example_structure(self):
        snf = ex31_snf()
        assert snf.names == ("a", "_aux0", "b")
        assert snf.forms == (
            FormM(MINOF, 1, 2),
            FormQ(0, 0),
            FormL(F(1, 2), ()),
        )
        assert snf.origin_map == {0: 0, 1: 2}
        assert snf.aux_count == 1

    def test_second_example_aux_placement(self):
        snf = ex32_snf()
        assert snf.names == ("a", "_aux0", "b", "c")
        assert snf.forms[1] == FormQ(2, 2)
        assert snf.origin_map == {0: 0, 1: 2, 2: 3}

    def test_already_snf_unchanged(self):
        text = "x = min{ y ; z }\ny = 1/2 * x\nz = 1/3\n"
        snf = to_snf(parse_pps(text))
        assert snf.aux_count == 0
        assert snf.names == ("x", "y", "z")
        assert snf.forms == (
            FormM(MINOF, 1, 2),
            FormL(0, ((0, F(1, 2)),)),
            FormL(F(1, 3), ()),
        )

    def test_cubic_projection_preserves_gfp(self):
        pps = parse_pps("x = 1/4 * x^3 + 1/4\n")
        snf = to_snf(pps)
        # squaring chain then a product split
        assert snf.aux_count == 2
        assert {type(f) for f in snf.forms[1:]} == {FormQ}
        direct = oracles.vi_fixed_point(to_snf(pps), 1.0, 1e-15)
        # independent scalar iteration on the original cubic
        x = 1.0
        for _ in range(10000):
            x = 0.25 * x**3 + 0.25
        assert abs(direct[snf.origin_map[0]] - x) <= 1e-12

    def test_output_is_valid(self):
        rng = random.Random(77)
        for _ in range(30):
            pps = corpus.random_maxminpps(rng, 4)
            snf = to_snf(pps)
            assert not validate(snf_to_maxminpps(snf))

    def test_soundness_against_original(self):
        # extending a random point to the auxiliaries reproduces P exactly
        rng = random.Random(13)
        for _ in range(40):
            pps = corpus.random_maxminpps(rng, 4)
            snf = to_snf(pps)
            x = corpus.random_interior_point(rng, pps.n)
            full = extend_original_values(snf, x)
            applied = oracles.eval_forms(snf.forms, full)
            original = pps.evaluate(x)
            for orig, idx in snf.origin:
                assert applied[idx] == original[orig]

    def test_size_stays_linear(self):
        from ppsolve.system import encoding_size

        rng = random.Random(3)
        for _ in range(20):
            pps = corpus.random_maxminpps(rng, 4)
            assert encoding_size(to_snf(pps)) <= 40 * encoding_size(pps)


class TestEvaluate:
    def test_worked_example_at_one(self):
        snf = ex31_snf()
        out = evaluate(snf, ValueVector.exact([1, 1, 1]))
        assert list(out) == [1, 1, F(1, 2)]

    def test_fixed_point_stays(self):
        snf = ex31_snf()
        g = ValueVector.exact([0, 0, F(1, 2)])
        assert list(evaluate(snf, g)) == list(g)

    def test_product_row(self):
        snf = SnfSystem((FormQ(1, 1), FormL(F(1, 3), ())))
        out = evaluate(snf, ValueVector.exact([0, F(1, 3)]))
        assert out[0] == F(1, 9)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            evaluate(ex31_snf(), ValueVector.exact([1, 1]))


class TestJacobian:
    def test_square_row_derivative(self):
        snf = SnfSystem((FormL(F(1, 2), ((1, F(1, 2)),)), FormQ(0, 0)))
        rows = jacobian(snf, [F(1, 4), F(1, 16)])
        assert rows[1][0] == F(1, 2)  # 2 * 1/4
        assert rows[0][1] == F(1, 2)

    def test_affine_rows_constant_in_x(self):
        snf = SnfSystem((FormL(F(1, 2), ((1, F(1, 2)),)), FormQ(0, 0)))
        at_zero = jacobian(snf, [F(0), F(0)])
        at_one = jacobian(snf, [F(1), F(1)])
        assert at_zero[0] == at_one[0]

    def test_finite_difference_agreement(self):
        rng = random.Random(23)
        delta = 1e-6
        for _ in range(15):
            snf = corpus.random_snf(rng, 5, allow_max=False, allow_min=False)
            x = [0.1 + 0.7 * rng.random() for _ in range(5)]
            rows = jacobian(snf, x)
            base = oracles.eval_forms(snf.forms, x)
            for j in range(5):
                bumped = list(x)
                bumped[j] += delta
                shifted = oracles.eval_forms(snf.forms, bumped)
                for i in range(5):
                    fd = (shifted[i] - base[i]) / delta
                    assert abs(fd - float(rows[i][j])) <= 10 * delta

    def test_unresolved_m_rejected(self):
        with pytest.raises(PreconditionError):
            jacobian(ex31_snf(), [F(0)] * 3)


class TestLinearize:
    def test_square_at_zero_becomes_zero(self):
        snf = SnfSystem((FormQ(0, 0),))
        lin = linearize(snf, [F(0)])
        assert lin.rows[0].const == 0 and lin.rows[0].terms == ()

    def test_product_tangent(self):
        snf = SnfSystem((FormQ(1, 2), FormL(F(1, 2), ()), FormL(F(1, 3), ())))
        lin = linearize(snf, [F(0), F(1, 2), F(1, 3)])
        row = lin.rows[0]
        assert row.const == -F(1, 6)
        assert dict(row.terms) == {1: F(1, 3), 2: F(1, 2)}

    def test_exact_at_base_point(self):
        snf = ex32_snf()
        g = [F(1, 2), F(1, 4), F(1, 2), F(2, 3)]
        lin = linearize(snf, g)
        assert lin.evaluate(g) == oracles.eval_forms(snf.forms, g) == g

    def test_commutes_with_apply_policy(self):
        rng = random.Random(9)
        for _ in range(25):
            snf = corpus.random_min_snf(rng, 5)
            tau = Policy.of(
                "min", {i: rng.randint(0, 1) for i in snf.m_vars("min")}
            )
            y = corpus.random_interior_point(rng, 5)
            a = linearize(apply_policy_snf(snf, tau=tau), y)
            b = linearize(snf, y).apply_policy(tau=tau)
            x = corpus.random_interior_point(rng, 5)
            assert a.evaluate(x) == b.evaluate(x)


class TestDifferenceIdentity:
    def test_jacobian_midpoint_identity(self):
        # P(a) - P(b) = B((a+b)/2) (a-b), exactly, for pure systems
        rng = random.Random(31)
        for _ in range(30):
            snf = corpus.random_snf(rng, 4, allow_max=False, allow_min=False)
            a = corpus.random_interior_point(rng, 4)
            b = corpus.random_interior_point(rng, 4)
            mid = [(x + y) / 2 for x, y in zip(a, b)]
            rows = jacobian(snf, mid)
            lhs = [
                pa - pb
                for pa, pb in zip(
                    oracles.eval_forms(snf.forms, a), oracles.eval_forms(snf.forms, b)
                )
            ]
            rhs = [
                sum(rows[i][j] * (a[j] - b[j]) for j in range(4)) for i in range(4)
            ]
            assert lhs == rhs


class TestDependencyGraph:
    def test_worked_example_edges(self):
        snf = ex31_snf()
        adj = dependency_graph(snf)
        assert adj[0] == (1, 2)   # a -> aux, b
        assert adj[1] == (0,)     # aux -> a
        assert adj[2] == ()
        sccs = tarjan_sccs(adj)
        assert [0, 1] in sccs and [2] in sccs

    def test_no_edges_for_constant(self):
        snf = SnfSystem((FormL(F(1, 2), ()),))
        assert dependency_graph(snf) == ((),)

    def test_two_cycle_is_bottom(self):
        snf = SnfSystem((
            FormL(0, ((1, F(1)),)),
            FormL(0, ((0, F(1)),)),
        ))
        assert bottom_sccs(dependency_graph(snf)) == [[0, 1]]


class TestValueIterate:
    def test_worked_example_from_one(self):
        snf = ex31_snf()
        out, iters, _ = value_iterate(snf, "one", "float", 64)
        assert out[0] <= 1e-9
        assert out[1] <= 1e-18
        assert out[2] == 0.5
        assert iters == 64

    def test_second_example_converges(self):
        snf = ex32_snf()
        out, _, _ = value_iterate(snf, "one", "float", 200)
        target = [0.5, 0.25, 0.5, 2 / 3]
        assert max(abs(a - b) for a, b in zip(out, target)) <= 1e-6

    def test_fixed_point_unchanged_after_step(self):
        snf = ex31_snf()
        g = [F(0), F(0), F(1, 2)]
        assert oracles.eval_forms(snf.forms, g) == g

    def test_exact_mode_asserts_monotone(self):
        snf = ex31_snf()
        out, _, residual = value_iterate(snf, "one", "exact", 8)
        assert out.mode == "exact"
        out0, _, _ = value_iterate(snf, "zero", "exact", 8)
        assert all(a <= b for a, b in zip(out0, out))

    def test_budget_reported_not_raised(self):
        snf = ex32_snf()
        _, iters, residual = value_iterate(snf, "one", "float", 3,
                                           residual_tol=1e-30)
        assert iters == 3 and residual > 0


class TestPolicyTranslation:
    def test_three_branch_chain_round_trip(self):
        pps = parse_pps(corpus.QUAL_CORPUS[29].text)  # min-three-way
        snf = to_snf(pps)
        for branch in range(3):
            orig = Policy.of("min", {0: branch})
            snf_pol = policy_from_original(snf, orig)
            assert set(snf_pol.variables) == set(snf.m_vars("min"))
            back = policy_to_original(snf, snf_pol)
            assert back.as_dict() == {0: branch}

    def test_randomized_round_trip(self):
        pps = parse_pps(corpus.QUAL_CORPUS[29].text)
        snf = to_snf(pps)
        dist = ((0, F(1, 2)), (1, F(1, 3)), (2, F(1, 6)))
        orig = Policy.of("min", {0: dist})
        back = policy_to_original(snf, policy_from_original(snf, orig))
        assert back.as_dict() == {0: dist}

    def test_chain_resolution_matches_semantics(self):
        # applying the translated SNF policy equals applying the original one
        pps = parse_pps(corpus.QUAL_CORPUS[29].text)
        snf = to_snf(pps)
        orig = Policy.of("min", {0: 1})
        fixed = apply_policy_snf(snf, tau=policy_from_original(snf, orig))
        value = oracles.vi_fixed_point(fixed, 1.0)
        assert abs(value[snf.origin_map[0]] - 1 / 3) <= 1e-12
