"""Shared fixtures: the two worked examples, a hand-built qualitative
corpus with analytically known value-0/value-1 sets, and random system
generators used across the suite.

Expected sets are written over SNF variable names (auxiliaries are named
_aux0, _aux1, ... in introduction order).  Zero sets refer to the residual
system after value-1 removal, named by surviving variables.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from ppsolve.snf import FormL, FormM, FormQ, SnfSystem, to_snf
from ppsolve.system import MAXOF, MINOF, MaxMinPps
from ppsolve.textio import parse_pps

EX31_PPS = """\
a = min{ a^2 ; b }
b = 1/2
"""

EX32_PPS = """\
a = 2/3 * b^2 + 1/3
b = min{ a ; c }
c = 2/3
"""

EX31_BMDP = """\
type A : max
type B : random
type C : random
target C
A -grow-> 1 : A A
A -gamble-> 1 : B
B -flip-> 1/2 : C | 1/2 : <empty>
"""

EX33_BMDP = """\
type A : random
type B : max
type C : random
type D : random
target D
A -spawn-> 2/3 : B B | 1/3 : <empty>
B -toA-> 1 : A
B -toC-> 1 : C
C -decay-> 1/3 : D | 2/3 : <empty>
"""


@dataclass(frozen=True)
class QualCase:
    name: str
    text: str
    one: frozenset[str]    # SNF names with GFP value exactly 1
    zero: frozenset[str]   # residual names with GFP value exactly 0
    mixture: bool = False  # has both max and min choices


def _case(name, text, one=(), zero=(), mixture=False) -> QualCase:
    return QualCase(name, text, frozenset(one), frozenset(zero), mixture)


QUAL_CORPUS: list[QualCase] = [
    _case("ex31", EX31_PPS, one=(), zero=("a", "_aux0")),
    _case("ex32", EX32_PPS, one=(), zero=()),
    _case("identity", "x = x\n", one=("x",)),
    _case("leaky-loop", "x = 1/2 * x\n", zero=("x",)),
    _case("sticky-loop", "x = 1/2 * x + 1/2\n", one=("x",)),
    _case("critical-quad", "x = 1/2 * x^2 + 1/2\n", one=("x", "_aux0")),
    _case("subcritical-quad", "x = 1/2 * x^2 + 1/4\n"),
    _case("pure-square", "x = x^2\n", one=("x",)),
    _case("max-keeps-one", "x = max{ y ; z }\ny = y\nz = 1/2\n", one=("x", "y")),
    _case("min-escapes", "x = min{ y ; z }\ny = y\nz = 1/2\n", one=("y",)),
    _case("min-both-leaky", "x = min{ y ; z }\ny = 1/2 * y\nz = 1/2 * z\n",
          zero=("x", "y", "z")),
    _case("max-both-leaky", "x = max{ y ; z }\ny = 1/2 * y\nz = 1/2 * z\n",
          zero=("x", "y", "z")),
    _case("max-one-leaky", "x = max{ y ; z }\ny = 1/2 * y\nz = 1/2\n",
          zero=("y",)),
    _case("mixture-basic",
          "x = max{ a ; b }\na = min{ x ; c }\nb = 1/2 * b\nc = 1/2 + 1/4 * c\n",
          zero=("b",), mixture=True),
    _case("affine-chain", "x = 1/2 * y + 1/2 * x\ny = 1/2\n"),
    _case("square-of-const", "x = y^2\ny = 1/2\n"),
    _case("product-dies", "x = y * z\ny = 1/2 * y\nz = 1/2\n", zero=("x", "y")),
    _case("guarded-square",
          "x = min{ x^2 ; v }\nv = y\ny = 1/3 + 1/3 * y\n",
          zero=("x", "_aux0")),
    _case("max-square-guard", "x = max{ y ; 1/2 }\ny = x^2\n", one=("x", "y")),
    _case("max-square-dominates", "x = max{ x^2 ; y }\ny = 1/4\n",
          one=("x", "_aux0")),
    _case("two-scc-min",
          "x = min{ y ; z }\ny = 1/2 * x + 1/2\nz = 1/3 * z + 1/3\n"),
    _case("twin-branch-min", "x = min{ y ; y }\ny = 1/2\n"),
    _case("mixture-locks-up",
          "w = max{ x ; y }\nx = min{ w ; z }\ny = 1/2 * y\nz = w\n",
          one=("w", "x", "z"), zero=("y",), mixture=True),
    _case("mixture-half",
          "w = max{ x ; y }\nx = min{ w ; c }\ny = 1/2 * y\nc = 1/2\n",
          zero=("y",), mixture=True),
    _case("max-feeds-self", "a = 1/3 * b + 1/3\nb = max{ a ; c }\nc = c\n",
          one=("b", "c")),
    _case("min-feeds-self", "a = 1/3 * b + 1/3\nb = min{ a ; c }\nc = c\n",
          one=("c",)),
    _case("bp-affine", "a = 1/2 * b\nb = 1/2 * a + 1/2\n"),
    _case("product-one-branch-kept", "a = b * c\nb = 1/2 * b + 1/2\nc = 1/2 * c\n",
          one=("b",), zero=("a", "c")),
    _case("cubic", "x = 1/4 * x^3 + 1/4\n"),
    _case("min-three-way",
          "x = min{ a ; b ; c }\na = 1/2\nb = 1/3\nc = 2/3 * c + 1/3\n",
          one=("c",)),
    _case("max-three-way",
          "x = max{ a ; b ; c }\na = 1/2\nb = 1/3\nc = 2/3 * c + 1/3\n",
          one=("x", "_aux0", "c")),
    _case("double-square", "x = y * y\ny = x * x\n", one=("x", "y")),
    _case("square-leak", "x = y * y\ny = 1/2 * x\n", zero=("x", "y")),
    _case("mixture-all-one",
          "p = min{ q ; r }\nq = max{ p ; s }\nr = 1/2 * r + 1/2\ns = 1/2\n",
          one=("p", "q", "r"), mixture=True),
    _case("mixture-min-dies",
          "p = min{ q ; r }\nq = max{ p ; s }\nr = 1/2 * r\ns = 1/2\n",
          zero=("p", "r"), mixture=True),
    _case("mixture-second-pass",
          "p = max{ q ; q }\nq = min{ p ; r }\nr = 1/3 + 1/3 * r\n",
          mixture=True),
]


def qual_snf(case: QualCase) -> SnfSystem:
    return to_snf(parse_pps(case.text))


# ---------------------------------------------------------------------------
# Random generators (seeded by the caller for reproducibility)


def _random_coeffs(rng: random.Random, slots: int, max_den: int = 16):
    """slots+1 non-negative rationals with denominator <= max_den summing
    to at most 1 (last slot is the constant)."""
    den = rng.choice([d for d in range(2, max_den + 1)])
    remaining = den
    nums = []
    for _ in range(slots):
        take = rng.randint(0, remaining)
        nums.append(take)
        remaining -= take
    const = rng.randint(0, remaining)
    return [Fraction(n, den) for n in nums], Fraction(const, den)


def random_snf(
    rng: random.Random,
    n_vars: int,
    allow_max: bool,
    allow_min: bool,
    q_bias: float = 0.35,
    max_den: int = 16,
) -> SnfSystem:
    """A validated random SNF system (structurally arbitrary)."""
    forms = []
    for i in range(n_vars):
        roll = rng.random()
        kinds = ["L"]
        if n_vars >= 2:
            kinds.append("Q")
        if allow_max:
            kinds.append("Mmax")
        if allow_min:
            kinds.append("Mmin")
        if roll < q_bias and "Q" in kinds:
            kind = "Q"
        else:
            kind = rng.choice(kinds)
        if kind == "L":
            arity = rng.randint(0, min(3, n_vars))
            children = rng.sample(range(n_vars), arity)
            coeffs, const = _random_coeffs(rng, arity, max_den)
            terms = tuple((v, c) for v, c in zip(children, coeffs) if c)
            forms.append(FormL(const, terms))
        elif kind == "Q":
            forms.append(FormQ(rng.randrange(n_vars), rng.randrange(n_vars)))
        else:
            op = MAXOF if kind == "Mmax" else MINOF
            forms.append(FormM(op, rng.randrange(n_vars), rng.randrange(n_vars)))
    return SnfSystem(tuple(forms))


def random_min_snf(rng: random.Random, n_vars: int, **kw) -> SnfSystem:
    return random_snf(rng, n_vars, allow_max=False, allow_min=True, **kw)


def random_max_snf(rng: random.Random, n_vars: int, **kw) -> SnfSystem:
    return random_snf(rng, n_vars, allow_max=True, allow_min=False, **kw)


def random_maxmin_snf(
    rng: random.Random, n_vars: int, max_m_vars: int
) -> SnfSystem:
    """Mixed system with at most max_m_vars choice variables in total."""
    while True:
        snf = random_snf(rng, n_vars, allow_max=True, allow_min=True)
        m_total = sum(isinstance(f, FormM) for f in snf.forms)
        if m_total <= max_m_vars:
            return snf


def random_interior_point(rng: random.Random, n: int, max_den: int = 64):
    return [Fraction(rng.randint(0, max_den), max_den) for _ in range(n)]


def random_maxminpps(rng: random.Random, n_vars: int, max_exp: int = 3) -> MaxMinPps:
    """A general (non-SNF) validated system with arbitrary exponents."""
    from ppsolve.system import Equation, Monomial, ProbPolynomial, SINGLE

    def random_poly():
        k = rng.randint(1, 3)
        den = rng.choice([2, 3, 4, 6, 8, 12, 16])
        weights = []
        remaining = den
        for _ in range(k):
            take = rng.randint(0, remaining)
            weights.append(take)
            remaining -= take
        monos = []
        for w in weights:
            if not w:
                continue
            arity = rng.randint(0, min(2, n_vars))
            exps: dict[int, int] = {}
            for _ in range(arity):
                v = rng.randrange(n_vars)
                exps[v] = exps.get(v, 0) + rng.randint(1, max_exp)
            monos.append(Monomial(Fraction(w, den), tuple(exps.items())))
        return ProbPolynomial(tuple(monos))

    equations = []
    for _ in range(n_vars):
        roll = rng.random()
        if roll < 0.5:
            equations.append(Equation(SINGLE, (random_poly(),)))
        else:
            kind = MAXOF if roll < 0.75 else MINOF
            branches = tuple(random_poly() for _ in range(rng.randint(2, 3)))
            equations.append(Equation(kind, branches))
    return MaxMinPps(tuple(equations))
