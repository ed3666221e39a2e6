"""Core types for probabilistic min/max polynomial equation systems.

A system x = P(x) has one equation per variable.  Each right-hand side is
either a single probabilistic polynomial or a max/min over several of them.
Coefficients are exact rationals throughout; "probabilistic" means all
coefficients are non-negative and sum to at most 1 per polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from .errors import PolicyError

RationalLike = Union[int, str, float, Fraction]

SINGLE = "single"
MAXOF = "max"
MINOF = "min"

MAX_PLAYER = "max"
MIN_PLAYER = "min"

#: deterministic branch index, or a tuple of (branch, weight) pairs
Choice = Union[int, tuple]


def _frac(value: RationalLike) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(value)


@dataclass(frozen=True)
class Monomial:
    """A term c * prod_i x_i^e_i with c > 0 and all exponents positive."""

    coefficient: Fraction
    exponents: tuple[tuple[int, int], ...] = ()  # sorted (variable, exponent)

    def __post_init__(self):
        coeff = _frac(self.coefficient)
        if coeff <= 0:
            raise ValueError(f"monomial coefficient must be positive, got {coeff}")
        if isinstance(self.exponents, Mapping):
            items = self.exponents.items()
        else:
            items = self.exponents
        exps = tuple(sorted((int(v), int(e)) for v, e in items))
        if any(e <= 0 for _, e in exps):
            raise ValueError("monomial exponents must be positive")
        if len({v for v, _ in exps}) != len(exps):
            raise ValueError("duplicate variable in monomial exponents")
        object.__setattr__(self, "coefficient", coeff)
        object.__setattr__(self, "exponents", exps)

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.exponents)

    def evaluate(self, x: Sequence) -> Fraction | float:
        value = self.coefficient
        for v, e in self.exponents:
            value = value * x[v] ** e
        return value


def constant_monomial(value: RationalLike) -> Monomial:
    return Monomial(_frac(value), ())


@dataclass(frozen=True)
class ProbPolynomial:
    """A sum of monomials; the constant term is a monomial with no exponents.

    The zero polynomial is represented by an empty monomial tuple.
    Construction merges duplicate monomials and keeps them sorted, so equal
    polynomials compare equal; the probabilistic coefficient-sum constraint
    is checked by :func:`validate`, not here.
    """

    monomials: tuple[Monomial, ...] = ()

    def __post_init__(self):
        merged: dict[tuple, Fraction] = {}
        for m in self.monomials:
            merged[m.exponents] = merged.get(m.exponents, Fraction(0)) + m.coefficient
        items = tuple(
            Monomial(c, exps) for exps, c in sorted(merged.items()) if c != 0
        )
        object.__setattr__(self, "monomials", items)

    @property
    def coefficient_sum(self) -> Fraction:
        return sum((m.coefficient for m in self.monomials), Fraction(0))

    @property
    def constant(self) -> Fraction:
        for m in self.monomials:
            if not m.exponents:
                return m.coefficient
        return Fraction(0)

    @property
    def is_constant(self) -> bool:
        return all(not m.exponents for m in self.monomials)

    def single_variable(self) -> int | None:
        """Index of x_k when this polynomial is exactly 1 * x_k, else None."""
        if len(self.monomials) != 1:
            return None
        m = self.monomials[0]
        if m.coefficient == 1 and len(m.exponents) == 1 and m.exponents[0][1] == 1:
            return m.exponents[0][0]
        return None

    def variables(self) -> set[int]:
        return {v for m in self.monomials for v, _ in m.exponents}

    def evaluate(self, x: Sequence):
        total = None
        for m in self.monomials:
            term = m.evaluate(x)
            total = term if total is None else total + term
        if total is None:
            return Fraction(0) if not x or isinstance(x[0], Fraction) else 0.0
        return total

    def scale(self, factor: Fraction) -> "ProbPolynomial":
        if factor == 0:
            return ProbPolynomial(())
        return ProbPolynomial(
            tuple(Monomial(m.coefficient * factor, m.exponents) for m in self.monomials)
        )

    def __add__(self, other: "ProbPolynomial") -> "ProbPolynomial":
        return ProbPolynomial(self.monomials + other.monomials)


def polynomial(terms: Iterable[tuple[RationalLike, Mapping[int, int]]]) -> ProbPolynomial:
    """Build a polynomial from (coefficient, {variable: exponent}) pairs."""
    monos = []
    for coeff, exps in terms:
        c = _frac(coeff)
        if c == 0:
            continue
        monos.append(Monomial(c, tuple(exps.items())))
    return ProbPolynomial(tuple(monos))


@dataclass(frozen=True)
class Equation:
    kind: str  # SINGLE, MAXOF or MINOF
    branches: tuple[ProbPolynomial, ...]

    def __post_init__(self):
        if self.kind not in (SINGLE, MAXOF, MINOF):
            raise ValueError(f"unknown equation kind {self.kind!r}")
        branches = tuple(self.branches)
        if not branches:
            raise ValueError("equation needs at least one branch")
        if self.kind == SINGLE and len(branches) != 1:
            raise ValueError("single equations have exactly one branch")
        object.__setattr__(self, "branches", branches)

    def evaluate(self, x: Sequence):
        values = [b.evaluate(x) for b in self.branches]
        if self.kind == MAXOF:
            return max(values)
        if self.kind == MINOF:
            return min(values)
        return values[0]


@dataclass(frozen=True)
class MaxMinPps:
    """A system of n equations x_i = P_i(x) with max/min branch selection."""

    equations: tuple[Equation, ...]
    names: tuple[str, ...] = ()

    def __post_init__(self):
        eqs = tuple(self.equations)
        names = tuple(self.names) if self.names else tuple(
            f"x{i}" for i in range(len(eqs))
        )
        if len(names) != len(eqs):
            raise ValueError("one name per equation required")
        n = len(eqs)
        for i, eq in enumerate(eqs):
            for branch in eq.branches:
                for v in branch.variables():
                    if not 0 <= v < n:
                        raise ValueError(
                            f"equation {i} references variable index {v} out of range"
                        )
        object.__setattr__(self, "equations", eqs)
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return len(self.equations)

    def classify(self) -> str:
        """One of "pps", "maxpps", "minpps", "maxminpps"."""
        has_max = any(e.kind == MAXOF and len(e.branches) > 1 for e in self.equations)
        has_min = any(e.kind == MINOF and len(e.branches) > 1 for e in self.equations)
        if has_max and has_min:
            return "maxminpps"
        if has_max:
            return "maxpps"
        if has_min:
            return "minpps"
        return "pps"

    def choice_variables(self, player: str) -> list[int]:
        """Variables where `player` actually has a branch choice."""
        kind = MAXOF if player == MAX_PLAYER else MINOF
        return [
            i
            for i, e in enumerate(self.equations)
            if e.kind == kind and len(e.branches) > 1
        ]

    def evaluate(self, x: Sequence):
        return [eq.evaluate(x) for eq in self.equations]

    def index_of(self, name: str) -> int:
        return self.names.index(name)


@dataclass(frozen=True)
class Violation:
    equation: int
    branch: int | None
    message: str

    def __str__(self) -> str:
        where = f"equation {self.equation}"
        if self.branch is not None:
            where += f", branch {self.branch}"
        return f"{self.message} at {where}"


def validate(pps: MaxMinPps) -> list[Violation]:
    """Check that every branch is a probabilistic polynomial.

    Coefficient positivity is enforced structurally by Monomial, so the
    only reportable condition is an exact coefficient sum exceeding 1.
    Violations are returned as data rather than raised.
    """
    out = []
    for i, eq in enumerate(pps.equations):
        for b, branch in enumerate(eq.branches):
            total = branch.coefficient_sum
            if total > 1:
                out.append(
                    Violation(i, b if len(eq.branches) > 1 else None,
                              f"coefficient sum {total} > 1")
                )
    return out


@dataclass(frozen=True)
class Policy:
    """Branch choices for the M-form variables of one player.

    A choice is either a deterministic branch index or a tuple of
    (branch, weight) pairs with positive rational weights summing to 1.
    Zero-weight branches are dropped and singleton distributions collapse
    to deterministic choices.
    """

    player: str
    choices: tuple[tuple[int, Choice], ...] = ()

    def __post_init__(self):
        if self.player not in (MAX_PLAYER, MIN_PLAYER):
            raise ValueError(f"unknown player {self.player!r}")
        items = dict(self.choices) if not isinstance(self.choices, Mapping) else dict(self.choices)
        norm: list[tuple[int, Choice]] = []
        for var in sorted(items):
            choice = items[var]
            if isinstance(choice, int):
                norm.append((var, choice))
                continue
            dist = [(int(b), _frac(w)) for b, w in choice if _frac(w) != 0]
            if any(w < 0 for _, w in dist):
                raise ValueError("negative policy weight")
            if sum(w for _, w in dist) != 1:
                raise ValueError(f"policy weights for variable {var} must sum to 1")
            merged: dict[int, Fraction] = {}
            for b, w in dist:
                merged[b] = merged.get(b, Fraction(0)) + w
            if len(merged) == 1:
                norm.append((var, next(iter(merged))))
            else:
                norm.append((var, tuple(sorted(merged.items()))))
        object.__setattr__(self, "choices", tuple(norm))

    @staticmethod
    def of(player: str, mapping: Mapping[int, Choice]) -> "Policy":
        return Policy(player, tuple(mapping.items()))

    def as_dict(self) -> dict[int, Choice]:
        return dict(self.choices)

    @property
    def variables(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.choices)

    @property
    def is_deterministic(self) -> bool:
        return all(isinstance(c, int) for _, c in self.choices)

    def deterministic_choice(self, var: int) -> int:
        choice = dict(self.choices)[var]
        if not isinstance(choice, int):
            raise PolicyError(f"choice for variable {var} is randomized")
        return choice


def empty_policy(player: str) -> Policy:
    return Policy(player, ())


def check_policy(pps: MaxMinPps, policy: Policy) -> None:
    """Raise PolicyError unless the policy covers exactly its player's choices."""
    expected = set(pps.choice_variables(policy.player))
    got = set(policy.variables)
    if got != expected:
        missing = sorted(expected - got)
        extra = sorted(got - expected)
        raise PolicyError(
            f"policy for {policy.player} player mismatch: "
            f"missing {missing}, extraneous {extra}"
        )
    for var, choice in policy.choices:
        nb = len(pps.equations[var].branches)
        branches = [choice] if isinstance(choice, int) else [b for b, _ in choice]
        if any(not 0 <= b < nb for b in branches):
            raise PolicyError(f"branch out of range for variable {var}")


def apply_policy(
    pps: MaxMinPps,
    sigma: Policy | None = None,
    tau: Policy | None = None,
) -> MaxMinPps:
    """Resolve max choices by sigma and/or min choices by tau.

    Deterministic choices keep the selected branch; randomized choices form
    the weighted convex combination.  Unresolved max/min equations are
    returned unchanged.
    """
    if sigma is not None:
        if sigma.player != MAX_PLAYER:
            raise PolicyError("sigma must be a max-player policy")
        check_policy(pps, sigma)
    if tau is not None:
        if tau.player != MIN_PLAYER:
            raise PolicyError("tau must be a min-player policy")
        check_policy(pps, tau)

    def resolve(eq: Equation, choice: Choice) -> Equation:
        if isinstance(choice, int):
            return Equation(SINGLE, (eq.branches[choice],))
        combo = ProbPolynomial(())
        for b, w in choice:
            combo = combo + eq.branches[b].scale(w)
        return Equation(SINGLE, (combo,))

    sigma_map = sigma.as_dict() if sigma else {}
    tau_map = tau.as_dict() if tau else {}
    new_eqs = []
    for i, eq in enumerate(pps.equations):
        if i in sigma_map and eq.kind == MAXOF:
            new_eqs.append(resolve(eq, sigma_map[i]))
        elif i in tau_map and eq.kind == MINOF:
            new_eqs.append(resolve(eq, tau_map[i]))
        else:
            new_eqs.append(eq)
    return MaxMinPps(tuple(new_eqs), pps.names)


@dataclass(frozen=True)
class ValueVector:
    """n values in [0,1], exact rationals or binary64 floats."""

    mode: str  # "exact" or "float"
    entries: tuple

    def __post_init__(self):
        if self.mode not in ("exact", "float"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "exact":
            entries = tuple(_frac(v) for v in self.entries)
        else:
            entries = tuple(float(v) for v in self.entries)
        object.__setattr__(self, "entries", entries)

    @staticmethod
    def exact(entries: Iterable) -> "ValueVector":
        return ValueVector("exact", tuple(entries))

    @staticmethod
    def floats(entries: Iterable) -> "ValueVector":
        return ValueVector("float", tuple(entries))

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    def to_floats(self) -> list[float]:
        return [float(v) for v in self.entries]

    def in_unit_box(self, slack: float = 0.0) -> bool:
        lo, hi = -slack, 1 + slack
        return all(lo <= float(v) <= hi for v in self.entries)


def population_value(g, mu: Mapping[int, int]):
    """Value of a finite population: the product of per-type values.

    An empty population gives 1; any zero factor with positive count
    gives 0.
    """
    entries = g.entries if isinstance(g, ValueVector) else g
    value = Fraction(1) if not entries or isinstance(entries[0], Fraction) else 1.0
    for var, count in mu.items():
        if count < 0:
            raise ValueError("population counts must be non-negative")
        if count:
            value = value * entries[var] ** count
    return value


def _bits(value: int) -> int:
    return max(1, abs(int(value)).bit_length())


def _monomial_bits(m: Monomial) -> int:
    total = _bits(m.coefficient.numerator) + _bits(m.coefficient.denominator)
    for v, e in m.exponents:
        total += _bits(e) + _bits(v + 1)
    return total


def encoding_size(system) -> int:
    """Total bit-encoding length |P| under the frozen formula.

    Per monomial: bit lengths of the coefficient's numerator and
    denominator, plus per exponent entry the bit lengths of the exponent
    and of (variable index + 1); plus 1 per equation and 1 per branch.
    Rounding schedules depend on this exact formula, so it is part of the
    external contract.
    """
    from . import snf as _snf  # deferred; snf imports this module

    if isinstance(system, _snf.SnfSystem):
        return _snf.snf_encoding_size(system)
    total = 0
    for eq in system.equations:
        total += 1
        for branch in eq.branches:
            total += 1
            for m in branch.monomials:
                total += _monomial_bits(m)
    return total
