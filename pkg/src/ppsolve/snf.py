"""Simple normal form: every equation is affine (L), a product of two
variables (Q), or a binary max/min (M).

Conversion from a general system appends auxiliary variables directly after
the equation that spawned them, scanning equations in ascending order and
applying the rewrite steps in their fixed order, so the result is fully
deterministic.  Aux variables are named "_aux<k>" by introduction order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import PolicyError, PreconditionError
from .system import (
    MAXOF,
    MAX_PLAYER,
    MINOF,
    MIN_PLAYER,
    SINGLE,
    Choice,
    Equation,
    MaxMinPps,
    Monomial,
    Policy,
    ProbPolynomial,
    ValueVector,
    Violation,
    _bits,
    _frac,
)


@dataclass(frozen=True)
class FormL:
    """Affine row: const + sum of coeff * x_j with non-negative entries."""

    const: Fraction
    terms: tuple[tuple[int, Fraction], ...] = ()

    def __post_init__(self):
        const = _frac(self.const)
        if const < 0:
            raise ValueError("L-form constant must be non-negative")
        items = self.terms.items() if isinstance(self.terms, Mapping) else self.terms
        merged: dict[int, Fraction] = {}
        for v, c in items:
            c = _frac(c)
            if c < 0:
                raise ValueError("L-form coefficients must be non-negative")
            if c:
                merged[int(v)] = merged.get(int(v), Fraction(0)) + c
        object.__setattr__(self, "const", const)
        object.__setattr__(self, "terms", tuple(sorted(merged.items())))

    @property
    def row_sum(self) -> Fraction:
        return self.const + sum((c for _, c in self.terms), Fraction(0))


@dataclass(frozen=True)
class FormQ:
    """Product row x_j * x_k (j <= k canonically)."""

    j: int
    k: int

    def __post_init__(self):
        j, k = sorted((int(self.j), int(self.k)))
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "k", k)


@dataclass(frozen=True)
class FormM:
    """Binary max or min row; branch 0 is x_j, branch 1 is x_k."""

    op: str  # "max" or "min"
    j: int
    k: int

    def __post_init__(self):
        if self.op not in (MAXOF, MINOF):
            raise ValueError(f"unknown M-form op {self.op!r}")

    @property
    def player(self) -> str:
        return MAX_PLAYER if self.op == MAXOF else MIN_PLAYER

    def child(self, branch: int) -> int:
        return self.j if branch == 0 else self.k


Form = FormL | FormQ | FormM


@dataclass(frozen=True)
class ChoiceChain:
    """How one original max/min equation unfolds into binary M rows.

    `chain[t]` is the SNF variable whose branch 0 selects `branch_vars[t]`
    and whose branch 1 continues to `chain[t+1]`; branch 1 of the last
    chain variable selects the final branch.
    """

    original: int
    op: str
    chain: tuple[int, ...]
    branch_vars: tuple[int, ...]


@dataclass(frozen=True)
class SnfSystem:
    forms: tuple[Form, ...]
    names: tuple[str, ...] = ()
    origin: tuple[tuple[int, int], ...] = ()  # original index -> SNF index
    aux_count: int = 0
    chains: tuple[ChoiceChain, ...] = ()

    def __post_init__(self):
        forms = tuple(self.forms)
        names = tuple(self.names) if self.names else tuple(
            f"x{i}" for i in range(len(forms))
        )
        if len(names) != len(forms):
            raise ValueError("one name per form required")
        origin = tuple(self.origin) if self.origin else tuple(
            (i, i) for i in range(len(forms))
        )
        n = len(forms)
        for f in forms:
            children = (
                [v for v, _ in f.terms] if isinstance(f, FormL) else [f.j, f.k]
            )
            if any(not 0 <= v < n for v in children):
                raise ValueError("form references variable out of range")
        object.__setattr__(self, "forms", forms)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "origin", origin)

    @property
    def n(self) -> int:
        return len(self.forms)

    @property
    def origin_map(self) -> dict[int, int]:
        return dict(self.origin)

    def kind(self, i: int) -> str:
        f = self.forms[i]
        if isinstance(f, FormL):
            return "L"
        if isinstance(f, FormQ):
            return "Q"
        return "Mmax" if f.op == MAXOF else "Mmin"

    def m_vars(self, player: str) -> list[int]:
        op = MAXOF if player == MAX_PLAYER else MINOF
        return [
            i
            for i, f in enumerate(self.forms)
            if isinstance(f, FormM) and f.op == op
        ]

    def classify(self) -> str:
        has_max = bool(self.m_vars(MAX_PLAYER))
        has_min = bool(self.m_vars(MIN_PLAYER))
        if has_max and has_min:
            return "maxminpps"
        if has_max:
            return "maxpps"
        if has_min:
            return "minpps"
        return "pps"

    @property
    def is_pps(self) -> bool:
        return self.classify() == "pps"

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def value_at(self, i: int, x: Sequence):
        f = self.forms[i]
        if isinstance(f, FormL):
            acc = f.const
            for v, c in f.terms:
                acc = acc + c * x[v]
            return acc
        if isinstance(f, FormQ):
            return x[f.j] * x[f.k]
        return max(x[f.j], x[f.k]) if f.op == MAXOF else min(x[f.j], x[f.k])


def validate_snf(snf: SnfSystem) -> list[Violation]:
    out = []
    for i, f in enumerate(snf.forms):
        if isinstance(f, FormL) and f.row_sum > 1:
            out.append(Violation(i, None, f"coefficient sum {f.row_sum} > 1"))
    return out


def snf_encoding_size(snf: SnfSystem) -> int:
    total = 0
    for f in snf.forms:
        total += 1  # equation
        if isinstance(f, FormL):
            total += 1  # single branch
            if f.const:
                total += _bits(f.const.numerator) + _bits(f.const.denominator)
            for v, c in f.terms:
                total += _bits(c.numerator) + _bits(c.denominator)
                total += _bits(1) + _bits(v + 1)
        elif isinstance(f, FormQ):
            total += 1 + _bits(1) + _bits(1)  # branch + coefficient 1/1
            if f.j == f.k:
                total += _bits(2) + _bits(f.j + 1)
            else:
                total += (_bits(1) + _bits(f.j + 1)) + (_bits(1) + _bits(f.k + 1))
        else:
            for child in (f.j, f.k):
                total += 1 + _bits(1) + _bits(1) + _bits(1) + _bits(child + 1)
    return total


# ---------------------------------------------------------------------------
# Conversion to SNF


def to_snf(pps: MaxMinPps) -> SnfSystem:
    """Rewrite a validated system into simple normal form.

    Follows the fixed rewrite pipeline: split non-variable max/min branches,
    binarize long max/min lists, split polynomial monomials, binarize
    exponents through shared squaring variables, and binarize long products.
    Both fixed points of the output project onto those of the input.
    """
    n = pps.n
    rows: dict[int, tuple] = {}
    anchor: dict[int, int] = {}
    aux_order: list[int] = []
    next_id = n

    def new_aux(row: tuple, anchored_to: int) -> int:
        nonlocal next_id
        a = next_id
        next_id += 1
        rows[a] = row
        anchor[a] = anchored_to
        aux_order.append(a)
        return a

    # Normalize single-branch max/min to plain polynomials up front.
    pending_m: dict[int, tuple[str, list[int]]] = {}
    for i, eq in enumerate(pps.equations):
        if eq.kind == SINGLE or len(eq.branches) == 1:
            rows[i] = ("poly", eq.branches[0])
        else:
            rows[i] = ("m-pending", eq.kind)

    # Step 1: replace non-variable branches of max/min equations.
    for i, eq in enumerate(pps.equations):
        if rows[i][0] != "m-pending":
            continue
        branch_vars = []
        for branch in eq.branches:
            v = branch.single_variable()
            if v is None:
                v = new_aux(("poly", branch), i)
            branch_vars.append(v)
        pending_m[i] = (eq.kind, branch_vars)

    # Step 2: binarize max/min over more than two variables.
    chains: list[ChoiceChain] = []
    for i in sorted(pending_m):
        op, branch_vars = pending_m[i]
        m = len(branch_vars)
        if m == 2:
            rows[i] = ("M", op, branch_vars[0], branch_vars[1])
            chains.append(ChoiceChain(i, op, (i,), tuple(branch_vars)))
            continue
        links = [new_aux(("m-link",), i) for _ in range(m - 2)]
        seq = [i] + links
        for t in range(m - 1):
            second = seq[t + 1] if t < m - 2 else branch_vars[m - 1]
            rows[seq[t]] = ("M", op, branch_vars[t], second)
        chains.append(ChoiceChain(i, op, tuple(seq), tuple(branch_vars)))

    # Step 3: split polynomials into affine rows over monomial variables.
    def split_poly(rid: int) -> None:
        p: ProbPolynomial = rows[rid][1]
        home = anchor.get(rid, rid)
        if p.is_constant:
            rows[rid] = ("L", p.constant, {})
            return
        v = p.single_variable()
        if v is not None:
            rows[rid] = ("L", Fraction(0), {v: Fraction(1)})
            return
        if len(p.monomials) == 1:
            m = p.monomials[0]
            if m.degree == 1:
                rows[rid] = ("L", Fraction(0), {m.exponents[0][0]: m.coefficient})
            elif m.coefficient == 1:
                rows[rid] = ("mono", m.exponents)
            else:
                a = new_aux(("mono", m.exponents), home)
                rows[rid] = ("L", Fraction(0), {a: m.coefficient})
            return
        const = Fraction(0)
        terms: dict[int, Fraction] = {}
        for m in p.monomials:
            if not m.exponents:
                const += m.coefficient
            elif m.degree == 1:
                v = m.exponents[0][0]
                terms[v] = terms.get(v, Fraction(0)) + m.coefficient
            else:
                a = new_aux(("mono", m.exponents), home)
                terms[a] = terms.get(a, Fraction(0)) + m.coefficient
        rows[rid] = ("L", const, terms)

    for rid in list(range(n)) + list(aux_order):
        if rows.get(rid, (None,))[0] == "poly":
            split_poly(rid)
    # Aux polynomials created by split_poly itself are plain monomials, so a
    # single pass suffices.

    # Step 4: squaring chains for exponents above 1.  Auxiliary rows that
    # are exact squares double as the first chain level; original rows may
    # not (their variable carries the equation's value, not the square).
    squares: dict[tuple[int, int], int] = {}
    mono_ids = [rid for rid in list(range(n)) + list(aux_order)
                if rows.get(rid, (None,))[0] == "mono"]
    for rid in mono_ids:
        exps = rows[rid][1]
        if len(exps) == 1 and exps[0][1] == 2:
            v = exps[0][0]
            rows[rid] = ("Q", v, v)
            if rid >= n:
                squares.setdefault((v, 1), rid)

    def get_square(v: int, level: int, home: int) -> int:
        key = (v, level)
        if key not in squares:
            prev = v if level == 1 else get_square(v, level - 1, home)
            squares[key] = new_aux(("Q", prev, prev), home)
        return squares[key]

    # Step 5: rewrite remaining monomials as products of at most two factors.
    for rid in mono_ids:
        if rows[rid][0] != "mono":
            continue
        exps = rows[rid][1]
        home = anchor.get(rid, rid)
        factors: list[int] = []
        for v, e in exps:
            bit = 0
            while e:
                if e & 1:
                    factors.append(v if bit == 0 else get_square(v, bit, home))
                e >>= 1
                bit += 1
        if len(factors) == 1:
            rows[rid] = ("L", Fraction(0), {factors[0]: Fraction(1)})
        elif len(factors) == 2:
            rows[rid] = ("Q", factors[0], factors[1])
        else:
            m = len(factors)
            links = [new_aux(("q-link",), home) for _ in range(m - 2)]
            seq = [rid] + links
            for t in range(m - 1):
                second = seq[t + 1] if t < m - 2 else factors[m - 1]
                rows[seq[t]] = ("Q", factors[t], second)

    # Final placement: each original equation followed by its aux group.
    by_anchor: dict[int, list[int]] = {}
    for a in aux_order:
        by_anchor.setdefault(anchor[a], []).append(a)
    order: list[int] = []
    for i in range(n):
        order.append(i)
        order.extend(by_anchor.get(i, []))
    new_index = {rid: pos for pos, rid in enumerate(order)}
    aux_name = {a: f"_aux{c}" for c, a in enumerate(aux_order)}

    forms: list[Form] = []
    for rid in order:
        row = rows[rid]
        if row[0] == "L":
            forms.append(FormL(row[1], {new_index[v]: c for v, c in row[2].items()}))
        elif row[0] == "Q":
            forms.append(FormQ(new_index[row[1]], new_index[row[2]]))
        else:
            forms.append(FormM(row[1], new_index[row[2]], new_index[row[3]]))
    names = [pps.names[rid] if rid < n else aux_name[rid] for rid in order]
    origin = tuple((i, new_index[i]) for i in range(n))
    remapped_chains = tuple(
        ChoiceChain(
            c.original,
            c.op,
            tuple(new_index[v] for v in c.chain),
            tuple(new_index[v] for v in c.branch_vars),
        )
        for c in chains
    )
    return SnfSystem(tuple(forms), tuple(names), origin, len(aux_order), remapped_chains)


def snf_to_maxminpps(snf: SnfSystem) -> MaxMinPps:
    """Present an SNF system as a general system (for serialization)."""
    eqs = []
    for f in snf.forms:
        if isinstance(f, FormL):
            monos = []
            if f.const:
                monos.append(Monomial(f.const, ()))
            monos.extend(Monomial(c, ((v, 1),)) for v, c in f.terms)
            eqs.append(Equation(SINGLE, (ProbPolynomial(tuple(monos)),)))
        elif isinstance(f, FormQ):
            exps = ((f.j, 2),) if f.j == f.k else ((f.j, 1), (f.k, 1))
            eqs.append(Equation(SINGLE, (ProbPolynomial((Monomial(1, exps),)),)))
        else:
            left = ProbPolynomial((Monomial(1, ((f.j, 1),)),))
            right = ProbPolynomial((Monomial(1, ((f.k, 1),)),))
            eqs.append(Equation(f.op, (left, right)))
    return MaxMinPps(tuple(eqs), snf.names)


# ---------------------------------------------------------------------------
# Evaluation


def evaluate(snf: SnfSystem, x) -> ValueVector:
    """Apply P once: L rows affine, Q rows products, M rows max/min."""
    mode = x.mode if isinstance(x, ValueVector) else (
        "exact" if x and isinstance(x[0], Fraction) else "float"
    )
    entries = list(x)
    if len(entries) != snf.n:
        raise ValueError(f"expected {snf.n} entries, got {len(entries)}")
    if mode == "exact":
        return ValueVector.exact(_eval_exact(snf, entries))
    ev = FloatEvaluator(snf)
    return ValueVector.floats(ev(np.asarray(entries, dtype=float)).tolist())


def _eval_exact(snf: SnfSystem, x: list) -> list:
    out = []
    for f in snf.forms:
        if isinstance(f, FormL):
            acc = f.const
            for v, c in f.terms:
                acc += c * x[v]
            out.append(acc)
        elif isinstance(f, FormQ):
            out.append(x[f.j] * x[f.k])
        else:
            out.append(max(x[f.j], x[f.k]) if f.op == MAXOF else min(x[f.j], x[f.k]))
    return out


class FloatEvaluator:
    """Vectorized single-step evaluation for float-mode iteration."""

    def __init__(self, snf: SnfSystem):
        n = snf.n
        self.matrix = np.zeros((n, n))
        self.const = np.zeros(n)
        qi, qj, qk = [], [], []
        xi, xj, xk = [], [], []  # max rows
        mi, mj, mk = [], [], []  # min rows
        for i, f in enumerate(snf.forms):
            if isinstance(f, FormL):
                self.const[i] = float(f.const)
                for v, c in f.terms:
                    self.matrix[i, v] += float(c)
            elif isinstance(f, FormQ):
                qi.append(i), qj.append(f.j), qk.append(f.k)
            elif f.op == MAXOF:
                xi.append(i), xj.append(f.j), xk.append(f.k)
            else:
                mi.append(i), mj.append(f.j), mk.append(f.k)
        self.q = tuple(np.array(a, dtype=int) for a in (qi, qj, qk))
        self.mx = tuple(np.array(a, dtype=int) for a in (xi, xj, xk))
        self.mn = tuple(np.array(a, dtype=int) for a in (mi, mj, mk))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        y = self.matrix @ x + self.const
        qi, qj, qk = self.q
        if qi.size:
            y[qi] = x[qj] * x[qk]
        xi, xj, xk = self.mx
        if xi.size:
            y[xi] = np.maximum(x[xj], x[xk])
        mi, mj, mk = self.mn
        if mi.size:
            y[mi] = np.minimum(x[mj], x[mk])
        return y


def value_iterate(
    snf: SnfSystem,
    start: str = "one",
    mode: str = "float",
    max_iterations: int = 10_000,
    residual_tol=None,
):
    """Iterate x <- P(x) from the all-one or all-zero vector.

    From one the sequence is non-increasing and bounds the GFP from above;
    from zero it is non-decreasing and bounds the LFP from below.  In exact
    mode both monotonicity facts are checked at every step.  Returns
    (vector, iterations, final residual); exhausting the budget is reported
    through the residual, not as an error.
    """
    if start not in ("one", "zero"):
        raise ValueError("start must be 'one' or 'zero'")
    n = snf.n
    if mode == "exact":
        x = [Fraction(1 if start == "one" else 0)] * n
        residual = Fraction(0)
        for k in range(max_iterations):
            y = _eval_exact(snf, x)
            if start == "one" and any(b > a for a, b in zip(x, y)):
                raise PreconditionError("iteration from one failed to decrease")
            if start == "zero" and any(b < a for a, b in zip(x, y)):
                raise PreconditionError("iteration from zero failed to increase")
            residual = max((abs(b - a) for a, b in zip(x, y)), default=Fraction(0))
            x = y
            if residual_tol is not None and residual <= residual_tol:
                return ValueVector.exact(x), k + 1, residual
        return ValueVector.exact(x), max_iterations, residual

    ev = FloatEvaluator(snf)
    x = np.ones(n) if start == "one" else np.zeros(n)
    residual = 0.0
    tol = float(residual_tol) if residual_tol is not None else None
    for k in range(max_iterations):
        y = ev(x)
        residual = float(np.max(np.abs(y - x))) if n else 0.0
        x = y
        if tol is not None and residual <= tol:
            return ValueVector.floats(x.tolist()), k + 1, residual
    return ValueVector.floats(x.tolist()), max_iterations, residual


# ---------------------------------------------------------------------------
# Policies on SNF systems


def check_snf_policy(snf: SnfSystem, policy: Policy) -> None:
    expected = set(snf.m_vars(policy.player))
    got = set(policy.variables)
    if got != expected:
        raise PolicyError(
            f"policy for {policy.player} player mismatch: "
            f"missing {sorted(expected - got)}, extraneous {sorted(got - expected)}"
        )


def apply_policy_snf(
    snf: SnfSystem,
    sigma: Policy | None = None,
    tau: Policy | None = None,
) -> SnfSystem:
    """Resolve M rows: a deterministic choice becomes the chosen variable
    (an L row with coefficient 1), a randomized choice the convex
    combination of the two children."""
    for pol, player in ((sigma, MAX_PLAYER), (tau, MIN_PLAYER)):
        if pol is not None:
            if pol.player != player:
                raise PolicyError(f"expected a {player}-player policy")
            check_snf_policy(snf, pol)
    smap = sigma.as_dict() if sigma else {}
    tmap = tau.as_dict() if tau else {}
    forms = list(snf.forms)
    for i, f in enumerate(snf.forms):
        if not isinstance(f, FormM):
            continue
        choice = smap.get(i) if f.op == MAXOF else tmap.get(i)
        if choice is None:
            continue
        if isinstance(choice, int):
            forms[i] = FormL(0, ((f.child(choice), Fraction(1)),))
        else:
            terms: dict[int, Fraction] = {}
            for b, w in choice:
                v = f.child(b)
                terms[v] = terms.get(v, Fraction(0)) + w
            forms[i] = FormL(0, tuple(terms.items()))
    return SnfSystem(tuple(forms), snf.names, snf.origin, snf.aux_count, snf.chains)


def policy_from_original(snf: SnfSystem, policy: Policy) -> Policy:
    """Translate branch choices on the original system to the SNF chains.

    Chain variables past a deterministic selection are unreachable and get
    the filler choice 0 so the SNF policy is total for its player.
    """
    op = MAXOF if policy.player == MAX_PLAYER else MINOF
    by_original = {c.original: c for c in snf.chains if c.op == op}
    want = set(by_original)
    got = set(policy.variables)
    if got != want:
        raise PolicyError(
            f"original policy mismatch: missing {sorted(want - got)}, "
            f"extraneous {sorted(got - want)}"
        )
    out: dict[int, Choice] = {}
    for var, choice in policy.choices:
        chain = by_original[var]
        length = len(chain.chain)
        if isinstance(choice, int):
            if not 0 <= choice < len(chain.branch_vars):
                raise PolicyError(f"branch {choice} out of range for variable {var}")
            for t, cv in enumerate(chain.chain):
                if choice == len(chain.branch_vars) - 1:
                    out[cv] = 1
                elif t < choice:
                    out[cv] = 1
                elif t == choice:
                    out[cv] = 0
                else:
                    out[cv] = 0  # unreachable filler
            continue
        dist = dict(choice)
        remaining = Fraction(1)
        for t, cv in enumerate(chain.chain):
            if remaining == 0:
                out[cv] = 0
                continue
            if t == length - 1:
                w_first = dist.get(t, Fraction(0))
                w_last = dist.get(t + 1, Fraction(0))
                p0 = w_first / (w_first + w_last) if w_first + w_last else Fraction(0)
            else:
                p0 = dist.get(t, Fraction(0)) / remaining
                remaining -= dist.get(t, Fraction(0))
            if p0 == 1:
                out[cv] = 0
            elif p0 == 0:
                out[cv] = 1
            else:
                out[cv] = ((0, p0), (1, 1 - p0))
    return Policy.of(policy.player, out)


def policy_to_original(
    snf: SnfSystem,
    policy: Policy,
    forced: Mapping[int, int] | None = None,
    strict: bool = True,
) -> Policy:
    """Translate an SNF policy back to branch choices per original equation.

    `forced` supplies choices for chain variables that were resolved away
    (e.g. collapsed to an L row by value-1 pruning).  With strict=False,
    chains the policy does not fully cover are skipped, so partial witness
    policies translate to partial action maps.
    """
    forced = dict(forced or {})
    op = MAXOF if policy.player == MAX_PLAYER else MINOF
    pol = policy.as_dict()

    def choice_at(var: int) -> Choice:
        if var in pol:
            return pol[var]
        if var in forced:
            return forced[var]
        raise PolicyError(f"no choice available for SNF variable {var}")

    out: dict[int, Choice] = {}
    for chain in snf.chains:
        if chain.op != op:
            continue
        if not strict and any(
            v not in pol and v not in forced for v in chain.chain
        ):
            continue
        length = len(chain.chain)
        dist: dict[int, Fraction] = {}
        prefix = Fraction(1)
        for t, cv in enumerate(chain.chain):
            c = choice_at(cv)
            p0 = (
                Fraction(1) if c == 0 else Fraction(0)
            ) if isinstance(c, int) else dict(c).get(0, Fraction(0))
            dist[t] = dist.get(t, Fraction(0)) + prefix * p0
            prefix *= 1 - p0
            if t == length - 1:
                dist[t + 1] = dist.get(t + 1, Fraction(0)) + prefix
        support = {b: w for b, w in dist.items() if w}
        if len(support) == 1:
            out[chain.original] = next(iter(support))
        else:
            out[chain.original] = tuple(sorted(support.items()))
    return Policy.of(policy.player, out)


# ---------------------------------------------------------------------------
# Derivative structure


def jacobian(snf: SnfSystem, x):
    """Jacobian of P at x for systems with no unresolved M rows.

    L rows contribute their constant coefficient row; a Q row x_j*x_k has
    entry x_k in column j plus entry x_j in column k (2*x_j when j = k).
    """
    entries = list(x)
    exact = isinstance(entries[0], Fraction) if entries else True
    if isinstance(x, ValueVector):
        exact = x.mode == "exact"
    n = snf.n
    if exact:
        rows = [[Fraction(0)] * n for _ in range(n)]
    else:
        rows = np.zeros((n, n))
    for i, f in enumerate(snf.forms):
        if isinstance(f, FormL):
            for v, c in f.terms:
                rows[i][v] += c if exact else float(c)
        elif isinstance(f, FormQ):
            rows[i][f.j] += entries[f.k]
            rows[i][f.k] += entries[f.j]
        else:
            raise PreconditionError("jacobian undefined: unresolved M form present")
    return rows


@dataclass(frozen=True)
class LinRow:
    """Affine row of a linearized system; the constant may be negative."""

    const: Fraction
    terms: tuple[tuple[int, Fraction], ...]

    def evaluate(self, x):
        acc = self.const if (x and isinstance(x[0], Fraction)) else float(self.const)
        for v, c in self.terms:
            acc = acc + c * x[v]
        return acc


@dataclass(frozen=True)
class LinearizedSystem:
    """P^y: L and M rows unchanged, each Q row replaced by its tangent
    affine expression at the base point y."""

    rows: tuple

    @property
    def n(self) -> int:
        return len(self.rows)

    def evaluate(self, x) -> list:
        out = []
        for row in self.rows:
            if isinstance(row, FormM):
                a, b = x[row.j], x[row.k]
                out.append(max(a, b) if row.op == MAXOF else min(a, b))
            else:
                out.append(row.evaluate(x))
        return out

    def apply_policy(self, sigma: Policy | None = None, tau: Policy | None = None):
        smap = sigma.as_dict() if sigma else {}
        tmap = tau.as_dict() if tau else {}
        rows = list(self.rows)
        for i, row in enumerate(self.rows):
            if not isinstance(row, FormM):
                continue
            choice = smap.get(i) if row.op == MAXOF else tmap.get(i)
            if choice is None:
                continue
            if isinstance(choice, int):
                rows[i] = LinRow(Fraction(0), ((row.child(choice), Fraction(1)),))
            else:
                terms: dict[int, Fraction] = {}
                for b, w in choice:
                    v = row.child(b)
                    terms[v] = terms.get(v, Fraction(0)) + w
                rows[i] = LinRow(Fraction(0), tuple(sorted(terms.items())))
        return LinearizedSystem(tuple(rows))


def linearize(snf: SnfSystem, y) -> LinearizedSystem:
    ys = [_frac(v) if not isinstance(v, Fraction) else v for v in y]
    rows: list = []
    for f in snf.forms:
        if isinstance(f, FormL):
            rows.append(LinRow(f.const, f.terms))
        elif isinstance(f, FormQ):
            if f.j == f.k:
                terms = ((f.j, 2 * ys[f.j]),)
            else:
                terms = tuple(sorted(((f.j, ys[f.k]), (f.k, ys[f.j]))))
            terms = tuple((v, c) for v, c in terms if c != 0)
            rows.append(LinRow(-ys[f.j] * ys[f.k], terms))
        else:
            rows.append(f)
    return LinearizedSystem(tuple(rows))


# ---------------------------------------------------------------------------
# Graph structure


def dependency_graph(snf: SnfSystem) -> tuple[tuple[int, ...], ...]:
    """Adjacency lists: an edge i -> j whenever x_j appears in P_i."""
    adj = []
    for f in snf.forms:
        if isinstance(f, FormL):
            adj.append(tuple(v for v, _ in f.terms))
        else:
            adj.append((f.j,) if f.j == f.k else tuple(sorted((f.j, f.k))))
    return tuple(adj)


def extend_original_values(snf: SnfSystem, original_values: Sequence) -> list:
    """Fill auxiliary coordinates by evaluating their defining rows.

    Aux rows form a DAG among themselves, so a dependency-ordered sweep is
    always possible.
    """
    origin = snf.origin_map
    values: dict[int, object] = {}
    for orig, idx in origin.items():
        values[idx] = original_values[orig]
    adj = dependency_graph(snf)
    pending = [i for i in range(snf.n) if i not in values]
    remaining = set(pending)
    while remaining:
        progressed = False
        for i in sorted(remaining):
            if any(c in remaining for c in adj[i]):
                continue
            values[i] = snf.value_at(i, [values.get(j, 0) for j in range(snf.n)])
            remaining.discard(i)
            progressed = True
        if not progressed:
            raise PreconditionError("auxiliary rows are cyclically dependent")
    return [values[i] for i in range(snf.n)]
