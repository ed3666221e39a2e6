"""Probability-free structural analyses of SNF systems.

Which GFP coordinates equal 1 or 0, witness policies for both players,
least-fixed-point 0/1 sets, and the linear-degeneracy-freeness test for
min-player policies.  Everything here depends only on the structure of the
system (which coefficients are positive, which rows are deficient), never
on approximate numerics.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping

from .errors import EnumerationBudgetExceeded, PolicyError, PreconditionError
from .graphs import and_or_reach, bottom_sccs, tarjan_sccs
from .system import MAXOF, MAX_PLAYER, MINOF, MIN_PLAYER, Policy
from .snf import (
    ChoiceChain,
    FormL,
    FormM,
    FormQ,
    SnfSystem,
    apply_policy_snf,
    dependency_graph,
)


def _children(snf: SnfSystem, i: int) -> tuple[int, ...]:
    f = snf.forms[i]
    if isinstance(f, FormL):
        return tuple(v for v, _ in f.terms)
    return (f.j,) if f.j == f.k else (f.j, f.k)


def deficient_variables(snf: SnfSystem) -> list[int]:
    """L-form variables with P_i(1) < 1, checked exactly."""
    return [
        i
        for i, f in enumerate(snf.forms)
        if isinstance(f, FormL) and f.row_sum < 1
    ]


def _branch_of(form: FormM, child: int) -> int:
    return 0 if form.j == child else 1


# ---------------------------------------------------------------------------
# GFP value-1 detection


@dataclass(frozen=True)
class OneSetResult:
    """Variables with GFP value exactly 1, plus witnesses.

    `max_witness` is a partial max policy on the M_max variables inside the
    one set (it keeps their value at 1); `min_witness` is a partial min
    policy on the M_min variables outside (it forces their value below 1).
    When the one set is empty, `min_witness` is total.
    """

    one_set: frozenset[int]
    max_witness: Policy
    min_witness: Policy
    reach_order: tuple[int, ...]


def gfp_one_set(snf: SnfSystem) -> OneSetResult:
    """AND-OR reachability of the deficient variables.

    OR nodes are the L, Q and M_min variables, AND nodes the M_max
    variables; the one set is the complement of the winning region.
    """
    targets = deficient_variables(snf)
    att = and_or_reach(
        range(snf.n),
        lambda i: _children(snf, i),
        targets,
        lambda i: isinstance(snf.forms[i], FormM) and snf.forms[i].op == MAXOF,
    )
    reach = att.in_set
    one = frozenset(range(snf.n)) - reach
    min_choices = {}
    for i in snf.m_vars(MIN_PLAYER):
        if i in reach:
            min_choices[i] = _branch_of(snf.forms[i], att.trigger[i])
    max_choices = {}
    for i in snf.m_vars(MAX_PLAYER):
        if i in one:
            f = snf.forms[i]
            max_choices[i] = 0 if f.j in one else 1
    return OneSetResult(
        one,
        Policy.of(MAX_PLAYER, max_choices),
        Policy.of(MIN_PLAYER, min_choices),
        tuple(att.order()),
    )


# ---------------------------------------------------------------------------
# Variable removal (substituting a known 0/1 value)


@dataclass(frozen=True)
class PruneResult:
    system: SnfSystem
    survivors: tuple[int, ...]         # new index -> old index
    forced: dict[int, int]             # old M variable -> branch forced by pruning
    removed: frozenset[int]

    def old_to_new(self) -> dict[int, int]:
        return {old: new for new, old in enumerate(self.survivors)}

    def lift_vector(self, values, removed_value):
        """Reassemble a full-length vector from residual values."""
        out = [removed_value] * (len(self.survivors) + len(self.removed))
        for new, old in enumerate(self.survivors):
            out[old] = values[new]
        return out


def remove_vars(snf: SnfSystem, vars_out, value: int) -> PruneResult:
    """Substitute a known constant (0 or 1) for a set of variables.

    With value 1: L rows fold removed coefficients into the constant, a Q
    row with a removed child becomes the surviving child, an M_min row with
    a removed child becomes the surviving child.  With value 0: removed L
    terms vanish, a Q row with a removed child becomes the constant 0, an
    M_max row with a removed child becomes the surviving child.  Surviving
    variables are renumbered preserving relative order.
    """
    if value not in (0, 1):
        raise ValueError("substituted value must be 0 or 1")
    removed = frozenset(vars_out)
    survivors = tuple(i for i in range(snf.n) if i not in removed)
    new_of = {old: new for new, old in enumerate(survivors)}
    one = value == 1
    forms = []
    forced: dict[int, int] = {}
    for old in survivors:
        f = snf.forms[old]
        if isinstance(f, FormL):
            const = f.const
            terms = {}
            for v, c in f.terms:
                if v in removed:
                    if one:
                        const += c
                else:
                    terms[new_of[v]] = c
            forms.append(FormL(const, terms))
        elif isinstance(f, FormQ):
            j_out, k_out = f.j in removed, f.k in removed
            if not j_out and not k_out:
                forms.append(FormQ(new_of[f.j], new_of[f.k]))
            elif one:
                if j_out and k_out:
                    forms.append(FormL(Fraction(1), ()))
                else:
                    keep = f.k if j_out else f.j
                    forms.append(FormL(0, ((new_of[keep], Fraction(1)),)))
            else:
                forms.append(FormL(Fraction(0), ()))
        else:
            j_out, k_out = f.j in removed, f.k in removed
            if not j_out and not k_out:
                forms.append(FormM(f.op, new_of[f.j], new_of[f.k]))
            elif j_out and k_out:
                forms.append(FormL(Fraction(1 if one else 0), ()))
            else:
                keep_branch = 1 if j_out else 0
                keep = f.k if j_out else f.j
                absorbing = (f.op == MINOF and not one) or (f.op == MAXOF and one)
                if absorbing:
                    # min with a 0 child, or max with a 1 child
                    forms.append(FormL(Fraction(1 if one else 0), ()))
                    forced[old] = 1 - keep_branch
                else:
                    forms.append(FormL(0, ((new_of[keep], Fraction(1)),)))
                    forced[old] = keep_branch
    names = tuple(snf.names[i] for i in survivors)
    origin = tuple(
        (orig, new_of[idx]) for orig, idx in snf.origin if idx not in removed
    )
    chains = tuple(
        ChoiceChain(
            c.original,
            c.op,
            tuple(new_of[v] for v in c.chain),
            tuple(new_of[v] for v in c.branch_vars),
        )
        for c in snf.chains
        if all(v not in removed for v in c.chain)
        and all(v not in removed for v in c.branch_vars)
    )
    system = SnfSystem(tuple(forms), names, origin, snf.aux_count, chains)
    return PruneResult(system, survivors, forced, removed)


def remove_one_vars(snf: SnfSystem, one_set) -> PruneResult:
    """Plug 1 into the value-1 variables; the residual GFP equals the
    original GFP restricted to survivors and is < 1 everywhere."""
    return remove_vars(snf, one_set, 1)


def remove_zero_vars(snf: SnfSystem, zero_set) -> PruneResult:
    return remove_vars(snf, zero_set, 0)


# ---------------------------------------------------------------------------
# GFP value-0 detection


@dataclass(frozen=True)
class ReachTree:
    """Why a variable sits in the zero set: a path witness ending at a
    deficient or product row (product rows split the lineage)."""

    var: int
    children: tuple["ReachTree", ...] = ()

    def depth(self) -> int:
        return 0 if not self.children else 1 + max(c.depth() for c in self.children)


@dataclass(frozen=True)
class ZeroSetResult:
    zero_set: frozenset[int]
    max_witness: Policy               # total; keeps value > 0 off the zero set
    tau_star: Policy                  # total; drives the zero set to 0
    reach_trees: dict[int, ReachTree]
    f_order: tuple[int, ...]


def gfp_zero_set(snf: SnfSystem) -> ZeroSetResult:
    """Alternating closure computing the GFP-zero variables of a system
    whose value-1 variables have already been removed.

    S collects variables known to have positive value (seeded by positive
    constant terms), F collects candidates for value 0 (seeded by deficient
    and product rows outside S); the loop re-seeds S with the complement of
    F until the two sets partition the variables.
    """
    ones = gfp_one_set(snf)
    if ones.one_set:
        raise PreconditionError(
            f"gfp_zero_set requires a pruned system; value-1 variables remain: "
            f"{sorted(ones.one_set)}"
        )
    n = snf.n
    deficient = set(deficient_variables(snf))

    def is_and_positive(i: int) -> bool:
        f = snf.forms[i]
        return isinstance(f, FormQ) or (isinstance(f, FormM) and f.op == MINOF)

    def is_and_zero(i: int) -> bool:
        f = snf.forms[i]
        return isinstance(f, FormM) and f.op == MAXOF

    s_set = {
        i
        for i, f in enumerate(snf.forms)
        if isinstance(f, FormL) and f.const > 0
    }
    sigma_triggers: dict[int, int] = {}
    f_att = None
    while True:
        att = and_or_reach(range(n), lambda i: _children(snf, i), s_set, is_and_positive)
        for i in snf.m_vars(MAX_PLAYER):
            if i in att.in_set and i in att.trigger:
                sigma_triggers.setdefault(i, att.trigger[i])
        s_set = att.in_set
        outside = [i for i in range(n) if i not in s_set]
        seeds = [i for i in outside if i in deficient or isinstance(snf.forms[i], FormQ)]
        f_att = and_or_reach(outside, lambda i: _children(snf, i), seeds, is_and_zero)
        f_set = f_att.in_set
        if s_set | f_set == set(range(n)):
            break
        s_set = set(range(n)) - f_set

    zero = frozenset(f_set)

    # Queen policy: agree with the one-set witness on S, follow the F
    # addition order inside the zero set.
    tau_choices = dict(ones.min_witness.choices)
    for i in snf.m_vars(MIN_PLAYER):
        if i in zero:
            tau_choices[i] = _branch_of(snf.forms[i], f_att.trigger[i])
    tau_star = Policy.of(MIN_PLAYER, tau_choices)

    sigma_choices = {}
    for i in snf.m_vars(MAX_PLAYER):
        f = snf.forms[i]
        if i in zero:
            sigma_choices[i] = 0 if f.j not in zero else (1 if f.k not in zero else 0)
        elif i in sigma_triggers:
            sigma_choices[i] = _branch_of(f, sigma_triggers[i])
        else:
            sigma_choices[i] = 0 if f.j not in zero else 1
    max_witness = Policy.of(MAX_PLAYER, sigma_choices)

    memo: dict[int, ReachTree] = {}

    def tree(i: int) -> ReachTree:
        if i in memo:
            return memo[i]
        f = snf.forms[i]
        if i in deficient or isinstance(f, FormQ):
            node = ReachTree(i)
        elif isinstance(f, FormM) and f.op == MAXOF:
            kids = (tree(f.j),) if f.j == f.k else (tree(f.j), tree(f.k))
            node = ReachTree(i, kids)
        else:
            node = ReachTree(i, (tree(f_att.trigger[i]),))
        memo[i] = node
        return node

    trees = {i: tree(i) for i in sorted(zero)}
    return ZeroSetResult(zero, max_witness, tau_star, trees, tuple(f_att.order()))


# ---------------------------------------------------------------------------
# LFP 0/1 sets


def lfp_zero_set(snf: SnfSystem) -> frozenset[int]:
    """Variables with LFP value 0, by closure of the positive set: an L row
    is positive given a positive constant or child, a Q or M_min row needs
    both children positive, an M_max row either."""
    seeds = [
        i
        for i, f in enumerate(snf.forms)
        if isinstance(f, FormL) and f.const > 0
    ]

    def is_and(i: int) -> bool:
        f = snf.forms[i]
        return isinstance(f, FormQ) or (isinstance(f, FormM) and f.op == MINOF)

    att = and_or_reach(range(snf.n), lambda i: _children(snf, i), seeds, is_and)
    return frozenset(range(snf.n)) - att.in_set


def lfp_one_set_pps(snf: SnfSystem) -> frozenset[int]:
    """Variables of a pure PPS with LFP value 1.

    Processes strongly connected components bottom-up: a component is in
    the one set iff all its rows are stochastic, everything below is in the
    one set, it is not a linear-degenerate bottom component, and (when it
    contains a product row) its all-ones Jacobian block has spectral radius
    at most 1, decided exactly by rational LP feasibility of
    B z <= z with z >= 1 on the irreducible block.
    """
    if not snf.is_pps:
        raise PreconditionError("lfp_one_set_pps requires a pure PPS")
    adj = dependency_graph(snf)
    one: set[int] = set()
    for comp in tarjan_sccs(adj):
        members = set(comp)
        if any(
            isinstance(snf.forms[i], FormL) and snf.forms[i].row_sum != 1
            for i in comp
        ):
            continue
        outside = {w for v in comp for w in adj[v] if w not in members}
        if not outside.issubset(one):
            continue
        has_q = any(isinstance(snf.forms[i], FormQ) for i in comp)
        if not has_q:
            is_bottom = not outside
            degenerate = is_bottom and all(
                isinstance(snf.forms[i], FormL) and snf.forms[i].const == 0
                for i in comp
            )
            if degenerate:
                continue
            one.update(comp)
            continue
        if _critical_or_subcritical(snf, comp):
            one.update(comp)
    return frozenset(one)


def _critical_or_subcritical(snf: SnfSystem, comp: list[int]) -> bool:
    """Exact test of rho(B_comp(1)) <= 1 on the irreducible block."""
    from .simplex import feasible  # deferred: simplex is a leaf module

    pos = {v: r for r, v in enumerate(comp)}
    m = len(comp)
    b = [[Fraction(0)] * m for _ in range(m)]
    for i in comp:
        f = snf.forms[i]
        r = pos[i]
        if isinstance(f, FormL):
            for v, c in f.terms:
                if v in pos:
                    b[r][pos[v]] += c
        else:
            for v in (f.j, f.k):
                if v in pos:
                    b[r][pos[v]] += Fraction(1)
    # z >= 1 with B z <= z, via z = 1 + w, w >= 0:  (B - I) w <= (I - B) 1
    rows = [[b[r][c] - (1 if r == c else 0) for c in range(m)] for r in range(m)]
    rhs = [-sum(rows[r]) for r in range(m)]
    return feasible(rows, rhs)


# ---------------------------------------------------------------------------
# Policy enumeration


def iter_deterministic_policies(snf: SnfSystem, player: str) -> Iterator[Policy]:
    """All deterministic policies for one player, branch 0 first."""
    variables = snf.m_vars(player)
    for combo in itertools.product((0, 1), repeat=len(variables)):
        yield Policy.of(player, dict(zip(variables, combo)))


def policy_count(snf: SnfSystem, player: str) -> int:
    return 2 ** len(snf.m_vars(player))


def lfp_one_set_bounded(snf: SnfSystem, budget: int = 2**20) -> frozenset[int]:
    """LFP value-1 set for max/min/max-min systems by bounded enumeration
    of deterministic policies, each reduced to the exact PPS test."""
    kind = snf.classify()
    if kind == "pps":
        return lfp_one_set_pps(snf)
    n_max = policy_count(snf, MAX_PLAYER)
    n_min = policy_count(snf, MIN_PLAYER)
    if n_max * n_min > budget:
        raise EnumerationBudgetExceeded(
            f"{n_max * n_min} policy combinations exceed budget {budget}"
        )
    result: set[int] = set()
    for sigma in iter_deterministic_policies(snf, MAX_PLAYER):
        fixed = apply_policy_snf(snf, sigma=sigma)
        per_sigma: set[int] | None = None
        for tau in iter_deterministic_policies(fixed, MIN_PLAYER):
            ones = set(lfp_one_set_pps(apply_policy_snf(fixed, tau=tau)))
            per_sigma = ones if per_sigma is None else (per_sigma & ones)
            if not per_sigma:
                break
        result |= per_sigma or set()
    return frozenset(result)


# ---------------------------------------------------------------------------
# Linear-degeneracy-freeness of min policies


def is_ldf(snf: SnfSystem, tau: Policy) -> tuple[bool, frozenset[int] | None]:
    """Whether fixing the min policy leaves no closed set.

    Runs AND-OR reachability on the resulting max system: targets are the
    product rows and the L rows with a positive constant or a deficient
    row sum; remaining L rows are OR nodes and max rows AND nodes.  When
    some variable cannot reach a target, a bottom strongly connected
    component of the non-reaching region is returned as the closed-set
    witness.
    """
    if tau.player != MIN_PLAYER:
        raise PolicyError("is_ldf expects a min-player policy")
    if not tau.is_deterministic:
        raise PolicyError("is_ldf expects a deterministic policy")
    fixed = apply_policy_snf(snf, tau=tau)
    targets = [
        i
        for i, f in enumerate(fixed.forms)
        if isinstance(f, FormQ)
        or (isinstance(f, FormL) and (f.const > 0 or f.row_sum < 1))
    ]
    att = and_or_reach(
        range(fixed.n),
        lambda i: _children(fixed, i),
        targets,
        lambda i: isinstance(fixed.forms[i], FormM),
    )
    u = [i for i in range(fixed.n) if i not in att.in_set]
    if not u:
        return True, None
    induced = {v: r for r, v in enumerate(u)}
    sub_adj = [
        tuple(induced[w] for w in _children(fixed, v) if w in induced) for v in u
    ]
    bottom = bottom_sccs(sub_adj)[0]
    return False, frozenset(u[r] for r in bottom)
