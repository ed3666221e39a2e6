"""Independent oracles for the test suite.

Everything here recomputes expected values by a route different from the
implementation under test: plain fixed-point iteration, exhaustive policy
enumeration with direct structural checks, and finite differences.  These
stay deliberately naive.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from ppsolve.snf import FormL, FormM, FormQ, SnfSystem
from ppsolve.system import MAXOF, MAX_PLAYER, MINOF, MIN_PLAYER, Policy


def eval_forms(forms, x):
    """Single application of the system map, written independently."""
    out = []
    for f in forms:
        if isinstance(f, FormL):
            acc = f.const
            for v, c in f.terms:
                acc = acc + c * x[v]
            out.append(acc)
        elif isinstance(f, FormQ):
            out.append(x[f.j] * x[f.k])
        elif f.op == MAXOF:
            out.append(max(x[f.j], x[f.k]))
        else:
            out.append(min(x[f.j], x[f.k]))
    return out


def vi_fixed_point(snf: SnfSystem, start: float, tol: float = 1e-12,
                   budget: int = 1_000_000) -> list[float]:
    """Float value iteration from the all-`start` vector."""
    x = [float(start)] * snf.n
    for _ in range(budget):
        y = [float(v) for v in eval_forms(snf.forms, x)]
        if max((abs(a - b) for a, b in zip(x, y)), default=0.0) <= tol:
            return y
        x = y
    return x


def vi_exact(snf: SnfSystem, start: int, iterations: int) -> list[Fraction]:
    x = [Fraction(start)] * snf.n
    for _ in range(iterations):
        x = eval_forms(snf.forms, x)
    return x


def gfp_oracle(snf: SnfSystem, tol: float = 1e-13) -> list[float]:
    return vi_fixed_point(snf, 1.0, tol)


def lfp_oracle(snf: SnfSystem, tol: float = 1e-13) -> list[float]:
    return vi_fixed_point(snf, 0.0, tol)


# ---------------------------------------------------------------------------
# Structural brute force


def children_of(snf: SnfSystem, i: int) -> tuple[int, ...]:
    f = snf.forms[i]
    if isinstance(f, FormL):
        return tuple(v for v, _ in f.terms)
    return (f.j,) if f.j == f.k else (f.j, f.k)


def _resolve(snf: SnfSystem, sigma: dict[int, int], tau: dict[int, int]):
    """Children lists after fixing deterministic policies for both players."""
    out = []
    for i, f in enumerate(snf.forms):
        if isinstance(f, FormM):
            pol = sigma if f.op == MAXOF else tau
            out.append(((f.j, f.k)[pol[i]],))
        else:
            out.append(children_of(snf, i))
    return out


def all_policies(snf: SnfSystem, player: str):
    op = MAXOF if player == MAX_PLAYER else MINOF
    variables = [
        i for i, f in enumerate(snf.forms) if isinstance(f, FormM) and f.op == op
    ]
    for combo in itertools.product((0, 1), repeat=len(variables)):
        yield dict(zip(variables, combo))


def _reaches(adj, targets) -> set[int]:
    seen = set(targets)
    changed = True
    while changed:
        changed = False
        for v in range(len(adj)):
            if v not in seen and any(w in seen for w in adj[v]):
                seen.add(v)
                changed = True
    return seen


def deficient(snf: SnfSystem) -> set[int]:
    return {
        i for i, f in enumerate(snf.forms)
        if isinstance(f, FormL) and f.row_sum < 1
    }


def brute_one_set(snf: SnfSystem) -> frozenset[int]:
    """g* = 1 coordinates by policy-pair enumeration.

    A fixed policy pair gives a pure system whose value-1 coordinates are
    exactly the variables with no path to a deficient row; the max player
    picks the policy, the min player answers.
    """
    targets = deficient(snf)
    n = snf.n
    result = set()
    for sigma in all_policies(snf, MAX_PLAYER):
        survives = set(range(n))
        for tau in all_policies(snf, MIN_PLAYER):
            adj = _resolve(snf, sigma, tau)
            below_one = _reaches(adj, targets)
            survives &= set(range(n)) - below_one
            if not survives:
                break
        result |= survives
    return frozenset(result)


def _bottom_sccs_plain(adj):
    """Kosaraju-style SCCs, keeping only components with no exits."""
    n = len(adj)
    visited = [False] * n
    order = []

    def dfs(v):
        stack = [(v, iter(adj[v]))]
        visited[v] = True
        while stack:
            node, it = stack[-1]
            advanced = False
            for w in it:
                if not visited[w]:
                    visited[w] = True
                    stack.append((w, iter(adj[w])))
                    advanced = True
                    break
            if not advanced:
                order.append(node)
                stack.pop()

    for v in range(n):
        if not visited[v]:
            dfs(v)
    radj = [[] for _ in range(n)]
    for v in range(n):
        for w in adj[v]:
            radj[w].append(v)
    comp = [-1] * n
    c = 0
    for v in reversed(order):
        if comp[v] != -1:
            continue
        stack = [v]
        comp[v] = c
        members = [v]
        while stack:
            node = stack.pop()
            for w in radj[node]:
                if comp[w] == -1:
                    comp[w] = c
                    stack.append(w)
                    members.append(w)
        c += 1
    comps = {}
    for v in range(n):
        comps.setdefault(comp[v], []).append(v)
    bottoms = []
    for members in comps.values():
        mset = set(members)
        if all(w in mset for v in members for w in adj[v]):
            bottoms.append(sorted(members))
    return bottoms


def _is_ld_bottom(snf: SnfSystem, members, resolved_rows) -> bool:
    """Linear degenerate: all rows affine and stochastic with no constant.

    `resolved_rows` maps M variables to their chosen child.
    """
    for i in members:
        f = snf.forms[i]
        if isinstance(f, FormQ):
            return False
        if isinstance(f, FormL):
            if f.const != 0 or f.row_sum != 1:
                return False
        # a resolved M row is x_i = x_child: stochastic with no constant
    return True


def brute_ldf(snf: SnfSystem, tau: Policy) -> bool:
    """tau is LDF iff no max completion leaves a linear-degenerate bottom
    component."""
    tau_map = {v: c for v, c in tau.choices}
    for sigma in all_policies(snf, MAX_PLAYER):
        adj = _resolve(snf, sigma, tau_map)
        for members in _bottom_sccs_plain(adj):
            if _is_ld_bottom(snf, members, None):
                return False
    return True


def maxpps_lfp_zero(snf: SnfSystem, tau: dict[int, int]) -> frozenset[int]:
    """Exact LFP-zero coordinates of the max system induced by tau: the
    support of iteration from zero stabilizes within n steps."""
    n = snf.n
    x = [Fraction(0)] * n
    for _ in range(n + 1):
        y = []
        for i, f in enumerate(snf.forms):
            if isinstance(f, FormM) and f.op == MINOF:
                y.append(x[(f.j, f.k)[tau[i]]])
            elif isinstance(f, FormM):
                y.append(max(x[f.j], x[f.k]))
            elif isinstance(f, FormQ):
                y.append(x[f.j] * x[f.k])
            else:
                acc = f.const
                for v, c in f.terms:
                    acc += c * x[v]
                y.append(acc)
        x = y
    return frozenset(i for i in range(n) if x[i] == 0)


def brute_zero_set(snf: SnfSystem) -> frozenset[int]:
    """g* = 0 coordinates: some LDF min policy pins the max system's LFP at
    zero there (enumerated exhaustively)."""
    result = set()
    for tau in all_policies(snf, MIN_PLAYER):
        policy = Policy.of(MIN_PLAYER, tau)
        if not brute_ldf(snf, policy):
            continue
        result |= maxpps_lfp_zero(snf, tau)
    return frozenset(result)
