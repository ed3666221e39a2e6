"""Dense two-phase simplex over exact rationals with Bland's rule.

Only the constraint shapes produced by the Newton-operator programs are
needed (inequalities over free or non-negative variables), so the solver
is deliberately small: maximize c.x subject to A x <= b.  Bland's rule
guarantees termination under degeneracy; all arithmetic is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import PpsolveError


class LpInfeasible(PpsolveError):
    pass


class LpUnbounded(PpsolveError):
    pass


@dataclass
class LpSolution:
    x: list[Fraction]
    objective: Fraction


def _pivot(tableau, basis, row, col):
    pivot = tableau[row][col]
    tableau[row] = [v / pivot for v in tableau[row]]
    prow = tableau[row]
    for r, entries in enumerate(tableau):
        if r == row:
            continue
        factor = entries[col]
        if factor == 0:
            continue
        tableau[r] = [v - factor * p for v, p in zip(entries, prow)]
    basis[row] = col


def _run_simplex(tableau, basis, allowed_cols):
    """Pivot until the objective row (last) has no negative reduced cost."""
    m = len(tableau) - 1
    obj = tableau[-1]
    while True:
        entering = None
        for j in allowed_cols:
            if obj[j] < 0:
                entering = j
                break
        if entering is None:
            return
        leaving = None
        best_ratio = None
        for i in range(m):
            coeff = tableau[i][entering]
            if coeff > 0:
                ratio = tableau[i][-1] / coeff
                if (
                    best_ratio is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and basis[i] < basis[leaving])
                ):
                    best_ratio = ratio
                    leaving = i
        if leaving is None:
            raise LpUnbounded("objective unbounded")
        _pivot(tableau, basis, leaving, entering)
        obj = tableau[-1]


def _solve(c, a_rows, b, nonneg):
    m = len(a_rows)
    n = len(c)
    nstruct = n if nonneg else 2 * n

    def structural(row):
        # Free variables are split as x = u - v with u, v >= 0.
        out = [Fraction(v) for v in row]
        return out if nonneg else out + [-v for v in out]

    rows = []
    negated = []
    for i in range(m):
        coeffs = structural(a_rows[i])
        rhs = Fraction(b[i])
        if rhs < 0:
            coeffs = [-v for v in coeffs]
            rhs = -rhs
            negated.append(True)
        else:
            negated.append(False)
        rows.append((coeffs, rhs))

    n_art = sum(negated)
    ncols = nstruct + m + n_art
    tableau = []
    basis = []
    art_cols = []
    art_seen = 0
    for i, (coeffs, rhs) in enumerate(rows):
        row = coeffs + [Fraction(0)] * (m + n_art) + [rhs]
        slack_col = nstruct + i
        row[slack_col] = Fraction(-1 if negated[i] else 1)
        if negated[i]:
            art_col = nstruct + m + art_seen
            art_seen += 1
            row[art_col] = Fraction(1)
            art_cols.append(art_col)
            basis.append(art_col)
        else:
            basis.append(slack_col)
        tableau.append(row)

    # Phase 1: maximize -(sum of artificials).
    if art_cols:
        obj = [Fraction(0)] * (ncols + 1)
        for col in art_cols:
            obj[col] = Fraction(1)  # -c with c_j = -1
        for i, bc in enumerate(basis):
            if bc in art_cols:
                obj = [o - t for o, t in zip(obj, tableau[i])]
        tableau.append(obj)
        _run_simplex(tableau, basis, range(ncols))
        if tableau[-1][-1] != 0:
            raise LpInfeasible("phase 1 optimum nonzero")
        tableau.pop()
        # Drive any degenerate artificial out of the basis.
        for i in range(m):
            if basis[i] in art_cols:
                pivot_col = next(
                    (j for j in range(nstruct + m) if tableau[i][j] != 0), None
                )
                if pivot_col is not None:
                    _pivot(tableau, basis, i, pivot_col)
        art_set = set(art_cols)
        keep = [j for j in range(ncols) if j not in art_set] + [ncols]
        tableau = [[row[j] for j in keep] for row in tableau]
        remap = {old: new for new, old in enumerate(keep[:-1])}
        basis = [remap.get(bc, -1) for bc in basis]
        ncols = nstruct + m

    # Phase 2 objective row: z_j - c_j.
    full_c = [Fraction(0)] * ncols
    for j in range(n):
        full_c[j] = Fraction(c[j])
        if not nonneg:
            full_c[n + j] = -Fraction(c[j])
    obj = [-v for v in full_c] + [Fraction(0)]
    for i, bc in enumerate(basis):
        if bc >= 0 and full_c[bc] != 0:
            obj = [o + full_c[bc] * t for o, t in zip(obj, tableau[i])]
    tableau.append(obj)
    _run_simplex(tableau, basis, range(ncols))

    values = [Fraction(0)] * ncols
    for i, bc in enumerate(basis):
        if bc >= 0:
            values[bc] = tableau[i][-1]
    if nonneg:
        x = values[:n]
    else:
        x = [values[j] - values[n + j] for j in range(n)]
    objective = sum((Fraction(ci) * xi for ci, xi in zip(c, x)), Fraction(0))
    return LpSolution(x, objective)


def maximize(c, a_rows, b, nonneg: bool = False) -> LpSolution:
    """Maximize c.x subject to A x <= b; variables are free unless nonneg."""
    return _solve(list(c), [list(r) for r in a_rows], list(b), nonneg)


def minimize(c, a_rows, b, nonneg: bool = False) -> LpSolution:
    sol = maximize([-Fraction(v) for v in c], a_rows, b, nonneg)
    return LpSolution(sol.x, -sol.objective)


def feasible(a_rows, b) -> bool:
    """Is there a w >= 0 with A w <= b?  (Phase 1 only.)"""
    try:
        _solve([Fraction(0)] * (len(a_rows[0]) if a_rows else 0),
               [list(r) for r in a_rows], list(b), nonneg=True)
        return True
    except LpInfeasible:
        return False
