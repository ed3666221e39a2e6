"""Linear solves in both numeric modes.

Exact mode runs Gaussian elimination over the rationals, picking the pivot
with the smallest numerator/denominator bit size to keep intermediate
fractions small.  Float mode delegates to LAPACK's partially pivoted LU.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import SingularMatrixError


def _pivot_weight(value: Fraction) -> int:
    return value.numerator.bit_length() + value.denominator.bit_length()


def solve_exact(matrix, rhs) -> list[Fraction]:
    """Solve A x = b exactly; raises SingularMatrixError with the failing
    pivot column."""
    n = len(matrix)
    a = [[Fraction(v) for v in row] + [Fraction(b)] for row, b in zip(matrix, rhs)]
    for col in range(n):
        pivot_row = None
        best = None
        for r in range(col, n):
            v = a[r][col]
            if v == 0:
                continue
            w = _pivot_weight(v)
            if best is None or w < best:
                best = w
                pivot_row = r
        if pivot_row is None:
            raise SingularMatrixError(col)
        if pivot_row != col:
            a[col], a[pivot_row] = a[pivot_row], a[col]
        pivot = a[col][col]
        for r in range(col + 1, n):
            factor = a[r][col] / pivot
            if factor == 0:
                continue
            row_r, row_c = a[r], a[col]
            for c in range(col, n + 1):
                row_r[c] -= factor * row_c[c]
    x = [Fraction(0)] * n
    for r in range(n - 1, -1, -1):
        acc = a[r][n]
        for c in range(r + 1, n):
            acc -= a[r][c] * x[c]
        x[r] = acc / a[r][r]
    return x


def inverse_exact(matrix) -> list[list[Fraction]]:
    n = len(matrix)
    cols = []
    for j in range(n):
        e = [Fraction(1 if i == j else 0) for i in range(n)]
        cols.append(solve_exact(matrix, e))
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def solve_float(matrix, rhs) -> np.ndarray:
    a = np.asarray(matrix, dtype=float)
    b = np.asarray(rhs, dtype=float)
    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(-1) from exc
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError(-1)
    return x
