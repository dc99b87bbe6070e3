"""Exact dense linear algebra over Q.

Matrices are immutable tuples of tuples of Fraction.  Plain Gaussian
elimination is all this library needs: structure matrices stay small
(n <= 8) and operator matrices top out at n^2 x n^2.
"""

from __future__ import annotations

from fractions import Fraction

Matrix = tuple

ZERO = Fraction(0)
ONE = Fraction(1)


def rat(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def mat(rows) -> Matrix:
    return tuple(tuple(rat(x) for x in row) for row in rows)


def zero_matrix(rows: int, cols: int | None = None) -> Matrix:
    cols = rows if cols is None else cols
    return tuple((ZERO,) * cols for _ in range(rows))


def identity(n: int) -> Matrix:
    return tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))


def elementary(n: int, i: int, j: int, value=ONE) -> Matrix:
    """Matrix with a single entry at row i, column j (0-indexed)."""
    v = rat(value)
    return tuple(
        tuple(v if (r, c) == (i, j) else ZERO for c in range(n)) for r in range(n)
    )


def add(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def sub(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def scale(a: Matrix, c) -> Matrix:
    c = rat(c)
    return tuple(tuple(c * x for x in row) for row in a)


def mul(a: Matrix, b: Matrix) -> Matrix:
    bt = tuple(zip(*b))
    return tuple(
        tuple(sum(x * y for x, y in zip(row, col)) for col in bt) for row in a
    )


def commutator(a: Matrix, b: Matrix) -> Matrix:
    return sub(mul(a, b), mul(b, a))


def mat_pow(a: Matrix, k: int) -> Matrix:
    out = identity(len(a))
    for _ in range(k):
        out = mul(out, a)
    return out


def trace(a: Matrix) -> Fraction:
    return sum((a[i][i] for i in range(len(a))), ZERO)


def transpose(a: Matrix) -> Matrix:
    return tuple(zip(*a))


def is_zero(a: Matrix) -> bool:
    return all(x == 0 for row in a for x in row)


def eq(a: Matrix, b: Matrix) -> bool:
    return all(x == y for ra, rb in zip(a, b) for x, y in zip(ra, rb))


def vec(a: Matrix) -> tuple:
    """Row-major flattening."""
    return tuple(x for row in a for x in row)


def unvec(v, n: int) -> Matrix:
    return tuple(tuple(v[i * n + j] for j in range(n)) for i in range(n))


def ad_operator(m: Matrix) -> Matrix:
    """The operator X -> [m, X] on row-major coordinates, as an n^2 x n^2 matrix."""
    n = len(m)
    rows = []
    for i in range(n):
        for j in range(n):
            row = [ZERO] * (n * n)
            # (mX)_{ij} = sum_k m_{ik} X_{kj};  (Xm)_{ij} = sum_k X_{ik} m_{kj}
            for k in range(n):
                row[k * n + j] += m[i][k]
                row[i * n + k] -= m[k][j]
            rows.append(tuple(row))
    return tuple(rows)


def _rref(rows):
    """In-place reduced row echelon form; returns pivot column list."""
    nrows = len(rows)
    ncols = len(rows[0]) if nrows else 0
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = None
        for i in range(r, nrows):
            if rows[i][c] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = ONE / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(nrows):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return pivots


def rref(a: Matrix):
    rows = [list(row) for row in a]
    pivots = _rref(rows)
    return rows, tuple(pivots)


def rank(a: Matrix) -> int:
    if not a or not a[0]:
        return 0
    _, pivots = rref(a)
    return len(pivots)


def nullspace(a: Matrix) -> list:
    """Deterministic kernel basis: one vector per free column, that column set to 1."""
    if not a:
        return []
    ncols = len(a[0])
    rows, pivots = rref(a)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [ZERO] * ncols
        v[fc] = ONE
        for r, pc in enumerate(pivots):
            v[pc] = -rows[r][fc]
        basis.append(tuple(v))
    return basis


def solve(a: Matrix, b) -> tuple | None:
    """One particular solution of a x = b with free variables set to zero,
    or None when the system is inconsistent."""
    return PresolvedSystem(a).solve(tuple(b))


def inverse(a: Matrix) -> Matrix | None:
    n = len(a)
    rows = [list(row) + list(identity(n)[i]) for i, row in enumerate(a)]
    pivots = _rref(rows)
    if list(pivots) != list(range(n)):
        return None
    return tuple(tuple(rows[i][n:]) for i in range(n))


def det(a: Matrix) -> Fraction:
    n = len(a)
    rows = [list(row) for row in a]
    out = ONE
    for c in range(n):
        pivot = None
        for i in range(c, n):
            if rows[i][c] != 0:
                pivot = i
                break
        if pivot is None:
            return ZERO
        if pivot != c:
            rows[c], rows[pivot] = rows[pivot], rows[c]
            out = -out
        out *= rows[c][c]
        inv = ONE / rows[c][c]
        for i in range(c + 1, n):
            if rows[i][c] != 0:
                f = rows[i][c] * inv
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[c])]
    return out


def charpoly(a: Matrix) -> tuple:
    """Monic characteristic polynomial coefficients (1, c_1, ..., c_n) for
    lambda^n + c_1 lambda^(n-1) + ... + c_n, by the Faddeev-LeVerrier recursion."""
    n = len(a)
    coeffs = [ONE]
    m = identity(n)
    for k in range(1, n + 1):
        m = mul(a, m)
        c = -trace(m) / k
        coeffs.append(c)
        m = add(m, scale(identity(n), c))
    return tuple(coeffs)


def int_nth_root(x: int, n: int) -> int | None:
    """Exact integer n-th root of x >= 0, or None."""
    if x < 0:
        return None
    if x in (0, 1):
        return x
    lo, hi = 0, 1
    while hi**n < x:
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if mid**n < x:
            lo = mid + 1
        else:
            hi = mid
    return lo if lo**n == x else None


def fraction_nth_root(q: Fraction, n: int) -> Fraction | None:
    """Exact rational n-th root of q, or None when no rational root exists."""
    sign = 1
    if q < 0:
        if n % 2 == 0:
            return None
        sign = -1
        q = -q
    p = int_nth_root(q.numerator, n)
    d = int_nth_root(q.denominator, n)
    if p is None or d is None:
        return None
    return Fraction(sign * p, d)


class PresolvedSystem:
    """Row-reduce a coefficient matrix once and solve many right-hand sides.

    Solutions are the deterministic particular solution with all free
    variables set to zero.
    """

    def __init__(self, a: Matrix):
        nrows = len(a)
        self.ncols = len(a[0]) if nrows else 0
        aug = [list(row) + list(identity(nrows)[i]) for i, row in enumerate(a)]
        nrowsq = nrows
        # Row reduce the coefficient part, carrying the transform alongside.
        pivots = []
        r = 0
        for c in range(self.ncols):
            pivot = None
            for i in range(r, nrowsq):
                if aug[i][c] != 0:
                    pivot = i
                    break
            if pivot is None:
                continue
            aug[r], aug[pivot] = aug[pivot], aug[r]
            inv = ONE / aug[r][c]
            aug[r] = [x * inv for x in aug[r]]
            for i in range(nrowsq):
                if i != r and aug[i][c] != 0:
                    f = aug[i][c]
                    aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
            pivots.append(c)
            r += 1
            if r == nrowsq:
                break
        self.nrows = nrows
        self.pivots = tuple(pivots)
        self.reduced = [row[: self.ncols] for row in aug]
        self.transform = [row[self.ncols :] for row in aug]

    def solve(self, b) -> tuple | None:
        rhs = [sum(t * x for t, x in zip(row, b)) for row in self.transform]
        x = [ZERO] * self.ncols
        for r, pc in enumerate(self.pivots):
            x[pc] = rhs[r]
        for r in range(len(self.pivots), self.nrows):
            if rhs[r] != 0:
                return None
        return tuple(x)
