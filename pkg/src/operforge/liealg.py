"""Structure data and finite-dimensional linear algebra for sl_n and gl_n.

The principal triple here is the standard matrix realization: f is the
subdiagonal of ones, the semisimple element is diag(n-1, n-3, ..., 1-n), and
e is the unique superdiagonal completion, e[i][i+1] = (i+1)(n-i-1) in
0-indexed terms.  The centralizer of e is spanned by the powers e, e^2, ...,
e^(n-1) (plus the identity for gl), which gives an explicit basis for the
normal-form slice f + centralizer(e).
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from . import linalg as la
from .errors import NotInAlgebra, NotRegular, NotRegularNilpotent, SolverDegenerate


class AdfDecomposition:
    """Linear maps splitting the algebra as centralizer(e) + [f, algebra].

    ``projection_to_ge`` and ``section_X`` are n^2 x n^2 matrices acting on
    row-major matrix coordinates: for every Y,
    Y + [section_X(Y), f] = projection_to_ge(Y), with section_X(Y) the unique
    solution inside the image of ad(e).
    """

    __slots__ = ("projection_to_ge", "section_X", "n")

    def __init__(self, projection_to_ge, section_X, n):
        self.projection_to_ge = projection_to_ge
        self.section_X = section_X
        self.n = n

    def apply(self, y: la.Matrix):
        vy = la.vec(y)
        p = tuple(sum(r * x for r, x in zip(row, vy)) for row in self.projection_to_ge)
        x = tuple(sum(r * v for r, v in zip(row, vy)) for row in self.section_X)
        return la.unvec(x, self.n), la.unvec(p, self.n)


class AlgebraContext:
    """Structure constants for sl_n or gl_n in the matrix realization."""

    __slots__ = (
        "n",
        "kind",
        "e",
        "f",
        "two_rho_check",
        "simple_negatives",
        "ge_basis",
        "algebra_basis",
        "_adf",
        "_ge_system",
    )

    def __init__(self, n, kind):
        if kind not in ("sl", "gl"):
            raise ValueError(f"kind must be 'sl' or 'gl', got {kind!r}")
        if n < 1:
            raise ValueError("matrix size must be positive")
        self.n = n
        self.kind = kind
        self.f = tuple(
            tuple(la.ONE if i == j + 1 else la.ZERO for j in range(n)) for i in range(n)
        )
        self.e = tuple(
            tuple(
                Fraction((i + 1) * (n - i - 1)) if j == i + 1 else la.ZERO
                for j in range(n)
            )
            for i in range(n)
        )
        self.two_rho_check = tuple(
            tuple(Fraction(n - 1 - 2 * i) if i == j else la.ZERO for j in range(n))
            for i in range(n)
        )
        self.simple_negatives = tuple(
            la.elementary(n, i + 1, i) for i in range(n - 1)
        )
        self.ge_basis = self._build_ge_basis()
        self.algebra_basis = self._build_algebra_basis()
        self._adf = None
        self._ge_system = None
        self._check_structure()

    def _build_ge_basis(self):
        n = self.n
        powers = []
        p = la.identity(n)
        for _ in range(n - 1):
            p = la.mul(p, self.e)
            powers.append(p)
        basis = list(powers)
        if self.kind == "gl":
            basis = [la.identity(n)] + basis
        # Verify against the kernel of ad(e) computed by exact linear algebra.
        kernel = la.nullspace(la.ad_operator(self.e))
        expected = n if self.kind == "gl" else n - 1
        if len(basis) != expected:
            raise AssertionError("centralizer basis has the wrong size")
        if self.kind == "gl" and len(kernel) != n:
            raise AssertionError("kernel of ad(e) has unexpected dimension")
        span = [la.vec(b) for b in basis]
        if la.rank(tuple(span)) != len(basis):
            raise AssertionError("centralizer basis is not independent")
        ad_e = la.ad_operator(self.e)
        for b in basis:
            image = la.unvec(
                tuple(sum(r * x for r, x in zip(row, la.vec(b))) for row in ad_e),
                n,
            )
            if not la.is_zero(image):
                raise AssertionError("claimed centralizer element does not commute with e")
        return tuple(basis)

    def _build_algebra_basis(self):
        n = self.n
        if self.kind == "gl":
            return tuple(la.elementary(n, i, j) for i in range(n) for j in range(n))
        basis = [la.elementary(n, i, j) for i in range(n) for j in range(n) if i != j]
        for k in range(n - 1):
            basis.append(
                la.sub(la.elementary(n, k, k), la.elementary(n, k + 1, k + 1))
            )
        return tuple(basis)

    def _check_structure(self):
        if not la.eq(la.commutator(self.e, self.f), self.two_rho_check):
            raise AssertionError("[e, f] != 2*rho_check")
        if not la.eq(
            la.commutator(self.two_rho_check, self.e), la.scale(self.e, 2)
        ):
            raise AssertionError("[2*rho_check, e] != 2e")
        if not la.eq(
            la.commutator(self.two_rho_check, self.f), la.scale(self.f, -2)
        ):
            raise AssertionError("[2*rho_check, f] != -2f")

    @property
    def dim(self):
        return self.n * self.n if self.kind == "gl" else self.n * self.n - 1

    def contains(self, m: la.Matrix) -> bool:
        return self.kind == "gl" or la.trace(m) == 0

    def adf_decomposition(self) -> AdfDecomposition:
        if self._adf is None:
            self._adf = _build_adf(self)
        return self._adf

    def ge_coordinates(self, m: la.Matrix):
        """Coordinates of m in the centralizer basis, or None if m is outside it."""
        if self._ge_system is None:
            cols = tuple(la.vec(b) for b in self.ge_basis)
            self._ge_system = la.PresolvedSystem(la.transpose(cols))
        return self._ge_system.solve(la.vec(m))

    def __repr__(self):
        return f"AlgebraContext({self.kind}_{self.n})"


@lru_cache(maxsize=None)
def make_context(n: int, kind: str) -> AlgebraContext:
    """Context for sl_n or gl_n; cached, contexts are immutable."""
    return AlgebraContext(n, kind)


def _build_adf(ctx: AlgebraContext) -> AdfDecomposition:
    n = ctx.n
    nn = n * n
    ad_e = la.ad_operator(ctx.e)
    # Basis of image(ad e): pivot columns of the operator matrix.
    _, pivots = la.rref(ad_e)
    image_basis = [
        la.unvec(tuple(ad_e[r][c] for r in range(nn)), n) for c in pivots
    ]
    # Work in the ambient gl_n: its centralizer of e is Id, e, ..., e^(n-1).
    # For traceless input the identity coordinate of P comes out zero, so the
    # same maps serve both kinds.
    ambient_ge = [la.identity(n)]
    p = la.identity(n)
    for _ in range(n - 1):
        p = la.mul(p, ctx.e)
        ambient_ge.append(p)
    # Solve vec(Y) = P - vec([X, f]) with P in the centralizer of e and X in
    # image(ad e).  The combined coefficient matrix is square and invertible
    # because gl_n splits as centralizer(e) + [f, image(ad e)].
    ge_cols = [la.vec(b) for b in ambient_ge]
    bracket_cols = [la.vec(la.commutator(b, ctx.f)) for b in image_basis]
    cols = ge_cols + [tuple(-x for x in col) for col in bracket_cols]
    system = la.inverse(la.transpose(tuple(cols)))
    if system is None:
        raise AssertionError("triangular decomposition matrix is singular")
    k = len(ge_cols)
    ge_mat = la.transpose(tuple(ge_cols))  # nn x k
    img_mat = la.transpose(tuple(la.vec(b) for b in image_basis))
    top = tuple(system[:k])
    bottom = tuple(system[k:])
    proj = la.mul(ge_mat, top)
    sect = la.mul(img_mat, bottom) if bottom else la.zero_matrix(nn)
    return AdfDecomposition(proj, sect, n)


def solve_ad_f(ctx: AlgebraContext, y: la.Matrix):
    """Split y as P - [X, f] with P in the centralizer of e.

    Returns (X, P).  X is pinned down inside image(ad e), which makes gauge
    certificates reproducible.
    """
    y = la.mat(y)
    if not ctx.contains(y):
        raise NotInAlgebra(f"matrix has nonzero trace {la.trace(y)} but kind is sl")
    x, p = ctx.adf_decomposition().apply(y)
    residual = la.sub(la.add(y, la.commutator(x, ctx.f)), p)
    if not la.is_zero(residual):
        raise AssertionError("ad-f decomposition failed to close exactly")
    return x, p


def is_nilpotent(m: la.Matrix) -> bool:
    m = la.mat(m)
    return la.is_zero(la.mat_pow(m, len(m)))


def is_regular(m: la.Matrix) -> bool:
    """Regular = the centralizer in gl_n has the minimal dimension n."""
    m = la.mat(m)
    return len(la.nullspace(la.ad_operator(m))) == len(m)


def is_regular_nilpotent(m: la.Matrix) -> bool:
    m = la.mat(m)
    if not is_nilpotent(m):
        return False
    return la.rank(la.mat_pow(m, len(m) - 1)) == 1


def cyclic_vector_for(m: la.Matrix):
    """Deterministic cyclic vector for a regular matrix: first candidate whose
    iterated images form a basis.

    Candidates: standard basis vectors, 0/1 indicator vectors by support size,
    then geometric vectors (1, s, s^2, ...) for small s.
    """
    m = la.mat(m)
    n = len(m)

    def krylov(v):
        cols = []
        w = tuple(v)
        for _ in range(n):
            cols.append(w)
            w = tuple(sum(m[i][j] * w[j] for j in range(n)) for i in range(n))
        return la.transpose(tuple(cols))

    candidates = []
    for i in range(n):
        candidates.append(tuple(la.ONE if j == i else la.ZERO for j in range(n)))
    for size in range(2, n + 1):
        for bits in range(1, 1 << n):
            chosen = [j for j in range(n) if bits >> j & 1]
            if len(chosen) == size:
                candidates.append(
                    tuple(la.ONE if j in chosen else la.ZERO for j in range(n))
                )
    for s in range(2, n * n + 3):
        candidates.append(tuple(Fraction(s) ** j for j in range(n)))
    for v in candidates:
        k = krylov(v)
        if la.inverse(k) is not None:
            return v, k
    raise NotRegular("no cyclic vector found; the matrix is not regular")


def kostant_normal_form(ctx: AlgebraContext, m: la.Matrix) -> la.Matrix:
    """The unique point of the slice f + centralizer(e) with the same
    characteristic polynomial as m.

    Solved triangularly: in the graded coordinates of the slice each
    characteristic coefficient is affine in one new slice coordinate.
    """
    m = la.mat(m)
    if not is_regular(m):
        raise NotRegular("matrix is not regular; the slice meets only regular orbits")
    if not ctx.contains(m):
        raise NotInAlgebra("matrix has nonzero trace but kind is sl")
    n = ctx.n
    target = la.charpoly(m)
    coords = [la.ZERO] * len(ctx.ge_basis)

    def slice_point(cs):
        out = ctx.f
        for c, b in zip(cs, ctx.ge_basis):
            if c != 0:
                out = la.add(out, la.scale(b, c))
        return out

    # ge_basis is ordered by grading: (Id for gl,) e, e^2, ..., e^(n-1).
    # Slice coordinate j pairs with characteristic coefficient index j+1
    # for sl, j+1 shifted by the identity coordinate for gl.
    for j in range(len(coords)):
        if ctx.kind == "gl":
            coeff_index = j + 1
        else:
            coeff_index = j + 2
        base = coords[:]
        base[j] = la.ZERO
        bumped = coords[:]
        bumped[j] = la.ONE
        a0 = la.charpoly(slice_point(base))[coeff_index]
        a1 = la.charpoly(slice_point(bumped))[coeff_index]
        slope = a1 - a0
        if slope == 0:
            raise SolverDegenerate(
                "slice coordinate does not control its characteristic coefficient"
            )
        coords[j] = (target[coeff_index] - a0) / slope
    out = slice_point(coords)
    if la.charpoly(out) != target:
        raise SolverDegenerate("slice solve failed to match the characteristic polynomial")
    return out


def conjugate_regular_nilpotent_to_f(ctx: AlgebraContext, m: la.Matrix) -> la.Matrix:
    """An invertible h with h m h^{-1} = f, built from a cyclic basis
    (v, m v, ..., m^{n-1} v) for a deterministically chosen v.

    For kind sl the determinant is normalized to 1 whenever 1/det has an
    exact rational n-th root; over Q that is not always possible, in which
    case h keeps its (constant, nonzero) determinant.  The postcondition is
    verified exactly on every call.
    """
    m = la.mat(m)
    if not is_regular_nilpotent(m):
        raise NotRegularNilpotent("leading matrix is not regular nilpotent")
    _, k = cyclic_vector_for(m)
    h = la.inverse(k)
    if ctx.kind == "sl":
        d = la.det(h)
        root = la.fraction_nth_root(1 / d, ctx.n)
        if root is not None:
            h = la.scale(h, root)
    check = la.mul(la.mul(h, m), la.inverse(h))
    if not la.eq(check, ctx.f):
        raise AssertionError("cyclic-basis conjugation failed to reach f")
    return h
