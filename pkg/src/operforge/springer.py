"""Desk-scale computations around deformed affine Springer fibers.

For a connection A of order r, membership of a gauge element g in the fiber
means ord(Ga_{g^-1}(A)) >= r.  Writing At = t^-r A, the deformed condition
Ad_{g^-1}(At) - lambda t^-r dlog(g^-1) in g(O) interpolates between the
gauge-theoretic fiber (lambda = 1) and the classical affine Springer fiber
(lambda = 0).  At every membership point the reduction mod t is nilpotent;
points where it is regular nilpotent are the regular points, and a bounded
deterministic search produces certified regular points for nilpotent leading
terms.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from . import linalg as la
from .errors import (
    InvalidOrder,
    NilpotencyViolation,
    NotNilpotent,
    OrderUndetermined,
    PrecisionExhausted,
    SearchExhausted,
    Unstabilized,
)
from .gauge import CONST, COWEIGHT, EXP, Connection, GaugeElement, gauge_transform
from .laurent import INF, MatrixSeries
from .liealg import is_nilpotent, is_regular_nilpotent


class DeformedFiberQuery:
    """A normalized connection At = t^-r A in g(O), the order r, and the
    deformation parameter lambda (1 recovers the gauge fiber, 0 the
    classical one)."""

    __slots__ = ("ctx", "a_tilde", "r", "lam")

    def __init__(self, a_tilde: Connection, r: int, lam=Fraction(1)):
        if a_tilde.matrix.val_bound < 0:
            raise InvalidOrder("normalized connection must take values in g(O)")
        if r > -1:
            raise InvalidOrder(f"query order must be <= -1, got {r}")
        self.ctx = a_tilde.ctx
        self.a_tilde = a_tilde
        self.r = int(r)
        self.lam = la.rat(lam)

    @classmethod
    def from_connection(cls, a: Connection, lam=Fraction(1)):
        r = a.order
        if r == INF:
            raise InvalidOrder("the zero connection has no finite order")
        return cls(a.shifted(-r), int(r), lam)

    def connection(self) -> Connection:
        return self.a_tilde.shifted(self.r)


def _certify_vanishing_below(m: MatrixSeries, threshold: int, what: str) -> bool:
    """True iff every coefficient below t^threshold is certifiably zero;
    False on a visible nonzero; raises when the window cannot decide."""
    for row in m.entries:
        for e in row:
            for k, _ in e.items():
                if k < threshold:
                    return False
    if m.precision >= threshold - 1:
        return True
    raise OrderUndetermined(
        f"{what}: window reaches only t^{m.precision}, cannot certify "
        f"vanishing below t^{threshold}"
    )


def _deformed_series(q: DeformedFiberQuery, g: GaugeElement) -> MatrixSeries:
    """Ad_{g^-1}(At) - lambda t^-r dlog(g^-1)."""
    gi = g.inverse()
    prec = q.a_tilde.precision
    target = INF if prec == INF else int(prec) - q.r + 1
    gim = gi.matrix_at(target)
    gm = g.matrix_at(target)
    ad = gim * q.a_tilde.matrix * gm
    if q.lam == 0:
        return ad
    dl = gim.derivative() * gm
    return ad - dl.shifted(-q.r) * q.lam


def in_M_A(a: Connection, g: GaugeElement) -> bool:
    """Does g preserve the pole order: ord(Ga_{g^-1}(A)) >= ord(A)?"""
    r = a.order
    if r == INF:
        raise InvalidOrder("the zero connection has no finite order")
    b = gauge_transform(g.inverse(), a)
    return _certify_vanishing_below(b.matrix, int(r), "order comparison")


def in_deformed_fiber(q: DeformedFiberQuery, g: GaugeElement) -> bool:
    d = _deformed_series(q, g)
    try:
        return _certify_vanishing_below(d, 0, "integrality")
    except OrderUndetermined as exc:
        raise PrecisionExhausted(str(exc)) from exc


def in_iwahori_fiber(q: DeformedFiberQuery, g: GaugeElement) -> bool:
    """Membership variant with values in Lie I: integral and upper triangular
    mod t (the stricter flag-level condition)."""
    if not in_deformed_fiber(q, g):
        return False
    d0 = _deformed_series(q, g).coefficient(0)
    n = q.ctx.n
    return all(d0[i][j] == 0 for i in range(n) for j in range(n) if i > j)


def leading_term(q: DeformedFiberQuery, g: GaugeElement) -> la.Matrix:
    """The reduction mod t of the transformed connection at a membership
    point.  It is always nilpotent there; a non-nilpotent value can only mean
    an implementation bug, so it raises NilpotencyViolation."""
    one = DeformedFiberQuery(q.a_tilde, q.r, Fraction(1))
    if not in_deformed_fiber(one, g):
        raise InvalidOrder("leading term is defined only at membership points")
    out = _deformed_series(one, g).coefficient(0)
    if not is_nilpotent(out):
        raise NilpotencyViolation(
            "leading term at a membership point is not nilpotent"
        )
    return out


def is_regular_point(q: DeformedFiberQuery, g: GaugeElement) -> bool:
    return is_regular_nilpotent(leading_term(q, g))


class SearchCertificate:
    """A certified regular point: gauge element g, the transformed connection
    Ga_{g^-1}(A), its leading coefficient, and the search statistics.

    Everything is re-verified from scratch on construction: the replay, the
    order comparison, and regular nilpotency of the leading term.
    """

    __slots__ = ("g", "transformed", "leading", "search_stats", "effective_order")

    def __init__(self, a: Connection, g: GaugeElement, effective_order: int, search_stats):
        self.g = g
        self.effective_order = int(effective_order)
        transformed = gauge_transform(g.inverse(), a)
        if not _certify_vanishing_below(
            transformed.matrix, self.effective_order, "certificate order"
        ):
            raise InvalidOrder("certificate candidate does not preserve the order")
        leading = transformed.matrix.coefficient(self.effective_order)
        if not is_regular_nilpotent(leading):
            raise NotNilpotent("certificate leading term is not regular nilpotent")
        self.transformed = transformed
        self.leading = leading
        self.search_stats = dict(search_stats)

    def to_json(self):
        from .laurent import format_rational

        return {
            "gauge": self.g.to_json(),
            "transformed": self.transformed.to_json(),
            "leading": [[format_rational(x) for x in row] for row in self.leading],
            "effective_order": self.effective_order,
            "search_stats": self.search_stats,
        }


def _coweights(n, kind, bound):
    """Nonzero integer diagonal exponent vectors ordered by (height, lex).

    Height is max(sum of positive entries, -sum of negative entries); for the
    trace-zero vectors required by sl both sums coincide (half the l1 norm).
    """
    out = []

    def rec(prefix, remaining):
        if remaining == 0:
            vec = tuple(prefix)
            if not any(vec):
                return
            if kind == "sl" and sum(vec) != 0:
                return
            up = sum(x for x in vec if x > 0)
            down = -sum(x for x in vec if x < 0)
            ht = max(up, down)
            if ht <= bound:
                out.append((ht, vec))
            return
        for v in range(-bound, bound + 1):
            rec(prefix + [v], remaining - 1)

    rec([], n)
    return [vec for _, vec in sorted(out)]


def _constant_moves(ctx):
    """Identity, permutation matrices, and elementary shears (deterministic)."""
    n = ctx.n
    moves = [la.identity(n)]
    if n <= 4:
        for perm in itertools.permutations(range(n)):
            if perm == tuple(range(n)):
                continue
            moves.append(
                tuple(
                    tuple(la.ONE if j == perm[i] else la.ZERO for j in range(n))
                    for i in range(n)
                )
            )
    for i in range(n):
        for j in range(n):
            if i != j:
                moves.append(la.add(la.identity(n), la.elementary(n, i, j)))
                moves.append(la.sub(la.identity(n), la.elementary(n, i, j)))
    return moves


def _exp_alphabet(ctx):
    n = ctx.n
    letters = []
    for i in range(n):
        for j in range(n):
            if i != j:
                letters.append(la.elementary(n, i, j))
                letters.append(la.elementary(n, i, j, Fraction(-1)))
    letters.append(ctx.f)
    return letters


def _centralizer_basis(a_r, kind):
    n = len(a_r)
    rows = list(la.ad_operator(a_r))
    if kind == "sl":
        rows.append(la.vec(la.identity(n)))
    return [la.unvec(v, n) for v in la.nullspace(tuple(rows))]


def _integer_combinations(dim, max_height):
    """Nonzero integer coordinate vectors ordered by (l1 height, lex)."""
    for height in range(1, max_height + 1):

        def rec(prefix, remaining, budget):
            if remaining == 0:
                if budget == 0:
                    yield tuple(prefix)
                return
            for v in range(-budget, budget + 1):
                yield from rec(prefix + [v], remaining - 1, budget - abs(v))

        yield from rec([], dim, height)


def regularization_search(
    a: Connection, coweight_bound: int = 2, depth_bound: int = 2
) -> SearchCertificate:
    """Deterministic bounded search for a regular point of the fiber of A.

    Stages, in order:
      0. the zero connection: closed-form g = exp(f t^(r+1)/(-r-1)) at r = -2;
      1. the identity, when the leading term is already regular nilpotent;
      2. commuting completions: g = exp(N t^(r+1)/(r+1)) for nilpotent N
         commuting with the leading term with leading + N regular nilpotent,
         N enumerated over small integer combinations of a centralizer basis;
      3. products g0 . t^coweight . exp(t X_1) ... exp(t^d X_d) over a fixed
         constant set, coweights of height <= coweight_bound, and depth
         d <= depth_bound with X_k from a fixed alphabet.

    Exhaustion raises SearchExhausted: the bounds were too small, never a
    proof of nonexistence.
    """
    ctx = a.ctx
    stats = {
        "coweight_bound": int(coweight_bound),
        "depth_bound": int(depth_bound),
        "candidates_tried": 0,
    }
    if a.matrix.is_exact_zero:
        r = -2
        g = GaugeElement.from_exp(ctx, r + 1, la.scale(ctx.f, Fraction(1, -r - 1)))
        stats["candidates_tried"] = 1
        return SearchCertificate(a, g, r, stats)
    r = a.order
    if r == INF or r > -2:
        raise InvalidOrder(f"search needs order <= -2 (or the zero connection), got {r}")
    r = int(r)
    a_r = a.coefficient(r)
    if not is_nilpotent(a_r):
        raise NotNilpotent("search precondition: the leading coefficient must be nilpotent")

    def attempt(g):
        stats["candidates_tried"] += 1
        try:
            if not in_M_A(a, g):
                return None
            q = DeformedFiberQuery.from_connection(a)
            if not is_regular_point(q, g):
                return None
        except (OrderUndetermined, PrecisionExhausted):
            return None
        return SearchCertificate(a, g, r, stats)

    if is_regular_nilpotent(a_r):
        cert = attempt(GaugeElement.identity(ctx))
        if cert is not None:
            return cert

    # Stage 2: commuting completions.
    basis = _centralizer_basis(a_r, ctx.kind)
    max_height = 4 if len(basis) <= 6 else 2
    for coords in _integer_combinations(len(basis), max_height):
        nmat = la.zero_matrix(ctx.n)
        for c, b in zip(coords, basis):
            if c:
                nmat = la.add(nmat, la.scale(b, c))
        stats["candidates_tried"] += 1
        if la.is_zero(nmat) or not is_nilpotent(nmat):
            continue
        if not is_regular_nilpotent(la.add(a_r, nmat)):
            continue
        g = GaugeElement.from_exp(ctx, r + 1, la.scale(nmat, Fraction(1, r + 1)))
        cert = attempt(g)
        if cert is not None:
            return cert

    # Stage 3: the coweight family.
    constants = _constant_moves(ctx)
    alphabet = _exp_alphabet(ctx)
    coweights = [None] + [cw for cw in _coweights(ctx.n, ctx.kind, coweight_bound)]

    def exp_tails(depth):
        if depth == 0:
            yield ()
            return
        for head in exp_tails(depth - 1):
            for x in alphabet:
                yield head + ((EXP, len(head) + 1, x),)

    for cw in coweights:
        for depth in range(depth_bound + 1):
            for tail in exp_tails(depth):
                for g0 in constants:
                    factors = []
                    if not la.eq(g0, la.identity(ctx.n)):
                        factors.append((CONST, g0))
                    if cw is not None:
                        factors.append((COWEIGHT, cw))
                    factors.extend(tail)
                    if not factors:
                        continue
                    g = GaugeElement(ctx, factors=tuple(factors))
                    cert = attempt(g)
                    if cert is not None:
                        return cert

    raise SearchExhausted(
        f"no regular point found among {stats['candidates_tried']} candidates "
        f"within bounds (coweight {coweight_bound}, depth {depth_bound})",
        candidates_tried=stats["candidates_tried"],
        bounds={"coweight_bound": coweight_bound, "depth_bound": depth_bound},
    )


def tangent_space_dim(a: Connection, g: GaugeElement, window_depth: int) -> int:
    """Dimension of the tangent space at the membership point g: solutions X
    of (d/dt X + [B, X]) in t^r g(O) modulo g(O), with B the transformed
    connection, modeled on the window t^-w .. t^-1.

    The computation reruns at depth w + 2 and must agree (Unstabilized
    otherwise).  Negative coefficients are the only constrained ones, so the
    g(O) quotient is implicit.
    """
    if not in_M_A(a, g):
        raise InvalidOrder("tangent space is defined at membership points only")
    r = int(a.order)
    b = gauge_transform(g.inverse(), a)

    def dim_at(w):
        need = r - 1 + w
        if b.precision < need:
            raise PrecisionExhausted(
                f"tangent solve at depth {w} needs the transformed connection "
                f"to t^{need}, have t^{b.precision}"
            )
        n = a.ctx.n
        nn = n * n
        ncols = nn * w  # X_{-w} .. X_{-1}, row-major entries each

        def col(k, p, q):
            return (k + w) * nn + p * n + q

        rows = []
        b_coeff = {}
        if b.matrix.val_bound != INF:
            for j in range(int(b.matrix.val_bound), need + 1):
                cj = b.matrix.coefficient(j)
                if not la.is_zero(cj):
                    b_coeff[j] = cj
        for m in range(r - w, r):
            for p in range(n):
                for q in range(n):
                    row = [la.ZERO] * ncols
                    k = m + 1
                    if -w <= k <= -1:
                        row[col(k, p, q)] += Fraction(k)
                    for j, bj in b_coeff.items():
                        k = m - j
                        if not (-w <= k <= -1):
                            continue
                        for s in range(n):
                            row[col(k, s, q)] += bj[p][s]
                            row[col(k, p, s)] -= bj[s][q]
                    rows.append(tuple(row))
        if a.ctx.kind == "sl":
            for k in range(-w, 0):
                row = [la.ZERO] * ncols
                for p in range(n):
                    row[col(k, p, p)] = la.ONE
                rows.append(tuple(row))
        return len(la.nullspace(tuple(rows)))

    d1 = dim_at(window_depth)
    d2 = dim_at(window_depth + 2)
    if d1 != d2:
        raise Unstabilized(
            f"tangent dimension did not stabilize: {d1} at depth {window_depth}, "
            f"{d2} at depth {window_depth + 2}"
        )
    return d1
