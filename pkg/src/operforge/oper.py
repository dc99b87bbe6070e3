"""Oper form and the normalization of connections with regular leading term.

A connection whose leading coefficient is regular nilpotent can be gauged,
by a first-congruence-subgroup element, into f t^r plus a series valued in
the centralizer of e.  The algorithm is the inductive one: conjugate the
leading term to f, then kill the non-centralizer part of one coefficient per
step with exp(t^k X_k), which never disturbs lower coefficients.  A regular
(not necessarily nilpotent) leading term is first moved onto the slice
f + centralizer(e) and the same induction runs against the slice point.
"""

from __future__ import annotations

from . import linalg as la
from .errors import (
    NotRegular,
    NotRegularNilpotent,
    OrderTooLarge,
    OrderUndetermined,
    SolverDegenerate,
)
from .gauge import CONST, EXP, Connection, GaugeElement, compose, gauge_transform
from .laurent import DEFAULT_PRECISION, INF, MatrixSeries, Series
from .liealg import (
    AlgebraContext,
    conjugate_regular_nilpotent_to_f,
    cyclic_vector_for,
    is_regular,
    is_regular_nilpotent,
    kostant_normal_form,
    solve_ad_f,
)


class OperForm:
    """Normalized shape: (f + leading slice offset) t^r + centralizer tail.

    ``leading_coords`` are the slice coordinates of the leading coefficient
    minus f (all zero for the regular-nilpotent route); ``ge_coefficients``
    are one series per centralizer basis element, each with valuation > r.
    """

    __slots__ = ("ctx", "r", "leading_coords", "ge_coefficients")

    def __init__(self, ctx, r, ge_coefficients, leading_coords=None):
        self.ctx = ctx
        self.r = int(r)
        self.ge_coefficients = tuple(ge_coefficients)
        if leading_coords is None:
            leading_coords = (la.ZERO,) * len(ctx.ge_basis)
        self.leading_coords = tuple(la.rat(c) for c in leading_coords)
        if len(self.ge_coefficients) != len(ctx.ge_basis):
            raise ValueError("one coefficient series per centralizer basis element")
        for c in self.ge_coefficients:
            if c.val_bound <= self.r:
                raise ValueError("centralizer tail must start beyond the leading term")

    def leading_matrix(self) -> la.Matrix:
        out = self.ctx.f
        for c, b in zip(self.leading_coords, self.ctx.ge_basis):
            if c != 0:
                out = la.add(out, la.scale(b, c))
        return out

    def expand(self) -> Connection:
        acc = MatrixSeries.constant(self.leading_matrix(), self.r)
        for c, b in zip(self.ge_coefficients, self.ctx.ge_basis):
            if not c.is_zero:
                acc = acc + MatrixSeries.constant(b) * c
        return Connection(self.ctx, acc)

    def to_json(self):
        return {
            "r": self.r,
            "leading_coords": [_fmt(c) for c in self.leading_coords],
            "ge_coefficients": [c.to_json() for c in self.ge_coefficients],
        }

    @classmethod
    def from_json(cls, ctx, obj):
        from .laurent import parse_rational

        return cls(
            ctx,
            obj["r"],
            [Series.from_json(c) for c in obj["ge_coefficients"]],
            [parse_rational(c) for c in obj["leading_coords"]],
        )


def _fmt(c):
    from .laurent import format_rational

    return format_rational(c)


class NormalizationCertificate:
    """Gauge element, its exp-factor ledger, and the reached oper form.

    The gauge element factors as exp(t^K X_K) ... exp(t X_1) . h with h the
    constant conjugator moving the leading coefficient onto the slice, so its
    constant term is h and the rest lies in the first congruence subgroup.
    """

    __slots__ = ("gauge", "result", "steps", "window", "trajectory")

    def __init__(self, gauge, result, steps, window, trajectory=None):
        self.gauge = gauge
        self.result = result
        self.steps = tuple(steps)
        self.window = (int(window[0]), int(window[1]))
        self.trajectory = trajectory
        for k, _ in self.steps:
            if k < 1:
                raise ValueError("normalization steps must have k >= 1")

    @property
    def conjugator(self) -> la.Matrix:
        for factor in reversed(self.gauge.factors):
            if factor[0] == CONST:
                return factor[1]
        return la.identity(self.gauge.ctx.n)

    @property
    def K(self):
        return len(self.steps)

    def verify(self, a: Connection) -> bool:
        """Replay the gauge transform and compare with the stored result,
        exactly on the certified window."""
        lo, hi = self.window
        replay = gauge_transform(self.gauge, a.truncated(hi))
        expanded = self.result.expand()
        if not replay.matrix.truncated(hi).agrees_with(expanded.matrix.truncated(hi)):
            return False
        if replay.matrix.coefficient(lo) != self.result.leading_matrix():
            return False
        return True

    def to_json(self):
        return {
            "steps": [
                {"k": k, "X": [[_fmt(v) for v in row] for row in x]}
                for k, x in self.steps
            ],
            "conjugator": [[_fmt(v) for v in row] for row in self.conjugator],
            "result": self.result.to_json(),
            "window": [self.window[0], self.window[1]],
        }


def is_oper_form(a: Connection) -> bool:
    """Check the shape: unit series on the first subdiagonal, anything upper
    triangular, zero below the first subdiagonal.

    Raises OrderUndetermined when a subdiagonal entry vanishes on the whole
    window without being exactly zero (truncation must not decide it).
    """
    n = a.ctx.n
    m = a.matrix
    for i in range(n):
        for j in range(n):
            if i > j + 1:
                if m.entries[i][j].nonzero_detected():
                    return False
    for i in range(n - 1):
        psi = m.entries[i + 1][i]
        if psi.is_zero:
            return False
        if not psi.nonzero_detected():
            raise OrderUndetermined(
                f"subdiagonal entry ({i + 2},{i + 1}) vanishes on its window; "
                "cannot certify it is a unit"
            )
    return True


def expand(of: OperForm) -> Connection:
    return of.expand()


def _working_window(a: Connection, r, working_precision):
    if a.precision != INF:
        return a, int(a.precision)
    n = r + (working_precision if working_precision is not None else DEFAULT_PRECISION)
    return a.truncated(n), n


def _slice_step_system(ctx: AlgebraContext, s: la.Matrix) -> la.PresolvedSystem:
    """Presolved system for: given c, find X and P with c + [X, s] = P,
    P in the centralizer of e.  Deterministic pivoting fixes X."""
    ge_cols = [la.vec(b) for b in ctx.ge_basis]
    br_cols = [la.vec(la.commutator(b, s)) for b in ctx.algebra_basis]
    cols = ge_cols + [tuple(-x for x in col) for col in br_cols]
    return la.PresolvedSystem(la.transpose(tuple(cols)))


def _run_induction(a_work, r, n_window, solve_step, record):
    """Shared induction: kill the non-centralizer part of one coefficient per
    step.  Lower coefficients are asserted unchanged after every step."""
    ctx = a_work.ctx
    b = a_work
    steps = []
    factors = []
    trajectory = [b] if record else None
    for k in range(1, n_window - r + 1):
        c = b.coefficient(r + k)
        x = solve_step(c)
        if la.is_zero(x):
            continue
        gk = GaugeElement.from_exp(ctx, k, x)
        b_next = gauge_transform(gk, b)
        for m in range(r, r + k):
            if b_next.coefficient(m) != b.coefficient(m):
                raise AssertionError(
                    f"coefficient of t^{m} moved at step k={k}; "
                    "the induction must leave lower coefficients unchanged"
                )
        b = b_next
        steps.append((k, x))
        factors.append((EXP, k, x))
        if record:
            trajectory.append(b)
    factors.reverse()
    return b, steps, factors, trajectory


def _extract_oper_form(ctx, b, r, n_window, leading_coords):
    ge_series = []
    for j in range(len(ctx.ge_basis)):
        coeffs = []
        for m in range(r + 1, n_window + 1):
            coords = ctx.ge_coordinates(b.coefficient(m))
            if coords is None:
                raise AssertionError(
                    f"coefficient of t^{m} is not in the centralizer of e"
                )
            coeffs.append(coords[j])
        ge_series.append(Series.windowed(coeffs, r + 1, n_window))
    return OperForm(ctx, r, ge_series, leading_coords)


def normalize_regular_nilpotent(
    a: Connection, working_precision=None, record_steps=False
) -> NormalizationCertificate:
    """Gauge a connection with regular nilpotent leading coefficient into
    f t^r + centralizer(e) tail, one coefficient per step.

    Exact input is truncated to the working window first (the induction is
    infinite otherwise).  The certificate's gauge element replays to the
    result exactly on the certified window.
    """
    ctx = a.ctx
    r = a.order
    if r == INF or r >= -1:
        raise OrderTooLarge(f"normalization needs order < -1, got {r}")
    a_r = a.coefficient(r)
    if not is_regular_nilpotent(a_r):
        raise NotRegularNilpotent("leading coefficient is not regular nilpotent")
    a_work, n_window = _working_window(a, r, working_precision)
    h = conjugate_regular_nilpotent_to_f(ctx, a_r)
    conj = GaugeElement.from_constant(ctx, h)
    b0 = gauge_transform(conj, a_work)

    def step(c):
        x, _ = solve_ad_f(ctx, c)
        return x

    b, steps, factors, trajectory = _run_induction(b0, r, n_window, step, record_steps)
    if b.coefficient(r) != ctx.f:
        raise AssertionError("leading coefficient is not exactly f after conjugation")
    result = _extract_oper_form(ctx, b, r, n_window, None)
    gauge = GaugeElement(ctx, factors=tuple(factors) + ((CONST, h),))
    return NormalizationCertificate(
        gauge, result, steps, (r, n_window), trajectory
    )


def normalize_regular(
    a: Connection, working_precision=None, record_steps=False
) -> NormalizationCertificate:
    """Variant for an arbitrary regular leading coefficient: conjugate it onto
    the slice f + centralizer(e) first, then run the induction against the
    slice point, solving each step inside centralizer(e) + [., slice point].
    """
    ctx = a.ctx
    r = a.order
    if r == INF or r >= -1:
        raise OrderTooLarge(f"normalization needs order < -1, got {r}")
    a_r = a.coefficient(r)
    if not is_regular(a_r):
        raise NotRegular("leading coefficient is not regular")
    s = kostant_normal_form(ctx, a_r)
    _, k_m = cyclic_vector_for(a_r)
    _, k_s = cyclic_vector_for(s)
    c = la.mul(k_s, la.inverse(k_m))
    if not la.eq(la.mul(la.mul(c, a_r), la.inverse(c)), s):
        raise SolverDegenerate("conjugation onto the slice failed")
    a_work, n_window = _working_window(a, r, working_precision)
    conj = GaugeElement.from_constant(ctx, c)
    b0 = gauge_transform(conj, a_work)
    system = _slice_step_system(ctx, s)
    n_ge = len(ctx.ge_basis)

    def step(cm):
        sol = system.solve(la.vec(cm))
        if sol is None:
            raise SolverDegenerate(
                "step system lost surjectivity against the slice point"
            )
        x = la.zero_matrix(ctx.n)
        for coeff, basis in zip(sol[n_ge:], ctx.algebra_basis):
            if coeff != 0:
                x = la.add(x, la.scale(basis, coeff))
        residual = la.add(cm, la.commutator(x, s))
        if ctx.ge_coordinates(residual) is None:
            raise SolverDegenerate("step solution left a non-centralizer residue")
        return x

    b, steps, factors, trajectory = _run_induction(b0, r, n_window, step, record_steps)
    if b.coefficient(r) != s:
        raise AssertionError("leading coefficient is not exactly the slice point")
    leading_coords = ctx.ge_coordinates(la.sub(s, ctx.f))
    result = _extract_oper_form(ctx, b, r, n_window, leading_coords)
    gauge = GaugeElement(ctx, factors=tuple(factors) + ((CONST, c),))
    return NormalizationCertificate(gauge, result, steps, (r, n_window), trajectory)
