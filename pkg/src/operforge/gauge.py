"""Connections on the formal punctured disc and the loop-group gauge action.

A connection is a matrix of Laurent series A with values in sl_n or gl_n; a
gauge element g acts by Ga_g(A) = g A g^{-1} - (d/dt g) g^{-1}.  Gauge
elements are optionally stored in factored form (constant, diagonal monomial
t^coweight, exponential factors exp(t^k X)), which keeps inverses exact and
lets the expansion precision follow whatever the surrounding computation
needs.
"""

from __future__ import annotations

from fractions import Fraction

from . import linalg as la
from .errors import (
    NotInAlgebra,
    OrderUndetermined,
    PrecisionExhausted,
    SingularLeadingMatrix,
)
from .laurent import (
    DEFAULT_PRECISION,
    INF,
    MatrixSeries,
    Series,
    exp_positive,
    format_rational,
    parse_rational,
)
from .liealg import AlgebraContext, make_context


class Connection:
    """A series A in g(F): the connection d/dt + A on the trivial bundle."""

    __slots__ = ("ctx", "matrix", "_order")

    def __init__(self, ctx: AlgebraContext, matrix: MatrixSeries):
        if matrix.n != ctx.n:
            raise ValueError(f"matrix size {matrix.n} does not match context {ctx}")
        if ctx.kind == "sl":
            tr = matrix.trace_series()
            if tr.nonzero_detected():
                raise NotInAlgebra("connection has a nonzero trace coefficient but kind is sl")
        self.ctx = ctx
        self.matrix = matrix
        self._order = None

    @classmethod
    def from_terms(cls, ctx, terms, precision=None):
        return cls(ctx, MatrixSeries.from_terms(ctx.n, terms, precision))

    @classmethod
    def zero(cls, ctx):
        return cls(ctx, MatrixSeries.zero(ctx.n))

    @property
    def order(self):
        """Smallest exponent with a nonzero coefficient; INF for zero."""
        if self._order is None:
            self._order = self.matrix.order()
        return self._order

    @property
    def precision(self):
        return self.matrix.precision

    def coefficient(self, k) -> la.Matrix:
        return self.matrix.coefficient(k)

    def shifted(self, m):
        return Connection(self.ctx, self.matrix.shifted(m))

    def truncated(self, new_precision):
        return Connection(self.ctx, self.matrix.truncated(new_precision))

    def agrees_with(self, other) -> bool:
        return self.matrix.agrees_with(other.matrix)

    def to_json(self):
        return _series_matrix_to_json(self.ctx, self.matrix)

    @classmethod
    def from_json(cls, obj):
        ctx, matrix = _series_matrix_from_json(obj)
        return cls(ctx, matrix)

    def __repr__(self):
        return f"Connection({self.ctx!r}, window=[{self.matrix.val_bound}, {self.precision}])"


# Factor kinds for factored gauge elements.
CONST = "const"
COWEIGHT = "coweight"
EXP = "exp"


def _factor_val_bound(factor):
    kind = factor[0]
    if kind == CONST:
        return 0
    if kind == COWEIGHT:
        return min(factor[1])
    _, k, x = factor
    return min(0, k * (len(x) - 1))


def _expand_factor(factor, target):
    kind = factor[0]
    if kind == CONST:
        return MatrixSeries.constant(factor[1])
    if kind == COWEIGHT:
        exps = factor[1]
        n = len(exps)
        z = Series.zero()
        return MatrixSeries(
            tuple(
                tuple(
                    Series.monomial(1, exps[i]) if i == j else z for j in range(n)
                )
                for i in range(n)
            )
        )
    _, k, x = factor
    xs = MatrixSeries.constant(x, k)
    if target == INF:
        return exp_positive(xs)
    return exp_positive(xs, precision=int(target))


def _invert_factor(factor):
    kind = factor[0]
    if kind == CONST:
        inv = la.inverse(factor[1])
        if inv is None:
            raise SingularLeadingMatrix("constant gauge factor is singular")
        return (CONST, inv)
    if kind == COWEIGHT:
        return (COWEIGHT, tuple(-e for e in factor[1]))
    _, k, x = factor
    return (EXP, k, la.scale(x, -1))


class GaugeElement:
    """An invertible matrix series over F, optionally as a product of factors.

    ``factors`` is a tuple in product order (leftmost factor first); each
    factor is ("const", M), ("coweight", exponents) or ("exp", k, X) for
    exp(t^k X).  Factored elements re-expand on demand, so gauge transforms
    of precisely known connections lose no precision.

    For kind sl the determinant must be a nonzero constant.  (Normalizing it
    to exactly 1 is not always possible over Q; exp factors of traceless
    matrices and trace-zero coweights automatically have determinant 1.)
    """

    __slots__ = ("ctx", "factors", "_matrix", "_matrix_target", "_inverse")

    def __init__(self, ctx, matrix=None, factors=None, _checked=False):
        self.ctx = ctx
        self.factors = tuple(factors) if factors is not None else None
        self._inverse = None
        if self.factors is not None:
            self._validate_factors()
            self._matrix = None
            self._matrix_target = None
            if matrix is not None:
                self._matrix = matrix
                self._matrix_target = matrix.precision
        else:
            if matrix is None:
                raise ValueError("gauge element needs a matrix or factors")
            if matrix.n != ctx.n:
                raise ValueError("matrix size does not match context")
            if not _checked:
                self._validate_matrix(matrix)
            self._matrix = matrix
            self._matrix_target = matrix.precision

    def _validate_factors(self):
        for factor in self.factors:
            kind = factor[0]
            if kind == CONST:
                if la.inverse(factor[1]) is None:
                    raise SingularLeadingMatrix("constant gauge factor is singular")
                if self.ctx.kind == "sl" and la.det(factor[1]) == 0:
                    raise SingularLeadingMatrix("constant gauge factor is singular")
            elif kind == COWEIGHT:
                if len(factor[1]) != self.ctx.n:
                    raise ValueError("coweight length does not match context")
                if self.ctx.kind == "sl" and sum(factor[1]) != 0:
                    raise NotInAlgebra("sl coweights must have exponents summing to zero")
            elif kind == EXP:
                _, k, x = factor
                if len(x) != self.ctx.n:
                    raise ValueError("exp factor size does not match context")
                if self.ctx.kind == "sl" and la.trace(x) != 0:
                    raise NotInAlgebra("sl exp factors must be traceless")
            else:
                raise ValueError(f"unknown factor kind {kind!r}")

    def _validate_matrix(self, matrix):
        d = matrix.det()
        if d.is_zero:
            raise SingularLeadingMatrix("gauge element has identically zero determinant")
        if d.window_empty or not d.nonzero_detected():
            raise PrecisionExhausted(
                "cannot certify invertibility: determinant vanishes on its window"
            )
        if self.ctx.kind == "sl":
            # Determinant must be a nonzero constant on the window.
            for k, _ in d.items():
                if k != 0:
                    raise NotInAlgebra(
                        "sl gauge element must have constant determinant"
                    )

    # -- constructors ------------------------------------------------------

    @classmethod
    def identity(cls, ctx):
        return cls(ctx, factors=())

    @classmethod
    def from_constant(cls, ctx, m):
        return cls(ctx, factors=((CONST, la.mat(m)),))

    @classmethod
    def from_coweight(cls, ctx, exponents):
        return cls(ctx, factors=((COWEIGHT, tuple(int(e) for e in exponents)),))

    @classmethod
    def from_exp(cls, ctx, k, x):
        return cls(ctx, factors=((EXP, int(k), la.mat(x)),))

    @classmethod
    def from_matrix(cls, ctx, matrix):
        return cls(ctx, matrix=matrix)

    # -- expansion ---------------------------------------------------------

    def matrix_at(self, target=None) -> MatrixSeries:
        """Matrix expansion certified at least to t^target (when factored)."""
        if self.factors is None:
            return self._matrix
        if target is None:
            target = DEFAULT_PRECISION
        if self._matrix is not None and self._matrix_target >= target:
            return self._matrix
        if not self.factors:
            out = MatrixSeries.identity(self.ctx.n)
        else:
            vals = [_factor_val_bound(f) for f in self.factors]
            total = sum(vals)
            out = None
            for factor, v in zip(self.factors, vals):
                f_target = INF if target == INF else target - (total - v)
                piece = _expand_factor(factor, f_target)
                out = piece if out is None else out * piece
        self._matrix = out
        # Cache what was actually achieved: an INF request may still cap at
        # DEFAULT_PRECISION when a non-nilpotent exponential factor is present.
        self._matrix_target = out.precision
        return out

    @property
    def matrix(self) -> MatrixSeries:
        return self.matrix_at()

    def inverse(self) -> "GaugeElement":
        if self._inverse is not None:
            return self._inverse
        if self.factors is not None:
            inv = GaugeElement(
                self.ctx,
                factors=tuple(_invert_factor(f) for f in reversed(self.factors)),
            )
        else:
            inv = GaugeElement(
                self.ctx, matrix=self._matrix.inverse(), _checked=True
            )
        inv._inverse = self
        self._inverse = inv
        return inv

    def constant_term(self) -> la.Matrix:
        """Value at t = 0; requires nonnegative valuation."""
        m = self.matrix_at()
        if m.val_bound < 0 and any(
            True for row in m.entries for e in row for k, _ in e.items() if k < 0
        ):
            raise OrderUndetermined("gauge element has a pole; no constant term")
        return m.coefficient(0)

    def to_json(self):
        out = _series_matrix_to_json(self.ctx, self.matrix_at())
        if self.factors is not None:
            out["factors"] = [_factor_to_json(f) for f in self.factors]
        return out

    @classmethod
    def from_json(cls, obj):
        ctx, matrix = _series_matrix_from_json(obj, algebra_valued=False)
        if "factors" in obj:
            factors = tuple(_factor_from_json(f) for f in obj["factors"])
            return cls(ctx, factors=factors)
        return cls(ctx, matrix=matrix)

    def __repr__(self):
        if self.factors is not None:
            return f"GaugeElement({self.ctx!r}, {len(self.factors)} factors)"
        return f"GaugeElement({self.ctx!r})"


def dlog(g: GaugeElement) -> MatrixSeries:
    """(d/dt g) g^{-1}."""
    gm = g.matrix_at()
    gi = g.inverse().matrix_at()
    return gm.derivative() * gi


def gauge_transform(g: GaugeElement, a: Connection) -> Connection:
    """Ga_g(A) = g A g^{-1} - (d/dt g) g^{-1}, with exact window tracking."""
    if g.ctx is not a.ctx and (g.ctx.n, g.ctx.kind) != (a.ctx.n, a.ctx.kind):
        raise ValueError("gauge element and connection live in different algebras")
    n_a = a.precision
    val = a.matrix.val_bound
    if n_a == INF:
        target = INF
    else:
        v = 0 if val == INF else min(int(val), 0)
        target = int(n_a) - v + 1
    gm = g.matrix_at(target)
    gi = g.inverse().matrix_at(target)
    ad = gm * a.matrix * gi
    res = ad - gm.derivative() * gi
    if res.window_empty:
        raise PrecisionExhausted("gauge transform produced an empty window")
    return Connection(a.ctx, res)


def compose(g: GaugeElement, h: GaugeElement) -> GaugeElement:
    """Product g h (acting by Ga_g after Ga_h)."""
    if (g.ctx.n, g.ctx.kind) != (h.ctx.n, h.ctx.kind):
        raise ValueError("gauge elements live in different algebras")
    if g.factors is not None and h.factors is not None:
        return GaugeElement(g.ctx, factors=g.factors + h.factors)
    gm = g.matrix_at()
    hm = h.matrix_at()
    return GaugeElement(g.ctx, matrix=gm * hm, _checked=True)


def inverse(g: GaugeElement) -> GaugeElement:
    return g.inverse()


def order(a: Connection):
    """The order of a connection: leading exponent, or INF for zero."""
    return a.order


# -- JSON schema -----------------------------------------------------------
#
# {"n": int, "kind": "sl"|"gl", "precision": int|null,
#  "terms": [{"power": int, "matrix": [["p/q", ...], ...]}, ...]}
#
# Powers strictly increasing; omitted powers are zero within the window;
# precision null marks exact data.


def _series_matrix_to_json(ctx, matrix: MatrixSeries):
    prec = matrix.precision
    powers = sorted(
        {k for row in matrix.entries for e in row for k, _ in e.items()}
    )
    terms = []
    for p in powers:
        m = matrix.coefficient(p)
        terms.append(
            {
                "power": p,
                "matrix": [[format_rational(x) for x in row] for row in m],
            }
        )
    return {
        "n": ctx.n,
        "kind": ctx.kind,
        "precision": None if prec == INF else int(prec),
        "terms": terms,
    }


def _series_matrix_from_json(obj, algebra_valued=True):
    from .errors import SchemaError

    if not isinstance(obj, dict):
        raise SchemaError("", "expected an object")
    for key in ("n", "kind", "terms"):
        if key not in obj:
            raise SchemaError(f"/{key}", "missing required key")
    n = obj["n"]
    if not isinstance(n, int) or n < 1:
        raise SchemaError("/n", "must be a positive integer")
    kind = obj["kind"]
    if kind not in ("sl", "gl"):
        raise SchemaError("/kind", "must be 'sl' or 'gl'")
    precision = obj.get("precision")
    if precision is not None and not isinstance(precision, int):
        raise SchemaError("/precision", "must be an integer or null")
    ctx = make_context(n, kind)
    terms = obj["terms"]
    if not isinstance(terms, list):
        raise SchemaError("/terms", "must be an array")
    parsed = {}
    last_power = None
    for idx, term in enumerate(terms):
        base = f"/terms/{idx}"
        if not isinstance(term, dict) or "power" not in term or "matrix" not in term:
            raise SchemaError(base, "expected an object with 'power' and 'matrix'")
        power = term["power"]
        if not isinstance(power, int):
            raise SchemaError(f"{base}/power", "must be an integer")
        if last_power is not None and power <= last_power:
            raise SchemaError(f"{base}/power", "powers must be strictly increasing")
        last_power = power
        rows = term["matrix"]
        if not isinstance(rows, list) or len(rows) != n:
            raise SchemaError(f"{base}/matrix", f"must be an {n}x{n} array")
        grid = []
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != n:
                raise SchemaError(f"{base}/matrix/{i}", f"must have {n} entries")
            out_row = []
            for j, cell in enumerate(row):
                try:
                    out_row.append(parse_rational(cell))
                except (ValueError, TypeError) as exc:
                    raise SchemaError(f"{base}/matrix/{i}/{j}", str(exc)) from exc
            grid.append(tuple(out_row))
        if algebra_valued and kind == "sl" and la.trace(tuple(grid)) != 0:
            raise SchemaError(f"{base}/matrix", "matrix has nonzero trace but kind is sl")
        parsed[power] = tuple(grid)
    try:
        matrix = MatrixSeries.from_terms(n, parsed, precision)
    except ValueError as exc:
        raise SchemaError("/terms", str(exc)) from exc
    return ctx, matrix


def _factor_to_json(factor):
    kind = factor[0]
    if kind == CONST:
        return {
            "type": "const",
            "matrix": [[format_rational(x) for x in row] for row in factor[1]],
        }
    if kind == COWEIGHT:
        return {"type": "coweight", "exponents": list(factor[1])}
    _, k, x = factor
    return {
        "type": "exp",
        "k": k,
        "X": [[format_rational(v) for v in row] for row in x],
    }


def _factor_from_json(obj):
    from .errors import SchemaError

    kind = obj.get("type")
    if kind == "const":
        return (CONST, la.mat([[parse_rational(x) for x in row] for row in obj["matrix"]]))
    if kind == "coweight":
        return (COWEIGHT, tuple(int(e) for e in obj["exponents"]))
    if kind == "exp":
        return (EXP, int(obj["k"]), la.mat([[parse_rational(x) for x in row] for row in obj["X"]]))
    raise SchemaError("/factors", f"unknown factor type {kind!r}")
