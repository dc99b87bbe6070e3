"""Truncated Laurent series over Q with explicit precision windows.

Every series carries a window: coefficients are stored for t^v .. t^N and
nothing is assumed about coefficients beyond t^N.  Exact data (constants,
finite polynomials, the zero series) carries an infinite window.  Every
operation computes the exact window of its result from the windows of its
inputs; silent zero padding never happens.

Matrix series share the same discipline entrywise, with the matrix window
being the tightest entry window.
"""

from __future__ import annotations

import math
from fractions import Fraction

from . import linalg as la
from .errors import (
    NonPositiveValuation,
    OrderUndetermined,
    PrecisionExhausted,
    SingularLeadingMatrix,
)

INF = math.inf

# Relative coefficient count used when an exact series has to be truncated
# (series inversion, non-terminating exponentials).  Overridable per call
# and through the CLI.
DEFAULT_PRECISION = 16


def rat(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def parse_rational(text) -> Fraction:
    """Parse "p/q" or "p" (q must be nonzero).  Integers are accepted as-is."""
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise ValueError(f"rational must be a string or int, got {type(text).__name__}")
    s = text.strip()
    if "/" in s:
        p, _, q = s.partition("/")
        den = int(q)
        if den == 0:
            raise ValueError(f"zero denominator in rational {text!r}")
        return Fraction(int(p), den)
    return Fraction(int(s))


def format_rational(q: Fraction) -> str:
    q = rat(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


class TruncatedLaurentSeries:
    """A Laurent series known exactly on the window t^v .. t^N.

    Normal forms after construction:
      * exact zero:      no coefficients, infinite precision
      * exact data:      infinite precision, nonzero first and last coefficient
      * windowed:        N = v + len(coeffs) - 1, nonzero first coefficient
      * empty window:    no coefficients, N = v - 1; the series is O(t^v)
        but its leading exponent is unknown
    """

    __slots__ = ("_lo", "_coeffs", "_precision")

    def __init__(self, valuation, coeffs, precision=None):
        cs = [rat(c) for c in coeffs]
        lo = int(valuation)
        if precision is None or precision == INF:
            prec = INF
        else:
            prec = int(precision)
            if prec != lo + len(cs) - 1:
                raise ValueError(
                    f"window mismatch: valuation {lo} with {len(cs)} coefficients "
                    f"does not give precision {prec}"
                )
        while cs and cs[0] == 0:
            cs.pop(0)
            lo += 1
        if prec == INF:
            while cs and cs[-1] == 0:
                cs.pop()
            if not cs:
                lo = 0
        else:
            if not cs:
                lo = prec + 1
        self._lo = lo
        self._coeffs = tuple(cs)
        self._precision = prec

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls):
        return cls(0, (), None)

    @classmethod
    def exact(cls, coeffs, valuation=0):
        return cls(valuation, coeffs, None)

    @classmethod
    def constant(cls, c):
        return cls.exact([rat(c)])

    @classmethod
    def one(cls):
        return cls.constant(1)

    @classmethod
    def monomial(cls, c, power):
        return cls.exact([rat(c)], power)

    @classmethod
    def windowed(cls, coeffs, valuation, precision=None):
        cs = list(coeffs)
        if precision is None:
            precision = valuation + len(cs) - 1
        return cls(valuation, cs, precision)

    # -- basic inspection --------------------------------------------------

    @property
    def is_zero(self):
        """True only for the exact zero series."""
        return self._precision == INF and not self._coeffs

    @property
    def is_exact(self):
        return self._precision == INF

    @property
    def precision(self):
        return self._precision

    @property
    def val_bound(self):
        """A certified lower bound on the valuation (INF for exact zero)."""
        if self.is_zero:
            return INF
        return self._lo

    @property
    def valuation(self):
        """Exact valuation; INF for zero.  Raises when it may lie beyond the window."""
        if self.is_zero:
            return INF
        if not self._coeffs:
            raise OrderUndetermined(
                f"series vanishes on its whole window (O(t^{self._lo})); "
                "valuation may lie beyond it"
            )
        return self._lo

    def known(self, k) -> bool:
        return k <= self._precision

    def coeff(self, k) -> Fraction:
        if self.is_zero:
            return la.ZERO
        if k > self._precision:
            raise PrecisionExhausted(
                f"coefficient of t^{k} lies beyond the window (known to t^{self._precision})"
            )
        if k < self._lo or k - self._lo >= len(self._coeffs):
            return la.ZERO
        return self._coeffs[k - self._lo]

    def items(self):
        """Stored (exponent, coefficient) pairs with nonzero coefficient."""
        for i, c in enumerate(self._coeffs):
            if c != 0:
                yield self._lo + i, c

    @property
    def window_empty(self):
        return not self._coeffs and not self.is_zero

    def nonzero_detected(self) -> bool:
        return bool(self._coeffs)

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, TruncatedLaurentSeries):
            return NotImplemented
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        prec = min(self._precision, other._precision)
        lo = min(self._lo, other._lo)
        if prec == INF:
            hi = max(self._lo + len(self._coeffs), other._lo + len(other._coeffs)) - 1
        else:
            hi = prec
        cs = [self._at(k) + other._at(k) for k in range(lo, hi + 1)]
        return TruncatedLaurentSeries(lo, cs, None if prec == INF else prec)

    def _at(self, k):
        if k < self._lo or k >= self._lo + len(self._coeffs):
            return la.ZERO
        return self._coeffs[k - self._lo]

    def __neg__(self):
        return self.scaled(-1)

    def __sub__(self, other):
        if not isinstance(other, TruncatedLaurentSeries):
            return NotImplemented
        return self + (-other)

    def scaled(self, c):
        c = rat(c)
        if c == 0 or self.is_zero:
            return TruncatedLaurentSeries.zero()
        return TruncatedLaurentSeries(
            self._lo,
            [c * x for x in self._coeffs],
            None if self._precision == INF else self._precision,
        )

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scaled(other)
        if not isinstance(other, TruncatedLaurentSeries):
            return NotImplemented
        if self.is_zero or other.is_zero:
            return TruncatedLaurentSeries.zero()
        lo = self._lo + other._lo
        prec = min(self._precision + other._lo, other._precision + self._lo)
        if prec == INF:
            hi = lo + len(self._coeffs) + len(other._coeffs) - 2
        else:
            hi = prec
        out = [la.ZERO] * (hi - lo + 1)
        for i, a in enumerate(self._coeffs):
            if a == 0:
                continue
            ka = self._lo + i
            for j, b in enumerate(other._coeffs):
                k = ka + other._lo + j
                if k > hi:
                    break
                if b != 0:
                    out[k - lo] += a * b
        return TruncatedLaurentSeries(lo, out, None if prec == INF else prec)

    __rmul__ = __mul__

    def derivative(self):
        if self.is_zero:
            return self
        lo = self._lo - 1
        cs = [(self._lo + i) * c for i, c in enumerate(self._coeffs)]
        prec = None if self._precision == INF else self._precision - 1
        return TruncatedLaurentSeries(lo, cs, prec)

    def shifted(self, m):
        """Multiplication by t^m."""
        if self.is_zero or m == 0:
            return self
        prec = None if self._precision == INF else self._precision + m
        return TruncatedLaurentSeries(self._lo + m, self._coeffs, prec)

    def truncated(self, new_precision):
        """Restrict knowledge to coefficients up to t^new_precision."""
        if self.is_zero or new_precision >= self._precision:
            return self
        if self._precision == INF:
            # exact data: zeros beyond the stored support are known zeros
            if new_precision < self._lo:
                return TruncatedLaurentSeries(new_precision + 1, (), new_precision)
            cs = list(self._coeffs[: new_precision - self._lo + 1])
            cs += [la.ZERO] * (new_precision - self._lo + 1 - len(cs))
            return TruncatedLaurentSeries(self._lo, cs, new_precision)
        keep = new_precision - self._lo + 1
        if keep <= 0:
            return TruncatedLaurentSeries(new_precision + 1, (), new_precision)
        return TruncatedLaurentSeries(self._lo, self._coeffs[:keep], new_precision)

    def inverse(self, rel_precision=None):
        """Multiplicative inverse of a unit; keeps the relative precision of the
        input unless ``rel_precision`` overrides it."""
        if self.is_zero:
            raise SingularLeadingMatrix("the zero series is not invertible")
        if not self._coeffs:
            raise PrecisionExhausted(
                "cannot invert: no nonzero coefficient is visible in the window"
            )
        v = self._lo
        c0 = self._coeffs[0]
        if self._precision == INF and len(self._coeffs) == 1:
            return TruncatedLaurentSeries.monomial(1 / c0, -v)
        if rel_precision is None:
            rho = (
                DEFAULT_PRECISION
                if self._precision == INF
                else self._precision - v
            )
        else:
            rho = rel_precision
            if self._precision != INF:
                rho = min(rho, self._precision - v)
        inv0 = 1 / c0
        out = [inv0]
        for m in range(1, rho + 1):
            s = la.ZERO
            top = min(m, len(self._coeffs) - 1)
            for i in range(1, top + 1):
                s += self._coeffs[i] * out[m - i]
            out.append(-inv0 * s)
        return TruncatedLaurentSeries(-v, out, -v + rho)

    # -- comparison --------------------------------------------------------

    def agrees_with(self, other) -> bool:
        """Exact equality of all coefficients on the common window."""
        if not isinstance(other, TruncatedLaurentSeries):
            return NotImplemented
        prec = min(self._precision, other._precision)
        if prec == INF:
            return self._lo == other._lo and self._coeffs == other._coeffs
        lo = min(self.val_bound, other.val_bound)
        if lo == INF or lo > prec:
            return True
        return all(self._at(k) == other._at(k) for k in range(int(lo), int(prec) + 1))

    def __eq__(self, other):
        if not isinstance(other, TruncatedLaurentSeries):
            return NotImplemented
        return (
            self._lo == other._lo
            and self._coeffs == other._coeffs
            and self._precision == other._precision
        )

    def __hash__(self):
        return hash((self._lo, self._coeffs, self._precision))

    # -- serialization -----------------------------------------------------

    def to_json(self):
        if self.is_zero:
            return {"valuation": None, "precision": None, "coeffs": []}
        prec = None if self._precision == INF else self._precision
        return {
            "valuation": self._lo,
            "precision": prec,
            "coeffs": [format_rational(c) for c in self._coeffs],
        }

    @classmethod
    def from_json(cls, obj):
        coeffs = [parse_rational(c) for c in obj.get("coeffs", [])]
        v = obj.get("valuation")
        prec = obj.get("precision")
        if v is None:
            return cls.zero()
        return cls(v, coeffs, prec)

    def __repr__(self):
        if self.is_zero:
            return "Series(0)"
        terms = []
        for k, c in self.items():
            if k == 0:
                terms.append(format_rational(c))
            else:
                terms.append(f"{format_rational(c)}*t^{k}")
        body = " + ".join(terms) if terms else "0"
        if self._precision == INF:
            return f"Series({body})"
        return f"Series({body} + O(t^{self._precision + 1}))"


Series = TruncatedLaurentSeries


class MatrixSeries:
    """Square matrix of truncated Laurent series sharing one window.

    On construction every entry is truncated to the tightest entry window;
    exact-zero entries stay exact (they are known to every order anyway).
    """

    __slots__ = ("n", "entries")

    def __init__(self, entries):
        grid = tuple(tuple(e for e in row) for row in entries)
        n = len(grid)
        if any(len(row) != n for row in grid):
            raise ValueError("matrix series must be square")
        prec = min((e.precision for row in grid for e in row), default=INF)
        if prec != INF:
            grid = tuple(
                tuple(e if e.is_zero else e.truncated(prec) for e in row)
                for row in grid
            )
        self.n = n
        self.entries = grid

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, n):
        z = Series.zero()
        return cls(tuple((z,) * n for _ in range(n)))

    @classmethod
    def identity(cls, n):
        one = Series.one()
        z = Series.zero()
        return cls(tuple(tuple(one if i == j else z for j in range(n)) for i in range(n)))

    @classmethod
    def constant(cls, m, power=0):
        """Exact matrix series c * t^power from a constant matrix."""
        z = Series.zero()
        return cls(
            tuple(
                tuple(
                    z if m[i][j] == 0 else Series.monomial(m[i][j], power)
                    for j in range(len(m))
                )
                for i in range(len(m))
            )
        )

    @classmethod
    def from_terms(cls, n, terms, precision=None):
        """Build from {power: constant matrix}; omitted powers are zero.

        ``precision=None`` marks the data as exact.
        """
        entries = []
        powers = sorted(terms)
        for i in range(n):
            row = []
            for j in range(n):
                coeffs = {}
                for p in powers:
                    c = rat(terms[p][i][j])
                    if c != 0:
                        coeffs[p] = c
                if not coeffs:
                    if precision is None:
                        row.append(Series.zero())
                    else:
                        row.append(Series.windowed([], precision + 1, precision))
                    continue
                lo = min(coeffs)
                if precision is not None and precision < lo:
                    raise ValueError(
                        f"term at power {lo} lies beyond the declared precision {precision}"
                    )
                hi = max(coeffs) if precision is None else precision
                cs = [coeffs.get(k, la.ZERO) for k in range(lo, hi + 1)]
                row.append(Series(lo, cs, precision))
            entries.append(tuple(row))
        return cls(entries)

    # -- inspection --------------------------------------------------------

    @property
    def precision(self):
        return min((e.precision for row in self.entries for e in row), default=INF)

    @property
    def val_bound(self):
        return min((e.val_bound for row in self.entries for e in row), default=INF)

    @property
    def is_exact_zero(self):
        return all(e.is_zero for row in self.entries for e in row)

    @property
    def window_empty(self):
        prec = self.precision
        return prec != INF and prec < self.val_bound

    def coefficient(self, k) -> la.Matrix:
        if k > self.precision:
            raise PrecisionExhausted(
                f"matrix coefficient of t^{k} lies beyond the window "
                f"(known to t^{self.precision})"
            )
        return tuple(tuple(e.coeff(k) for e in row) for row in self.entries)

    def order(self):
        """Smallest exponent carrying a nonzero coefficient; INF for exact zero."""
        lo = self.val_bound
        if lo == INF:
            return INF
        stored = sorted(
            {k for row in self.entries for e in row for k, _ in e.items()}
        )
        if stored:
            return stored[0]
        raise OrderUndetermined(
            f"all stored coefficients vanish (matrix is O(t^{int(lo)})); "
            "order may lie beyond the window"
        )

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        return MatrixSeries(
            tuple(
                tuple(a + b for a, b in zip(ra, rb))
                for ra, rb in zip(self.entries, other.entries)
            )
        )

    def __sub__(self, other):
        return MatrixSeries(
            tuple(
                tuple(a - b for a, b in zip(ra, rb))
                for ra, rb in zip(self.entries, other.entries)
            )
        )

    def __neg__(self):
        return MatrixSeries(tuple(tuple(-e for e in row) for row in self.entries))

    def __mul__(self, other):
        if isinstance(other, MatrixSeries):
            n = self.n
            zero = Series.zero()
            out = []
            for i in range(n):
                row = []
                for j in range(n):
                    acc = zero
                    for k in range(n):
                        a = self.entries[i][k]
                        b = other.entries[k][j]
                        if a.is_zero or b.is_zero:
                            continue
                        acc = acc + a * b
                    row.append(acc)
                out.append(tuple(row))
            return MatrixSeries(tuple(out))
        if isinstance(other, (Series, int, Fraction)):
            return MatrixSeries(
                tuple(tuple(e * other for e in row) for row in self.entries)
            )
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (Series, int, Fraction)):
            return self.__mul__(other)
        return NotImplemented

    def derivative(self):
        return MatrixSeries(
            tuple(tuple(e.derivative() for e in row) for row in self.entries)
        )

    def shifted(self, m):
        return MatrixSeries(
            tuple(tuple(e.shifted(m) for e in row) for row in self.entries)
        )

    def truncated(self, new_precision):
        return MatrixSeries(
            tuple(
                tuple(e if e.is_zero else e.truncated(new_precision) for e in row)
                for row in self.entries
            )
        )

    def trace_series(self) -> Series:
        acc = Series.zero()
        for i in range(self.n):
            acc = acc + self.entries[i][i]
        return acc

    def det(self) -> Series:
        """Determinant by cofactor expansion; fine at the sizes used here."""
        return _det(self.entries)

    def adjugate(self):
        n = self.n
        if n == 1:
            return MatrixSeries.identity(1)
        cof = []
        for i in range(n):
            row = []
            for j in range(n):
                minor = tuple(
                    tuple(self.entries[r][c] for c in range(n) if c != j)
                    for r in range(n)
                    if r != i
                )
                sign = 1 if (i + j) % 2 == 0 else -1
                row.append(_det(minor) * sign)
            cof.append(tuple(row))
        return MatrixSeries(tuple(zip(*cof)))

    def invert_unit(self, rel_precision=None):
        """Inverse of t^v (M0 + O(t)) with M0 invertible, by Neumann iteration.

        The result keeps the relative precision of the input (or
        ``rel_precision`` coefficients beyond its valuation if given).
        """
        v = self.val_bound
        if v == INF:
            raise SingularLeadingMatrix("the zero matrix series is not invertible")
        v = int(v)
        m0 = self.coefficient(v)
        m0_inv = la.inverse(m0)
        if m0_inv is None:
            raise SingularLeadingMatrix(
                "leading coefficient matrix is not invertible over Q"
            )
        prec = self.precision
        if rel_precision is None:
            rho = DEFAULT_PRECISION if prec == INF else int(prec) - v
        else:
            rho = rel_precision
            if prec != INF:
                rho = min(rho, int(prec) - v)
        regular = self.shifted(-v)
        rest = regular - MatrixSeries.constant(m0)
        if prec != INF:
            rest = rest.truncated(rho)
        m0i = MatrixSeries.constant(m0_inv)
        term = m0i
        acc = m0i
        exact_end = False
        while True:
            term = (-1) * (m0i * (rest * term))
            if term.is_exact_zero:
                exact_end = prec == INF
                break
            if term.val_bound > rho:
                break
            acc = acc + term
        out = acc.shifted(-v)
        if exact_end:
            return out
        return out.truncated(-v + rho)

    def inverse(self, rel_precision=None):
        """General inverse over the Laurent field: fast path for units,
        adjugate route otherwise."""
        v = self.val_bound
        if v == INF:
            raise SingularLeadingMatrix("the zero matrix series is not invertible")
        m0 = self.coefficient(int(v))
        if la.inverse(m0) is not None:
            return self.invert_unit(rel_precision)
        d = self.det()
        dinv = d.inverse(rel_precision)
        return self.adjugate() * dinv

    # -- comparison --------------------------------------------------------

    def agrees_with(self, other) -> bool:
        return all(
            a.agrees_with(b)
            for ra, rb in zip(self.entries, other.entries)
            for a, b in zip(ra, rb)
        )

    def __eq__(self, other):
        if not isinstance(other, MatrixSeries):
            return NotImplemented
        return self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def __repr__(self):
        return f"MatrixSeries(n={self.n}, window=[{self.val_bound}, {self.precision}])"


def _det(entries) -> Series:
    n = len(entries)
    if n == 1:
        return entries[0][0]
    acc = Series.zero()
    for j in range(n):
        a = entries[0][j]
        if a.is_zero:
            continue
        minor = tuple(row[:j] + row[j + 1 :] for row in entries[1:])
        sub = _det(minor)
        term = a * sub
        acc = acc + (term if j % 2 == 0 else -term)
    return acc


def exp_positive(x: MatrixSeries, precision=None) -> MatrixSeries:
    """Matrix exponential sum(x^m / m!).

    Converges t-adically when valuation(x) >= 1; the sum is then truncated at
    ``precision`` (absolute exponent; defaults to the input window or
    DEFAULT_PRECISION for exact input).  A series with valuation <= 0 is
    accepted only when it is nilpotent as a matrix polynomial, in which case
    the finite sum is returned exactly.
    """
    if x.is_exact_zero:
        return MatrixSeries.identity(x.n)
    v = x.val_bound
    if v >= 1:
        if precision is None:
            target = DEFAULT_PRECISION if x.precision == INF else int(x.precision)
        else:
            target = precision
            if x.precision != INF:
                target = min(target, int(x.precision))
        acc = MatrixSeries.identity(x.n)
        term = MatrixSeries.identity(x.n)
        m = 0
        exact_end = False
        while True:
            m += 1
            term = (term * x) * Fraction(1, m)
            if term.is_exact_zero:
                exact_end = x.precision == INF
                break
            if term.val_bound > target:
                break
            acc = acc + term
        if exact_end:
            return acc
        return acc.truncated(target)
    # Nonpositive valuation: only nilpotent matrix polynomials qualify.
    if x.precision != INF:
        raise NonPositiveValuation(
            "exponential of a truncated series with valuation <= 0: "
            "nilpotency cannot be certified"
        )
    power = MatrixSeries.identity(x.n)
    for _ in range(x.n):
        power = power * x
    if not power.is_exact_zero:
        raise NonPositiveValuation(
            "series has valuation <= 0 and is not nilpotent as a matrix polynomial"
        )
    acc = MatrixSeries.identity(x.n)
    term = MatrixSeries.identity(x.n)
    for m in range(1, x.n):
        term = (term * x) * Fraction(1, m)
        if term.is_exact_zero:
            break
        acc = acc + term
    return acc
