"""Cyclic vectors and companion oper structures for gl_n connections.

A section phi is cyclic for nabla = d/dt + A when phi, nabla phi, ...,
nabla^(n-1) phi frame the bundle, i.e. their matrix has a unit determinant
over the Laurent field.  Changing trivialization by that matrix puts the
connection into companion form, which is the gl_n oper shape.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

from . import linalg as la
from .errors import NotInAlgebra, PrecisionExhausted, SearchExhausted
from .gauge import Connection, GaugeElement, gauge_transform
from .laurent import MatrixSeries, Series


class CyclicWitness:
    """A cyclic section with its frame matrix and detected determinant valuation."""

    __slots__ = ("phi", "wronskian", "det_valuation")

    def __init__(self, phi, wronskian, det_valuation):
        self.phi = tuple(phi)
        self.wronskian = wronskian
        self.det_valuation = int(det_valuation)

    def to_json(self):
        return {
            "phi": [p.to_json() for p in self.phi],
            "det_valuation": self.det_valuation,
        }


def apply_nabla(a: Connection, v):
    """nabla v = (d/dt) v + A v for a column vector of series."""
    if a.ctx.kind != "gl":
        raise NotInAlgebra("cyclic-vector machinery works with gl_n connections")
    n = a.ctx.n
    out = []
    for i in range(n):
        acc = v[i].derivative()
        for j in range(n):
            entry = a.matrix.entries[i][j]
            if not entry.is_zero and not v[j].is_zero:
                acc = acc + entry * v[j]
        out.append(acc)
    return tuple(out)


def _frame(a: Connection, phi):
    cols = [tuple(phi)]
    for _ in range(a.ctx.n - 1):
        cols.append(apply_nabla(a, cols[-1]))
    n = a.ctx.n
    return MatrixSeries(tuple(tuple(cols[j][i] for j in range(n)) for i in range(n)))


def _candidates(n, pole_budget):
    """Deterministic candidate enumeration; this order is part of the contract.

    1. standard basis vectors;
    2. indicator sums over index subsets, by (size, lex);
    3. monomial ladders t^-s (1, t, ..., t^(n-1)) for s = 0..pole_budget;
    4. coefficient-twisted ladders (1, ct, (ct)^2, ...) for a fixed list of c;
    5. staggered indicators: subset sums with consecutive powers t^0, t^1, ...
    """
    one = Series.one()
    zero = Series.zero()
    for i in range(n):
        yield tuple(one if j == i else zero for j in range(n))
    for size in range(2, n + 1):
        for chosen in combinations(range(n), size):
            yield tuple(one if j in chosen else zero for j in range(n))
    for s in range(pole_budget + 1):
        yield tuple(Series.monomial(1, j - s) for j in range(n))
    for c in (
        Fraction(2),
        Fraction(-1),
        Fraction(1, 2),
        Fraction(3),
        Fraction(-2),
        Fraction(1, 3),
    ):
        yield tuple(Series.monomial(c**j, j) for j in range(n))
    for size in range(2, n + 1):
        for chosen in combinations(range(n), size):
            vec = []
            power = 0
            for j in range(n):
                if j in chosen:
                    vec.append(Series.monomial(1, power))
                    power += 1
                else:
                    vec.append(zero)
            yield tuple(vec)


def find_cyclic_vector(a: Connection, pole_budget=None) -> CyclicWitness:
    """First candidate (in the documented enumeration) whose frame determinant
    is detectably nonzero in the window.

    An exactly zero determinant rules a candidate out; a determinant that
    vanishes on its whole finite window decides nothing, and if the search
    ends with such unresolved candidates the failure is PrecisionExhausted
    rather than SearchExhausted.
    """
    if a.ctx.kind != "gl":
        raise NotInAlgebra("cyclic-vector machinery works with gl_n connections")
    if pole_budget is None:
        pole_budget = 2 * a.ctx.n
    if pole_budget < 0:
        raise ValueError("pole budget must be nonnegative")
    tried = 0
    unresolved = 0
    for phi in _candidates(a.ctx.n, pole_budget):
        tried += 1
        frame = _frame(a, phi)
        d = frame.det()
        if d.is_zero:
            continue
        if d.nonzero_detected():
            return CyclicWitness(phi, frame, d.valuation)
        unresolved += 1
    if unresolved:
        raise PrecisionExhausted(
            f"{unresolved} of {tried} candidate determinants vanish on their windows; "
            "raise the precision to resolve them"
        )
    raise SearchExhausted(
        f"no cyclic vector among {tried} candidates within pole budget {pole_budget}",
        candidates_tried=tried,
        bounds={"pole_budget": pole_budget},
    )


def oper_from_cyclic(a: Connection, w: CyclicWitness):
    """Change trivialization by the frame matrix: returns (g, B) with
    B = Ga_{g^{-1}}(A) in companion form (ones on the subdiagonal, data in
    the last column)."""
    g = GaugeElement.from_matrix(a.ctx, w.wronskian)
    b = gauge_transform(g.inverse(), a)
    return g, b
