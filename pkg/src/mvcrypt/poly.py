"""Polynomials over Z_n and GF(p^n).

Poly is dense and univariate (index = degree); MultiPoly is sparse.
Coefficients are canonical elements of the declared domain.
"""

from __future__ import annotations

from itertools import product
from typing import Mapping, Sequence

from .algebra import (
    DomainError,
    FieldSpec,
    InvertibilityError,
    ModulusSpec,
    factor_modulus,
    is_irreducible,
)
from .expr import Const, add, mul, power

MAX_DEGREE = 64


class DegreeCapError(ValueError):
    pass


def _scalar(dom, k: int):
    """Image of the integer k in dom (k * one)."""
    return dom.reduce(k) if isinstance(dom, ModulusSpec) else k % dom.p


class Poly:
    __slots__ = ("dom", "coeffs")

    def __init__(self, dom, coeffs: Sequence = ()):
        cs = [c if dom.contains(c) else _coerce(dom, c) for c in coeffs]
        while cs and cs[-1] == dom.zero:
            cs.pop()
        self.dom = dom
        self.coeffs = tuple(cs)

    @classmethod
    def x(cls, dom) -> "Poly":
        return cls(dom, [dom.zero, dom.one])

    @classmethod
    def constant(cls, dom, c) -> "Poly":
        return cls(dom, [c])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, i: int):
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else self.dom.zero

    def __eq__(self, other):
        return isinstance(other, Poly) and self.dom == other.dom and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.dom, self.coeffs))

    def __repr__(self):
        if not self.coeffs:
            return f"Poly(0 over {self.dom!r})"
        terms = [f"{c}*x^{i}" if i else f"{c}" for i, c in enumerate(self.coeffs) if c != self.dom.zero]
        return f"Poly({' + '.join(terms)} over {self.dom!r})"

    def _same(self, other):
        if not isinstance(other, Poly) or other.dom != self.dom:
            raise DomainError("polynomials over different domains")

    def __add__(self, other):
        self._same(other)
        d, a, b = self.dom, self.coeffs, other.coeffs
        n = max(len(a), len(b))
        return Poly(d, [d.add(self.coeff(i), other.coeff(i)) for i in range(n)])

    def __neg__(self):
        return Poly(self.dom, [self.dom.neg(c) for c in self.coeffs])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return self.scale(other)
        self._same(other)
        return self.mul(other)

    def scale(self, c) -> "Poly":
        return Poly(self.dom, [self.dom.mul(c, a) for a in self.coeffs])

    def mul(self, other: "Poly", max_degree: int | None = MAX_DEGREE) -> "Poly":
        if self.is_zero() or other.is_zero():
            return Poly(self.dom)
        if max_degree is not None and self.degree + other.degree > max_degree:
            raise DegreeCapError(f"product degree exceeds cap {max_degree}")
        d = self.dom
        out = [d.zero] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == d.zero:
                continue
            for j, b in enumerate(other.coeffs):
                if b != d.zero:
                    out[i + j] = d.add(out[i + j], d.mul(a, b))
        return Poly(d, out)

    def compose(self, inner: "Poly", max_degree: int | None = MAX_DEGREE) -> "Poly":
        """self(inner(x)) by Horner's rule."""
        self._same(inner)
        if max_degree is not None and self.degree * max(inner.degree, 0) > max_degree:
            raise DegreeCapError(f"composition degree exceeds cap {max_degree}")
        acc = Poly(self.dom)
        for c in reversed(self.coeffs):
            acc = acc.mul(inner, None) + Poly(self.dom, [c])
        return acc

    def __call__(self, x):
        d = self.dom
        acc = d.zero
        for c in reversed(self.coeffs):
            acc = d.add(d.mul(acc, x), c)
        return acc

    def derivative(self) -> "Poly":
        d = self.dom
        return Poly(d, [d.mul(_scalar(d, k), c) for k, c in enumerate(self.coeffs) if k > 0])

    def reduce_mod(self, modulus: int) -> "Poly":
        """Coefficientwise image in Z_modulus (domain must be a ring)."""
        return Poly(factor_modulus(modulus), [c % modulus for c in self.coeffs])

    def to_expr(self, x):
        """Expression sum c_i * x^i for a leaf expression x."""
        terms = [
            mul(Const(c, x.level), power(x, i)) if i else Const(c, x.level)
            for i, c in enumerate(self.coeffs)
            if c != self.dom.zero
        ]
        if not terms:
            return Const(self.dom.zero, x.level)
        return add(*terms)

    def table(self, points=None) -> list:
        pts = self.dom.elements() if points is None else points
        return [self(x) for x in pts]


def _coerce(dom, c):
    if isinstance(dom, ModulusSpec) and isinstance(c, int):
        return c % dom.n
    raise DomainError(f"coefficient {c!r} not in {dom!r}")


def poly_arith(op: str, f: Poly, g: Poly) -> Poly:
    if op == "add":
        return f + g
    if op == "sub":
        return f - g
    if op == "mul":
        f._same(g)
        return f.mul(g)
    if op == "compose":
        return f.compose(g)
    raise ValueError(f"unknown operation {op!r}")


def poly_derivative(f: Poly) -> Poly:
    return f.derivative()


class MultiPoly:
    """Sparse polynomial: exponent vector -> nonzero coefficient."""

    __slots__ = ("dom", "nvars", "terms")

    def __init__(self, dom, nvars: int, terms: Mapping[tuple, object] = ()):
        clean = {}
        for e, c in dict(terms).items():
            e = tuple(e)
            if len(e) != nvars:
                raise DomainError("exponent vector length differs from variable count")
            if not dom.contains(c):
                c = _coerce(dom, c)
            if c != dom.zero:
                clean[e] = dom.add(clean.get(e, dom.zero), c)
                if clean[e] == dom.zero:
                    del clean[e]
        self.dom, self.nvars, self.terms = dom, nvars, dict(sorted(clean.items()))

    @classmethod
    def variable(cls, dom, nvars: int, i: int) -> "MultiPoly":
        e = [0] * nvars
        e[i] = 1
        return cls(dom, nvars, {tuple(e): dom.one})

    def __eq__(self, other):
        return (
            isinstance(other, MultiPoly)
            and (self.dom, self.nvars, self.terms) == (other.dom, other.nvars, other.terms)
        )

    def __repr__(self):
        return f"MultiPoly({self.terms} over {self.dom!r})"

    def __call__(self, point):
        if len(point) != self.nvars:
            raise DomainError(f"expected {self.nvars} values, got {len(point)}")
        d = self.dom
        acc = d.zero
        for e, c in self.terms.items():
            t = c
            for v, k in zip(point, e):
                if k:
                    t = d.mul(t, d.pow(v, k))
            acc = d.add(acc, t)
        return acc

    def to_expr(self, xs, level: int | None = None):
        lv = level if level is not None else (xs[0].level if xs else 0)
        terms = []
        for e, c in self.terms.items():
            fs = [power(x, k) for x, k in zip(xs, e) if k]
            if c != self.dom.one or not fs:
                fs.insert(0, Const(c, lv))
            terms.append(mul(*fs))
        return add(*terms) if terms else Const(self.dom.zero, lv)


def poly_eval(f, point):
    if isinstance(f, MultiPoly):
        return f(point)
    return f(point)


def poly_crt_split(f: Poly) -> list[Poly]:
    if not isinstance(f.dom, ModulusSpec):
        raise DomainError("CRT split needs a Z_n coefficient domain")
    return [Poly(factor_modulus(m), [c % m for c in f.coeffs]) for m in f.dom.moduli]


def poly_crt_join(parts: Sequence[Poly], spec: ModulusSpec) -> Poly:
    if [p.dom.n for p in parts] != list(spec.moduli):
        raise DomainError("component domains do not match the factorization")
    n = max((len(p.coeffs) for p in parts), default=0)
    out = []
    for i in range(n):
        out.append(sum(e * p.coeff(i) for e, p in zip(spec.idempotents, parts)) % spec.n)
    return Poly(spec, out)


def lagrange_interpolate(points: Sequence[tuple], dom) -> Poly:
    """Interpolating polynomial through (x_j, y_j); node differences must be units."""
    xs = [x for x, _ in points]
    if len(set(xs)) != len(xs):
        raise DomainError("repeated interpolation node")
    result = Poly(dom)
    for i, (xi, yi) in enumerate(points):
        num = Poly(dom, [dom.one])
        den = dom.one
        for j, (xj, _) in enumerate(points):
            if j == i:
                continue
            num = num.mul(Poly(dom, [dom.neg(xj), dom.one]), None)
            diff = dom.sub(xi, xj)
            if not dom.is_unit(diff):
                raise InvertibilityError(f"node difference {xi}-{xj} is not a unit")
            den = dom.mul(den, diff)
        result = result + num.scale(dom.mul(yi, dom.inv(den)))
    return result


def is_bijective_mod_pl(f: Poly, p: int, l: int) -> bool:
    """Criterion: f mod p permutes Z_p and, for l >= 2, f' has no root mod p."""
    cs = [c % p for c in f.coeffs]
    fp = Poly(factor_modulus(p), cs)
    if len(set(fp.table())) != p:
        return False
    if l == 1:
        return True
    dp = fp.derivative()
    return all(dp(x) != 0 for x in range(p))


def is_unit_poly(f: Poly) -> bool:
    """Unit criterion in Z_n[x]: each component mod p_i is a nonzero constant."""
    for p, _ in f.dom.factors:
        cs = [c % p for c in f.coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        if len(cs) != 1:
            return False
    return True


def is_irreducible_over(f: Poly) -> bool:
    """Test helper: irreducibility of a polynomial over a prime field Z_p."""
    d = f.dom
    p = d.n if isinstance(d, ModulusSpec) else d.p
    if isinstance(d, FieldSpec) and d.n != 1:
        raise DomainError("helper only classifies polynomials over prime fields")
    lead_inv = pow(f.coeffs[-1], -1, p)
    return is_irreducible(p, [c * lead_inv % p for c in f.coeffs])


def all_polys(dom, max_degree: int):
    """Every polynomial of degree <= max_degree (enumeration helper)."""
    for cs in product(list(dom.elements()), repeat=max_degree + 1):
        yield Poly(dom, cs)
