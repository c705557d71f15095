"""Partitions of unity, nonvanishing maps, parametric matrices and injections,
the triangular multivariate construction and hash extension.

Every map here is an ExprMap (straight-line program) so it can be composed
into public tables and serialized.  Parameters come first in argument lists:
a parametric map on l parameters and m inputs has arity l + m.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Callable, Sequence

from .algebra import FieldSpec, factor_modulus
from .expr import (
    Pow,
    power,
    Builder,
    Const,
    ExprMap,
    Interpretation,
    StructuralError,
    Tower,
    Var,
    add,
    inverse_of,
    mul,
    sub,
)
from .poly import MultiPoly, Poly, lagrange_interpolate

GRID_CAP = 2**20


class ConstructionError(ValueError):
    """A constructor precondition failed; carries a witness when one exists."""

    def __init__(self, message: str, witness=None):
        super().__init__(message if witness is None else f"{message} (witness {witness!r})")
        self.witness = witness


def grid(domain: Sequence, arity: int) -> list[tuple]:
    if len(domain) ** arity > GRID_CAP:
        raise ConstructionError(f"grid of {len(domain)}^{arity} points exceeds cap {GRID_CAP}")
    return list(product(domain, repeat=arity))


def nonzero(dom) -> list:
    return [x for x in dom.elements() if x != dom.zero]


# --------------------------------------------------------------------------
# partitions of unity


@dataclass(frozen=True, eq=False)
class PartitionOfUnity:
    """Indicators l_1..l_k of the level sets of a discriminating function."""

    tower: Tower
    discriminator: ExprMap  # l -> 1
    values: tuple  # a_1..a_k
    indicators: ExprMap  # l -> k
    domain: tuple  # points (tuples of length l)

    @property
    def arity(self) -> int:
        return self.discriminator.arity

    @property
    def k(self) -> int:
        return len(self.values)

    def class_of(self, z) -> int:
        return self.values.index(self.discriminator(z)[0])

    @property
    def classes(self) -> list[list[tuple]]:
        out = [[] for _ in self.values]
        for z in self.domain:
            out[self.class_of(z)].append(z)
        return out

    def __call__(self, z) -> tuple:
        return self.indicators(z)

    def check(self) -> bool:
        """Sum to one, pairwise products zero, idempotent: exhaustive."""
        dom = self.tower.base
        for z in self.domain:
            ls = self.indicators(z)
            acc = dom.zero
            for i, a in enumerate(ls):
                if dom.mul(a, a) != a:
                    return False
                for b in ls[i + 1:]:
                    if dom.mul(a, b) != dom.zero:
                        return False
                acc = dom.add(acc, a)
            if acc != dom.one:
                return False
        return True

    def compose(self, inner: ExprMap, domain: Sequence[tuple] | None = None) -> "PartitionOfUnity":
        """Partition of inner's domain by the discriminator applied to inner."""
        from .expr import compose as _compose

        dom_pts = tuple(domain) if domain is not None else tuple(grid(list(self.tower.base.elements()), inner.arity))
        return _build_partition(self.tower, _compose(self.discriminator, inner), self.values, dom_pts)


def _indicator_program(tower: Tower, disc: ExprMap, values: Sequence) -> ExprMap:
    dom = tower.base
    b = Builder(tower, disc.arity)
    (d,) = b.call(disc, b.inputs())
    d = b.let(d)
    outs = []
    if isinstance(dom, FieldSpec) or len(values) == 1:
        for i, ai in enumerate(values):
            den = dom.one
            factors = []
            for j, aj in enumerate(values):
                if j != i:
                    den = dom.mul(den, dom.sub(ai, aj))
                    factors.append(add(d, Const(dom.neg(aj))))
            if not factors:
                outs.append(Const(dom.one))
                continue
            outs.append(mul(Const(dom.inv(den)), *factors))
    else:
        # ring case: Lagrange basis through the values (differences are units)
        for i in range(len(values)):
            g = lagrange_interpolate([(a, dom.one if j == i else dom.zero) for j, a in enumerate(values)], dom)
            outs.append(g.to_expr(d))
    return b.build(outs)


def _build_partition(tower, disc, values, domain):
    return PartitionOfUnity(tower, disc, tuple(values), _indicator_program(tower, disc, values), tuple(domain))


def as_map(tower: Tower, f, arity: int = 1) -> ExprMap:
    """Accept an ExprMap, an Expr in Var(0..arity-1), or a Poly."""
    if isinstance(f, ExprMap):
        return f
    if isinstance(f, Poly):
        return ExprMap(Interpretation(tower, 1), (f.to_expr(Var(0)),))
    if isinstance(f, MultiPoly):
        return ExprMap(Interpretation(tower, f.nvars), (f.to_expr([Var(i) for i in range(f.nvars)]),))
    return ExprMap(Interpretation(tower, arity), (f,))


def partition_from_discriminator(
    f, tower: Tower, domain: Sequence[tuple] | None = None, values: Sequence | None = None
) -> PartitionOfUnity:
    """Level-set partition of f; the image is found by exhaustive scan.

    Passing values that f never takes on the domain yields a non-strict
    partition (those indicators are identically zero there).
    """
    disc = as_map(tower, f)
    if domain is None:
        domain = grid(list(tower.base.elements()), disc.arity)
    domain = tuple(tuple(z) for z in domain)
    image = sorted({disc(z)[0] for z in domain})
    if values is not None:
        missing = set(image) - set(values)
        if missing:
            raise ConstructionError("supplied values miss part of the image", sorted(missing)[0])
        image = list(values)
    return _build_partition(tower, disc, image, domain)


def partition_zpl(p: int, l: int, s: int, tower: Tower | None = None) -> PartitionOfUnity:
    """Partition of Z_{p^l} by h(x) = x^(s p^(l-1)); k = 1 + (p-1)/s."""
    if (p - 1) % s:
        raise ConstructionError(f"{s} does not divide p-1 = {p - 1}")
    ring = factor_modulus(p**l)
    tower = tower or Tower(ring, 1)
    e = s * p ** (l - 1)
    disc = ExprMap(Interpretation(tower, 1), (Var(0) if e == 1 else _pow(Var(0), e),))
    domain = [(x,) for x in range(p**l)]
    image = sorted({pow(x, e, p**l) for x in range(p**l)})
    for i, a in enumerate(image):
        for b in image[i + 1:]:
            if not ring.is_unit(a - b):
                raise ConstructionError("image difference is not a unit", (a, b))
    return _build_partition(tower, disc, image, domain)


def _pow(x, k):
    from .expr import power

    return power(x, k)


# --------------------------------------------------------------------------
# nonvanishing maps


def nonvanishing_map(f: Poly, c, a, g: MultiPoly | None, tower: Tower) -> ExprMap:
    """a * (f(g(z)) - c) where c is a value f misses; nonzero everywhere."""
    dom = tower.base
    if a == dom.zero:
        raise ConstructionError("scale factor must be nonzero")
    for x in dom.elements():
        if f(x) == c:
            raise ConstructionError(f"{c} lies in the image of f", x)
    g = g if g is not None else MultiPoly.variable(dom, 1, 0)
    b = Builder(tower, g.nvars)
    inner = b.let(g.to_expr(b.inputs()))
    body = sub(f.to_expr(inner), Const(c), dom)
    return b.build([mul(Const(a), body)])


def invert_nonvanishing(fmap: ExprMap, domain: Sequence[tuple] | None = None) -> ExprMap:
    """Pointwise inverse sum a_i^-1 l_i from f's own level-set partition."""
    tower = fmap.tower
    dom = tower.base
    part = partition_from_discriminator(fmap, tower, domain)
    if dom.zero in part.values:
        z = part.classes[part.values.index(dom.zero)][0]
        raise ConstructionError("map vanishes", z)
    b = Builder(tower, fmap.arity)
    ls = b.call(part.indicators, b.inputs())
    terms = [mul(Const(dom.inv(a)), li) for a, li in zip(part.values, ls)]
    return b.build([add(*terms)])


# --------------------------------------------------------------------------
# invertible maps on G^m given as program pairs


@dataclass(frozen=True, eq=False)
class InvertibleMap:
    """forward: G^m -> K^m with inverse on the image; both are programs."""

    forward: ExprMap
    inverse: ExprMap
    inputs: tuple  # the coordinate domain G

    @property
    def tower(self) -> Tower:
        return self.forward.tower

    @property
    def arity(self) -> int:
        return self.forward.arity

    def __call__(self, x) -> tuple:
        return self.forward(x)

    def invert(self, y) -> tuple:
        return self.inverse(y)

    def check(self) -> bool:
        seen = set()
        for x in grid(list(self.inputs), self.arity):
            y = self.forward(x)
            if y in seen or self.inverse(y) != x:
                return False
            seen.add(y)
        return True


def _as_pair(tower: Tower, f, inputs) -> InvertibleMap:
    """Accept an InvertibleMap or a univariate Bijection with programs."""
    if isinstance(f, InvertibleMap):
        return f
    fm, im = getattr(f, "forward_map", None), getattr(f, "inverse_map", None)
    if fm is None or im is None:
        raise ConstructionError("component needs forward and inverse programs")
    return InvertibleMap(fm, im, tuple(inputs))


# --------------------------------------------------------------------------
# parametric matrices

FACTOR_KINDS = ("permutation", "diagonal", "lower", "upper")


@dataclass(frozen=True, eq=False)
class MatrixFactor:
    kind: str
    entries: ExprMap  # l -> m*m, row-major

    def __post_init__(self):
        if self.kind not in FACTOR_KINDS:
            raise StructuralError(f"unknown factor kind {self.kind!r}")

    @property
    def m(self) -> int:
        from math import isqrt

        return isqrt(self.entries.width)

    def transpose(self) -> "MatrixFactor":
        m = self.m
        kind = {"lower": "upper", "upper": "lower"}.get(self.kind, self.kind)
        return MatrixFactor(kind, self.entries.restrict([c * m + r for r in range(m) for c in range(m)]))

    def _nonzero_cols(self, r: int):
        m = self.m
        if self.kind == "diagonal":
            return [r]
        if self.kind == "lower":
            return list(range(r + 1))
        if self.kind == "upper":
            return list(range(r, m))
        return list(range(m))


def _matvec(dom, rows, v):
    out = []
    for row in rows:
        acc = dom.zero
        for a, b in zip(row, v):
            acc = dom.add(acc, dom.mul(a, b))
        out.append(acc)
    return out


def _rows(flat, m):
    return [list(flat[r * m:(r + 1) * m]) for r in range(m)]


@dataclass(frozen=True, eq=False)
class ParametricMatrix:
    """Product F_0 F_1 ... F_r of structured factors, entries in the parameters."""

    tower: Tower
    l: int
    m: int
    factors: tuple

    def __post_init__(self):
        for f in self.factors:
            if f.entries.arity != self.l or f.entries.width != self.m * self.m:
                raise StructuralError("factor shape does not match the matrix")

    @property
    def kind(self) -> str:
        return self.factors[0].kind if len(self.factors) == 1 else "product"

    def evaluate(self, z) -> list[list]:
        dom = self.tower.base
        acc = [[dom.one if r == c else dom.zero for c in range(self.m)] for r in range(self.m)]
        for f in self.factors:
            e = _rows(f.entries(z), self.m)
            acc = [[_dot(dom, acc[r], [e[k][c] for k in range(self.m)]) for c in range(self.m)] for r in range(self.m)]
        return acc

    def apply(self, z, x) -> tuple:
        dom = self.tower.base
        v = list(x)
        for f in reversed(self.factors):
            v = _matvec(dom, _rows(f.entries(z), self.m), v)
        return tuple(v)

    def solve(self, z, y) -> tuple:
        """M(z)^-1 y through the factor structure."""
        dom = self.tower.base
        v = list(y)
        for f in self.factors:
            e = _rows(f.entries(z), self.m)
            v = _solve_factor(dom, f.kind, e, v)
        return tuple(v)

    def transpose(self) -> "ParametricMatrix":
        return ParametricMatrix(self.tower, self.l, self.m, tuple(f.transpose() for f in reversed(self.factors)))

    def __matmul__(self, other: "ParametricMatrix") -> "ParametricMatrix":
        if (self.l, self.m) != (other.l, other.m):
            raise StructuralError("shape mismatch")
        return ParametricMatrix(self.tower, self.l, self.m, self.factors + other.factors)

    # symbolic forms for inlining into larger programs
    def inline_apply(self, b: Builder, zs, xs) -> list:
        v = [b.let(x) for x in xs]
        for f in reversed(self.factors):
            e = b.call(f.entries, zs)
            v = [b.let(_row_expr(e, r, self.m, f._nonzero_cols(r), v)) for r in range(self.m)]
        return v

    def inline_solve(self, b: Builder, zs, ys) -> list:
        dom = self.tower.base
        m = self.m
        v = [b.let(y) for y in ys]
        for f in self.factors:
            e = b.call(f.entries, zs)
            at = lambda r, c: e[r * m + c]  # noqa: E731
            if f.kind == "permutation":
                v = [b.let(add(*[mul(at(r, c), v[r]) for r in range(m)])) for c in range(m)]
            elif f.kind == "diagonal":
                v = [b.let(mul(inverse_of(at(r, r), dom), v[r])) for r in range(m)]
            else:
                out = [None] * m
                order = range(m) if f.kind == "lower" else range(m - 1, -1, -1)
                for r in order:
                    prior = [c for c in f._nonzero_cols(r) if c != r]
                    rest = v[r]
                    if prior:
                        rest = sub(v[r], add(*[mul(at(r, c), out[c]) for c in prior]), dom)
                    out[r] = b.let(mul(inverse_of(at(r, r), dom), rest))
                v = out
        return v

    def certify(self, param_points: Sequence[tuple]) -> None:
        """Exhaustive structural audit; raises ConstructionError with a witness."""
        dom = self.tower.base
        for z in param_points:
            for f in self.factors:
                e = _rows(f.entries(z), self.m)
                _audit_factor(dom, f.kind, e, z)


def _dot(dom, a, b):
    acc = dom.zero
    for x, y in zip(a, b):
        acc = dom.add(acc, dom.mul(x, y))
    return acc


def _row_expr(e, r, m, cols, v):
    terms = []
    for c in cols:
        entry = e[r * m + c]
        if isinstance(entry, Const) and entry.value == 0:
            continue
        terms.append(v[c] if isinstance(entry, Const) and entry.value == 1 else mul(entry, v[c]))
    return add(*terms) if terms else Const(0)


def _solve_factor(dom, kind, e, v):
    m = len(v)
    if kind == "permutation":
        return [_dot(dom, [e[r][c] for r in range(m)], v) for c in range(m)]
    if kind == "diagonal":
        return [dom.mul(dom.inv(e[r][r]), v[r]) for r in range(m)]
    out = [None] * m
    order = range(m) if kind == "lower" else range(m - 1, -1, -1)
    for r in order:
        cols = range(r) if kind == "lower" else range(r + 1, m)
        acc = v[r]
        for c in cols:
            acc = dom.sub(acc, dom.mul(e[r][c], out[c]))
        out[r] = dom.mul(dom.inv(e[r][r]), acc)
    return out


def _audit_factor(dom, kind, e, z):
    m = len(e)
    if kind == "permutation":
        for r in range(m):
            if any(x not in (dom.zero, dom.one) for x in e[r]):
                raise ConstructionError("permutation factor has an entry outside {0,1}", z)
            if sum(1 for x in e[r] if x == dom.one) != 1:
                raise ConstructionError("permutation factor row is not a unit vector", z)
        for c in range(m):
            if sum(1 for r in range(m) if e[r][c] == dom.one) != 1:
                raise ConstructionError("permutation factor column is not a unit vector", z)
        return
    for r in range(m):
        for c in range(m):
            allowed = (r == c) or (kind == "lower" and c < r) or (kind == "upper" and c > r)
            if not allowed and e[r][c] != dom.zero:
                raise ConstructionError(f"{kind} factor has a stray entry at {(r, c)}", z)
        if not dom.is_unit(e[r][r]):
            raise ConstructionError(f"diagonal entry {r} vanishes", z)


def latin_index(m: int, row=None, col=None, outer=None) -> Callable[[int, int], int]:
    """sigma(r, s) = outer((row(r) + col(s)) mod m); each argument a permutation of Z_m."""
    row = row or list(range(m))
    col = col or list(range(m))
    outer = outer or list(range(m))
    for p in (row, col, outer):
        if sorted(p) != list(range(m)):
            raise ConstructionError("index maps must permute Z_m")
    return lambda r, s: outer[(row[r] + col[s]) % m]


def parametric_permutation_matrix(partition: PartitionOfUnity, sigma=None) -> ParametricMatrix:
    """Entry (r, s) is the indicator l_sigma(r,s)."""
    m = partition.k
    sigma = sigma or latin_index(m)
    for r in range(m):
        if sorted(sigma(r, s) for s in range(m)) != list(range(m)):
            raise ConstructionError("sigma(r, .) is not a bijection", r)
        if sorted(sigma(s, r) for s in range(m)) != list(range(m)):
            raise ConstructionError("sigma(., s) is not a bijection", r)
    b = Builder(partition.tower, partition.arity)
    ls = b.call(partition.indicators, b.inputs())
    ls = [b.let(x) for x in ls]
    ent = b.build([ls[sigma(r, s)] for r in range(m) for s in range(m)])
    return ParametricMatrix(partition.tower, partition.arity, m, (MatrixFactor("permutation", ent),))


def _entry_program(tower, l, m, cells: dict) -> ExprMap:
    """cells maps (r, c) to a constant or an l-ary ExprMap with one output."""
    b = Builder(tower, l)
    out = []
    for r in range(m):
        for c in range(m):
            v = cells.get((r, c), tower.base.zero)
            if isinstance(v, ExprMap):
                (e,) = b.call(v, b.inputs())
                out.append(b.let(e))
            else:
                out.append(Const(v))
    return b.build(out)


def constant_permutation_factor(tower: Tower, l: int, perm: Sequence[int]) -> MatrixFactor:
    """Row r has its one in column perm[r]."""
    m = len(perm)
    return MatrixFactor("permutation", _entry_program(tower, l, m, {(r, perm[r]): tower.base.one for r in range(m)}))


def diagonal_factor(tower: Tower, l: int, diag: Sequence) -> MatrixFactor:
    m = len(diag)
    return MatrixFactor("diagonal", _entry_program(tower, l, m, {(r, r): d for r, d in enumerate(diag)}))


def triangular_factor(tower: Tower, l: int, diag: Sequence, off: dict, lower: bool = True) -> MatrixFactor:
    m = len(diag)
    cells = {(r, r): d for r, d in enumerate(diag)}
    for (r, c), v in off.items():
        if (lower and c >= r) or (not lower and c <= r):
            raise ConstructionError("off-diagonal cell on the wrong side", (r, c))
        cells[(r, c)] = v
    return MatrixFactor("lower" if lower else "upper", _entry_program(tower, l, m, cells))


def parametric_invertible_matrix(
    kind: str,
    parts: Sequence,
    param_points: Sequence[tuple] | None = None,
) -> ParametricMatrix:
    """Product of factors, certified invertible on every parameter point.

    "general" accepts any factor kinds; "signature-safe" only permutation and
    diagonal factors, so the matrix maps vectors over F* to vectors over F*.
    """
    factors = []
    for p in parts:
        factors.extend(p.factors if isinstance(p, ParametricMatrix) else [p])
    if not factors:
        raise ConstructionError("need at least one factor")
    if kind == "signature-safe":
        bad = [f.kind for f in factors if f.kind not in ("permutation", "diagonal")]
        if bad:
            raise ConstructionError(f"signature-safe matrices exclude {bad[0]} factors")
    elif kind != "general":
        raise ConstructionError(f"unknown matrix kind {kind!r}")
    tower = factors[0].entries.tower
    l = factors[0].entries.arity
    mat = ParametricMatrix(tower, l, factors[0].m, tuple(factors))
    pts = param_points if param_points is not None else grid(list(tower.base.elements()), l)
    mat.certify(pts)
    return mat


def identity_matrix(tower: Tower, l: int, m: int) -> ParametricMatrix:
    return ParametricMatrix(tower, l, m, (constant_permutation_factor(tower, l, list(range(m))),))


# --------------------------------------------------------------------------
# parametric injections


@dataclass(frozen=True, eq=False)
class ParametricInjection:
    """eta(z; x) with params z in G^l (first l arguments) and inputs x in G^m.

    params lists the parameter points on which eta(z; .) is injective (the
    live domain Z); None means every point of inputs^l.
    """

    l: int
    m: int
    forward: ExprMap  # l + m -> m
    inverse: ExprMap | None  # l + m -> m
    inputs: tuple
    params: tuple | None = None
    label: str = ""

    @property
    def tower(self) -> Tower:
        return self.forward.tower

    def param_points(self) -> list[tuple]:
        return list(self.params) if self.params is not None else grid(list(self.inputs), self.l)

    def is_live(self, z) -> bool:
        return self.params is None or tuple(z) in set(self.params)

    def __call__(self, z, x) -> tuple:
        return self.forward(tuple(z) + tuple(x))

    def invert(self, z, y) -> tuple:
        if self.inverse is None:
            raise ConstructionError("no inverse program")
        return self.inverse(tuple(z) + tuple(y))

    def check(self) -> bool:
        pts = self.param_points()
        xs = grid(list(self.inputs), self.m)
        if len(pts) * len(xs) > GRID_CAP:
            raise ConstructionError("certification grid exceeds cap")
        for z in pts:
            seen = set()
            for x in xs:
                y = self(z, x)
                if y in seen or self.invert(z, y) != x:
                    return False
                seen.add(y)
        return True

    def after(self, inner: InvertibleMap) -> "ParametricInjection":
        """eta(z; T(x)) for a non-parametric invertible T on G^m."""
        tower = self.tower
        b = Builder(tower, self.l + self.m)
        ins = b.inputs()
        tx = b.call(inner.forward, ins[self.l:])
        fwd = b.build(b.call(self.forward, ins[: self.l] + tx))
        inv = None
        if self.inverse is not None:
            b = Builder(tower, self.l + self.m)
            ins = b.inputs()
            u = b.call(self.inverse, ins)
            inv = b.build(b.call(inner.inverse, u))
        return ParametricInjection(self.l, self.m, fwd, inv, self.inputs, self.params, self.label)

    def widen(self, l: int, used: Sequence[int]) -> "ParametricInjection":
        """Same map seen as taking l parameters, of which only `used` matter."""
        if len(used) != self.l:
            raise StructuralError("need one position per parameter")
        tower = self.tower

        def wrap(prog):
            b = Builder(tower, l + self.m)
            ins = b.inputs()
            return b.build(b.call(prog, [ins[j] for j in used] + ins[l:]))

        params = None
        if self.params is not None:
            live = set(self.params)
            params = tuple(z for z in grid(list(self.inputs), l) if tuple(z[j] for j in used) in live)
        inv = wrap(self.inverse) if self.inverse is not None else None
        return ParametricInjection(l, self.m, wrap(self.forward), inv, self.inputs, params, self.label)


def parametric_injection(
    partition: PartitionOfUnity,
    phis: Sequence[ParametricMatrix],
    zetas: Sequence,
    chis: Sequence | None = None,
    live: Sequence[int] | None = None,
    inputs: Sequence | None = None,
) -> ParametricInjection:
    """eta(z; x) = sum_i g_i(z) phi_i(z) [zeta_i(z; x) + chi_i(z)].

    zetas are ParametricInjections, or bare forward programs (l + m -> m) on
    dead classes.  Dead classes are left out of the inverse; the live
    parameter domain is recorded on the result.
    """
    k = partition.k
    l = partition.arity
    if len(phis) != k or len(zetas) != k:
        raise StructuralError("need one phi and one zeta per class")
    chis = list(chis) if chis is not None else [None] * k
    if len(chis) != k:
        raise StructuralError("need one chi per class")
    live = sorted(set(range(k) if live is None else live))
    fwd_progs, m = [], None
    for z in zetas:
        prog = z.forward if isinstance(z, ParametricInjection) else z
        if prog.arity - l < 1:
            raise StructuralError("zeta arity must exceed the parameter count")
        m = prog.arity - l if m is None else m
        if prog.arity != l + m or prog.width != m:
            raise StructuralError("zeta shapes disagree")
        fwd_progs.append(prog)
    for i in live:
        if not isinstance(zetas[i], ParametricInjection) or zetas[i].inverse is None:
            raise ConstructionError("live classes need an invertible zeta", i)
    for p in phis:
        if (p.l, p.m) != (l, m):
            raise StructuralError("phi shape disagrees with the partition and zeta")
    for c in chis:
        if c is not None and (c.arity, c.width) != (l, m):
            raise StructuralError("chi must map the parameters to m values")
    tower = partition.tower
    if inputs is None:
        src = next((z for z in zetas if isinstance(z, ParametricInjection)), None)
        if src is None:
            raise StructuralError("input domain unknown")
        inputs = src.inputs
    dom = tower.base

    b = Builder(tower, l + m)
    ins = b.inputs()
    zs, xs = ins[:l], ins[l:]
    ls = [b.let(x) for x in b.call(partition.indicators, zs)]
    acc = [[] for _ in range(m)]
    for i in range(k):
        w = b.call(fwd_progs[i], zs + xs)
        if chis[i] is not None:
            w = [add(a, c) for a, c in zip(w, b.call(chis[i], zs))]
        v = phis[i].inline_apply(b, zs, w)
        for r in range(m):
            acc[r].append(mul(ls[i], v[r]))
    fwd = b.build([add(*a) for a in acc])

    b = Builder(tower, l + m)
    ins = b.inputs()
    zs, ys = ins[:l], ins[l:]
    ls = [b.let(x) for x in b.call(partition.indicators, zs)]
    acc = [[] for _ in range(m)]
    for i in live:
        u = phis[i].inline_solve(b, zs, ys)
        if chis[i] is not None:
            u = [b.let(sub(a, c, dom)) for a, c in zip(u, b.call(chis[i], zs))]
        x = b.call(zetas[i].inverse, zs + u)
        for r in range(m):
            acc[r].append(mul(ls[i], x[r]))
    inv = b.build([add(*a) for a in acc]) if live else None

    if len(live) == k and all(z.params is None for z in zetas):
        params = None
    else:
        allowed = set()
        classes = partition.classes
        for i in live:
            allowed.update(z for z in classes[i] if zetas[i].is_live(z))
        params = tuple(sorted(allowed))
    return ParametricInjection(l, m, fwd, inv, tuple(inputs), params)


def power_injection(
    tower: Tower,
    l: int,
    exponents: Sequence,
    scales: Sequence | None = None,
    inputs: Sequence | None = None,
) -> ParametricInjection:
    """eta(z; x)_r = s_r(z) * x_r^(e_r(log z)) on (F*)^m.

    exponents are MultiPolys in l variables over the exponent ring (or ints);
    each must be unit-valued on every parameter point, which is certified.
    scales are nonvanishing l-ary maps (or constants).
    """
    dom = tower.base
    edom = tower.levels[1]
    m = len(exponents)
    scales = list(scales) if scales is not None else [dom.one] * m
    inputs = tuple(inputs) if inputs is not None else tuple(nonzero(dom))
    pts = grid(list(inputs), l)

    def exp_expr(e):
        if isinstance(e, int):
            return e
        return e.to_expr([Var(i, 1) for i in range(l)], level=1)

    b = Builder(tower, l + m)
    ins = b.inputs()
    zs, xs = ins[:l], ins[l:]
    es, ss = [], []
    for e, s in zip(exponents, scales):
        if isinstance(s, ExprMap):
            (se,) = b.call(s, zs)
            ss.append(b.let(se))
        else:
            ss.append(Const(s))
        ee = exp_expr(e)
        es.append(ee if isinstance(ee, int) else b.let(ee))
    outs = [mul(ss[r], power(xs[r], es[r])) if not (isinstance(ss[r], Const) and ss[r].value == dom.one)
            else power(xs[r], es[r]) for r in range(m)]
    fwd = b.build(outs)

    ie = edom.inverse_exponent
    b = Builder(tower, l + m)
    ins = b.inputs()
    zs, ys = ins[:l], ins[l:]
    outs = []
    for r, (e, s) in enumerate(zip(exponents, scales)):
        y = ys[r]
        if isinstance(s, ExprMap):
            (se,) = b.call(s, zs)
            y = b.let(mul(inverse_of(se, dom), y))
        elif s != dom.one:
            y = b.let(mul(Const(dom.inv(s)), y))
        ee = exp_expr(e)
        if isinstance(ee, int):
            einv = pow(ee, -1, edom.size) if edom.size > 1 else 1
            outs.append(power(y, einv))
        else:
            outs.append(Pow(b.let(y), b.let(power(ee, ie)), 0))
    inv = b.build(outs)

    # certification: exponents are units and scales nonvanishing on every parameter
    for z in pts:
        for r, (e, s) in enumerate(zip(exponents, scales)):
            if not isinstance(e, int):
                v = e(tuple(tower.port(0, zi) for zi in z))
                if not edom.is_unit(v):
                    raise ConstructionError(f"exponent {r} is not a unit", z)
            elif not edom.is_unit(edom.reduce(e)):
                raise ConstructionError(f"exponent {r} is not a unit")
            sv = s(z)[0] if isinstance(s, ExprMap) else s
            if not dom.is_unit(sv):
                raise ConstructionError(f"scale {r} vanishes", z)
    return ParametricInjection(l, m, fwd, inv, inputs, None, "power")


def affine_injection(tower: Tower, l: int, mat: ParametricMatrix, shift: ExprMap | None = None,
                     inputs: Sequence | None = None) -> ParametricInjection:
    """eta(z; x) = M(z) x + c(z) on F^m."""
    m = mat.m
    b = Builder(tower, l + m)
    ins = b.inputs()
    v = mat.inline_apply(b, ins[:l], ins[l:])
    if shift is not None:
        v = [add(a, c) for a, c in zip(v, b.call(shift, ins[:l]))]
    fwd = b.build(v)
    b = Builder(tower, l + m)
    ins = b.inputs()
    ys = ins[l:]
    if shift is not None:
        ys = [b.let(sub(y, c, tower.base)) for y, c in zip(ys, b.call(shift, ins[:l]))]
    inv = b.build(mat.inline_solve(b, ins[:l], ys))
    return ParametricInjection(l, m, fwd, inv, tuple(inputs if inputs is not None else tower.base.elements()),
                               None, "affine")


def bijection_injection(tower: Tower, l: int, maps: Sequence, inputs: Sequence) -> ParametricInjection:
    """Parameter-free coordinatewise bijections seen as a parametric injection."""
    m = len(maps)
    pairs = [_as_pair(tower, f, inputs) for f in maps]
    b = Builder(tower, l + m)
    ins = b.inputs()
    fwd = b.build([b.call(p.forward, [ins[l + r]])[0] for r, p in enumerate(pairs)])
    b = Builder(tower, l + m)
    ins = b.inputs()
    inv = b.build([b.call(p.inverse, [ins[l + r]])[0] for r, p in enumerate(pairs)])
    return ParametricInjection(l, m, fwd, inv, tuple(inputs), None, "coordinatewise")


# --------------------------------------------------------------------------
# triangular construction and hash extension


@dataclass(frozen=True, eq=False)
class TriangularMap(InvertibleMap):
    fs: tuple = ()
    gs: tuple = ()
    hs: tuple = ()


def triangular_multivariate(fs: Sequence, gs: Sequence, hs: Sequence[ParametricInjection],
                            inputs: Sequence) -> TriangularMap:
    """zeta_i = h_i(zeta_(i+1..m), x_(1..i-1); f_i(x_i)), eta_i = g_i(zeta_i).

    Each h_i is univariate with m - 1 parameters, ordered as above.  The
    inverse back-substitutes eps_i = g_i^-1(y_i) from i = 1 upward.
    """
    m = len(fs)
    if len(gs) != m or len(hs) != m:
        raise StructuralError("need m of each component")
    tower = hs[0].tower
    fp = [_as_pair(tower, f, inputs) for f in fs]
    gp = [_as_pair(tower, g, inputs) for g in gs]
    for i, h in enumerate(hs):
        if h.l != m - 1 or h.m != 1:
            raise StructuralError(f"h_{i + 1} must take {m - 1} parameters and one input")
        if h.inverse is None or h.params is not None:
            raise ConstructionError(f"h_{i + 1} must be invertible for every parameter", i)

    b = Builder(tower, m)
    xs = b.inputs()
    u = [b.let(b.call(fp[i].forward, [xs[i]])[0]) for i in range(m)]
    zeta = [None] * m
    for i in range(m - 1, -1, -1):
        params = zeta[i + 1:] + xs[:i]
        zeta[i] = b.let(b.call(hs[i].forward, params + [u[i]])[0])
    fwd = b.build([b.call(gp[i].forward, [zeta[i]])[0] for i in range(m)])

    b = Builder(tower, m)
    ys = b.inputs()
    eps = [b.let(b.call(gp[i].inverse, [ys[i]])[0]) for i in range(m)]
    xs = []
    for i in range(m):
        (d,) = b.call(hs[i].inverse, eps[i + 1:] + xs + [eps[i]])
        xs.append(b.let(b.call(fp[i].inverse, [b.let(d)])[0]))
    inv = b.build(xs)
    return TriangularMap(fwd, inv, tuple(inputs), tuple(fs), tuple(gs), tuple(hs))


def hash_extend(P: ExprMap, F: ExprMap | None, m: int) -> ExprMap:
    """Q(x) = P(F(x), x) on G^m, for P on G^n and F: G^m -> G^(n-m)."""
    n = P.arity
    if m > n:
        raise StructuralError("m must not exceed n")
    if n == m:
        return P
    if F is None or F.arity != m or F.width != n - m:
        raise StructuralError(f"hash keys must map {m} values to {n - m}")
    b = Builder(P.tower, m)
    xs = b.inputs()
    hs = b.call(F, xs)
    return b.build(b.call(P, hs + xs))


def affine_form(tower: Tower, m: int, coeffs: Sequence | None = None) -> ExprMap:
    """alpha(x) = sum c_i x_i (default all ones)."""
    coeffs = coeffs or [tower.base.one] * m
    terms = [Var(i) if c == tower.base.one else mul(Const(c), Var(i)) for i, c in enumerate(coeffs) if c != tower.base.zero]
    return ExprMap(Interpretation(tower, m), (add(*terms),))


def monomial_form(tower: Tower, m: int, c=None, exps: Sequence[int] | None = None) -> ExprMap:
    """beta(x) = c * prod x_i^(s_i) (default c = 1, s_i = 1)."""
    exps = exps or [1] * m
    fs = [power(Var(i), s) for i, s in enumerate(exps) if s]
    if c is not None and c != tower.base.one:
        fs.insert(0, Const(c))
    return ExprMap(Interpretation(tower, m), (mul(*fs),))


def multivariate_partition(f, tower: Tower, m: int, form: str = "affine", domain=None) -> PartitionOfUnity:
    """Partition of G^m by the discriminator f composed with alpha or beta."""
    from .expr import compose as _compose

    inner = affine_form(tower, m) if form == "affine" else monomial_form(tower, m)
    disc = _compose(as_map(tower, f), inner)
    return partition_from_discriminator(disc, tower, domain)
