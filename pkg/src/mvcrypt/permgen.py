"""Univariate bijections: permutation polynomials over GF(p^n) and Z_{p^l},
Hensel inversion, subgroup bijections and the two hybrid constructions.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Callable, Sequence

from .algebra import DomainError, FieldSpec, InvertibilityError, factor_modulus, is_prime
from .expr import Builder, Const, ExprMap, Interpretation, Pow, Tower, Var, add, mul, power
from .parametric import ConstructionError, PartitionOfUnity
from .poly import Poly, is_bijective_mod_pl, lagrange_interpolate

SMALL_PRIME_MAX = 31
TABLE_MAX = 2**10


class PermutationRejected(ConstructionError):
    pass


@dataclass(frozen=True, eq=False)
class Bijection:
    """A bijection of a finite domain with its inverse.

    strategy names how the inverse is computed: "closed-form" (an inverse
    program), "hensel" (lifting from a table mod p) or "table".
    """

    domain: tuple
    forward: Callable
    inverse: Callable
    strategy: str
    forward_map: ExprMap | None = None
    inverse_map: ExprMap | None = None
    poly: Poly | None = None
    label: str = ""

    def __call__(self, x):
        return self.forward(x)

    def check(self) -> bool:
        dom = set(self.domain)
        for x in self.domain:
            y = self.forward(x)
            if y not in dom or self.inverse(y) != x:
                return False
        return all(self.forward(self.inverse(y)) == y for y in self.domain)

    def restrict(self, domain: Sequence) -> "Bijection":
        """Same maps on a subdomain that the forward map preserves."""
        d = tuple(domain)
        img = {self.forward(x) for x in d}
        if img != set(d):
            raise ConstructionError("map does not preserve the subdomain")
        return Bijection(d, self.forward, self.inverse, self.strategy, self.forward_map,
                         self.inverse_map, self.poly, self.label)

    def compose(self, inner: "Bijection") -> "Bijection":
        """self after inner (programs composed when both have them)."""
        from .expr import compose as _compose

        fm = im = None
        if self.forward_map is not None and inner.forward_map is not None:
            fm = _compose(self.forward_map, inner.forward_map)
        if self.inverse_map is not None and inner.inverse_map is not None:
            im = _compose(inner.inverse_map, self.inverse_map)
        f, g = self.forward, inner.forward
        fi, gi = self.inverse, inner.inverse
        strat = "closed-form" if im is not None else "table"
        return Bijection(inner.domain, lambda x: f(g(x)), lambda y: gi(fi(y)), strat, fm, im,
                         label=f"{self.label}*{inner.label}")


def from_maps(fwd: ExprMap, inv: ExprMap, domain: Sequence, label: str = "") -> Bijection:
    return Bijection(
        tuple(domain),
        lambda x: fwd((x,))[0],
        lambda y: inv((y,))[0],
        "closed-form",
        fwd,
        inv,
        label=label,
    )


def from_table(forward: Callable, domain: Sequence, label: str = "", forward_map=None, poly=None) -> Bijection:
    table = {}
    for x in domain:
        y = forward(x)
        if y in table:
            raise PermutationRejected("map is not injective", (table[y], x))
        table[y] = x
    if set(table) != set(domain):
        raise PermutationRejected("image leaves the domain")

    def inverse(y):
        try:
            return table[y]
        except KeyError:
            raise DomainError(f"{y!r} outside the domain") from None

    return Bijection(tuple(domain), forward, inverse, "table", forward_map, None, poly, label)


def identity(tower: Tower, domain: Sequence | None = None) -> Bijection:
    m = ExprMap(Interpretation(tower, 1), (Var(0),))
    return from_maps(m, m, domain if domain is not None else tower.base.elements(), "id")


def _uni(tower: Tower, e) -> ExprMap:
    return ExprMap(Interpretation(tower, 1), (e,))


# --------------------------------------------------------------------------
# permutation polynomials over GF(p^n)


def solve_linear(dom, rows: list[list], rhs: list) -> list:
    """Gaussian elimination over a field; raises on a singular system."""
    n = len(rows)
    m = [list(r) + [v] for r, v in zip(rows, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != dom.zero), None)
        if piv is None:
            raise InvertibilityError("singular linear system")
        m[col], m[piv] = m[piv], m[col]
        inv = dom.inv(m[col][col])
        m[col] = [dom.mul(inv, v) for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != dom.zero:
                f = m[r][col]
                m[r] = [dom.sub(a, dom.mul(f, b)) for a, b in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def _linearized_expr(spec: FieldSpec, coeffs: Sequence[int]):
    x = Var(0)
    terms = [mul(Const(a), power(x, spec.p**i)) if a != 1 else power(x, spec.p**i)
             for i, a in enumerate(coeffs) if a]
    return add(*terms) if terms else Const(0)


def _linearized_eval(spec: FieldSpec, coeffs, z):
    acc = 0
    for i, a in enumerate(coeffs):
        if a:
            acc = spec.add(acc, spec.mul(a, spec.pow(z, spec.p**i)))
    return acc


def linearized_permutation(spec: FieldSpec, coeffs: Sequence[int], tower: Tower | None = None) -> Bijection:
    """f(z) = sum a_i z^(p^(i-1)); accepted iff the kernel is {0}.

    The inverse is again linearized; its coefficients solve a Moore-matrix
    system built from the images of the basis 1, t, ..., t^(n-1).
    """
    tower = tower or Tower(spec)
    cs = list(coeffs) + [0] * (spec.n - len(coeffs))
    if len(cs) > spec.n:
        raise ConstructionError("at most n coefficients")
    kernel = [z for z in range(1, spec.q) if _linearized_eval(spec, cs, z) == 0]
    if kernel:
        raise PermutationRejected(f"singular operator, kernel size {len(kernel) + 1}", kernel[0])
    basis = [spec.p**j for j in range(spec.n)]
    imgs = [_linearized_eval(spec, cs, b) for b in basis]
    rows = [[spec.pow(y, spec.p**i) for i in range(spec.n)] for y in imgs]
    inv = solve_linear(spec, rows, basis)
    fwd = _uni(tower, _linearized_expr(spec, cs))
    bwd = _uni(tower, _linearized_expr(spec, inv))
    b = from_maps(fwd, bwd, range(spec.q), "linearized")
    if not b.check():
        raise AssertionError("linearized inverse failed exhaustive check")
    return b


def power_permutation(spec: FieldSpec, r: int, tower: Tower | None = None) -> Bijection:
    tower = tower or Tower(spec)
    if r < 1 or gcd(r, spec.order) != 1:
        raise PermutationRejected(f"gcd({r}, {spec.order}) != 1")
    rinv = pow(r, -1, spec.order) if spec.order > 1 else 1
    return from_maps(_uni(tower, power(Var(0), r)), _uni(tower, power(Var(0), rinv)), range(spec.q), f"pow{r}")


def binomial_permutation(spec: FieldSpec, r: int, a: int, tower: Tower | None = None) -> Bijection:
    """f(z) = z^(p^r) - a z, bijective iff a^(sum_i p^((i-1) r)) != 1."""
    if r < 1 or spec.n % r:
        raise ConstructionError(f"{r} does not divide n = {spec.n}")
    e = sum(spec.p ** ((i - 1) * r) for i in range(1, spec.n // r + 1))
    if a != 0 and spec.pow(a, e) == 1:
        # a nonzero root of z^(p^r - 1) = a lies in the kernel
        w = next(z for z in range(1, spec.q) if spec.pow(z, spec.p**r - 1) == a)
        raise PermutationRejected("norm condition fails", w)
    cs = [0] * spec.n
    cs[0] = spec.neg(a)
    if r < spec.n:
        cs[r] = 1
    else:
        cs[0] = spec.add(cs[0], 1)
    b = linearized_permutation(spec, cs, tower)
    table = {b.forward(x): x for x in range(spec.q)}
    return Bijection(b.domain, b.forward, table.__getitem__, "table", b.forward_map, b.inverse_map,
                     label="binomial")


# --------------------------------------------------------------------------
# permutation polynomials over Z_p with nonvanishing derivative


def _check_small_prime(p: int):
    if not is_prime(p) or p < 3 or p > SMALL_PRIME_MAX:
        raise ConstructionError(f"need a prime 3 <= p <= {SMALL_PRIME_MAX}, got {p}")


def _check_perm(p: int, perm: Sequence[int]):
    if sorted(perm) != list(range(p)):
        raise ConstructionError("not a permutation of Z_p")


def perm_poly_zp_method1(p: int, perm: Sequence[int], g: Poly | None = None) -> Poly:
    """f with f(i) = perm(i) and f' = g, deg f <= (p-1)p."""
    _check_small_prime(p)
    _check_perm(p, perm)
    zp = factor_modulus(p)
    g = g if g is not None else Poly(zp, [1])
    if g.dom != zp:
        raise ConstructionError("g must be over Z_p")
    for x in range(p):
        if g(x) == 0:
            raise ConstructionError("g vanishes", x)
    if g.degree > p - 2:
        raise ConstructionError(f"g must have degree <= {p - 2}")
    b = lagrange_interpolate([(i, perm[i]) for i in range(p)], zp)
    cs = [0] * ((p - 1) * p + 1)
    cs[0] = b.coeff(0)
    for i in range(1, p):
        rho = pow(i, -1, p) * g.coeff(i - 1) % p
        cs[i] = (cs[i] + rho) % p
        cs[i * p] = (cs[i * p] + b.coeff(i) - rho) % p
    return Poly(zp, cs)


def default_lambdas(p: int) -> list[int]:
    lam = [(i - (p - 1) // 2) % p for i in range(p)]
    lam[0] = lam[p - 1] = 0
    return lam


def perm_poly_zp_method2(p: int, perm: Sequence[int], lambdas: Sequence[int] | None = None, c0: int = 0) -> Poly:
    """f with f(i) = perm(i), f'(i) = lambda_i - sigma != 0, deg f <= 2p - 2."""
    _check_small_prime(p)
    _check_perm(p, perm)
    lam = [v % p for v in (lambdas if lambdas is not None else default_lambdas(p))]
    if len(lam) != p:
        raise ConstructionError("need p lambda values")
    if sum(lam) % p:
        raise ConstructionError("lambda values must sum to 0 mod p")
    if len(set(lam)) > p - 1:
        raise ConstructionError("lambda values must miss some residue")
    sigma = min(set(range(p)) - set(lam))
    zp = factor_modulus(p)
    a = list(perm)
    c = [c0 % p] + [0] * (p - 1)
    for j in range(1, p):
        s = sum(a[i] * pow(j - i, -1, p) for i in range(p) if i != j)
        c[j] = (c[0] + j * (s - lam[j])) % p
    bvals = [a[0]] + [(a[j] - c[j]) % p for j in range(1, p)]
    x = Poly.x(zp)
    f = Poly(zp, [0] * p + [sigma])
    xp1 = Poly(zp, [0] * (p - 1) + [1])
    for i in range(p):
        ell = Poly(zp, [p - 1])
        for j in range(p):
            if j != i:
                ell = ell.mul(x - Poly(zp, [j]), None)
        coef = Poly(zp, [(bvals[i] - sigma * i) % p]) + xp1.scale(c[i])
        f = f + coef.mul(ell, None)
    d = f.derivative()
    for i in range(p):
        if f(i) != a[i] or (d(i) + sigma) % p != lam[i]:
            raise AssertionError(f"method 2 consistency failed at {i}")
    return f


def p2_permutation(l: int, coeffs: Sequence[int]) -> Poly:
    """Bijectivity conditions for sum b_i x^i over Z_(2^l)."""
    b = [int(c) for c in coeffs]
    if sum(b[1:]) % 2 != 1:
        raise PermutationRejected("sum of b_i over i >= 1 is even")
    if l >= 2:
        if len(b) < 2 or b[1] % 2 != 1:
            raise PermutationRejected("b_1 is even")
        odd = sum(1 for j in range(3, len(b), 2) if b[j] % 2)
        if odd % 2:
            raise PermutationRejected("odd count of odd b_j at odd j >= 3")
    return Poly(factor_modulus(2**l), b)


# --------------------------------------------------------------------------
# Hensel inversion over Z_{p^l}


def _prime_power(f: Poly) -> tuple[int, int]:
    fac = f.dom.factors
    if len(fac) != 1:
        raise DomainError("coefficient ring must be Z_(p^l)")
    return fac[0]


def base_table(f: Poly) -> dict[int, int]:
    p, _ = _prime_power(f)
    return {f(x) % p: x for x in range(p)}


def hensel_invert(f: Poly, y: int, base_inverse=None, trace: list | None = None) -> int:
    """Solve f(x) = y in Z_(p^l) by lifting from a solution mod p."""
    p, l = _prime_power(f)
    if not is_bijective_mod_pl(f, p, l):
        raise ConstructionError("polynomial fails the bijectivity criterion")
    base = base_inverse if base_inverse is not None else base_table(f)
    x = base[y % p] if isinstance(base, dict) else base(y % p)
    df = f.derivative()
    r = 1
    while r < l:
        r = min(2 * r, l)
        m = p**r
        d = df(x) % m
        try:
            dinv = pow(d, -1, m)
        except ValueError:
            raise InvertibilityError(f"f'({x}) not invertible mod {m}") from None
        x = (x + dinv * (y - f(x))) % m
        if (f(x) - y) % m:
            raise AssertionError(f"lifting step failed at r = {r}")
        if trace is not None:
            trace.append((r, x))
    return x % p**l


def hensel_bijection(f: Poly, tower: Tower | None = None) -> Bijection:
    p, l = _prime_power(f)
    if not is_bijective_mod_pl(f, p, l):
        raise PermutationRejected("polynomial fails the bijectivity criterion")
    base = base_table(f)
    fm = _uni(tower, f.to_expr(Var(0))) if tower is not None else None
    return Bijection(tuple(range(p**l)), f, lambda y: hensel_invert(f, y, base), "hensel", fm, poly=f,
                     label="hensel")


def lift_poly(f: Poly, l: int, extra: Sequence[int] = ()) -> Poly:
    """Reinterpret f over Z_p in Z_(p^l) and add p * extra (criterion preserved)."""
    p = f.dom.n
    m = p**l
    n = max(len(f.coeffs), len(extra))
    return Poly(factor_modulus(m), [(f.coeff(i) if i < len(f.coeffs) else 0) + p * (extra[i] if i < len(extra) else 0)
                                    for i in range(n)])


# --------------------------------------------------------------------------
# subgroup bijections


def admissible_splits(spec: FieldSpec) -> list[tuple[int, int]]:
    N = spec.order
    return [(s, N // s) for s in range(2, N - 1) if N % s == 0 and 2 <= N // s <= N - 2 and gcd(s, N // s) == 1]


def subgroup_bijection(spec: FieldSpec, s: int, t: int, g: Sequence[int] | Poly, tower: Tower | None = None) -> Bijection:
    """x -> a^(g'(log x)) on H_t, with g' = g plus the smallest constant shift
    that sends s*Z_N into itself."""
    tower = tower or Tower(spec)
    N = spec.order
    if not admissible_splits(spec):
        raise ConstructionError(f"no admissible split of {N}")
    if s * t != N or gcd(s, t) != 1 or not (2 <= s <= N - 1 and 2 <= t <= N - 1):
        raise ConstructionError(f"({s}, {t}) is not an admissible split of {N}")
    zn = tower.levels[1]
    cs = list(g.coeffs) if isinstance(g, Poly) else [int(c) for c in g]
    gt = Poly(factor_modulus(t), [c % t for c in cs])
    if len(set(gt.table())) != t:
        raise ConstructionError("g mod t is not a bijection of Z_t")
    H = sorted(spec.pow(spec.generator, s * j) for j in range(t))
    logs = {spec.log_table[h] for h in H}
    for delta in range(N):
        gn = Poly(zn, [(cs[0] if cs else 0) + delta] + cs[1:])
        img = {gn(u) for u in logs}
        if img == logs:
            break
    else:
        raise ConstructionError("no constant shift keeps s*Z_N invariant")
    expo = gn.to_expr(Var(0, 1))
    fwd = _uni(tower, Pow(Const(spec.generator), expo) if not isinstance(expo, Const) else
               power(Const(spec.generator), expo.value) if expo.value else Const(1))
    b = from_table(lambda x: fwd((x,))[0], H, "subgroup", forward_map=fwd)
    return Bijection(b.domain, b.forward, b.inverse, "table", fwd, None, poly=gn, label=f"H{t}")


# --------------------------------------------------------------------------
# hybrid constructions


def _as_uni(tower: Tower, m) -> ExprMap:
    if isinstance(m, Bijection):
        if m.forward_map is None:
            raise ConstructionError("component needs a program form")
        return m.forward_map
    if isinstance(m, Poly):
        return _uni(tower, m.to_expr(Var(0)))
    return m


def hybrid_perm_method1(
    partition: PartitionOfUnity,
    sigma: Sequence[int],
    g: Sequence,
    f: Sequence,
    eta: Bijection,
) -> Bijection:
    """chi(x) = sum l_i(x) eta(g_i(x)); g_i carries class i onto class sigma(i)."""
    tower = partition.tower
    k = partition.k
    if sorted(sigma) != list(range(k)) or len(g) != k or len(f) != k:
        raise ConstructionError("sigma must permute the classes; one g_i and f_i per class")
    gm = [_as_uni(tower, x) for x in g]
    fm = [_as_uni(tower, x) for x in f]
    classes = [[z[0] for z in c] for c in partition.classes]
    for i, cls in enumerate(classes):
        tgt = classes[sigma[i]]
        if len(cls) != len(tgt):
            raise ConstructionError("class sizes differ", (i, sigma[i]))
        img = sorted(gm[i]((x,))[0] for x in cls)
        if img != sorted(tgt):
            raise ConstructionError("g_i does not map its class onto the target class", i)
        for x in cls:
            if fm[i]((gm[i]((x,))[0],))[0] != x:
                raise ConstructionError("f_i is not a left inverse of g_i on its class", x)
    if eta.forward_map is None or eta.inverse_map is None:
        raise ConstructionError("eta needs forward and inverse programs")

    b = Builder(tower, 1)
    (x,) = b.inputs()
    ls = b.call(partition.indicators, [x])
    terms = []
    for i in range(k):
        (gx,) = b.call(gm[i], [x])
        (ex,) = b.call(eta.forward_map, [gx])
        terms.append(mul(ls[i], ex))
    fwd = b.build([add(*terms)])

    b = Builder(tower, 1)
    (y,) = b.inputs()
    (u,) = b.call(eta.inverse_map, [y])
    u = b.let(u)
    ls = b.call(partition.indicators, [u])
    terms = []
    for i in range(k):
        (fx,) = b.call(fm[i], [u])
        terms.append(mul(ls[sigma[i]], fx))
    inv = b.build([add(*terms)])
    out = from_maps(fwd, inv, [z[0] for z in partition.domain], "hybrid1")
    if not out.check():
        raise ConstructionError("hybrid map failed the exhaustive roundtrip")
    return out


def hybrid_perm_method2(
    fs: Sequence[Bijection],
    h,
    sigma: Sequence[int],
    partition: PartitionOfUnity,
    eta: Bijection,
    domain: Sequence,
) -> Bijection:
    """zeta(x) = sum l_i(h(x)) eta(f_sigma(i)(x)); h is constant along f-orbits."""
    tower = partition.tower
    rho, k = len(fs), partition.k
    if k > rho or sorted(sigma) != list(range(rho)):
        raise ConstructionError("need k <= rho and sigma a permutation of the f indices")
    hm = _as_uni(tower, h)
    for x in domain:
        vals = {hm((fi(x),))[0] for fi in fs}
        if len(vals) != 1:
            raise ConstructionError("h(f_i(x)) differs across i", x)
    for fi in fs:
        if fi.forward_map is None or fi.inverse_map is None:
            raise ConstructionError("each f_i needs forward and inverse programs")

    b = Builder(tower, 1)
    (x,) = b.inputs()
    (hx,) = b.call(hm, [x])
    ls = b.call(partition.indicators, [hx])
    terms = []
    for i in range(k):
        (fx,) = b.call(fs[sigma[i]].forward_map, [x])
        (ex,) = b.call(eta.forward_map, [fx])
        terms.append(mul(ls[i], ex))
    fwd = b.build([add(*terms)])

    b = Builder(tower, 1)
    (y,) = b.inputs()
    (u,) = b.call(eta.inverse_map, [y])
    u = b.let(u)
    (hu,) = b.call(hm, [u])
    ls = b.call(partition.indicators, [hu])
    terms = []
    for i in range(k):
        (fx,) = b.call(fs[sigma[i]].inverse_map, [u])
        terms.append(mul(ls[i], fx))
    inv = b.build([add(*terms)])
    out = from_maps(fwd, inv, domain, "hybrid2")
    if not out.check():
        raise ConstructionError("hybrid map failed the exhaustive roundtrip")
    return out
