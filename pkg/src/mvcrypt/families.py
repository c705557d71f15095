"""Seeded random generators for the map families used by tests and keygen.

Every generator takes a random.Random so results are reproducible.  G is
either the whole base field ("field") or its multiplicative group ("units");
maps built for G = F* avoid triangular matrix factors and additive shifts so
values stay inside F*.
"""

from __future__ import annotations

import random
from math import gcd
from typing import Sequence

from .algebra import FieldSpec, crt_join, factor_modulus
from .expr import Builder, Const, ExprMap, Interpretation, Tower, Var, add, mul, power
from .parametric import (
    ConstructionError,
    InvertibleMap,
    ParametricInjection,
    ParametricMatrix,
    affine_injection,
    bijection_injection,
    constant_permutation_factor,
    diagonal_factor,
    grid,
    nonvanishing_map,
    nonzero,
    parametric_injection,
    parametric_invertible_matrix,
    partition_from_discriminator,
    power_injection,
    triangular_factor,
    triangular_multivariate,
)
from .permgen import Bijection, from_maps, linearized_permutation
from .poly import MultiPoly, Poly

MAX_ATTEMPTS = 64


def domain_points(tower: Tower, group: str) -> tuple:
    dom = tower.base
    return tuple(nonzero(dom)) if group == "units" else tuple(dom.elements())


def _nonresidue(p: int, rng: random.Random) -> int:
    squares = {x * x % p for x in range(p)}
    return rng.choice([c for c in range(1, p) if c not in squares])


def unit_valued_poly(modulus: int, rng: random.Random) -> Poly:
    """A polynomial over Z_modulus whose value at every residue is a unit.

    Built per prime-power factor from a piece with no root mod p, then glued
    with CRT.  p = 2: 1 + (s^2 - s) r(s); odd p: a (s^2 - c), c a non-residue.
    """
    spec = factor_modulus(modulus)
    parts = []
    for p, e in spec.factors:
        q = p**e
        if p == 2:
            r = [rng.randrange(q) for _ in range(2)]
            # 1 + (s^2 - s)(r0 + r1 s)
            cs = [1, -r[0], r[0] - r[1], r[1]]
        else:
            a = rng.randrange(1, p)
            c = _nonresidue(p, rng)
            cs = [-a * c, 0, a]
        noise = [p * rng.randrange(q) for _ in range(len(cs))] if e > 1 else [0] * len(cs)
        parts.append([(x + y) % q for x, y in zip(cs, noise)])
    n = max(len(c) for c in parts)
    coeffs = [crt_join([c[i] if i < len(c) else 0 for c in parts], spec) for i in range(n)]
    return Poly(spec, coeffs)


def unit_exponent(tower: Tower, l: int, used: Sequence[int], rng: random.Random) -> MultiPoly:
    """Unit-valued exponent polynomial in the logs of the used parameters."""
    edom = tower.levels[1]
    terms = {tuple([0] * l): rng.choice(edom.units())}
    for j in used:
        u = unit_valued_poly(edom.n, rng)
        nxt = {}
        for e, c in terms.items():
            for k, a in enumerate(u.coeffs):
                if a:
                    ee = list(e)
                    ee[j] += k
                    nxt[tuple(ee)] = (nxt.get(tuple(ee), 0) + c * a) % edom.n
        terms = nxt
    return MultiPoly(edom, l, terms)


def monomial_map(tower: Tower, l: int, c, exps: Sequence[int]) -> ExprMap:
    fs = [power(Var(j), k) for j, k in enumerate(exps) if k]
    if c != tower.base.one or not fs:
        fs.insert(0, Const(c))
    return ExprMap(Interpretation(tower, l), (mul(*fs),))


def random_nonvanishing(tower: Tower, l: int, rng: random.Random, group: str) -> ExprMap:
    """A map on G^l with no zero: a monomial on (F*)^l, else a shifted polynomial."""
    dom = tower.base
    if group == "units":
        return monomial_map(tower, l, rng.choice(nonzero(dom)), [rng.randrange(3) for _ in range(l)])
    for _ in range(MAX_ATTEMPTS):
        f = Poly(dom, [rng.choice(list(dom.elements())) for _ in range(3)])
        missed = sorted(set(dom.elements()) - set(f.table()))
        if not missed:
            continue
        g = MultiPoly(dom, l, {tuple(rng.randrange(2) for _ in range(l)): rng.choice(nonzero(dom))
                               for _ in range(2)})
        return nonvanishing_map(f, rng.choice(missed), rng.choice(nonzero(dom)), g, tower)
    raise ConstructionError("no non-surjective polynomial found")


def random_discriminator(tower: Tower, l: int, rng: random.Random, group: str) -> ExprMap:
    """A coset-power monomial when q - 1 is composite, otherwise a trace form."""
    dom = tower.base
    N = dom.order if isinstance(dom, FieldSpec) else dom.totient
    divisors = [r for r in range(2, N) if N % r == 0]
    if divisors and (group == "units" or rng.random() < 0.5):
        r = rng.choice(divisors)
        exps = [rng.randrange(1, 3) * r for _ in range(l)]
        return monomial_map(tower, l, dom.one, exps)
    b = Builder(tower, l)
    y = b.let(add(*[mul(Const(rng.choice(nonzero(dom))), v) for v in b.inputs()], Const(rng.choice(list(dom.elements())))))
    p = dom.p if isinstance(dom, FieldSpec) else dom.n
    deg = dom.n if isinstance(dom, FieldSpec) else 1
    return b.build([add(*[power(y, p**i) for i in range(deg)])])


def random_unit_bijection(tower: Tower, rng: random.Random, group: str) -> Bijection:
    """c x^r on F*; on F a nonsingular linearized map or an odd power."""
    dom = tower.base
    pts = domain_points(tower, group)
    if group == "field" and isinstance(dom, FieldSpec) and dom.n > 1 and rng.random() < 0.5:
        for _ in range(MAX_ATTEMPTS):
            try:
                return linearized_permutation(dom, [rng.randrange(dom.q) for _ in range(dom.n)], tower)
            except ConstructionError:
                continue
    rs = [r for r in range(1, dom.order) if gcd(r, dom.order) == 1] or [1]
    r = rng.choice(rs)
    c = rng.choice(nonzero(dom)) if group == "units" else dom.one
    rinv = pow(r, -1, dom.order) if dom.order > 1 else 1
    fwd = ExprMap(Interpretation(tower, 1), (mul(Const(c), power(Var(0), r)),))
    inv = ExprMap(Interpretation(tower, 1), (power(mul(Const(dom.inv(c)), Var(0)), rinv),))
    b = from_maps(fwd, inv, pts, f"{c}x^{r}")
    if not b.check():
        raise AssertionError("scaled power map is not a bijection")
    return b


def random_matrix(tower: Tower, l: int, m: int, rng: random.Random, group: str, params) -> ParametricMatrix:
    """Signature-safe on F*: permutation times nonvanishing diagonal.
    On F: permutation, lower, upper, permutation."""
    dom = tower.base
    perm = list(range(m))
    rng.shuffle(perm)
    if group == "units":
        diag = diagonal_factor(tower, l, [random_nonvanishing(tower, l, rng, group) for _ in range(m)])
        return parametric_invertible_matrix("signature-safe", [constant_permutation_factor(tower, l, perm), diag], params)
    low = triangular_factor(tower, l, [random_nonvanishing(tower, l, rng, group) for _ in range(m)],
                            {(r, c): rng.choice(list(dom.elements())) for r in range(m) for c in range(r)})
    up = triangular_factor(tower, l, [dom.one] * m,
                           {(r, c): _random_poly_map(tower, l, rng) for r in range(m) for c in range(r + 1, m)},
                           lower=False)
    perm2 = list(range(m))
    rng.shuffle(perm2)
    return parametric_invertible_matrix(
        "general",
        [constant_permutation_factor(tower, l, perm), low, up, constant_permutation_factor(tower, l, perm2)],
        params,
    )


def _random_poly_map(tower: Tower, l: int, rng: random.Random) -> ExprMap:
    dom = tower.base
    g = MultiPoly(dom, l, {tuple(rng.randrange(3) for _ in range(l)): rng.choice(nonzero(dom)) for _ in range(2)})
    return ExprMap(Interpretation(tower, l), (g.to_expr([Var(j) for j in range(l)]),))


def random_zeta(tower: Tower, l: int, m: int, rng: random.Random, group: str, used=None) -> ParametricInjection:
    """A per-class injection bijective on G^m for every parameter."""
    used = list(range(l)) if used is None else list(used)
    pts = domain_points(tower, group)
    if group == "units":
        exps = [unit_exponent(tower, l, used, rng) for _ in range(m)]
        z = power_injection(tower, l, exps, inputs=pts)
        if m > 1:
            z = z.after(random_triangular(tower, m, rng, group))
        return z
    if rng.random() < 0.5:
        params = grid(list(pts), l)
        shift = ExprMap(Interpretation(tower, l), tuple(_random_poly_map(tower, l, rng).outputs[0] for _ in range(m)))
        return affine_injection(tower, l, random_matrix(tower, l, m, rng, group, params), shift, pts)
    return bijection_injection(tower, l, [random_unit_bijection(tower, rng, group) for _ in range(m)], pts)


def random_parametric_injection(
    tower: Tower, l: int, m: int, rng: random.Random, group: str, used=None
) -> ParametricInjection:
    """Partition the (used) parameters, pick phi_i, zeta_i and chi_i per class."""
    used = list(range(l)) if used is None else list(used)
    pts = domain_points(tower, group)
    if not used:
        return random_zeta(tower, l, m, rng, group, used=[])
    lu = len(used)
    ppts = grid(list(pts), lu)
    part = partition_from_discriminator(random_discriminator(tower, lu, rng, group), tower, ppts)
    phis, zetas, chis = [], [], []
    for _ in range(part.k):
        phis.append(random_matrix(tower, lu, m, rng, group, ppts))
        zetas.append(random_zeta(tower, lu, m, rng, group))
        chis.append(None if group == "units" else
                    ExprMap(Interpretation(tower, lu), tuple(_random_poly_map(tower, lu, rng).outputs[0] for _ in range(m))))
    inj = parametric_injection(part, phis, zetas, chis, inputs=pts)
    return inj if lu == l and used == list(range(l)) else inj.widen(l, used)


def random_triangular(tower: Tower, m: int, rng: random.Random, group: str, masks=None) -> InvertibleMap:
    """Triangular map on G^m; masks[i] lists which of h_i's m - 1 parameters it may read."""
    fs = [random_unit_bijection(tower, rng, group) for _ in range(m)]
    gs = [random_unit_bijection(tower, rng, group) for _ in range(m)]
    hs = []
    for i in range(m):
        allowed = list(range(m - 1)) if masks is None else list(masks[i])
        k = rng.randint(min(1, len(allowed)), min(2, len(allowed))) if allowed else 0
        used = sorted(rng.sample(allowed, k))
        hs.append(random_parametric_injection(tower, m - 1, 1, rng, group, used))
    return triangular_multivariate(fs, gs, hs, domain_points(tower, group))


def random_signature_map(
    tower: Tower, l: int, m: int, rng: random.Random, group: str = "units", allow_dead: bool = True
) -> ParametricInjection:
    """Parametric map G^l x G^m -> G^m, bijective in x on live parameter classes.

    Dead classes (at most all but one) collapse x: a constant when m = 1,
    c_r * prod x otherwise.
    """
    dom = tower.base
    pts = domain_points(tower, group)
    ppts = grid(list(pts), l)
    for _ in range(MAX_ATTEMPTS):
        part = partition_from_discriminator(random_discriminator(tower, l, rng, group), tower, ppts)
        if part.k >= 2 or not allow_dead:
            break
    k = part.k
    dead = set()
    if allow_dead and k >= 2:
        dead = {i for i in range(k) if rng.random() < 0.5}
        if len(dead) == k:
            dead.discard(rng.randrange(k))
    phis, zetas = [], []
    for i in range(k):
        phis.append(random_matrix(tower, l, m, rng, group, ppts))
        if i in dead:
            b = Builder(tower, l + m)
            xs = b.inputs()[l:]
            if m == 1:
                outs = [Const(rng.choice(nonzero(dom)))]
            else:
                prod = b.let(mul(*xs))
                outs = [mul(Const(rng.choice(nonzero(dom))), prod) for _ in range(m)]
            zetas.append(b.build(outs))
        else:
            zetas.append(random_zeta(tower, l, m, rng, group))
    live = [i for i in range(k) if i not in dead]
    return parametric_injection(part, phis, zetas, None, live, pts)
