import random
from itertools import product

import pytest

from mvcrypt.algebra import field_make
from mvcrypt.expr import Builder, Const, ExprMap, Interpretation, Tower, Var, add, power
from mvcrypt.families import (
    domain_points,
    random_matrix,
    random_parametric_injection,
    random_triangular,
    random_zeta,
)
from mvcrypt.oracle import exhaustive_bijectivity
from mvcrypt.parametric import (
    ConstructionError,
    bijection_injection,
    constant_permutation_factor,
    diagonal_factor,
    grid,
    hash_extend,
    identity_matrix,
    invert_nonvanishing,
    latin_index,
    multivariate_partition,
    nonvanishing_map,
    parametric_injection,
    parametric_invertible_matrix,
    parametric_permutation_matrix,
    partition_from_discriminator,
    partition_zpl,
    power_injection,
    triangular_factor,
    triangular_multivariate,
)
from mvcrypt.permgen import identity, power_permutation
from mvcrypt.poly import MultiPoly, Poly

GF4, GF5, GF7, GF8 = field_make(2, 2), field_make(5, 1), field_make(7, 1), field_make(2, 3)
T4, T5, T7, T8 = Tower(GF4), Tower(GF5), Tower(GF7), Tower(GF8)
UNITS8 = tuple(range(1, 8))


# partitions and nonvanishing maps


def test_cube_partition_gf7():
    part = partition_from_discriminator(power(Var(0), 3), T7)
    assert part.values == (0, 1, 6) and part.check()
    assert [sorted(z for (z,) in c) for c in part.classes] == [[0], [1, 2, 4], [3, 5, 6]]


def test_constant_partition():
    part = partition_from_discriminator(Const(3), T7)
    assert part.k == 1 and all(part((z,)) == (1,) for z in range(7))


def test_trace_partition_gf4():
    part = partition_from_discriminator(add(Var(0), power(Var(0), 2)), T4)
    assert part.k == 2 and part.check()
    # oracle: kernel of z + z^2 is {0, 1}, the other coset {2, 3}
    assert sorted(sorted(z for (z,) in c) for c in part.classes) == [[0, 1], [2, 3]]


def test_non_strict_partition():
    part = partition_from_discriminator(power(Var(0), 6), T7, values=[0, 1, 3])
    assert part.check() and part.classes[2] == []
    with pytest.raises(ConstructionError):
        partition_from_discriminator(power(Var(0), 6), T7, values=[1])


def test_partition_zpl():
    part = partition_zpl(3, 2, 1)
    assert part.values == (0, 1, 8) and part.check()
    two = partition_zpl(5, 2, 4)
    assert two.k == 2 and two.check()
    units = {z for (z,) in two.classes[two.values.index(1)]}
    assert units == {x for x in range(25) if x % 5}
    with pytest.raises(ConstructionError):
        partition_zpl(7, 1, 4)


@pytest.mark.parametrize("p,l", [(p, l) for p in (3, 5, 7) for l in (1, 2, 3) if p**l <= 343])
def test_partition_zpl_unit_differences(p, l):
    for s in [s for s in range(1, p) if (p - 1) % s == 0]:
        part = partition_zpl(p, l, s)
        assert part.k == 1 + (p - 1) // s and part.check()
        for a, b in product(part.values, repeat=2):
            if a != b:
                assert (a - b) % p


def test_nonvanishing_examples():
    f = Poly(GF7, [0, 0, 1])
    g = nonvanishing_map(f, 3, 1, None, T7)
    assert all(g((z,))[0] == (z * z - 3) % 7 != 0 for z in range(7))
    with pytest.raises(ConstructionError) as err:
        nonvanishing_map(f, 2, 1, None, T7)
    assert GF7.mul(err.value.witness, err.value.witness) == 2
    quartic = Poly(GF7, [1, 0, 1]) * Poly(GF7, [4, 0, 1])
    h = nonvanishing_map(quartic, 0, 5, None, T7)
    assert all(h((z,))[0] for z in range(7))
    cube = Poly(GF4, [0, 0, 0, 1])
    for c in (2, 3):
        assert GF4.pow(c, 1) != 1
        k = nonvanishing_map(cube, c, 1, None, T4)
        assert all(k((z,))[0] for z in range(4))


def test_nonvanishing_multivariate_argument():
    g = MultiPoly(GF7, 2, {(1, 1): 1, (0, 2): 3})
    h = nonvanishing_map(Poly(GF7, [0, 0, 1]), 3, 2, g, T7)
    assert all(h(z)[0] for z in grid(range(7), 2))


def test_invert_nonvanishing():
    f = nonvanishing_map(Poly(GF7, [0, 0, 1]), 3, 1, None, T7)
    inv = invert_nonvanishing(f)
    assert all(GF7.mul(f((z,))[0], inv((z,))[0]) == 1 for z in range(7))
    back = invert_nonvanishing(inv)
    assert all(back((z,)) == f((z,)) for z in range(7))
    const = ExprMap(Interpretation(T7, 1), (Const(3),))
    assert all(invert_nonvanishing(const)((z,)) == (5,) for z in range(7))
    with pytest.raises(ConstructionError) as err:
        invert_nonvanishing(ExprMap(Interpretation(T7, 1), (power(Var(0), 2),)))
    assert err.value.witness == (0,)


# matrices


def _is_perm_matrix(M):
    m = len(M)
    return (all(x in (0, 1) for row in M for x in row)
            and all(sum(row) == 1 for row in M)
            and all(sum(M[r][c] for r in range(m)) == 1 for c in range(m)))


def _matmul(dom, A, B):
    m = len(A)
    out = []
    for r in range(m):
        row = []
        for c in range(m):
            acc = 0
            for k in range(m):
                acc = dom.add(acc, dom.mul(A[r][k], B[k][c]))
            row.append(acc)
        out.append(row)
    return out


def test_permutation_matrix_m2():
    part = partition_from_discriminator(power(Var(0), 6), T7)
    P = parametric_permutation_matrix(part, lambda r, s: (r + s) % 2)
    for z in range(7):
        g0, g1 = part((z,))
        assert P.evaluate((z,)) == [[g0, g1], [g1, g0]]
    assert P.evaluate((3,)) == [[0, 1], [1, 0]]
    assert P.evaluate((0,)) == [[1, 0], [0, 1]]


def test_permutation_matrix_products_and_transposes():
    part = partition_from_discriminator(power(Var(0), 2), T7)
    sig = latin_index(part.k, row=[2, 0, 1, 3], outer=[1, 3, 0, 2])
    P = parametric_permutation_matrix(part, sig)
    Q = parametric_permutation_matrix(part)
    for M in (P, Q, P @ Q, Q @ P, P.transpose(), (P @ Q).transpose()):
        for z in range(7):
            assert _is_perm_matrix(M.evaluate((z,)))
    for z in range(7):
        A = P.evaluate((z,))
        assert (P.transpose()).evaluate((z,)) == [list(c) for c in zip(*A)]
        assert (P @ Q).evaluate((z,)) == _matmul(GF7, A, Q.evaluate((z,)))


def test_permutation_matrix_rejects_bad_sigma():
    part = partition_from_discriminator(power(Var(0), 6), T7)
    with pytest.raises(ConstructionError):
        parametric_permutation_matrix(part, lambda r, s: r)


def test_identity_matrix_self_inverse():
    I = parametric_invertible_matrix("general", [identity_matrix(T7, 1, 3)])
    for z in range(7):
        assert I.evaluate((z,)) == [[int(r == c) for c in range(3)] for r in range(3)]
        assert I.solve((z,), (1, 2, 3)) == (1, 2, 3)


def test_general_matrix_inverse_gf7():
    sq = ExprMap(Interpretation(T7, 1), (add(power(Var(0), 2), Const(1)),))
    low = triangular_factor(T7, 1, [sq, 2], {(1, 0): ExprMap(Interpretation(T7, 1), (Var(0),))})
    up = triangular_factor(T7, 1, [1, sq], {(0, 1): 4}, lower=False)
    M = parametric_invertible_matrix("general", [constant_permutation_factor(T7, 1, [1, 0]), low, up,
                                                 constant_permutation_factor(T7, 1, [0, 1])])
    for z in range(7):
        A = M.evaluate((z,))
        cols = [M.solve((z,), e) for e in ((1, 0), (0, 1))]
        Ainv = [[cols[c][r] for c in range(2)] for r in range(2)]
        assert _matmul(GF7, A, Ainv) == [[1, 0], [0, 1]]
        for x in product(range(7), repeat=2):
            assert M.solve((z,), M.apply((z,), x)) == x


def test_matrix_certify_rejects_vanishing_diagonal():
    with pytest.raises(ConstructionError) as err:
        parametric_invertible_matrix("general", [diagonal_factor(T7, 1, [ExprMap(Interpretation(T7, 1), (Var(0),)), 1])])
    assert err.value.witness == (0,)


def test_signature_safe_rejects_triangular():
    low = triangular_factor(T7, 1, [1, 1], {(1, 0): 3})
    with pytest.raises(ConstructionError, match="signature-safe"):
        parametric_invertible_matrix("signature-safe", [low])
    ok = parametric_invertible_matrix("signature-safe", [constant_permutation_factor(T7, 1, [1, 0]),
                                                         diagonal_factor(T7, 1, [3, 5])])
    assert ok.kind == "product"


def test_triangular_factor_side_check():
    with pytest.raises(ConstructionError):
        triangular_factor(T7, 1, [1, 1], {(0, 1): 3})


# parametric injections


def test_trivial_injection_is_identity():
    part = partition_from_discriminator(Const(1), T7)
    zeta = bijection_injection(T7, 1, [identity(T7)], range(7))
    eta = parametric_injection(part, [identity_matrix(T7, 1, 1)], [zeta])
    assert all(eta((z,), (x,)) == (x,) for z in range(7) for x in range(7))


def test_univariate_power_injection_gf8():
    # eta(z; x) = z^3 * x^(g(log z)), g(s) = s^2 + 1 has no root mod 7
    g = MultiPoly(T8.levels[1], 1, {(2,): 1, (0,): 1})
    f = ExprMap(Interpretation(T8, 1), (power(Var(0), 3),))
    eta = power_injection(T8, 1, [g], [f], UNITS8)
    for z in UNITS8:
        s = T8.port(0, z)
        e = (s * s + 1) % 7
        assert GF8.pow(GF8.generator, s) == z
        einv = pow(e, -1, 7)
        for x in UNITS8:
            y = GF8.mul(GF8.pow(z, 3), GF8.pow(x, e))
            assert eta((z,), (x,)) == (y,)
            assert eta.invert((z,), (y,)) == (GF8.pow(GF8.mul(GF8.inv(GF8.pow(z, 3)), y), einv),)
    assert eta.check()


def test_power_injection_rejects_non_unit_exponent():
    g = MultiPoly(T8.levels[1], 1, {(1,): 1})
    with pytest.raises(ConstructionError) as err:
        power_injection(T8, 1, [g], None, UNITS8)
    assert T8.port(0, err.value.witness[0]) == 0


def test_two_class_injection_gf7():
    part = partition_from_discriminator(power(Var(0), 3), T7)
    part2 = partition_from_discriminator(power(Var(0), 6), T7)
    assert part2.k == 2
    rng = random.Random(4)
    phis = [random_matrix(T7, 1, 2, rng, "field", grid(range(7), 1)) for _ in range(2)]
    zetas = [bijection_injection(T7, 1, [power_permutation(GF7, 5, T7), identity(T7)], range(7)),
             random_zeta(T7, 1, 2, rng, "field")]
    chis = [None, ExprMap(Interpretation(T7, 1), (Var(0), Const(2)))]
    eta = parametric_injection(part2, phis, zetas, chis)
    assert eta.check()
    pts = [(z, x0, x1) for z in range(7) for x0 in range(7) for x1 in range(7)]
    assert exhaustive_bijectivity(lambda p: (p[0],) + eta(p[:1], p[1:]), pts, pts).bijective
    assert part.k == 3


def test_dead_class_recorded_in_live_domain():
    part = partition_from_discriminator(power(Var(0), 6), T7)
    zeta = bijection_injection(T7, 1, [identity(T7)], range(7))
    b = Builder(T7, 2)
    dead = b.build([Const(4)])
    eta = parametric_injection(part, [identity_matrix(T7, 1, 1)] * 2, [zeta, dead], live=[0])
    assert eta.params == ((0,),)
    assert eta.check()
    assert len({eta((3,), (x,)) for x in range(7)}) == 1


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("tower,group", [(T7, "field"), (T8, "units")])
def test_random_injections_roundtrip(seed, tower, group):
    rng = random.Random(seed)
    l, m = rng.choice([(1, 1), (1, 2), (2, 1), (2, 2)])
    eta = random_parametric_injection(tower, l, m, rng, group)
    pts = domain_points(tower, group)
    assert len(eta.param_points()) * len(pts) ** m <= 2**16
    for z in eta.param_points():
        for x in grid(list(pts), m):
            y = eta(z, x)
            assert all(v in pts for v in y)
            assert eta.invert(z, y) == x


# triangular construction and hashing


def test_triangular_identity_components():
    hs = [bijection_injection(T8, 1, [identity(T8, UNITS8)], UNITS8) for _ in range(2)]
    ids = [identity(T8, UNITS8)] * 2
    tri = triangular_multivariate(ids, ids, hs, UNITS8)
    assert all(tri(x) == x for x in grid(UNITS8, 2))


def test_triangular_gf8_power_maps():
    g = MultiPoly(T8.levels[1], 1, {(2,): 1, (0,): 1})
    h1 = power_injection(T8, 1, [g], None, UNITS8)
    h2 = bijection_injection(T8, 1, [identity(T8, UNITS8)], UNITS8)
    fs = [power_permutation(GF8, 3, T8), power_permutation(GF8, 5, T8)]
    gs = [power_permutation(GF8, 2, T8), identity(T8, UNITS8)]
    tri = triangular_multivariate(fs, gs, [h1, h2], UNITS8)
    xs = grid(UNITS8, 2)
    assert exhaustive_bijectivity(tri, xs, xs).bijective
    assert all(tri.invert(tri(x)) == x for x in xs)
    # second coordinate: zeta_2 = f_2(x_2), first: h_1(zeta_2; f_1(x_1))
    for x1, x2 in xs:
        z2 = GF8.pow(x2, 5)
        e = (T8.port(0, z2) ** 2 + 1) % 7
        assert tri((x1, x2)) == (GF8.pow(GF8.pow(GF8.pow(x1, 3), e), 2), z2)


@pytest.mark.parametrize("m", [2, 3])
@pytest.mark.parametrize("tower", [T5, T8])
def test_random_triangular_roundtrip(tower, m):
    rng = random.Random(m)
    tri = random_triangular(tower, m, rng, "units")
    xs = grid(domain_points(tower, "units"), m)
    assert exhaustive_bijectivity(tri, xs, xs).bijective
    assert all(tri.invert(tri(x)) == x for x in xs)


def test_triangular_rejects_shape():
    h = bijection_injection(T8, 2, [identity(T8, UNITS8)], UNITS8)
    with pytest.raises(ValueError):
        triangular_multivariate([identity(T8, UNITS8)] * 2, [identity(T8, UNITS8)] * 2, [h, h], UNITS8)


def test_hash_extend():
    P = random_triangular(T8, 2, random.Random(2), "units").forward
    assert hash_extend(P, None, 2) is P
    cube = ExprMap(Interpretation(T8, 1), (power(Var(0), 3),))
    Q = hash_extend(P, cube, 1)
    assert len({Q((x,)) for x in UNITS8}) == 7
    assert all(Q((x,)) == P((GF8.pow(x, 3), x)) for x in UNITS8)
    const = ExprMap(Interpretation(T8, 1), (Const(5),))
    assert len({hash_extend(P, const, 1)((x,)) for x in UNITS8}) == 7
    with pytest.raises(ValueError):
        hash_extend(P, cube, 3)


@pytest.mark.parametrize("form", ["affine", "monomial"])
def test_multivariate_partitions(form):
    part = multivariate_partition(power(Var(0), 3), T7, 2, form)
    assert part.check() and part.k == 3
    rng = random.Random(9)
    pts = grid(range(7), 2)
    phis = [random_matrix(T7, 2, 1, rng, "field", pts) for _ in range(part.k)]
    zetas = [random_zeta(T7, 2, 1, rng, "field") for _ in range(part.k)]
    eta = parametric_injection(part, phis, zetas)
    assert eta.check()
