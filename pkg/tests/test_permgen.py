import random

import pytest
from hypothesis import given, settings, strategies as st

from mvcrypt.algebra import factor_modulus, field_make
from mvcrypt.expr import ExprMap, Interpretation, Tower, Var, add, power
from mvcrypt.oracle import brute_force_invert, exhaustive_bijectivity
from mvcrypt.parametric import ConstructionError, partition_from_discriminator
from mvcrypt.permgen import (
    PermutationRejected,
    admissible_splits,
    binomial_permutation,
    default_lambdas,
    from_maps,
    hensel_bijection,
    hensel_invert,
    hybrid_perm_method1,
    hybrid_perm_method2,
    identity,
    lift_poly,
    linearized_permutation,
    p2_permutation,
    perm_poly_zp_method1,
    perm_poly_zp_method2,
    power_permutation,
    subgroup_bijection,
)
from mvcrypt.poly import Poly, is_bijective_mod_pl

GF4, GF7, GF8, GF9, GF16 = (field_make(2, 2), field_make(7, 1), field_make(2, 3), field_make(3, 2),
                            field_make(2, 4))


def kernel_size(spec, fn):
    return sum(1 for z in range(spec.q) if fn(z) == 0)


def test_linearized_examples():
    frob = linearized_permutation(GF8, [0, 1])
    assert frob(2) == 4 and frob.check()
    with pytest.raises(PermutationRejected) as err:
        linearized_permutation(GF8, [1, 1, 1])
    z = err.value.witness
    assert GF8.add(GF8.add(z, GF8.pow(z, 2)), GF8.pow(z, 4)) == 0
    # oracle: the trace map kills exactly half of GF(8)
    assert kernel_size(GF8, lambda z: GF8.add(GF8.add(z, GF8.pow(z, 2)), GF8.pow(z, 4))) == 4
    ident = linearized_permutation(GF4, [1])
    assert [ident(z) for z in range(4)] == [0, 1, 2, 3]


def test_linearized_inverse_is_a_program():
    rng = random.Random(1)
    for _ in range(20):
        cs = [rng.randrange(16) for _ in range(4)]
        try:
            b = linearized_permutation(GF16, cs)
        except PermutationRejected:
            continue
        assert b.strategy == "closed-form"
        for y in range(16):
            assert b.inverse_map((y,))[0] == brute_force_invert(lambda x: b(x), y, range(16))[0]


def test_power_examples():
    cube = power_permutation(GF8, 3)
    assert cube(2) == 3 and cube.check()
    assert [power_permutation(GF8, 1)(z) for z in range(8)] == list(range(8))
    with pytest.raises(PermutationRejected):
        power_permutation(GF7, 3)


@pytest.mark.parametrize("spec", [GF4, GF9])
def test_binomial_acceptance_matches_kernel_scan(spec):
    accepted = []
    for a in range(spec.q):
        try:
            b = binomial_permutation(spec, 1, a)
            assert b.check()
            accepted.append(a)
        except PermutationRejected as err:
            assert err.witness is not None
    scan = [a for a in range(spec.q)
            if kernel_size(spec, lambda z: spec.sub(spec.pow(z, spec.p), spec.mul(a, z))) == 1]
    assert accepted == scan
    if spec is GF9:
        assert accepted == [a for a in range(9) if GF9.pow(a, 4) != 1]


def test_binomial_zero_is_frobenius():
    b = binomial_permutation(GF9, 1, 0)
    assert [b(z) for z in range(9)] == [GF9.pow(z, 3) for z in range(9)]


def _method_checks(p, perm, f):
    d = f.derivative()
    assert [f(i) for i in range(p)] == list(perm)
    assert all(d(i) % p for i in range(p))


def test_method1_examples():
    z3 = factor_modulus(3)
    f = perm_poly_zp_method1(3, [0, 1, 2])
    _method_checks(3, [0, 1, 2], f)
    assert f.derivative() == Poly(z3, [1])
    f = perm_poly_zp_method1(3, [1, 2, 0])
    _method_checks(3, [1, 2, 0], f)
    rng = random.Random(5)
    perm = list(range(5))
    rng.shuffle(perm)
    g = Poly(factor_modulus(5), [2])
    f = perm_poly_zp_method1(5, perm, g)
    _method_checks(5, perm, f)
    assert f.derivative() == g
    assert f.degree <= 20


def test_method1_nonconstant_derivative():
    z7 = factor_modulus(7)
    g = Poly(z7, [1, 0, 1])  # x^2 + 1 has no root mod 7
    perm = [3, 1, 4, 0, 6, 5, 2]
    f = perm_poly_zp_method1(7, perm, g)
    _method_checks(7, perm, f)
    assert f.derivative() == g


def test_method1_rejects_vanishing_g():
    with pytest.raises(ConstructionError):
        perm_poly_zp_method1(5, [0, 1, 2, 3, 4], Poly(factor_modulus(5), [0, 1]))
    with pytest.raises(ConstructionError):
        perm_poly_zp_method1(37, list(range(37)))


def test_method2_examples():
    f = perm_poly_zp_method2(3, [0, 2, 1])
    assert f.degree <= 4
    _method_checks(3, [0, 2, 1], f)
    assert {f.derivative()(i) for i in range(3)} <= {1, 2}
    rng = random.Random(11)
    for _ in range(100):
        perm = list(range(5))
        rng.shuffle(perm)
        f = perm_poly_zp_method2(5, perm)
        assert f.degree <= 8
        _method_checks(5, perm, f)
        assert sum(f.derivative()(i) for i in range(5)) % 5 == 0


def test_method2_lambda_rules():
    lam = default_lambdas(7)
    assert sum(lam) % 7 == 0 and len(set(lam)) <= 6
    with pytest.raises(ConstructionError):
        perm_poly_zp_method2(5, [0, 1, 2, 3, 4], [0, 1, 2, 3, 4])  # all residues used
    with pytest.raises(ConstructionError):
        perm_poly_zp_method2(5, [0, 1, 2, 3, 4], [1, 0, 0, 0, 0])  # sum not zero
    f = perm_poly_zp_method2(5, [4, 3, 2, 1, 0], [1, 1, 1, 1, 1])
    # sigma is the smallest residue outside {1}: 0, so f'(i) = 1 everywhere
    assert all(f.derivative()(i) == 1 for i in range(5))


def test_p2_examples():
    assert p2_permutation(3, [0, 1]).table() == list(range(8))
    with pytest.raises(PermutationRejected, match="even"):
        p2_permutation(3, [0, 1, 1])
    f = p2_permutation(3, [0, 1, 2])
    assert sorted(f.table()) == list(range(8))


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6), st.lists(st.integers(0, 63), min_size=1, max_size=7))
def test_p2_conditions_match_exhaustive_scan(l, coeffs):
    m = 2**l
    f = Poly(factor_modulus(m), coeffs)
    bijective = len(set(f.table())) == m
    try:
        p2_permutation(l, coeffs)
        accepted = True
    except PermutationRejected:
        accepted = False
    assert accepted == bijective


def test_hensel_examples():
    z9 = factor_modulus(9)
    f = Poly(z9, [0, 1, 3])
    assert hensel_invert(f, 4) == 1
    assert brute_force_invert(f, 4, range(9)) == [1]
    z81 = factor_modulus(81)
    f = Poly(z81, [0, 1, 3])
    assert all(hensel_invert(f, f(x)) == x for x in range(81))
    ident = Poly(factor_modulus(125), [0, 1])
    assert all(hensel_invert(ident, y) == y for y in range(125))


def test_hensel_trace_asserts_each_step():
    f = Poly(factor_modulus(3**4), [2, 1, 3, 9])
    trace = []
    y = 50
    x = hensel_invert(f, y, trace=trace)
    assert [r for r, _ in trace] == [2, 4]
    for r, xr in trace:
        assert (f(xr) - y) % 3**r == 0
    assert f(x) == y


def test_hensel_rejects_non_bijective():
    with pytest.raises(ConstructionError):
        hensel_invert(Poly(factor_modulus(9), [0, 0, 1]), 4)


def test_hensel_lifts_of_method_polys():
    rng = random.Random(3)
    for p, l in [(3, 3), (5, 2)]:
        perm = list(range(p))
        rng.shuffle(perm)
        f = lift_poly(perm_poly_zp_method1(p, perm), l, [rng.randrange(p) for _ in range(4)])
        assert is_bijective_mod_pl(f, p, l)
        b = hensel_bijection(f)
        assert b.strategy == "hensel" and b.check()


def test_subgroup_no_split_for_prime_order():
    assert admissible_splits(GF8) == []
    with pytest.raises(ConstructionError, match="no admissible split"):
        subgroup_bijection(GF8, 7, 1, [0, 1])


def test_subgroup_gf16():
    H5 = sorted(x for x in range(1, 16) if GF16.pow(x, 5) == 1)
    b = subgroup_bijection(GF16, 3, 5, [0, 2])
    assert list(b.domain) == H5 and b.check()
    assert exhaustive_bijectivity(b, H5, H5).bijective
    ident = subgroup_bijection(GF16, 3, 5, [0, 1])
    assert all(ident(x) == x for x in H5)


def test_subgroup_shift_beyond_t():
    # s = 5 > t = 3: keeping 5 Z_15 invariant needs the shift 4, outside 0..t-1
    b = subgroup_bijection(GF16, 5, 3, [1, 1])
    assert b.poly.coeff(0) == 5 and b.check()
    b = subgroup_bijection(GF16, 3, 5, [1, 1])
    assert b.poly.coeff(0) == 3 and b.check()


def _gf7_cube_partition():
    T = Tower(GF7)
    return T, partition_from_discriminator(power(Var(0), 3), T)


def test_hybrid_method1_gf7():
    T, part = _gf7_cube_partition()
    assert [sorted(z[0] for z in c) for c in part.classes] == [[0], [1, 2, 4], [3, 5, 6]]
    ident = Poly(GF7, [0, 1])
    times3, times5 = Poly(GF7, [0, 3]), Poly(GF7, [0, 5])
    chi = hybrid_perm_method1(part, [0, 2, 1], [ident, times3, times5], [ident, times5, times3], identity(T))
    assert exhaustive_bijectivity(chi, range(7), range(7)).bijective
    assert all(chi.inverse(chi(x)) == x for x in range(7))
    assert chi(1) == 3


def test_hybrid_method1_trivial_cases():
    T, part = _gf7_cube_partition()
    eta = power_permutation(GF7, 5, T)
    ident = Poly(GF7, [0, 1])
    chi = hybrid_perm_method1(part, [0, 1, 2], [ident] * 3, [ident] * 3, eta)
    assert all(chi(x) == eta(x) for x in range(7))
    one = partition_from_discriminator(ExprMap(Interpretation(T, 1), (power(Var(0), 6),)), T,
                                       values=[0, 1])
    chi = hybrid_perm_method1(one, [0, 1], [ident] * 2, [ident] * 2, eta)
    assert all(chi(x) == eta(x) for x in range(7))


def test_hybrid_method1_rejects_bad_class_map():
    T, part = _gf7_cube_partition()
    ident = Poly(GF7, [0, 1])
    with pytest.raises(ConstructionError):
        hybrid_perm_method1(part, [0, 2, 1], [ident] * 3, [ident] * 3, identity(T))


def _gf9_method2_setup():
    T = Tower(GF9)
    recip = from_maps(ExprMap(Interpretation(T, 1), (power(Var(0), 7),)),
                      ExprMap(Interpretation(T, 1), (power(Var(0), 7),)), range(1, 9), "recip")
    ident = identity(T, range(1, 9))
    h = ExprMap(Interpretation(T, 1), (add(Var(0), power(Var(0), 7)),))
    part = partition_from_discriminator(power(Var(0), 8), T)
    return T, recip, ident, h, part


def test_hybrid_method2_gf9():
    T, recip, ident, h, part = _gf9_method2_setup()
    eta = power_permutation(GF9, 3, T)
    for sigma in ([0, 1], [1, 0]):
        zeta = hybrid_perm_method2([recip, ident], h, sigma, part, eta, range(1, 9))
        assert exhaustive_bijectivity(zeta, range(1, 9), range(1, 9)).bijective
        assert all(zeta.inverse(zeta(x)) == x for x in range(1, 9))


def test_hybrid_method2_single_class_and_identity():
    T, recip, ident, h, _ = _gf9_method2_setup()
    eta = power_permutation(GF9, 3, T)
    single = partition_from_discriminator(ExprMap(Interpretation(T, 1), (power(Var(0), 0),)), T)
    zeta = hybrid_perm_method2([recip], h, [0], single, eta, range(1, 9))
    assert all(zeta(x) == eta(recip(x)) for x in range(1, 9))
    part = partition_from_discriminator(power(Var(0), 8), T)
    zeta = hybrid_perm_method2([ident, ident], h, [0, 1], part, identity(T), range(1, 9))
    assert all(zeta(x) == x for x in range(1, 9))


def test_hybrid_method2_invariance_witness():
    T, recip, ident, _, part = _gf9_method2_setup()
    h = ExprMap(Interpretation(T, 1), (Var(0),))
    with pytest.raises(ConstructionError) as err:
        hybrid_perm_method2([recip, ident], h, [0, 1], part, identity(T), range(1, 9))
    x = err.value.witness
    assert recip(x) != x


def test_every_product_passes_oracle():
    products = [
        linearized_permutation(GF16, [3, 0, 1]),
        power_permutation(GF16, 7),
        binomial_permutation(GF9, 1, 4),
        subgroup_bijection(GF16, 3, 5, [2, 4]),
        hensel_bijection(Poly(factor_modulus(27), [1, 1, 3])),
    ]
    for b in products:
        v = exhaustive_bijectivity(b, b.domain, b.domain)
        assert v.bijective, (b.label, v.witness)
        for y in b.domain:
            assert brute_force_invert(b, y, b.domain) == [b.inverse(y)]
