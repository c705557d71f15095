import pytest

from mvcrypt.algebra import factor_modulus, field_make
from mvcrypt.oracle import (
    DomainGrid,
    GridCapExceeded,
    brute_force_invert,
    census_spread,
    exhaustive_bijectivity,
    exhaustive_solve,
    preimage_census,
)
from mvcrypt.poly import Poly

GF7 = field_make(7, 1)


def test_square_on_gf7_collides():
    v = exhaustive_bijectivity(lambda x: GF7.mul(x, x), range(7))
    assert not v.injective and v.witness == (1, 6)


def test_bijection_verdict():
    v = exhaustive_bijectivity(lambda x: GF7.pow(x, 5), range(7), range(7))
    assert v.bijective and v.image_size == 7
    v = exhaustive_bijectivity(lambda x: x, range(3), range(4))
    assert v.injective and not v.surjective and v.witness == (3,)


def test_brute_force_invert():
    f = Poly(factor_modulus(9), [0, 1, 3])
    assert brute_force_invert(f, 4, range(9)) == [1]
    assert brute_force_invert(lambda x: GF7.mul(x, x), 3, range(7)) == []


def test_grid_shape_and_cap():
    g = DomainGrid.joint((range(3), 2), ((0, 1), 1))
    assert g.size == 18 and g.arity == 3 and len(list(g)) == 18
    assert sorted(g.shuffled(5)) == sorted(g)
    with pytest.raises(GridCapExceeded):
        DomainGrid.of(range(256), 3)


def test_census_is_order_independent():
    F = lambda x, w: ((x[0] * w[0] + w[1]) % 5,)  # noqa: E731
    xs = list(DomainGrid.of(range(5), 1))
    ws = list(DomainGrid.of(range(5), 2))
    base = preimage_census(F, xs, ws)
    assert all(preimage_census(F, xs, ws, seed) == base for seed in range(4))
    assert sum(base.values()) == 125
    assert census_spread(base) == {x: 5 for x in xs}


def test_exhaustive_solve():
    sols = exhaustive_solve([lambda u, v: GF7.sub(GF7.mul(v[0], v[0]), v[0])], [()], [(v,) for v in range(7)])
    assert sols == {(): [(0,), (1,)]}
    bad = [lambda u, v: GF7.sub(v[0], 1), lambda u, v: GF7.sub(v[0], 2)]
    assert exhaustive_solve(bad, [()], [(v,) for v in range(7)]) == {(): []}
    # x + y = u over GF(7): exactly one y per (u, x)
    eqs = [lambda u, v: GF7.sub(GF7.add(u[0], v[0]), v[1])]
    sols = exhaustive_solve(eqs, [(u,) for u in range(7)], list(DomainGrid.of(range(7), 2)))
    assert all(len(s) == 7 for s in sols.values())
