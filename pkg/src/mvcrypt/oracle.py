"""Brute-force validators: total enumeration over small grids, nothing clever."""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from itertools import product
from typing import Callable, Iterable, Sequence

GRID_CAP = 2**20


class GridCapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class DomainGrid:
    """Cartesian product of component domains, each repeated `arity` times."""

    components: tuple  # sequence of (domain values, arity)

    def __post_init__(self):
        if self.size > GRID_CAP:
            raise GridCapExceeded(f"grid of {self.size} points exceeds cap {GRID_CAP}")

    @classmethod
    def of(cls, domain: Iterable, arity: int) -> "DomainGrid":
        return cls(((tuple(domain), arity),))

    @classmethod
    def joint(cls, *parts: tuple) -> "DomainGrid":
        return cls(tuple((tuple(d), a) for d, a in parts))

    @property
    def size(self) -> int:
        n = 1
        for d, a in self.components:
            n *= len(d) ** a
        return n

    @property
    def arity(self) -> int:
        return sum(a for _, a in self.components)

    def __iter__(self):
        axes = [d for d, a in self.components for _ in range(a)]
        return product(*axes)

    def __len__(self) -> int:
        return self.size

    def shuffled(self, seed: int) -> list[tuple]:
        pts = list(self)
        random.Random(seed).shuffle(pts)
        return pts


@dataclass(frozen=True)
class Verdict:
    injective: bool
    surjective: bool | None
    witness: tuple | None  # two colliding inputs, or a missed codomain point
    image_size: int

    @property
    def bijective(self) -> bool:
        return self.injective and bool(self.surjective)


def exhaustive_bijectivity(f: Callable, grid: Iterable, codomain: Iterable | None = None) -> Verdict:
    """Collision scan; surjectivity is judged only when a codomain is given.

    The witness is the colliding pair whose first point comes earliest in
    grid order, so it does not depend on where the scan happens to stop.
    """
    seen: dict = {}  # value -> (grid index, point)
    best = None
    for i, x in enumerate(grid):
        y = f(x)
        if y in seen:
            j, first = seen[y]
            if best is None or j < best[0]:
                best = (j, (first, x))
            continue
        seen[y] = (i, x)
    if best is not None:
        return Verdict(False, None if codomain is None else False, best[1], len(seen))
    if codomain is None:
        return Verdict(True, None, None, len(seen))
    for y in codomain:
        if y not in seen:
            return Verdict(True, False, (y,), len(seen))
    return Verdict(True, True, None, len(seen))


def brute_force_invert(f: Callable, y, grid: Iterable) -> list:
    return [x for x in grid if f(x) == y]


def preimage_census(F: Callable, x_grid: Iterable, w_grid: Iterable, order_seed: int | None = None) -> dict:
    """(x, c) -> |{w : F(x, w) = c}|, optionally scanning in shuffled order."""
    xs, ws = list(x_grid), list(w_grid)
    if len(xs) * len(ws) > GRID_CAP:
        raise GridCapExceeded("census grid exceeds cap")
    pairs = [(x, w) for x in xs for w in ws]
    if order_seed is not None:
        random.Random(order_seed).shuffle(pairs)
    counts: Counter = Counter()
    for x, w in pairs:
        counts[(x, F(x, w))] += 1
    return dict(sorted(counts.items()))


def census_spread(census: dict) -> dict:
    """x -> number of distinct values F(x, .) takes."""
    out: Counter = Counter()
    for x, _ in census:
        out[x] += 1
    return dict(out)


def exhaustive_solve(
    system: Sequence[Callable],
    independent: Iterable,
    dependent: Iterable,
    zero=0,
) -> dict:
    """For each independent assignment u, all dependent v with e(u, v) = zero for every e."""
    deps = list(dependent)
    indep = list(independent)
    if len(deps) * max(len(indep), 1) > GRID_CAP:
        raise GridCapExceeded("solver grid exceeds cap")
    out = {}
    for u in indep or [()]:
        out[u] = [v for v in deps if all(e(u, v) == zero for e in system)]
    return out
