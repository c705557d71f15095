"""Exact arithmetic over Z_n and GF(p^n), plus exponent porting.

Ring elements are canonical residues in [0, n).  Field elements are integers
in [0, p^n) whose base-p digits are polynomial coefficients, least
significant digit first.  Every domain object exposes the same small ring
interface (add, sub, mul, neg, pow, inv, is_unit, elements) so polynomials
and expressions can be written once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import gcd, prod
from typing import Sequence


class DomainError(ValueError):
    """Raised for values outside an operation's domain (e.g. log of zero)."""


class InvertibilityError(DomainError):
    """Raised when a non-unit is inverted or raised to a non-constant power."""


def factorize(n: int) -> list[tuple[int, int]]:
    """Trial division into (prime, exponent) pairs, primes ascending."""
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1 if d == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out


def is_prime(n: int) -> bool:
    return n >= 2 and factorize(n) == [(n, 1)]


def totient(n: int) -> int:
    return prod((p - 1) * p ** (l - 1) for p, l in factorize(n)) if n > 1 else 1


def primitive_root(p: int) -> int:
    """Smallest generator of Z_p^* (p prime)."""
    if p == 2:
        return 1
    cof = [(p - 1) // q for q, _ in factorize(p - 1)]
    for g in range(2, p):
        if all(pow(g, c, p) != 1 for c in cof):
            return g
    raise AssertionError("no primitive root")  # unreachable for prime p


# --------------------------------------------------------------------------
# Z_n


@dataclass(frozen=True, eq=False)
class ModulusSpec:
    """Z_n with its prime-power factorization and CRT idempotents."""

    n: int
    factors: tuple[tuple[int, int], ...]
    idempotents: tuple[int, ...]
    totient: int

    kind = "ring"

    def __eq__(self, other):
        return isinstance(other, ModulusSpec) and other.n == self.n

    def __hash__(self):
        return hash(("ring", self.n))

    def __repr__(self):
        return f"Z_{self.n}"

    @property
    def size(self) -> int:
        return self.n

    @property
    def moduli(self) -> tuple[int, ...]:
        return tuple(p**l for p, l in self.factors)

    @property
    def zero(self) -> int:
        return 0

    @property
    def one(self) -> int:
        return 1 % self.n

    def elements(self) -> range:
        return range(self.n)

    def units(self) -> list[int]:
        return [x for x in range(self.n) if gcd(x, self.n) == 1]

    def reduce(self, k: int) -> int:
        return k % self.n

    def contains(self, x) -> bool:
        return isinstance(x, int) and 0 <= x < self.n

    def add(self, a, b):
        return (a + b) % self.n

    def sub(self, a, b):
        return (a - b) % self.n

    def neg(self, a):
        return -a % self.n

    def mul(self, a, b):
        return a * b % self.n

    def pow(self, a, k: int):
        if k < 0:
            return pow(self.inv(a), -k, self.n)
        return pow(a, k, self.n)

    def is_unit(self, a) -> bool:
        return gcd(a, self.n) == 1

    def inv(self, a):
        if gcd(a, self.n) != 1:
            raise InvertibilityError(f"{a} is not a unit mod {self.n}")
        return pow(a, -1, self.n)

    @property
    def inverse_exponent(self) -> int:
        """k with u^k = u^-1 for every unit u."""
        return self.totient - 1


def factor_modulus(n: int) -> ModulusSpec:
    if not isinstance(n, int) or n < 2:
        raise DomainError(f"modulus must be an integer >= 2, got {n!r}")
    factors = tuple(factorize(n))
    idem = []
    for p, l in factors:
        pl = p**l
        q = n // pl
        idem.append((pow(q, -1, pl) * q) % n)
    return ModulusSpec(n, factors, tuple(idem), totient(n))


def crt_split(x: int, spec: ModulusSpec) -> tuple[int, ...]:
    return tuple(x % m for m in spec.moduli)


def crt_join(residues: Sequence[int], spec: ModulusSpec) -> int:
    if len(residues) != len(spec.factors):
        raise DomainError("residue count does not match factor count")
    total = 0
    for r, m, e in zip(residues, spec.moduli, spec.idempotents):
        if not (0 <= r < m):
            raise DomainError(f"residue {r} out of range for modulus {m}")
        total += e * r
    return total % spec.n


# --------------------------------------------------------------------------
# GF(p^n)


def _digits(a: int, p: int, n: int) -> list[int]:
    out = []
    for _ in range(n):
        a, d = divmod(a, p)
        out.append(d)
    return out


def _undigits(ds: Sequence[int], p: int) -> int:
    v = 0
    for d in reversed(ds):
        v = v * p + d
    return v


def _polymulmod(a: int, b: int, p: int, mod: Sequence[int]) -> int:
    """Multiply two packed elements modulo a monic polynomial (low first)."""
    n = len(mod) - 1
    x, y = _digits(a, p, n), _digits(b, p, n)
    prodc = [0] * (2 * n - 1) if n else [0]
    for i, xi in enumerate(x):
        if xi:
            for j, yj in enumerate(y):
                prodc[i + j] = (prodc[i + j] + xi * yj) % p
    for k in range(len(prodc) - 1, n - 1, -1):
        c = prodc[k]
        if c:
            for j in range(n + 1):
                prodc[k - n + j] = (prodc[k - n + j] - c * mod[j]) % p
    return _undigits(prodc[:n], p)


def _poly_divides(d: Sequence[int], f: Sequence[int], p: int) -> bool:
    """True if monic d divides f over Z_p (lists low first)."""
    r = list(f)
    dd = len(d) - 1
    for k in range(len(r) - 1, dd - 1, -1):
        c = r[k] % p
        if c:
            for j in range(dd + 1):
                r[k - dd + j] = (r[k - dd + j] - c * d[j]) % p
    return not any(x % p for x in r[:dd])


def is_irreducible(p: int, poly: Sequence[int]) -> bool:
    """Exhaustive test: no monic factor of degree 1..deg/2 divides poly."""
    n = len(poly) - 1
    if n < 1:
        return False
    for d in range(1, n // 2 + 1):
        for low in range(p**d):
            cand = _digits(low, p, d) + [1]
            if _poly_divides(cand, poly, p):
                return False
    return True


@dataclass(frozen=True, eq=False)
class FieldSpec:
    """GF(p^n) with a fixed generator and eager exp/log tables."""

    p: int
    n: int
    modulus_poly: tuple[int, ...]
    generator: int
    log_table: dict = field(repr=False)
    exp_table: tuple = field(repr=False)

    kind = "field"

    def __eq__(self, other):
        return (
            isinstance(other, FieldSpec)
            and (other.p, other.n, other.modulus_poly, other.generator)
            == (self.p, self.n, self.modulus_poly, self.generator)
        )

    def __hash__(self):
        return hash(("field", self.p, self.n, self.modulus_poly, self.generator))

    def __repr__(self):
        return f"GF({self.p}^{self.n})"

    @property
    def q(self) -> int:
        return self.p**self.n

    size = q

    @property
    def order(self) -> int:
        """Size of the multiplicative group."""
        return self.q - 1

    @property
    def zero(self) -> int:
        return 0

    @property
    def one(self) -> int:
        return 1

    def elements(self) -> range:
        return range(self.q)

    def units(self) -> list[int]:
        return list(range(1, self.q))

    def reduce(self, k: int) -> int:
        return k % self.p

    def contains(self, x) -> bool:
        return isinstance(x, int) and 0 <= x < self.q

    @cached_property
    def _place(self) -> tuple[int, ...]:
        return tuple(self.p**i for i in range(self.n))

    def add(self, a, b):
        if self.p == 2:
            return a ^ b
        if self.n == 1:
            return (a + b) % self.p
        p, v, s = self.p, 0, 1
        for _ in range(self.n):
            a, da = divmod(a, p)
            b, db = divmod(b, p)
            v += ((da + db) % p) * s
            s *= p
        return v

    def neg(self, a):
        if self.p == 2:
            return a
        if self.n == 1:
            return -a % self.p
        p, v, s = self.p, 0, 1
        for _ in range(self.n):
            a, da = divmod(a, p)
            v += (-da % p) * s
            s *= p
        return v

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        if a == 0 or b == 0:
            return 0
        lt = self.log_table
        return self.exp_table[(lt[a] + lt[b]) % self.order]

    def pow(self, a, k: int):
        if a == 0:
            if k > 0:
                return 0
            if k == 0:
                return 1
            raise InvertibilityError("0 has no inverse")
        return self.exp_table[(self.log_table[a] * k) % self.order]

    def is_unit(self, a) -> bool:
        return a != 0

    def inv(self, a):
        if a == 0:
            raise InvertibilityError("0 has no inverse")
        return self.exp_table[-self.log_table[a] % self.order]

    @property
    def inverse_exponent(self) -> int:
        return self.q - 2

    def scalar(self, k: int) -> int:
        """Image of the integer k in the prime subfield."""
        return k % self.p


def field_make(p: int, n: int, modulus_poly: Sequence[int] | None = None) -> FieldSpec:
    """Build GF(p^n); modulus_poly is low-first and monic of degree n.

    When modulus_poly is omitted, the first irreducible monic polynomial in
    encoding order is used.
    """
    if not is_prime(p):
        raise DomainError(f"{p} is not prime")
    if n < 1:
        raise DomainError("extension degree must be >= 1")
    if modulus_poly is None:
        modulus_poly = first_irreducible(p, n)
    mod = tuple(int(c) % p for c in modulus_poly)
    if len(mod) != n + 1 or mod[-1] != 1:
        raise DomainError("modulus polynomial must be monic of degree n")
    if not is_irreducible(p, mod):
        raise DomainError(f"modulus polynomial {mod} is reducible over Z_{p}")
    q = p**n
    order = q - 1
    cof = [order // r for r, _ in factorize(order)] if order > 1 else []

    def powmod(a, k):
        r, base = 1, a
        while k:
            if k & 1:
                r = _polymulmod(r, base, p, mod)
            base = _polymulmod(base, base, p, mod)
            k >>= 1
        return r

    gen = None
    for cand in range(1, q):
        if all(powmod(cand, c) != 1 for c in cof):
            gen = cand
            break
    if gen is None:
        raise AssertionError("no generator found")  # impossible for a field
    exp = [1] * order
    for i in range(1, order):
        exp[i] = _polymulmod(exp[i - 1], gen, p, mod)
    log = {v: i for i, v in enumerate(exp)}
    if len(log) != order:
        raise AssertionError("generator order check failed")
    return FieldSpec(p, n, mod, gen, log, tuple(exp))


def first_irreducible(p: int, n: int) -> tuple[int, ...]:
    if n == 1:
        return (0, 1)
    for low in range(p**n):
        cand = _digits(low, p, n) + [1]
        if cand[0] and is_irreducible(p, cand):
            return tuple(cand)
    raise AssertionError("no irreducible polynomial")


def discrete_log(spec: FieldSpec, g: int) -> int:
    if g == 0:
        raise DomainError("log of zero")
    return spec.log_table[g]


# --------------------------------------------------------------------------
# exponent porting


class ZeroRing:
    """The one-element ring; exponent domain of Z_2^* and GF(2)^*."""

    kind = "zero"
    size = 1
    n = 1
    zero = one = 0
    totient = 1
    inverse_exponent = 0

    def __eq__(self, other):
        return isinstance(other, ZeroRing)

    def __hash__(self):
        return hash("zero")

    def __repr__(self):
        return "Z_1"

    def elements(self):
        return range(1)

    def units(self):
        return [0]

    def reduce(self, k):
        return 0

    def contains(self, x):
        return x == 0

    def add(self, a, b):
        return 0

    sub = mul = add

    def neg(self, a):
        return 0

    def pow(self, a, k):
        return 0

    def is_unit(self, a):
        return True

    def inv(self, a):
        return 0


@dataclass(frozen=True, eq=False)
class ProductRing:
    """Direct product of rings; elements are tuples, operations componentwise."""

    components: tuple

    kind = "product"

    def __eq__(self, other):
        return isinstance(other, ProductRing) and other.components == self.components

    def __hash__(self):
        return hash(("product", self.components))

    def __repr__(self):
        return " x ".join(map(repr, self.components))

    @property
    def size(self) -> int:
        return prod(c.size for c in self.components)

    @property
    def zero(self):
        return tuple(c.zero for c in self.components)

    @property
    def one(self):
        return tuple(c.one for c in self.components)

    def elements(self):
        from itertools import product

        return product(*(c.elements() for c in self.components))

    def reduce(self, k):
        if isinstance(k, tuple):
            return tuple(c.reduce(x) for c, x in zip(self.components, k))
        return tuple(c.reduce(k) for c in self.components)

    def contains(self, x) -> bool:
        return (
            isinstance(x, tuple)
            and len(x) == len(self.components)
            and all(c.contains(v) for c, v in zip(self.components, x))
        )

    def add(self, a, b):
        return tuple(c.add(x, y) for c, x, y in zip(self.components, a, b))

    def sub(self, a, b):
        return tuple(c.sub(x, y) for c, x, y in zip(self.components, a, b))

    def neg(self, a):
        return tuple(c.neg(x) for c, x in zip(self.components, a))

    def mul(self, a, b):
        return tuple(c.mul(x, y) for c, x, y in zip(self.components, a, b))

    def pow(self, a, k: int):
        return tuple(c.pow(x, k) for c, x in zip(self.components, a))

    def is_unit(self, a) -> bool:
        return all(c.is_unit(x) for c, x in zip(self.components, a))

    def inv(self, a):
        return tuple(c.inv(x) for c, x in zip(self.components, a))


@dataclass(frozen=True)
class PortComponent:
    """How one CRT factor p^l of Z_n is ported to the exponent level.

    mode "hom": h(x) = (p-1) * ((w*x) mod p^(l-1)) in Z_phi(p^l).
    mode "log": Z_p treated as a field, x -> log_root(x mod p) in Z_(p-1).
    """

    p: int
    l: int
    mode: str
    w: int = 0
    root: int = 0

    @property
    def target_modulus(self) -> int:
        return (self.p - 1) * self.p ** (self.l - 1)

    def __call__(self, x: int) -> int:
        if self.mode == "hom":
            pl1 = self.p ** (self.l - 1)
            return (self.p - 1) * ((self.w * x) % pl1) % self.target_modulus
        r = x % self.p
        if r == 0:
            raise DomainError("log of zero in prime component")
        return _zp_log(self.p, self.root)[r]


_ZP_LOGS: dict[tuple[int, int], dict[int, int]] = {}


def _zp_log(p: int, root: int) -> dict[int, int]:
    key = (p, root)
    if key not in _ZP_LOGS:
        tab, v = {}, 1
        for i in range(p - 1):
            tab[v] = i
            v = v * root % p
        if len(tab) != p - 1:
            raise DomainError(f"{root} is not a primitive root mod {p}")
        _ZP_LOGS[key] = tab
    return _ZP_LOGS[key]


@dataclass(frozen=True)
class PortingMap:
    """Map Z_n -> prod Z_phi(p_i^l_i); hybrid when some component uses logs."""

    spec: ModulusSpec
    components: tuple[PortComponent, ...]

    @property
    def is_hybrid(self) -> bool:
        return any(c.mode == "log" for c in self.components)

    @property
    def target_moduli(self) -> tuple[int, ...]:
        return tuple(c.target_modulus for c in self.components)

    def __call__(self, x: int) -> tuple[int, ...]:
        return tuple(c(x) for c in self.components)


def exponent_port_hom(spec: ModulusSpec, roots: dict[int, int] | None = None) -> PortingMap:
    """Porting map for Z_n; factors with l = 1 fall back to discrete logs.

    roots optionally fixes the primitive root per prime for those factors;
    the smallest primitive root is the default.
    """
    roots = roots or {}
    comps = []
    for p, l in spec.factors:
        if l >= 2:
            w = pow(p - 1, -1, p ** (l - 1)) if p ** (l - 1) > 1 else 0
            comps.append(PortComponent(p, l, "hom", w=w))
        else:
            root = roots.get(p, primitive_root(p))
            _zp_log(p, root)
            comps.append(PortComponent(p, 1, "log", root=root))
    return PortingMap(spec, tuple(comps))
