"""Level-tagged expression trees with exponent towers.

Level 0 is the base domain (a field or Z_n).  The exponent of a Pow node
lives one level up: Z_(q-1) over GF(q) via discrete logs, or the product of
Z_phi(p^l) over Z_n via the porting map.  Variables referenced at a level
above their own are ported automatically.

An ExprMap is a straight-line program: inputs, let-bound supplementary
variables, and output expressions.  Composition inlines one program into
another, so shared subterms are evaluated once.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Sequence, Union

from .algebra import (
    DomainError,
    FieldSpec,
    InvertibilityError,
    ModulusSpec,
    ProductRing,
    ZeroRing,
    crt_join,
    crt_split,
    discrete_log,
    exponent_port_hom,
    factor_modulus,
    field_make,
)

MAX_DEPTH = 3


class StructuralError(ValueError):
    """Level or arity mismatch in an expression."""


# --------------------------------------------------------------------------
# tower of level domains


def _ring(m: int):
    return factor_modulus(m) if m > 1 else ZeroRing()


def _next_level(dom, roots):
    """(exponent domain, port, pow_ported) for dom, or None if trivial."""
    if isinstance(dom, ZeroRing):
        return None
    if isinstance(dom, FieldSpec):
        nxt = factor_modulus(dom.order) if dom.order > 1 else ZeroRing()

        def port(v, dom=dom):
            return discrete_log(dom, v)

        return nxt, port, dom.pow
    if isinstance(dom, ModulusSpec):
        pm = exponent_port_hom(dom, roots)
        targets = pm.target_moduli
        if len(targets) == 1:
            nxt = _ring(targets[0])
            n = dom.n

            def port1(v, pm=pm):
                return pm(v)[0]

            def powp1(a, e, n=n):
                return pow(a, e, n)

            return nxt, port1, powp1
        nxt = ProductRing(tuple(_ring(t) for t in targets))

        def powpn(a, e, dom=dom):
            parts = crt_split(a, dom)
            return crt_join([pow(c, k, m) for c, k, m in zip(parts, e, dom.moduli)], dom)

        return nxt, pm, powpn
    if isinstance(dom, ProductRing):
        subs = [_next_level(c, roots) for c in dom.components]
        if any(s is None for s in subs):
            return None
        nxt = ProductRing(tuple(s[0] for s in subs))
        ports = [s[1] for s in subs]
        pows = [s[2] for s in subs]

        def portp(v, ports=ports):
            return tuple(f(x) for f, x in zip(ports, v))

        def powpp(a, e, pows=pows):
            return tuple(f(x, k) for f, x, k in zip(pows, a, e))

        return nxt, portp, powpp
    raise TypeError(f"unsupported domain {dom!r}")


class Tower:
    """Domains for levels 0..depth-1 and the porting maps between them."""

    def __init__(self, base, depth: int = MAX_DEPTH, roots: dict[int, int] | None = None):
        if not 1 <= depth <= MAX_DEPTH:
            raise StructuralError(f"depth must be in 1..{MAX_DEPTH}")
        self.base = base
        self.roots = dict(sorted((roots or {}).items()))
        self.levels = [base]
        self._ports: list[Callable] = []
        self._pows: list[Callable] = []
        while len(self.levels) < depth:
            nxt = _next_level(self.levels[-1], self.roots)
            if nxt is None:
                break
            self.levels.append(nxt[0])
            self._ports.append(nxt[1])
            self._pows.append(nxt[2])

    def __repr__(self):
        return "Tower(" + " -> ".join(map(repr, self.levels)) + ")"

    def __eq__(self, other):
        return isinstance(other, Tower) and other.descriptor() == self.descriptor()

    def __hash__(self):
        return hash(repr(self.descriptor()))

    @property
    def depth(self) -> int:
        return len(self.levels)

    def domain(self, level: int):
        if not 0 <= level < len(self.levels):
            raise StructuralError(f"level {level} not available in {self!r}")
        return self.levels[level]

    def port(self, level: int, v):
        """Move a level-k value into the level-(k+1) exponent domain."""
        if not 0 <= level < len(self._ports):
            raise StructuralError(f"no exponent level above {level}")
        return self._ports[level](v)

    def port_to(self, v, src: int, dst: int):
        for k in range(src, dst):
            v = self.port(k, v)
        return v

    def pow_ported(self, level: int, base, exponent):
        return self._pows[level](base, exponent)

    def descriptor(self) -> dict:
        b = self.base
        if isinstance(b, FieldSpec):
            bd = {"kind": "field", "p": b.p, "n": b.n, "modulus": list(b.modulus_poly)}
        else:
            bd = {"kind": "ring", "n": b.n}
        return {"base": bd, "depth": self.depth, "roots": {str(k): v for k, v in self.roots.items()}}

    @classmethod
    def from_descriptor(cls, d: dict) -> "Tower":
        bd = d["base"]
        if bd["kind"] == "field":
            base = field_make(bd["p"], bd["n"], bd["modulus"])
        elif bd["kind"] == "ring":
            base = factor_modulus(bd["n"])
        else:
            raise StructuralError(f"unknown domain kind {bd['kind']!r}")
        roots = {int(k): v for k, v in d.get("roots", {}).items()}
        return cls(base, d.get("depth", MAX_DEPTH), roots)


# --------------------------------------------------------------------------
# nodes


@dataclass(frozen=True, slots=True)
class Const:
    value: Any
    level: int = 0

    def ev(self, ctx):
        return self.value


@dataclass(frozen=True, slots=True)
class Var:
    index: int
    level: int = 0

    def ev(self, ctx):
        return ctx.var(self.index, self.level)


@dataclass(frozen=True, slots=True)
class Add:
    children: tuple
    level: int = 0

    def __post_init__(self):
        _same_level(self)

    def ev(self, ctx):
        dom = ctx.tower.levels[self.level]
        it = iter(self.children)
        acc = next(it).ev(ctx)
        for c in it:
            acc = dom.add(acc, c.ev(ctx))
        return acc


@dataclass(frozen=True, slots=True)
class Mul:
    children: tuple
    level: int = 0

    def __post_init__(self):
        _same_level(self)

    def ev(self, ctx):
        dom = ctx.tower.levels[self.level]
        it = iter(self.children)
        acc = next(it).ev(ctx)
        for c in it:
            acc = dom.mul(acc, c.ev(ctx))
        return acc


@dataclass(frozen=True, slots=True)
class Pow:
    base: Any
    exponent: Any  # int (constant) or an Expr one level up
    level: int = 0

    def __post_init__(self):
        if self.base.level != self.level:
            raise StructuralError("Pow base level differs from node level")
        if not isinstance(self.exponent, int) and self.exponent.level != self.level + 1:
            raise StructuralError("Pow exponent must sit exactly one level above its base")

    def ev(self, ctx):
        b = self.base.ev(ctx)
        if isinstance(self.exponent, int):
            return ctx.tower.levels[self.level].pow(b, self.exponent)
        if not ctx.tower.levels[self.level].is_unit(b):
            raise InvertibilityError(
                f"invertibility violation: base {b} under a non-constant exponent "
                f"at assignment {tuple(ctx.point)}"
            )
        return ctx.tower.pow_ported(self.level, b, self.exponent.ev(ctx))


Expr = Union[Const, Var, Add, Mul, Pow]


def _same_level(node):
    if not node.children:
        raise StructuralError(f"{type(node).__name__} needs at least one child")
    for c in node.children:
        if c.level != node.level:
            raise StructuralError(f"{type(node).__name__} mixes levels {c.level} and {node.level}")


# convenience constructors ---------------------------------------------------


def const(value, level: int = 0) -> Const:
    return Const(value, level)


def var(index: int, level: int = 0) -> Var:
    return Var(index, level)


def add(*es) -> Expr:
    es = tuple(es)
    return es[0] if len(es) == 1 else Add(es, es[0].level)


def mul(*es) -> Expr:
    es = tuple(es)
    return es[0] if len(es) == 1 else Mul(es, es[0].level)


def power(base, exponent) -> Expr:
    if isinstance(exponent, int) and exponent == 1:
        return base
    return Pow(base, exponent, base.level)


def neg(e, dom) -> Expr:
    return mul(Const(dom.neg(dom.one), e.level), e)


def sub(a, b, dom) -> Expr:
    return add(a, neg(b, dom))


def inverse_of(e, dom) -> Expr:
    """Pointwise inverse of a unit-valued expression via a constant power."""
    return power(e, dom.inverse_exponent)


def iter_nodes(e) -> Iterable:
    stack = [e]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, (Add, Mul)):
            stack.extend(n.children)
        elif isinstance(n, Pow):
            stack.append(n.base)
            if not isinstance(n.exponent, int):
                stack.append(n.exponent)


def variables(e) -> set[int]:
    return {n.index for n in iter_nodes(e) if isinstance(n, Var)}


def remap(e, f: Callable[[Var], Expr]):
    """Rebuild e with every Var replaced by f(var)."""
    if isinstance(e, Var):
        return f(e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Add):
        return Add(tuple(remap(c, f) for c in e.children), e.level)
    if isinstance(e, Mul):
        return Mul(tuple(remap(c, f) for c in e.children), e.level)
    exp = e.exponent if isinstance(e.exponent, int) else remap(e.exponent, f)
    return Pow(remap(e.base, f), exp, e.level)


# --------------------------------------------------------------------------
# interpretation and evaluation


@dataclass(frozen=True)
class Interpretation:
    """Tower of level domains, input arity, and let-bound supplementary variables.

    Slot i < arity is an input (level 0); slot arity+j holds bindings[j],
    whose own level is the binding expression's level.  A Var may reference
    a slot at or above the slot's level; the value is ported upward.
    """

    tower: Tower
    arity: int
    bindings: tuple = ()

    def __post_init__(self):
        for j, b in enumerate(self.bindings):
            self._audit(b, self.arity + j)

    def slot_level(self, index: int) -> int:
        return 0 if index < self.arity else self.bindings[index - self.arity].level

    def _audit(self, e, limit: int):
        audit_levels(e, self.tower)
        for n in iter_nodes(e):
            if isinstance(n, Var):
                if not 0 <= n.index < limit:
                    raise StructuralError(f"variable {n.index} not bound before use")
                if n.level < self.slot_level(n.index):
                    raise StructuralError(f"variable {n.index} used below its level")

    def check(self, e):
        self._audit(e, self.arity + len(self.bindings))


def audit_levels(e, tower: Tower):
    """Structural audit: every node's level exists and constants lie in their domain."""
    for n in iter_nodes(e):
        dom = tower.domain(n.level)
        if isinstance(n, Const) and not dom.contains(n.value):
            raise StructuralError(f"constant {n.value!r} not in {dom!r}")
        if isinstance(n, Pow) and not isinstance(n.exponent, int):
            tower.domain(n.level + 1)


class _Ctx:
    __slots__ = ("tower", "point", "values", "levels", "cache")

    def __init__(self, interp: Interpretation, point):
        self.tower = interp.tower
        self.point = point
        self.values = list(point)
        self.levels = [0] * len(point)
        self.cache = {}
        for b in interp.bindings:
            self.values.append(b.ev(self))
            self.levels.append(b.level)

    def var(self, index, level):
        own = self.levels[index]
        if level == own:
            return self.values[index]
        key = (index, level)
        v = self.cache.get(key)
        if v is None:
            v = self.tower.port_to(self.values[index], own, level)
            self.cache[key] = v
        return v


def _check_point(interp: Interpretation, point):
    if len(point) != interp.arity:
        raise StructuralError(f"expected {interp.arity} inputs, got {len(point)}")
    dom = interp.tower.base
    for v in point:
        if not dom.contains(v):
            raise DomainError(f"input {v!r} not in {dom!r}")


def expr_eval(e, assignment: Sequence, interp: Interpretation):
    _check_point(interp, assignment)
    return e.ev(_Ctx(interp, tuple(assignment)))


def port_value(v, level: int, interp: Interpretation):
    return interp.tower.port(level, v)


@dataclass(frozen=True)
class ClosureReport:
    ok: bool
    checked: int
    violation: tuple | None = None
    message: str = ""


def expr_check_closure(e, sample: Iterable[Sequence], interp: Interpretation) -> ClosureReport:
    """Evaluate e on every sample point; report the first invertibility violation."""
    n = 0
    for pt in sample:
        pt = tuple(pt)
        try:
            expr_eval(e, pt, interp)
        except DomainError as exc:
            return ClosureReport(False, n, pt, str(exc))
        n += 1
    return ClosureReport(True, n)


# --------------------------------------------------------------------------
# straight-line programs


@dataclass(frozen=True)
class ExprMap:
    """A map K^arity -> K^len(outputs) given as a straight-line program."""

    interp: Interpretation
    outputs: tuple

    def __post_init__(self):
        for o in self.outputs:
            self.interp.check(o)
            if o.level != 0:
                raise StructuralError("outputs must be level-0 expressions")

    @property
    def tower(self) -> Tower:
        return self.interp.tower

    @property
    def arity(self) -> int:
        return self.interp.arity

    @property
    def width(self) -> int:
        return len(self.outputs)

    def __call__(self, point) -> tuple:
        point = tuple(point)
        _check_point(self.interp, point)
        ctx = _Ctx(self.interp, point)
        return tuple(o.ev(ctx) for o in self.outputs)

    def restrict(self, indices: Sequence[int]) -> "ExprMap":
        """Keep the chosen outputs and drop bindings they do not need."""
        outs = [self.outputs[i] for i in indices]
        a = self.arity
        need = set()
        stack = [v for o in outs for v in variables(o)]
        while stack:
            v = stack.pop()
            if v >= a and v not in need:
                need.add(v)
                stack.extend(variables(self.interp.bindings[v - a]))
        keep = sorted(need)
        newidx = {old: a + k for k, old in enumerate(keep)}

        def f(x: Var):
            return x if x.index < a else Var(newidx[x.index], x.level)

        binds = tuple(remap(self.interp.bindings[old - a], f) for old in keep)
        return ExprMap(
            Interpretation(self.tower, a, binds), tuple(remap(o, f) for o in outs)
        )

    def size(self) -> int:
        return sum(1 for b in self.interp.bindings for _ in iter_nodes(b)) + sum(
            1 for o in self.outputs for _ in iter_nodes(o)
        )

    # text form
    def to_text(self) -> str:
        lines = [f"arity {self.arity}"]
        lines += ["let " + to_prefix(b) for b in self.interp.bindings]
        lines += ["out " + to_prefix(o) for o in self.outputs]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, tower: Tower, text: str) -> "ExprMap":
        arity, binds, outs = None, [], []
        for line in text.splitlines():
            if not line:
                continue
            head, _, rest = line.partition(" ")
            if head == "arity":
                arity = int(rest)
            elif head == "let":
                binds.append(parse_prefix(rest))
            elif head == "out":
                outs.append(parse_prefix(rest))
            else:
                raise StructuralError(f"bad program line {line!r}")
        if arity is None:
            raise StructuralError("program text lacks an arity line")
        return cls(Interpretation(tower, arity, tuple(binds)), tuple(outs))


class Builder:
    """Accumulates let-bindings to assemble an ExprMap from smaller ones."""

    def __init__(self, tower: Tower, arity: int):
        self.tower = tower
        self.arity = arity
        self.bindings: list = []

    @property
    def base(self):
        return self.tower.base

    def inputs(self) -> list[Var]:
        return [Var(i, 0) for i in range(self.arity)]

    def slot_level(self, index: int) -> int:
        return 0 if index < self.arity else self.bindings[index - self.arity].level

    def let(self, e) -> Expr:
        """Bind e to a fresh slot unless it is already a leaf."""
        if isinstance(e, Const) or (isinstance(e, Var) and e.level == self.slot_level(e.index)):
            return e
        self.bindings.append(e)
        return Var(self.arity + len(self.bindings) - 1, e.level)

    def up(self, e, level: int) -> Expr:
        """Reference a leaf (Var or Const) at a higher level."""
        if isinstance(e, Const):
            return Const(self.tower.port_to(e.value, e.level, level), level)
        e = self.let(e)
        if isinstance(e, Const):
            return self.up(e, level)
        return Var(e.index, level)

    def call(self, emap: ExprMap, args: Sequence) -> list:
        """Inline emap applied to level-0 argument expressions."""
        if len(args) != emap.arity:
            raise StructuralError(f"map expects {emap.arity} arguments, got {len(args)}")
        if emap.tower is not self.tower and emap.tower != self.tower:
            raise StructuralError("cannot inline a map over a different tower")
        slots = [self.let(a) for a in args]

        def f(x: Var):
            tgt = slots[x.index]
            if isinstance(tgt, Const):
                return Const(self.tower.port_to(tgt.value, tgt.level, x.level), x.level)
            return Var(tgt.index, x.level)

        for b in emap.interp.bindings:
            slots.append(self.let(remap(b, f)))
        return [remap(o, f) for o in emap.outputs]

    def build(self, outputs: Sequence) -> ExprMap:
        return ExprMap(Interpretation(self.tower, self.arity, tuple(self.bindings)), tuple(outputs))


def identity_map(tower: Tower, arity: int) -> ExprMap:
    return ExprMap(Interpretation(tower, arity), tuple(Var(i) for i in range(arity)))


def compose(outer: ExprMap, inner: ExprMap) -> ExprMap:
    """outer after inner."""
    b = Builder(inner.tower, inner.arity)
    mid = b.call(inner, b.inputs())
    return b.build(b.call(outer, mid))


def concat(maps: Sequence[ExprMap]) -> ExprMap:
    """Stack maps with a common arity into one map with all outputs."""
    b = Builder(maps[0].tower, maps[0].arity)
    outs = []
    for m in maps:
        outs += b.call(m, b.inputs())
    return b.build(outs)


def lift_univariate(tower: Tower, fn: Callable[[Expr], Expr]) -> ExprMap:
    return ExprMap(Interpretation(tower, 1), (fn(Var(0)),))


# --------------------------------------------------------------------------
# prefix serialization

_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def _fmt_value(v) -> str:
    if isinstance(v, tuple):
        return "[" + ",".join(_fmt_value(x) for x in v) + "]"
    return str(v)


def _parse_value(s: str):
    if not s.startswith("["):
        return int(s)
    stack = [[]]
    num = ""
    for ch in s:
        if ch == "[":
            stack.append([])
        elif ch in ",]":
            if num:
                stack[-1].append(int(num))
                num = ""
            if ch == "]":
                done = tuple(stack.pop())
                stack[-1].append(done)
        else:
            num += ch
    return stack[0][0]


def to_prefix(e) -> str:
    if isinstance(e, Const):
        return f"c{e.level}:{_fmt_value(e.value)}"
    if isinstance(e, Var):
        return f"v{e.level}:{e.index}"
    if isinstance(e, Add):
        return "(+ " + " ".join(to_prefix(c) for c in e.children) + ")"
    if isinstance(e, Mul):
        return "(* " + " ".join(to_prefix(c) for c in e.children) + ")"
    exp = f"#{e.exponent}" if isinstance(e.exponent, int) else to_prefix(e.exponent)
    return f"(^ {to_prefix(e.base)} {exp})"


def parse_prefix(s: str):
    toks = _TOKEN.findall(s)
    pos = 0

    def atom(t):
        if t[0] in "cv" and ":" in t:
            lv, _, val = t[1:].partition(":")
            if t[0] == "c":
                return Const(_parse_value(val), int(lv))
            return Var(int(val), int(lv))
        raise StructuralError(f"bad token {t!r}")

    def node():
        nonlocal pos
        if pos >= len(toks):
            raise StructuralError("unexpected end of expression")
        t = toks[pos]
        pos += 1
        if t != "(":
            return atom(t)
        op = toks[pos]
        pos += 1
        if op == "^":
            base = node()
            t2 = toks[pos]
            if t2.startswith("#"):
                pos += 1
                exp = int(t2[1:])
            else:
                exp = node()
            out = Pow(base, exp, base.level)
        else:
            kids = []
            while toks[pos] != ")":
                kids.append(node())
            if op not in ("+", "*") or not kids:
                raise StructuralError(f"bad operator {op!r}")
            out = (Add if op == "+" else Mul)(tuple(kids), kids[0].level)
        if toks[pos] != ")":
            raise StructuralError("expected ')'")
        pos += 1
        return out

    e = node()
    if pos != len(toks):
        raise StructuralError("trailing tokens after expression")
    return e
