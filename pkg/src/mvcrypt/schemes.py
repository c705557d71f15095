"""Public-key encryption and the three-party signature workflow.

PKC.  P is a triangular bijection of G^nu on coordinates (z, x), z in G^lam,
whose x-part never reads z, followed by a fixed output permutation.  The
hidden key F(x, w) is the z that makes the z-part of the ciphertext equal
Lambda(P_x(x), w), where Lambda is bijective in each coordinate of P_x(x)
for every pad w.  Two honest ciphertexts under one pad therefore differ in
at least two coordinates, so a single changed coordinate always fails the
integrity predicate F(x, w) = z or leaves G.

Signature.  P, Q, R are parametric maps whose first (input - output)
coordinates are parameters; they are bijective in the rest on the live
parameter classes, which only the key owner knows.  Right inverses fix the
smallest live parameter point.
"""

from __future__ import annotations

import json
import os
import random
import struct
from dataclasses import dataclass
from typing import Sequence

from .algebra import DomainError, field_make
from .expr import Builder, Const, ExprMap, Interpretation, Tower, Var, mul, power
from .families import (
    domain_points,
    random_signature_map,
    random_triangular,
    unit_exponent,
)
from .parametric import (
    ConstructionError,
    ParametricInjection,
    grid,
    hash_extend,
    nonzero,
)

KEYGEN_ATTEMPTS = 32
DEFAULT_TTL = 1024


class SchemeError(Exception):
    pass


class InversionFailure(SchemeError):
    """The ciphertext is not an image of P."""


class IntegrityFailure(SchemeError):
    """P inverted fine but the hidden-key predicate F(x, w) = z failed."""


class KeygenError(SchemeError):
    pass


class TransactionError(SchemeError):
    pass


# --------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class SchemeParams:
    mu: int
    nu: int
    kappa: int = 0
    lam: int | None = None
    K: int = 0
    L: int = 0
    tau: int = 0
    p: int = 2
    n: int = 3
    group: str = "units"

    def __post_init__(self):
        if self.lam is None:
            object.__setattr__(self, "lam", self.nu - self.mu)
        if min(self.mu, self.nu) < 1 or min(self.kappa, self.lam, self.K, self.L, self.tau) < 0:
            raise ValueError("lengths must be non-negative (mu, nu positive)")
        if self.group not in ("units", "field"):
            raise ValueError("group must be 'units' or 'field'")

    def check_pkc(self):
        if self.lam != self.nu - self.mu or self.lam < 0:
            raise ValueError("PKC needs lam = nu - mu >= 0")

    def check_signature(self):
        if min(self.K, self.L, self.tau) < 1:
            raise ValueError("signature needs K, L, tau >= 1")
        if self.K > self.kappa or self.L > self.lam or self.nu < self.L + self.mu:
            raise ValueError("signature needs K <= kappa, L <= lam, nu >= L + mu")
        if self.tau > self.lam + self.mu + self.kappa:
            raise ValueError("tau exceeds the authenticator input length")
        if self.group != "units":
            raise ValueError("signature maps are built over G = F*")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("mu", "nu", "kappa", "lam", "K", "L", "tau", "p", "n", "group")}

    @classmethod
    def from_dict(cls, d: dict) -> "SchemeParams":
        return cls(**d)

    @classmethod
    def parse(cls, text: str) -> "SchemeParams":
        """Either JSON or comma-separated key=value pairs (field=GF(8) accepted)."""
        text = text.strip()
        if text.startswith("{"):
            return cls.from_dict(json.loads(text))
        d: dict = {}
        aliases = {"μ": "mu", "ν": "nu", "κ": "kappa", "λ": "lam", "τ": "tau"}
        for part in text.split(","):
            if not part.strip():
                continue
            k, _, v = part.partition("=")
            k = aliases.get(k.strip(), k.strip())
            v = v.strip()
            if k == "field":
                q = int(v.upper().removeprefix("GF(").removesuffix(")"))
                d["p"], d["n"] = _prime_power(q)
            elif k == "group":
                d[k] = v
            else:
                d[k] = int(v)
        return cls(**d)


def _prime_power(q: int) -> tuple[int, int]:
    from .algebra import factorize

    f = factorize(q)
    if len(f) != 1:
        raise ValueError(f"{q} is not a prime power")
    return f[0]


def make_tower(params: SchemeParams) -> Tower:
    return Tower(field_make(params.p, params.n))


def _check_in(points: Sequence, G: set, what: str):
    for v in points:
        if v not in G:
            raise DomainError(f"{what} component {v!r} outside G")


# --------------------------------------------------------------------------
# PKC


@dataclass(frozen=True, eq=False)
class PkcPublic:
    params: SchemeParams
    tower: Tower
    L: ExprMap  # (x, w) -> epsilon

    def sections(self) -> dict:
        return {"public.L": self.L.to_text()}


@dataclass(frozen=True, eq=False)
class PkcPrivate:
    params: SchemeParams
    tower: Tower
    P: ExprMap  # (z, x) -> epsilon
    P_inverse: ExprMap
    F: ExprMap  # (x, w) -> z

    def sections(self) -> dict:
        return {"private.P": self.P.to_text(), "private.P_inverse": self.P_inverse.to_text(),
                "private.F": self.F.to_text()}


@dataclass(frozen=True, eq=False)
class PkcKeyPair:
    public: PkcPublic
    private: PkcPrivate


def _lambda_map(tower: Tower, mu: int, kappa: int, lam: int, rng: random.Random) -> ExprMap:
    """Lambda(t, w)_r = s_r * prod_j t_j^(e_rj(log w)) * prod_i w_i^(b_ri)."""
    dom = tower.base
    b = Builder(tower, mu + kappa)
    ins = b.inputs()
    ts, ws = ins[:mu], ins[mu:]
    outs = []
    for _ in range(lam):
        fs = [Const(rng.choice(nonzero(dom)))]
        for t in ts:
            e = unit_exponent(tower, kappa, list(range(kappa)), rng)
            ee = e.to_expr([Var(mu + i, 1) for i in range(kappa)], level=1)
            fs.append(power(t, b.let(ee) if not isinstance(ee, Const) else ee.value))
        for w in ws:
            k = rng.randrange(1, dom.order) if dom.order > 1 else 1
            fs.append(power(w, k))
        outs.append(mul(*fs))
    return b.build(outs)


def _pkc_candidate(params: SchemeParams, tower: Tower, rng: random.Random):
    mu, nu, lam, kappa = params.mu, params.nu, params.lam, params.kappa
    group = params.group
    # h_i (0-based) reads zeta_(i+1..nu-1) then x_(0..i-1); x-coordinates
    # i >= lam must not read any z-coordinate x_(0..lam-1)
    masks = []
    for i in range(nu):
        later = list(range(nu - i - 1))
        earlier = [nu - i - 1 + j for j in range(i) if j >= lam or i < lam]
        masks.append(later + earlier)
    tri = random_triangular(tower, nu, rng, group, masks)
    perm = list(range(nu))
    rng.shuffle(perm)
    # P = output permutation after the triangular map
    b = Builder(tower, nu)
    y = b.call(tri.forward, b.inputs())
    P = b.build([y[perm[r]] for r in range(nu)])
    b = Builder(tower, nu)
    ins = b.inputs()
    unperm = [None] * nu
    for r in range(nu):
        unperm[perm[r]] = ins[r]
    P_inv = b.build(b.call(tri.inverse, unperm))
    if lam == 0:
        return P, P_inv, None, P
    one = Const(tower.base.one)
    Lam = _lambda_map(tower, mu, kappa, lam, rng)
    # F(x, w): run P's x-part, pick eta_z = Lambda(eta_x, w), invert the z-part
    b = Builder(tower, mu + kappa)
    ins = b.inputs()
    xs, ws = ins[:mu], ins[mu:]
    eta = b.call(tri.forward, [one] * lam + xs)
    eta_x = [b.let(e) for e in eta[lam:]]
    eta_z = b.call(Lam, eta_x + ws)
    back = b.call(tri.inverse, [b.let(e) for e in eta_z] + eta_x)
    F = b.build(back[:lam])
    L = hash_extend(P, F, mu) if kappa == 0 else _extend_with_pad(P, F, mu, kappa)
    return P, P_inv, F, L


def _extend_with_pad(P: ExprMap, F: ExprMap, mu: int, kappa: int) -> ExprMap:
    """L(x, w) = P(F(x, w), x)."""
    b = Builder(P.tower, mu + kappa)
    ins = b.inputs()
    z = [b.let(e) for e in b.call(F, ins)]
    return b.build(b.call(P, z + ins[:mu]))


def certify_pkc(pair: PkcKeyPair) -> dict:
    """Exhaustive audit; returns counts, raises KeygenError on any failure."""
    pub, priv = pair.public, pair.private
    prm = pub.params
    G = list(domain_points(pub.tower, prm.group))
    Gset = set(G)
    nu, mu, kappa, lam = prm.nu, prm.mu, prm.kappa, prm.lam
    pts = grid(G, nu)
    seen = set()
    for v in pts:
        e = priv.P(v)
        if e in seen or priv.P_inverse(e) != v or not set(e) <= Gset:
            raise KeygenError(f"P fails bijectivity at {v}")
        seen.add(e)
    roundtrips = 0
    spread_min = None
    for w in grid(G, kappa):
        codewords = {}
        for x in grid(G, mu):
            eps = encrypt(pub, x, w)
            if decrypt(priv, eps, w) != x:
                raise KeygenError(f"roundtrip fails at {(x, w)}")
            codewords[eps] = x
            roundtrips += 1
        # distance >= 2: deleting any one coordinate keeps codewords distinct
        if lam:
            for i in range(nu):
                proj = {c[:i] + c[i + 1:] for c in codewords}
                if len(proj) != len(codewords):
                    raise KeygenError(f"two ciphertexts differ only in coordinate {i} (pad {w})")
    if lam and kappa:
        for x in grid(G, mu):
            vals = {priv.F(x + w) for w in grid(G, kappa)}
            spread_min = len(vals) if spread_min is None else min(spread_min, len(vals))
        if spread_min < 2:
            raise KeygenError("hidden key constant in the pad for some message")
    return {"p_points": len(pts), "roundtrips": roundtrips, "min_hidden_key_spread": spread_min}


def pkc_keygen(params: SchemeParams, seed: int) -> PkcKeyPair:
    params.check_pkc()
    tower = make_tower(params)
    rng = random.Random(seed)
    last = None
    for _ in range(KEYGEN_ATTEMPTS):
        try:
            P, P_inv, F, L = _pkc_candidate(params, tower, rng)
            if F is None:
                F = ExprMap(Interpretation(tower, params.mu + params.kappa), ())
            pair = PkcKeyPair(PkcPublic(params, tower, L), PkcPrivate(params, tower, P, P_inv, F))
            certify_pkc(pair)
            return pair
        except (KeygenError, ConstructionError, DomainError) as exc:
            last = exc
    raise KeygenError(f"no certified key after {KEYGEN_ATTEMPTS} attempts: {last}")


def encrypt(pub: PkcPublic, x: Sequence, w: Sequence = ()) -> tuple:
    prm = pub.params
    if len(x) != prm.mu or len(w) != prm.kappa:
        raise DomainError(f"need {prm.mu} message and {prm.kappa} pad elements")
    G = set(domain_points(pub.tower, prm.group))
    _check_in(x, G, "message")
    _check_in(w, G, "pad")
    return pub.L(tuple(x) + tuple(w))


def decrypt(priv: PkcPrivate, eps: Sequence, w: Sequence = ()) -> tuple:
    prm = priv.params
    if len(eps) != prm.nu or len(w) != prm.kappa:
        raise DomainError(f"need {prm.nu} cipher and {prm.kappa} pad elements")
    G = set(domain_points(priv.tower, prm.group))
    _check_in(w, G, "pad")
    eps = tuple(eps)
    if not set(eps) <= G:
        raise InversionFailure("cipher component outside G")
    try:
        v = priv.P_inverse(eps)
        if not set(v) <= G or priv.P(v) != eps:
            raise InversionFailure("cipher is not an image of P")
    except DomainError as exc:
        raise InversionFailure(str(exc)) from None
    z, x = v[: prm.lam], v[prm.lam:]
    if priv.F.width and priv.F(x + tuple(w)) != z:
        raise IntegrityFailure("hidden-key predicate failed")
    return x


pkc_encrypt = encrypt
pkc_decrypt = decrypt


# --------------------------------------------------------------------------
# signature


@dataclass(frozen=True, eq=False)
class RightInvertible:
    """A parametric surjection G^(l+m) -> G^m with private live parameters."""

    inj: ParametricInjection

    @property
    def map(self) -> ExprMap:
        return self.inj.forward

    def anchor(self) -> tuple:
        return min(self.inj.param_points())

    def right_inverse(self, w: Sequence) -> tuple:
        z = self.anchor()
        return z + self.inj.invert(z, tuple(w))


@dataclass(frozen=True, eq=False)
class AuthTable:
    """What the TAV holds: full P, H, F, Q, R."""

    params: SchemeParams
    tower: Tower
    P: ExprMap
    H: ExprMap
    F: ExprMap
    Q: ExprMap
    R: ExprMap

    def sections(self) -> dict:
        return {f"tav.{k}": getattr(self, k).to_text() for k in ("P", "H", "F", "Q", "R")}


@dataclass(frozen=True, eq=False)
class VerifyTable:
    params: SchemeParams
    tower: Tower
    V: ExprMap  # epsilon -> x

    def sections(self) -> dict:
        return {"public.V": self.V.to_text()}


@dataclass(frozen=True, eq=False)
class SigKeySet:
    verify: VerifyTable
    auth: AuthTable
    P: RightInvertible
    Q: RightInvertible
    R: RightInvertible

    @property
    def params(self) -> SchemeParams:
        return self.auth.params

    def private_sections(self) -> dict:
        out = {}
        for k in ("P", "Q", "R"):
            inj = getattr(self, k).inj
            out[f"private.{k}.inverse"] = inj.inverse.to_text()
            out[f"private.{k}.live"] = json.dumps([list(z) for z in inj.param_points()], separators=(",", ":"))
        return out


def _hidden_key(tower: Tower, mu: int, kappa: int, L: int, rng: random.Random) -> ExprMap:
    """F_r(x, w) = c_r prod x_j^(a_rj(log w)) prod w_i^(b_ri), values in F*."""
    dom = tower.base
    b = Builder(tower, mu + kappa)
    ins = b.inputs()
    outs = []
    for _ in range(L):
        fs = [Const(rng.choice(nonzero(dom)))]
        for j in range(mu):
            e = unit_exponent(tower, kappa, list(range(kappa)), rng)
            ee = e.to_expr([Var(mu + i, 1) for i in range(kappa)], level=1)
            fs.append(power(ins[j], b.let(ee) if not isinstance(ee, Const) else ee.value))
        for i in range(kappa):
            fs.append(power(ins[mu + i], rng.randrange(1, dom.order)))
        outs.append(mul(*fs))
    return b.build(outs)


def _surjection(tower, n_in, n_out, rng) -> RightInvertible:
    from .families import random_zeta

    l = n_in - n_out
    if n_out == 0:
        raise KeygenError("maps need at least one output")
    inj = random_zeta(tower, 0, n_out, rng, "units") if l == 0 else random_signature_map(tower, l, n_out, rng)
    return RightInvertible(inj)


def certify_signature(keys: SigKeySet) -> dict:
    prm = keys.params
    G = list(domain_points(keys.auth.tower, prm.group))
    counts = {}
    for name, ri, m in (("P", keys.P, prm.L + prm.mu), ("Q", keys.Q, prm.K), ("R", keys.R, prm.L)):
        if not ri.inj.param_points():
            raise KeygenError(f"{name} has no live parameters")
        n = 0
        for w in grid(G, m):
            pre = ri.right_inverse(w)
            if not set(pre) <= set(G) or ri.map(pre) != w:
                raise KeygenError(f"{name} right inverse fails at {w}")
            n += 1
        counts[name] = n
    return counts


def sig_keygen(params: SchemeParams, seed: int) -> SigKeySet:
    params.check_signature()
    tower = make_tower(params)
    rng = random.Random(seed)
    prm = params
    last = None
    for _ in range(KEYGEN_ATTEMPTS):
        try:
            P = _surjection(tower, prm.nu, prm.L + prm.mu, rng)
            Q = _surjection(tower, prm.kappa, prm.K, rng)
            R = _surjection(tower, prm.lam, prm.L, rng)
            F = _hidden_key(tower, prm.mu, prm.kappa, prm.L, rng)
            width = prm.lam + prm.mu + prm.kappa
            Hfull = random_triangular(tower, width, rng, "units") if width > 1 else None
            H = Hfull.forward.restrict(list(range(prm.tau))) if Hfull else ExprMap(
                Interpretation(tower, width), tuple(Var(i) for i in range(prm.tau)))
            V = P.map.restrict(list(range(prm.L, prm.L + prm.mu)))
            keys = SigKeySet(
                VerifyTable(prm, tower, V),
                AuthTable(prm, tower, P.map, H, F, Q.map, R.map),
                P, Q, R,
            )
            certify_signature(keys)
            return keys
        except (KeygenError, ConstructionError, DomainError) as exc:
            last = exc
    raise KeygenError(f"no certified key set after {KEYGEN_ATTEMPTS} attempts: {last}")


# --------------------------------------------------------------------------
# TAV


@dataclass
class Transaction:
    txn: int
    pad: tuple  # omega', in G^K
    issued: int
    expires: int
    gist: str = ""
    status: str = "reserved"  # reserved -> signed


@dataclass(frozen=True)
class Signature:
    epsilon: tuple
    z: tuple
    delta: tuple
    omega: tuple
    x: tuple
    txn: int

    def to_dict(self) -> dict:
        return {"txn": self.txn, "x": list(self.x), "epsilon": list(self.epsilon), "z": list(self.z),
                "delta": list(self.delta), "omega": list(self.omega)}

    @classmethod
    def from_dict(cls, d: dict) -> "Signature":
        return cls(tuple(d["epsilon"]), tuple(d["z"]), tuple(d["delta"]), tuple(d["omega"]), tuple(d["x"]),
                   int(d["txn"]))


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: str = "ok"


class TavState:
    """Transaction store with a logical clock and an optional journal.

    Journal records are 4-byte big-endian lengths followed by UTF-8 JSON.
    The clock advances by one per recorded event; a transaction is valid
    while the clock is at most its expiry tick.
    """

    def __init__(self, G: Sequence, K: int, seed: int = 0, journal: str | None = None, ttl: int = DEFAULT_TTL):
        self.G = tuple(G)
        self.K = K
        self.seed = seed
        self.ttl = ttl
        self.clock = 0
        self.txns: dict[int, Transaction] = {}
        self.journal = journal
        self._replaying = False
        if journal and os.path.exists(journal) and os.path.getsize(journal):
            self._replay()
        elif journal:
            self._append({"event": "open", "seed": seed, "K": K, "G": list(self.G), "ttl": ttl})

    @classmethod
    def open(cls, journal: str) -> "TavState":
        recs = read_journal(journal)
        if not recs or recs[0].get("event") != "open":
            raise TransactionError("journal lacks an opening record")
        head = recs[0]
        return cls(head["G"], head["K"], head["seed"], journal, head["ttl"])

    def _append(self, rec: dict):
        if self.journal and not self._replaying:
            data = json.dumps(rec, sort_keys=True, separators=(",", ":")).encode()
            with open(self.journal, "ab") as fh:
                fh.write(struct.pack(">I", len(data)) + data)

    def _replay(self):
        recs = read_journal(self.journal)
        head = recs[0]
        self.seed, self.K, self.G, self.ttl = head["seed"], head["K"], tuple(head["G"]), head["ttl"]
        self._replaying = True
        try:
            for r in recs[1:]:
                ev = r["event"]
                if ev == "reserve":
                    self.reserve(r["gist"])
                elif ev == "sign":
                    self.consume(r["txn"])
                elif ev == "authenticate":
                    self.clock += 1
                elif ev == "tick":
                    self.advance(r["ticks"])
        finally:
            self._replaying = False

    def advance(self, ticks: int = 1):
        self.clock += ticks
        self._append({"event": "tick", "ticks": ticks})

    def reserve(self, gist: str = "") -> Transaction:
        txn = len(self.txns) + 1
        rng = random.Random(f"{self.seed}:{txn}")
        pad = tuple(rng.choice(self.G) for _ in range(self.K))
        self.clock += 1
        t = Transaction(txn, pad, self.clock, self.clock + self.ttl, gist)
        self.txns[txn] = t
        self._append({"event": "reserve", "txn": txn, "gist": gist, "pad": list(pad)})
        return t

    def lookup(self, txn: int) -> Transaction:
        if txn not in self.txns:
            raise TransactionError(f"unknown transaction {txn}")
        return self.txns[txn]

    def consume(self, txn: int) -> Transaction:
        t = self.lookup(txn)
        if t.status != "reserved":
            raise TransactionError(f"transaction {txn} already used")
        if self.clock > t.expires:
            raise TransactionError(f"transaction {txn} expired")
        self.clock += 1
        t.status = "signed"
        self._append({"event": "sign", "txn": txn})
        return t

    def record_authentication(self, txn: int, verdict: Verdict):
        self.clock += 1
        self._append({"event": "authenticate", "txn": txn, "accepted": verdict.accepted, "reason": verdict.reason})


def read_journal(path: str) -> list[dict]:
    out = []
    with open(path, "rb") as fh:
        data = fh.read()
    pos = 0
    while pos < len(data):
        if pos + 4 > len(data):
            raise TransactionError("truncated journal length prefix")
        (n,) = struct.unpack(">I", data[pos:pos + 4])
        if pos + 4 + n > len(data):
            raise TransactionError("truncated journal record")
        out.append(json.loads(data[pos + 4:pos + 4 + n]))
        pos += 4 + n
    return out


def tav_reserve(tav: TavState, gist: str = "") -> Transaction:
    return tav.reserve(gist)


def sig_sign(keys: SigKeySet, x: Sequence, txn: Transaction | int, tav: TavState) -> Signature:
    prm = keys.params
    G = set(domain_points(keys.auth.tower, prm.group))
    x = tuple(x)
    if len(x) != prm.mu:
        raise DomainError(f"need {prm.mu} message elements")
    _check_in(x, G, "message")
    t = tav.consume(txn.txn if isinstance(txn, Transaction) else txn)
    omega = keys.Q.right_inverse(t.pad)
    fx = keys.auth.F(x + omega)
    z = keys.R.right_inverse(fx)
    eps = keys.P.right_inverse(fx + x)
    delta = keys.auth.H(z + x + omega)
    return Signature(eps, z, delta, omega, x, t.txn)


def sig_verify(table: VerifyTable, eps: Sequence) -> tuple:
    prm = table.params
    if len(eps) != prm.nu:
        raise DomainError(f"need {prm.nu} signature elements")
    _check_in(eps, set(domain_points(table.tower, prm.group)), "signature")
    return table.V(tuple(eps))


def tav_authenticate(A: AuthTable, claim: Signature, tav: TavState) -> Verdict:
    verdict = _judge(A, claim, tav)
    tav.record_authentication(claim.txn, verdict)
    return verdict


def _judge(A: AuthTable, c: Signature, tav: TavState) -> Verdict:
    prm = A.params
    G = set(domain_points(A.tower, prm.group))
    if c.txn not in tav.txns:
        return Verdict(False, "unknown-transaction")
    t = tav.txns[c.txn]
    if t.status != "signed":
        return Verdict(False, "unsigned-transaction")
    if tav.clock > t.expires:
        return Verdict(False, "expired")
    shapes = ((c.epsilon, prm.nu), (c.z, prm.lam), (c.delta, prm.tau), (c.omega, prm.kappa), (c.x, prm.mu))
    for vec, n in shapes:
        if len(vec) != n:
            return Verdict(False, "shape")
    for vec in (c.epsilon, c.z, c.omega, c.x):
        if not set(vec) <= G:
            return Verdict(False, "domain")
    if A.Q(c.omega) != t.pad:
        return Verdict(False, "Q-mismatch")
    fx = A.F(c.x + c.omega)
    if A.P(c.epsilon) != fx + c.x:
        return Verdict(False, "P-mismatch")
    if A.R(c.z) != fx:
        return Verdict(False, "R-mismatch")
    if A.H(c.z + c.x + c.omega) != c.delta:
        return Verdict(False, "H-mismatch")
    return Verdict(True)
