"""Binary key container and (de)serialization of scheme objects.

Layout: b"MVKF", u16 version, u32 section count, then per section a u16
name length, UTF-8 name, u32 body length, UTF-8 body; finally the SHA-256 of
everything before it.  The first section is "header" (sorted-key JSON).
Program bodies use the ExprMap text form.
"""

from __future__ import annotations

import hashlib
import json
import struct

from .expr import ExprMap, Tower
from .families import domain_points
from .parametric import ParametricInjection
from .schemes import (
    AuthTable,
    PkcKeyPair,
    PkcPrivate,
    PkcPublic,
    RightInvertible,
    SchemeParams,
    SigKeySet,
    VerifyTable,
)

MAGIC = b"MVKF"
VERSION = 1
DIGEST = 32


class KeyFileError(ValueError):
    pass


class BadMagic(KeyFileError):
    pass


class VersionMismatch(KeyFileError):
    pass


class Truncated(KeyFileError):
    pass


class ChecksumMismatch(KeyFileError):
    pass


class NoPrivateSection(KeyFileError):
    pass


class WrongKind(KeyFileError):
    pass


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def emit(header: dict, sections: dict[str, str]) -> bytes:
    items = [("header", _dumps(header))] + sorted(sections.items())
    out = bytearray(MAGIC + struct.pack(">HI", VERSION, len(items)))
    for name, body in items:
        nb, bb = name.encode(), body.encode()
        out += struct.pack(">H", len(nb)) + nb + struct.pack(">I", len(bb)) + bb
    out += hashlib.sha256(out).digest()
    return bytes(out)


def parse(data: bytes) -> tuple[dict, dict[str, str]]:
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagic("not a key file")
    if len(data) < 10:
        raise Truncated("file ends inside the preamble")
    version, count = struct.unpack(">HI", data[4:10])
    if version != VERSION:
        raise VersionMismatch(f"format version {version}, expected {VERSION}")
    pos = 10
    raw = []

    def take(n):
        nonlocal pos
        if pos + n > len(data) - DIGEST:
            raise Truncated("file ends inside a section")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    for _ in range(count):
        (nl,) = struct.unpack(">H", take(2))
        name = take(nl)
        (bl,) = struct.unpack(">I", take(4))
        raw.append((name, take(bl)))
    if len(data) - pos != DIGEST:
        raise Truncated("checksum missing or trailing bytes present")
    if hashlib.sha256(data[:pos]).digest() != data[pos:]:
        raise ChecksumMismatch("checksum does not match contents")
    sections = {n.decode(): b.decode() for n, b in raw}
    if "header" not in sections:
        raise KeyFileError("header section missing")
    return json.loads(sections.pop("header")), sections


def _header(kind: str, scope: str, params: SchemeParams, tower: Tower) -> dict:
    return {"format": "mvcrypt-key", "kind": kind, "scope": scope, "params": params.to_dict(),
            "tower": tower.descriptor()}


# --------------------------------------------------------------------------
# PKC


def dump_pkc(pair: PkcKeyPair | PkcPublic, private: bool = True) -> bytes:
    pub = pair.public if isinstance(pair, PkcKeyPair) else pair
    secs = dict(pub.sections())
    if private:
        if not isinstance(pair, PkcKeyPair):
            raise NoPrivateSection("no private data to write")
        secs.update(pair.private.sections())
    return emit(_header("pkc", "private" if private else "public", pub.params, pub.tower), secs)


def _context(header: dict, kind: str):
    if header.get("kind") != kind:
        raise WrongKind(f"expected a {kind} key, found {header.get('kind')!r}")
    return SchemeParams.from_dict(header["params"]), Tower.from_descriptor(header["tower"])


def load_pkc_public(data: bytes) -> PkcPublic:
    header, secs = parse(data)
    params, tower = _context(header, "pkc")
    return PkcPublic(params, tower, ExprMap.from_text(tower, secs["public.L"]))


def load_pkc_private(data: bytes) -> PkcKeyPair:
    header, secs = parse(data)
    params, tower = _context(header, "pkc")
    if not any(k.startswith("private.") for k in secs):
        raise NoPrivateSection("key file has no private section")
    pub = PkcPublic(params, tower, ExprMap.from_text(tower, secs["public.L"]))
    priv = PkcPrivate(
        params,
        tower,
        ExprMap.from_text(tower, secs["private.P"]),
        ExprMap.from_text(tower, secs["private.P_inverse"]),
        ExprMap.from_text(tower, secs["private.F"]),
    )
    return PkcKeyPair(pub, priv)


# --------------------------------------------------------------------------
# signature

SIG_SCOPES = ("private", "tav", "public")


def dump_sig(keys: SigKeySet, scope: str = "private") -> bytes:
    if scope not in SIG_SCOPES:
        raise ValueError(f"scope must be one of {SIG_SCOPES}")
    secs = dict(keys.verify.sections())
    if scope in ("private", "tav"):
        secs.update(keys.auth.sections())
    if scope == "private":
        secs.update(keys.private_sections())
    return emit(_header("signature", scope, keys.params, keys.auth.tower), secs)


def load_sig_verify(data: bytes) -> VerifyTable:
    header, secs = parse(data)
    params, tower = _context(header, "signature")
    return VerifyTable(params, tower, ExprMap.from_text(tower, secs["public.V"]))


def load_sig_auth(data: bytes) -> AuthTable:
    header, secs = parse(data)
    params, tower = _context(header, "signature")
    if "tav.P" not in secs:
        raise KeyFileError("key file has no authentication table")
    m = {k: ExprMap.from_text(tower, secs[f"tav.{k}"]) for k in ("P", "H", "F", "Q", "R")}
    return AuthTable(params, tower, m["P"], m["H"], m["F"], m["Q"], m["R"])


def load_sig_private(data: bytes) -> SigKeySet:
    header, secs = parse(data)
    params, tower = _context(header, "signature")
    if not any(k.startswith("private.") for k in secs):
        raise NoPrivateSection("key file has no private section")
    auth = load_sig_auth(data)
    verify = VerifyTable(params, tower, ExprMap.from_text(tower, secs["public.V"]))
    G = tuple(domain_points(tower, params.group))
    shapes = {"P": (params.nu, params.L + params.mu), "Q": (params.kappa, params.K), "R": (params.lam, params.L)}
    ris = {}
    for k, (n_in, n_out) in shapes.items():
        inv = ExprMap.from_text(tower, secs[f"private.{k}.inverse"])
        live = tuple(tuple(z) for z in json.loads(secs[f"private.{k}.live"]))
        inj = ParametricInjection(n_in - n_out, n_out, getattr(auth, k), inv, G, live)
        ris[k] = RightInvertible(inj)
    return SigKeySet(verify, auth, ris["P"], ris["Q"], ris["R"])


def read_header(data: bytes) -> dict:
    return parse(data)[0]


# --------------------------------------------------------------------------
# messages


def dump_record(record: dict) -> str:
    return json.dumps(record, separators=(",", ":"))
