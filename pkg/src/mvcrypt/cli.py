"""Command-line driver.

Exit codes: 0 success, 1 integrity or verification rejection, 2 usage
error, 3 inversion failure (ciphertext outside the image of P).
Each result is one JSON object per line on stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys

from . import keyio, oracle
from .algebra import DomainError
from .families import domain_points
from .schemes import (
    IntegrityFailure,
    InversionFailure,
    SchemeError,
    SchemeParams,
    Signature,
    TavState,
    TransactionError,
    certify_pkc,
    certify_signature,
    decrypt,
    encrypt,
    pkc_keygen,
    sig_keygen,
    sig_sign,
    sig_verify,
    tav_authenticate,
)

OK, REJECT, USAGE, INVERSION = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _emit(record: dict):
    sys.stdout.write(keyio.dump_record(record) + "\n")
    sys.stdout.flush()


def _read_bytes(path: str) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write_bytes(path: str, data: bytes):
    with open(path, "wb") as fh:
        fh.write(data)


def _read_input(path: str | None) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    return _read_bytes(path).decode()


def _elements(text: str, field_name: str) -> tuple:
    """Decimal integers separated by commas/space, or a JSON record holding field_name."""
    text = text.strip()
    if text.startswith("{"):
        rec = json.loads(text.splitlines()[-1] if "\n" in text else text)
        if field_name not in rec:
            raise UsageError(f"input record lacks {field_name!r}")
        return tuple(int(v) for v in rec[field_name])
    try:
        return tuple(int(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise UsageError("elements must be decimal integers") from None


def _record(text: str) -> dict:
    text = text.strip()
    try:
        return json.loads(text.splitlines()[-1])
    except (ValueError, IndexError):
        raise UsageError("expected a JSON record") from None


def _pad(text: str | None) -> tuple:
    if not text:
        return ()
    try:
        return tuple(int(v, 16) for v in text.replace(",", " ").split())
    except ValueError:
        raise UsageError("--pad takes hexadecimal elements") from None


def _params(text: str | None) -> SchemeParams:
    if not text:
        raise UsageError("--params is required")
    try:
        return SchemeParams.parse(text)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad --params: {exc}") from None


def _require(args, *names):
    for n in names:
        if getattr(args, n) is None:
            raise UsageError(f"--{n.replace('_', '-')} is required")


# --------------------------------------------------------------------------
# commands


def cmd_keygen(args) -> int:
    _require(args, "out")
    pair = pkc_keygen(_params(args.params), args.seed)
    _write_bytes(args.out, keyio.dump_pkc(pair, private=True))
    _write_bytes(args.out + ".pub", keyio.dump_pkc(pair, private=False))
    _emit({"command": "keygen", "status": "ok", "private": args.out, "public": args.out + ".pub"})
    return OK


def cmd_encrypt(args) -> int:
    _require(args, "key")
    pub = keyio.load_pkc_public(_read_bytes(args.key))
    x = _elements(_read_input(args.infile), "message")
    try:
        eps = encrypt(pub, x, _pad(args.pad))
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    _emit({"command": "encrypt", "status": "ok", "cipher": list(eps)})
    return OK


def cmd_decrypt(args) -> int:
    _require(args, "key")
    pair = keyio.load_pkc_private(_read_bytes(args.key))
    eps = _elements(_read_input(args.infile), "cipher")
    try:
        x = decrypt(pair.private, eps, _pad(args.pad))
    except InversionFailure as exc:
        _emit({"command": "decrypt", "status": "inversion-failure", "detail": str(exc)})
        return INVERSION
    except IntegrityFailure as exc:
        _emit({"command": "decrypt", "status": "integrity-failure", "detail": str(exc)})
        return REJECT
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    _emit({"command": "decrypt", "status": "ok", "message": list(x)})
    return OK


def cmd_sig_keygen(args) -> int:
    _require(args, "out")
    keys = sig_keygen(_params(args.params), args.seed)
    _write_bytes(args.out, keyio.dump_sig(keys, "private"))
    _write_bytes(args.out + ".pub", keyio.dump_sig(keys, "public"))
    _write_bytes(args.out + ".tav", keyio.dump_sig(keys, "tav"))
    _emit({"command": "sig-keygen", "status": "ok", "private": args.out, "public": args.out + ".pub",
           "tav": args.out + ".tav"})
    return OK


def _tav(args, auth=None) -> TavState:
    _require(args, "journal")
    if os.path.exists(args.journal) and os.path.getsize(args.journal):
        return TavState.open(args.journal)
    if auth is None:
        raise UsageError("journal does not exist yet; run reserve first")
    G = domain_points(auth.tower, auth.params.group)
    return TavState(G, auth.params.K, args.seed, args.journal)


def cmd_reserve(args) -> int:
    _require(args, "key")
    auth = keyio.load_sig_auth(_read_bytes(args.key))
    tav = _tav(args, auth)
    t = tav.reserve(args.gist or "")
    _emit({"command": "reserve", "status": "ok", "txn": t.txn, "pad": list(t.pad), "expires": t.expires,
           "gist": t.gist})
    return OK


def cmd_sign(args) -> int:
    _require(args, "key", "txn")
    keys = keyio.load_sig_private(_read_bytes(args.key))
    tav = _tav(args)
    x = _elements(_read_input(args.infile), "message")
    try:
        sig = sig_sign(keys, x, args.txn, tav)
    except TransactionError as exc:
        _emit({"command": "sign", "status": "rejected", "detail": str(exc)})
        return REJECT
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    _emit({"command": "sign", "status": "ok", **sig.to_dict()})
    return OK


def cmd_verify(args) -> int:
    _require(args, "key")
    table = keyio.load_sig_verify(_read_bytes(args.key))
    eps = _elements(_read_input(args.infile), "epsilon")
    try:
        x = sig_verify(table, eps)
    except DomainError as exc:
        _emit({"command": "verify", "status": "rejected", "detail": str(exc)})
        return REJECT
    _emit({"command": "verify", "status": "ok", "message": list(x)})
    return OK


def cmd_authenticate(args) -> int:
    _require(args, "key")
    auth = keyio.load_sig_auth(_read_bytes(args.key))
    tav = _tav(args)
    rec = _record(_read_input(args.infile))
    try:
        claim = Signature.from_dict(rec)
    except (KeyError, TypeError, ValueError):
        raise UsageError("claim record is incomplete") from None
    v = tav_authenticate(auth, claim, tav)
    _emit({"command": "authenticate", "status": "accept" if v.accepted else "reject", "reason": v.reason,
           "txn": claim.txn})
    return OK if v.accepted else REJECT


def audit_counts(data: bytes, order_seed: int | None = None) -> dict:
    """Exhaustive counts for a key file; used by the audit command and tests."""
    header = keyio.read_header(data)
    out = {"kind": header["kind"], "scope": header["scope"]}
    if header["kind"] == "pkc":
        pub = keyio.load_pkc_public(data)
        prm = pub.params
        G = domain_points(pub.tower, prm.group)
        xs = list(oracle.DomainGrid.of(G, prm.mu))
        ws = list(oracle.DomainGrid.of(G, prm.kappa))
        if order_seed is not None:
            random.Random(order_seed).shuffle(xs)
            random.Random(order_seed + 1).shuffle(ws)
        collisions = 0
        images = set()
        for w in ws:
            v = oracle.exhaustive_bijectivity(lambda x: pub.L(x + w), xs)
            collisions += 0 if v.injective else 1
            images.update(pub.L(x + w) for x in xs)
        out.update({"pads": len(ws), "messages": len(xs), "pads_with_collision": collisions,
                    "distinct_ciphertexts": len(images)})
        if header["scope"] == "private":
            pair = keyio.load_pkc_private(data)
            out["certify"] = certify_pkc(pair)
            if prm.lam and prm.kappa:
                census = oracle.preimage_census(lambda x, w: pair.private.F(x + w), xs, ws, order_seed)
                spread = oracle.census_spread(census)
                out["census_entries"] = len(census)
                out["census_min_spread"] = min(spread.values())
                out["census_max_count"] = max(census.values())
    else:
        prm = SchemeParams.from_dict(header["params"])
        table = keyio.load_sig_verify(data)
        G = domain_points(table.tower, prm.group)
        eps = list(oracle.DomainGrid.of(G, prm.nu))
        if order_seed is not None:
            random.Random(order_seed).shuffle(eps)
        hits = {}
        for e in eps:
            x = table.V(e)
            hits[x] = hits.get(x, 0) + 1
        out.update({"signatures": len(eps), "messages_reached": len(hits), "min_preimages": min(hits.values())})
        if header["scope"] == "private":
            out["certify"] = certify_signature(keyio.load_sig_private(data))
    return out


def cmd_audit(args) -> int:
    _require(args, "key")
    counts = audit_counts(_read_bytes(args.key), args.order_seed)
    _emit({"command": "audit", "status": "ok", **counts})
    return OK


# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mvcrypt", description="Multivariate PKC and signature toolkit (desk scale).")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, *flags):
        for f in flags:
            if f == "params":
                sp.add_argument("--params", help="e.g. mu=2,nu=3,kappa=1,field=8 or a JSON object")
            elif f == "seed":
                sp.add_argument("--seed", type=int, default=0)
            elif f == "key":
                sp.add_argument("--key", help="key file")
            elif f == "in":
                sp.add_argument("--in", dest="infile", help="input file, '-' for stdin")
            elif f == "out":
                sp.add_argument("--out", help="output key file")
            elif f == "pad":
                sp.add_argument("--pad", help="pad elements in hex, comma separated")
            elif f == "txn":
                sp.add_argument("--txn", type=int)
            elif f == "journal":
                sp.add_argument("--journal", help="TAV journal file")

    for name, fn, flags in (
        ("keygen", cmd_keygen, ("params", "seed", "out")),
        ("encrypt", cmd_encrypt, ("key", "in", "pad")),
        ("decrypt", cmd_decrypt, ("key", "in", "pad")),
        ("sig-keygen", cmd_sig_keygen, ("params", "seed", "out")),
        ("reserve", cmd_reserve, ("key", "journal", "seed")),
        ("sign", cmd_sign, ("key", "journal", "txn", "in")),
        ("verify", cmd_verify, ("key", "in")),
        ("authenticate", cmd_authenticate, ("key", "journal", "in")),
        ("audit", cmd_audit, ("key",)),
    ):
        sp = sub.add_parser(name)
        common(sp, *flags)
        sp.set_defaults(func=fn)
        if name == "reserve":
            sp.add_argument("--gist", help="transaction summary stored with the reservation")
        if name == "audit":
            sp.add_argument("--order-seed", type=int, default=None, help="scan grids in shuffled order")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"mvcrypt: {exc}", file=sys.stderr)
        return USAGE
    except keyio.KeyFileError as exc:
        print(f"mvcrypt: key file error: {exc}", file=sys.stderr)
        return USAGE
    except (SchemeError, ValueError) as exc:
        print(f"mvcrypt: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
