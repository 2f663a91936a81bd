"""JSON file formats for keys, ciphertexts, shared keys, and verdicts.

Key files carry both halves of the key pair:

    {"params": {...}, "h0_support": [...], "h1_support": [...],
     "sigma_hex": "...", "h_hex": "..."}

Ciphertext files are {"c0_hex": "...", "c1_hex": "..."}.  All JSON emitted by
the package uses sorted keys and compact separators so identical inputs
produce byte-identical files.
"""

from __future__ import annotations

import json

from .errors import ParameterError, SchemaError
from .keys import Ciphertext, PrivateKey, PublicKey, SharedKey, SystemParams, custom_params
from .ring import DensePoly, SparsePoly


def dumps_canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_canonical(obj))


def load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            blob = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(blob, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    return blob


def _need(blob: dict, field: str, path: str):
    if field not in blob:
        raise SchemaError(f"{path}: missing field {field!r}", field=field)
    return blob[field]


def params_from_dict(blob: dict, path: str = "<params>") -> SystemParams:
    for f in ("r", "w", "t", "l", "lambda"):
        if f not in blob:
            raise SchemaError(f"{path}: params missing {f!r}", field=f)
        if not isinstance(blob[f], int):
            raise SchemaError(f"{path}: params field {f!r} must be an integer", field=f)
    return custom_params(r=blob["r"], w=blob["w"], t=blob["t"], l=blob["l"],
                         security_bits=blob["lambda"])


def key_to_dict(params: SystemParams, sk: PrivateKey, pk: PublicKey) -> dict:
    return {
        "params": params.to_json_dict(),
        "h0_support": list(sk.h0.support),
        "h1_support": list(sk.h1.support),
        "sigma_hex": sk.sigma.hex(),
        "h_hex": pk.h.to_hex(),
    }


def write_key(path: str, params: SystemParams, sk: PrivateKey, pk: PublicKey) -> None:
    write_json(path, key_to_dict(params, sk, pk))


def read_key(path: str) -> tuple[SystemParams, PrivateKey, PublicKey]:
    blob = load_json(path)
    params = params_from_dict(_need(blob, "params", path), path)
    ring = params.ring
    try:
        h0 = SparsePoly.from_indices(ring, _need(blob, "h0_support", path))
        h1 = SparsePoly.from_indices(ring, _need(blob, "h1_support", path))
        sigma = bytes.fromhex(_need(blob, "sigma_hex", path))
        h = DensePoly.from_hex(ring, _need(blob, "h_hex", path))
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"{path}: malformed key material ({exc})") from exc
    try:
        sk = PrivateKey(h0=h0, h1=h1, sigma=sigma)
        sk.check_params(params)
    except ParameterError as exc:
        raise SchemaError(f"{path}: inconsistent key material ({exc})") from exc
    return params, sk, PublicKey(h=h)


def read_public_key(path: str) -> tuple[SystemParams, PublicKey]:
    """Encapsulation needs only params and h; private fields may be absent."""
    blob = load_json(path)
    params = params_from_dict(_need(blob, "params", path), path)
    try:
        h = DensePoly.from_hex(params.ring, _need(blob, "h_hex", path))
    except ValueError as exc:
        raise SchemaError(f"{path}: malformed h_hex ({exc})", field="h_hex") from exc
    return params, PublicKey(h=h)


def ciphertext_to_dict(c: Ciphertext) -> dict:
    return {"c0_hex": c.c0.to_hex(), "c1_hex": c.c1.hex()}


def write_ciphertext(path: str, c: Ciphertext) -> None:
    write_json(path, ciphertext_to_dict(c))


def read_ciphertext(path: str, params: SystemParams) -> Ciphertext:
    blob = load_json(path)
    try:
        c0 = DensePoly.from_hex(params.ring, _need(blob, "c0_hex", path))
    except ValueError as exc:
        raise SchemaError(f"{path}: malformed c0_hex ({exc})", field="c0_hex") from exc
    try:
        c1 = bytes.fromhex(_need(blob, "c1_hex", path))
    except ValueError as exc:
        raise SchemaError(f"{path}: malformed c1_hex ({exc})", field="c1_hex") from exc
    try:
        c = Ciphertext(c0=c0, c1=c1)
        c.check_params(params)
    except ParameterError as exc:
        raise SchemaError(f"{path}: inconsistent ciphertext ({exc})") from exc
    return c


def write_shared_key(path: str, k: SharedKey) -> None:
    write_json(path, {"shared_key_hex": k.data.hex()})


def read_shared_key(path: str) -> SharedKey:
    blob = load_json(path)
    try:
        return SharedKey(bytes.fromhex(_need(blob, "shared_key_hex", path)))
    except ValueError as exc:
        raise SchemaError(f"{path}: malformed shared key ({exc})") from exc
