"""JSON serialization of algebras, elements, models, maps and triples.

All files carry the version field "gnslab-1".  Complex matrices are stored
as flat row-major arrays of {re, im} pairs with the shape given by a
header (block_dims for algebra elements, ambient_dim for model bases).
Map files may reference their domain and codomain either inline or by a
path relative to the map file.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .cstar import AlgebraElement, CStarAlgebra
from .errors import StructureError
from .quasi import NormSpec, QuasiStarAlgebra
from .reporting import SCHEMA_VERSION
from .sesq import MapFlags, SesquiMap


class SchemaError(StructureError):
    """A JSON document does not follow the expected schema."""


def _check_version(data: dict, kind: str) -> None:
    if not isinstance(data, dict):
        raise SchemaError(f"expected a JSON object for {kind}")
    if data.get("version") != SCHEMA_VERSION:
        raise SchemaError(
            f"{kind}: unsupported version {data.get('version')!r}, expected {SCHEMA_VERSION!r}"
        )
    if data.get("kind") != kind:
        raise SchemaError(f"expected kind {kind!r}, got {data.get('kind')!r}")


# -- complex matrices -----------------------------------------------------------


def encode_matrix(matrix: np.ndarray) -> list[dict]:
    flat = np.asarray(matrix, dtype=complex).ravel()
    return [{"re": float(z.real), "im": float(z.imag)} for z in flat]


def decode_matrix(pairs, rows: int, cols: int) -> np.ndarray:
    if len(pairs) != rows * cols:
        raise SchemaError(f"expected {rows * cols} entries, got {len(pairs)}")
    flat = np.array([complex(p["re"], p["im"]) for p in pairs])
    return flat.reshape(rows, cols)


def encode_vector(vector: np.ndarray) -> list[dict]:
    return encode_matrix(np.asarray(vector).reshape(1, -1))


def decode_vector(pairs, length: int) -> np.ndarray:
    return decode_matrix(pairs, 1, length).ravel()


# -- C*-algebras and elements ----------------------------------------------------


def encode_algebra(algebra: CStarAlgebra) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "kind": "cstar_algebra",
        "block_dims": list(algebra.block_dims),
    }


def decode_algebra(data: dict) -> CStarAlgebra:
    _check_version(data, "cstar_algebra")
    return CStarAlgebra(tuple(data["block_dims"]))


def encode_element(z: AlgebraElement) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "kind": "element",
        "block_dims": list(z.algebra.block_dims),
        "blocks": [encode_matrix(b) for b in z.blocks],
    }


def decode_element(data: dict, algebra: CStarAlgebra | None = None) -> AlgebraElement:
    _check_version(data, "element")
    dims = tuple(data["block_dims"])
    if algebra is None:
        algebra = CStarAlgebra(dims)
    elif algebra.block_dims != dims:
        raise SchemaError("element block_dims do not match the target algebra")
    blocks = [
        decode_matrix(pairs, n, n) for pairs, n in zip(data["blocks"], dims, strict=True)
    ]
    return algebra.element(blocks)


# -- quasi *-algebra models -------------------------------------------------------


def _encode_norm(spec: NormSpec | None) -> dict | None:
    if spec is None:
        return None
    out = {"kind": spec.kind}
    if spec.p is not None:
        out["p"] = spec.p
    return out


def _decode_norm(data: dict | None) -> NormSpec | None:
    if data is None:
        return None
    return NormSpec(kind=data["kind"], p=data.get("p"))


def encode_quasi(Q: QuasiStarAlgebra) -> dict:
    out = {
        "version": SCHEMA_VERSION,
        "kind": "quasi_algebra",
        "ambient_dim": Q.ambient_dim,
        "basis": [encode_matrix(b) for b in Q.basis],
        "a0_indices": list(Q.a0_indices),
    }
    if Q.unit_coeffs is not None:
        out["unit_coeffs"] = encode_vector(Q.unit_coeffs)
    norms = {}
    if Q.norm_a is not None:
        norms["A"] = _encode_norm(Q.norm_a)
    if Q.norm_a0 is not None:
        norms["A0"] = _encode_norm(Q.norm_a0)
    if norms:
        out["norms"] = norms
    return out


def decode_quasi(data: dict) -> QuasiStarAlgebra:
    _check_version(data, "quasi_algebra")
    m = int(data["ambient_dim"])
    basis = tuple(decode_matrix(p, m, m) for p in data["basis"])
    unit = data.get("unit_coeffs")
    norms = data.get("norms", {})
    return QuasiStarAlgebra(
        ambient_dim=m,
        basis=basis,
        a0_indices=tuple(data["a0_indices"]),
        unit_coeffs=decode_vector(unit, len(basis)) if unit is not None else None,
        norm_a=_decode_norm(norms.get("A")),
        norm_a0=_decode_norm(norms.get("A0")),
    )


# -- sesquilinear maps -------------------------------------------------------------


def encode_map(phi: SesquiMap) -> dict:
    d = phi.dim
    gram = []
    for i in range(d):
        row = []
        for j in range(d):
            row.append([encode_matrix(g[i, j]) for g in phi.gram])
        gram.append(row)
    return {
        "version": SCHEMA_VERSION,
        "kind": "sesq_map",
        "domain_ref": encode_quasi(phi.domain) if phi.domain is not None else None,
        "codomain_ref": encode_algebra(phi.codomain),
        "gram": gram,
        "flags": phi.flags.to_dict(),
    }


def _resolve_ref(ref, base_dir: str, decoder):
    if ref is None:
        return None
    if isinstance(ref, str):
        path = ref if os.path.isabs(ref) else os.path.join(base_dir, ref)
        return decoder(load_json(path))
    return decoder(ref)


def decode_map(data: dict, base_dir: str = ".") -> SesquiMap:
    _check_version(data, "sesq_map")
    codomain = _resolve_ref(data["codomain_ref"], base_dir, decode_algebra)
    if codomain is None:
        raise SchemaError("map file has no codomain")
    domain = _resolve_ref(data.get("domain_ref"), base_dir, decode_quasi)
    rows = data["gram"]
    d = len(rows)
    gram = []
    for k, n in enumerate(codomain.block_dims):
        g = np.zeros((d, d, n, n), dtype=complex)
        for i in range(d):
            if len(rows[i]) != d:
                raise SchemaError("gram tensor is not square")
            for j in range(d):
                g[i, j] = decode_matrix(rows[i][j][k], n, n)
        gram.append(g)
    return SesquiMap(
        codomain=codomain,
        gram=tuple(gram),
        domain=domain,
        flags=MapFlags.from_dict(data.get("flags", {})),
    )


# -- GNS triples --------------------------------------------------------------------


def encode_triple(triple) -> dict:
    qs = triple.quotient
    return {
        "version": SCHEMA_VERSION,
        "kind": "gns_triple",
        "rep_dim": triple.rep_dim,
        "null_dim": qs.null_dim,
        "rep_basis": encode_matrix(qs.rep_basis),
        "pi": [encode_matrix(triple.pi[i]) for i in range(triple.phi.dim)],
        "cyclic": encode_vector(triple.cyclic),
        "domain_coords": encode_matrix(triple.domain_coords),
        "residuals": {k: float(v) for k, v in sorted(triple.residuals.items())},
    }


# -- example instances ----------------------------------------------------------------


def encode_instance(
    m: int,
    p: float,
    W: np.ndarray,
    n_grid: int,
    curve_samples: np.ndarray | None = None,
) -> dict:
    out = {
        "version": SCHEMA_VERSION,
        "kind": "instance",
        "m": int(m),
        "p": float(p),
        "W": encode_matrix(W),
        "n_grid": int(n_grid),
    }
    if curve_samples is not None:
        samples = np.asarray(curve_samples, dtype=complex)
        out["curve"] = {
            "h": int(samples.shape[1]),
            "samples": [encode_matrix(a) for a in samples],
        }
    return out


def decode_instance(data: dict) -> dict:
    _check_version(data, "instance")
    m = int(data["m"])
    out = {
        "m": m,
        "p": float(data["p"]),
        "W": decode_matrix(data["W"], m, m),
        "n_grid": int(data["n_grid"]),
        "curve": None,
    }
    if data.get("curve") is not None:
        h = int(data["curve"]["h"])
        out["curve"] = np.stack(
            [decode_matrix(a, h, h) for a in data["curve"]["samples"]], axis=0
        )
    return out


# -- file IO ----------------------------------------------------------------------------


def save_json(path: str, data: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def dumps(data: dict) -> str:
    return json.dumps(data, sort_keys=True, indent=2) + "\n"
