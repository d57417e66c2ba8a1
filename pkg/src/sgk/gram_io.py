"""Gram-matrix serialization: compact binary format plus CSV export.

Binary layout (little-endian): magic ``GKM1``, u32 matrix size p, u8 kernel
kind code, then the p*(p+1)/2 float64 values of the row-major upper triangle
(diagonal included), then a JSON trailer carrying hyperparameters and the
dataset fingerprint. Writing is byte-deterministic for identical inputs.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .exceptions import BadMagicError, TruncatedFileError
from .expectations import ActivationKind, KernelHyperParams
from .kernels import GramMatrix

__all__ = ["save_gram", "load_gram", "gram_to_csv"]

_MAGIC = b"GKM1"
_KIND_CODES = {"sgtk": 0, "sgnk": 1, "gntk": 2}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}


def _hp_to_dict(hp: KernelHyperParams) -> dict:
    return {
        "k": hp.k,
        "beta": hp.beta,
        "sigma_b": hp.sigma_b,
        "activation": hp.activation.value,
        "gntk_blocks": hp.gntk_blocks,
    }


def _hp_from_dict(d: dict) -> KernelHyperParams:
    return KernelHyperParams(
        k=int(d["k"]),
        beta=float(d["beta"]),
        sigma_b=float(d["sigma_b"]),
        activation=ActivationKind(d["activation"]),
        gntk_blocks=int(d["gntk_blocks"]),
    )


def save_gram(gram: GramMatrix, path) -> None:
    p = gram.size
    triu = gram.values[np.triu_indices(p)]
    trailer = json.dumps(
        {
            "hyperparams": _hp_to_dict(gram.hyperparams),
            "item_level": gram.item_level,
            "dataset_fingerprint": gram.dataset_fingerprint,
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode()
    blob = (
        _MAGIC
        + struct.pack("<IB", p, _KIND_CODES[gram.kind])
        + triu.astype("<f8").tobytes()
        + trailer
    )
    Path(path).write_bytes(blob)


def load_gram(path) -> GramMatrix:
    buf = Path(path).read_bytes()
    name = Path(path).name
    if buf[:4] != _MAGIC:
        raise BadMagicError(f"expected magic {_MAGIC!r}", name)
    if len(buf) < 9:
        raise TruncatedFileError("missing header", name)
    p, code = struct.unpack_from("<IB", buf, 4)
    count = p * (p + 1) // 2
    end = 9 + count * 8
    if len(buf) < end:
        raise TruncatedFileError(
            f"expected {count} float64 values, file too short", name
        )
    triu = np.frombuffer(buf[9:end], dtype="<f8")
    values = np.zeros((p, p))
    iu = np.triu_indices(p)
    values[iu] = triu
    values[(iu[1], iu[0])] = triu
    trailer = json.loads(buf[end:].decode()) if len(buf) > end else {}
    return GramMatrix(
        values=values,
        kind=_CODE_KINDS[code],
        hyperparams=_hp_from_dict(trailer["hyperparams"]),
        item_level=trailer.get("item_level", "graph"),
        dataset_fingerprint=trailer.get("dataset_fingerprint", ""),
    )


def gram_to_csv(gram: GramMatrix, path) -> None:
    """Plain CSV export: provenance header comments, then the dense matrix."""
    hp = _hp_to_dict(gram.hyperparams)
    lines = [
        f"# kind={gram.kind}",
        f"# item_level={gram.item_level}",
        f"# hyperparams={json.dumps(hp, sort_keys=True)}",
        f"# dataset_fingerprint={gram.dataset_fingerprint}",
    ]
    for row in gram.values:
        lines.append(",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")
