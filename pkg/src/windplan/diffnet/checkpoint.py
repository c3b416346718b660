"""Binary parameter checkpoints.

Layout (all integers little-endian)::

    magic      4 bytes   b"WPCK"
    version    uint32    currently 1
    hlen       uint32    length of the header in bytes
    header     hlen      UTF-8 JSON: the MlpConfig fields plus "n_params"
    params     8*n       float64, little-endian, in ParamVector order
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .mlp import MlpConfig, ParamVector

MAGIC = b"WPCK"
VERSION = 1


class CheckpointError(ValueError):
    pass


def dumps(params: ParamVector) -> bytes:
    header = dict(asdict(params.cfg), n_params=params.size)
    hbytes = json.dumps(header, sort_keys=True).encode()
    body = params.data.astype("<f8").tobytes()
    return MAGIC + struct.pack("<II", VERSION, len(hbytes)) + hbytes + body


def loads(blob: bytes) -> ParamVector:
    if blob[:4] != MAGIC:
        raise CheckpointError("not a checkpoint (bad magic)")
    version, hlen = struct.unpack("<II", blob[4:12])
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    header = json.loads(blob[12:12 + hlen].decode())
    n = header.pop("n_params")
    cfg = MlpConfig(**header)
    data = np.frombuffer(blob[12 + hlen:], dtype="<f8")
    if data.size != n:
        raise CheckpointError(f"expected {n} parameters, found {data.size}")
    return ParamVector(cfg, data.astype(float))


def save(path, params: ParamVector) -> None:
    Path(path).write_bytes(dumps(params))


def load(path) -> ParamVector:
    return loads(Path(path).read_bytes())
