"""Binary checkpoint format.

Layout: ``b"MDXC"``, little-endian ``uint32`` version, ``uint32`` manifest
length, UTF-8 JSON manifest, then the concatenated little-endian tensor
payload. Each manifest entry records ``name, shape, dtype, offset, nbytes``.
Model parameters are stored as 32-bit floats (64-bit when the model runs in
double precision); optimizer moments and BN statistics as 64-bit floats.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from mdx.autodiff import AdamState, BatchNormState, Tensor
from mdx.errors import ConfigError, FormatError
from mdx.model.params import MdxParams, ModelConfig, init_params

MAGIC = b"MDXC"
VERSION = 1
_HEADER = struct.Struct("<4sII")


@dataclass
class Checkpoint:
    params: MdxParams
    adam: AdamState | None
    metadata: dict = field(default_factory=dict)


def _entries(params: MdxParams, adam: AdamState | None):
    out = []
    for name, t in params.tensors.items():
        dt = "<f8" if t.value.dtype == np.float64 else "<f4"
        out.append((f"param/{name}", t.value, dt))
    for l, s in enumerate(params.bn):
        out.append((f"bn/{l}/mean", s.mean, "<f8"))
        out.append((f"bn/{l}/var", s.var, "<f8"))
    if adam is not None:
        for name in params.tensors:
            if name in adam.m:
                out.append((f"adam_m/{name}", adam.m[name], "<f8"))
                out.append((f"adam_v/{name}", adam.v[name], "<f8"))
    return out


def encode_checkpoint(params: MdxParams, adam: AdamState | None = None, metadata=None):
    tensors, payload, offset = [], [], 0
    for name, value, dt in _entries(params, adam):
        raw = np.ascontiguousarray(value, dtype=dt).tobytes()
        tensors.append({"name": name, "shape": list(np.shape(value)), "dtype": dt,
                        "offset": offset, "nbytes": len(raw)})
        payload.append(raw)
        offset += len(raw)
    manifest = {
        "tensors": tensors,
        "model_config": params.config.to_dict(),
        "bn": [{"momentum": s.momentum, "eps": s.eps} for s in params.bn],
        "adam": None if adam is None else {
            "lr": adam.lr, "beta1": adam.beta1, "beta2": adam.beta2, "eps": adam.eps,
            "step": adam.step,
        },
        "metadata": metadata or {},
    }
    blob = json.dumps(manifest, sort_keys=True).encode()
    return _HEADER.pack(MAGIC, VERSION, len(blob)) + blob + b"".join(payload)


def save_checkpoint(path, params: MdxParams, adam: AdamState | None = None, metadata=None):
    data = encode_checkpoint(params, adam, metadata)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)


def decode_checkpoint(data: bytes) -> Checkpoint:
    if len(data) < _HEADER.size:
        raise FormatError("file too short for a checkpoint header")
    magic, version, mlen = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    start = _HEADER.size + mlen
    if start > len(data):
        raise FormatError("manifest length exceeds file size")
    try:
        manifest = json.loads(data[_HEADER.size:start].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable manifest: {exc}") from exc
    try:
        return _from_manifest(manifest, memoryview(data)[start:])
    except (KeyError, TypeError, ValueError, IndexError, ConfigError) as exc:
        raise FormatError(f"malformed checkpoint manifest: {exc!r}") from exc


def _from_manifest(manifest, payload):
    arrays = {}
    for e in manifest["tensors"]:
        lo, n = e["offset"], e["nbytes"]
        if lo + n > len(payload):
            raise FormatError(f"tensor {e['name']} runs past the end of the file")
        arr = np.frombuffer(payload[lo:lo + n], dtype=e["dtype"])
        if arr.size != int(np.prod(e["shape"], dtype=np.int64)):
            raise FormatError(f"tensor {e['name']} has inconsistent length")
        arrays[e["name"]] = arr.reshape(e["shape"]).astype(np.dtype(e["dtype"]).newbyteorder("="))
    if sum(e["nbytes"] for e in manifest["tensors"]) != len(payload):
        raise FormatError("payload length does not match the manifest")

    cfg = ModelConfig.from_dict(manifest["model_config"])
    tensors = {k.split("/", 1)[1]: Tensor(v, requires_grad=True, name=k.split("/", 1)[1])
               for k, v in arrays.items() if k.startswith("param/")}
    bn = [BatchNormState(arrays[f"bn/{l}/mean"], arrays[f"bn/{l}/var"], b["momentum"], b["eps"])
          for l, b in enumerate(manifest["bn"])]
    params = MdxParams(cfg, tensors, bn)
    expected = init_params(cfg)
    for name, t in expected.tensors.items():
        if name not in tensors or tensors[name].shape != t.shape:
            raise FormatError(f"parameter {name} missing or mis-shaped")
    adam = None
    if manifest["adam"] is not None:
        a = manifest["adam"]
        adam = AdamState(a["lr"], a["beta1"], a["beta2"], a["eps"], a["step"])
        for k, v in arrays.items():
            if k.startswith("adam_m/"):
                adam.m[k[7:]] = v
            elif k.startswith("adam_v/"):
                adam.v[k[7:]] = v
    return Checkpoint(params, adam, manifest["metadata"])


def load_checkpoint(path) -> Checkpoint:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read checkpoint {path}: {exc}") from exc
    return decode_checkpoint(data)
