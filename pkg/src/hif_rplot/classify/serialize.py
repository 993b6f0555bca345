"""Binary model files.

Layout (little-endian)::

    b"HIFD1"                      magic; the trailing digit is the format version
    u32 n, kind (utf-8)
    u32 n, hyperparameters (JSON, sorted keys)
    u32 n, header (JSON: feature_names, seed, classes, meta)
    u32 n_arrays
    per array:
        u16 n, name (utf-8)
        u8 n, dtype string (e.g. "<f8")
        u8 ndim, ndim x u64 shape
        raw C-order bytes

No timestamps are written, so a model serialises to the same bytes every time.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from hif_rplot.errors import DataError

MAGIC = b"HIFD1"


def _blob(data: bytes) -> bytes:
    return struct.pack("<I", len(data)) + data


def dumps_model(model) -> bytes:
    from hif_rplot.classify.models import pack_state

    header = {
        "feature_names": list(model.feature_names),
        "seed": model.seed,
        "classes": list(model.classes),
        "meta": model.meta,
    }
    parts = [
        MAGIC,
        _blob(model.kind.encode()),
        _blob(json.dumps(model.hyperparams, sort_keys=True).encode()),
        _blob(json.dumps(header, sort_keys=True).encode()),
    ]
    arrays = pack_state(model.state)
    parts.append(struct.pack("<I", len(arrays)))
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        dt = arr.dtype.str.encode()
        name_b = name.encode()
        parts.append(struct.pack("<H", len(name_b)) + name_b)
        parts.append(struct.pack("<B", len(dt)) + dt)
        parts.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}Q", *arr.shape))
        parts.append(arr.tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DataError("truncated model file")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def blob(self) -> bytes:
        (n,) = self.unpack("<I")
        return self.take(n)


def loads_model(data: bytes):
    from hif_rplot.classify import TrainedStageModel
    from hif_rplot.classify.models import unpack_state

    if data[:4] != MAGIC[:4]:
        raise DataError("not a model file (bad magic)")
    if data[:5] != MAGIC:
        raise DataError(f"unsupported model file version {data[4:5]!r}; expected {MAGIC[4:5]!r}")
    r = _Reader(data)
    r.take(len(MAGIC))
    kind = r.blob().decode()
    hp = json.loads(r.blob())
    header = json.loads(r.blob())
    (n_arrays,) = r.unpack("<I")
    arrays = {}
    for _ in range(n_arrays):
        (n,) = r.unpack("<H")
        name = r.take(n).decode()
        (n,) = r.unpack("<B")
        dtype = np.dtype(r.take(n).decode())
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}Q") if ndim else ()
        count = int(np.prod(shape)) if ndim else 1
        arrays[name] = np.frombuffer(r.take(count * dtype.itemsize), dtype=dtype).reshape(shape).copy()
    if r.pos != len(data):
        raise DataError("trailing bytes after model payload")
    return TrainedStageModel(
        kind=kind,
        hyperparams=hp,
        feature_names=tuple(header["feature_names"]),
        seed=int(header["seed"]),
        state=unpack_state(arrays),
        classes=tuple(header["classes"]),
        meta=header.get("meta", {}),
    )


def save_model(model, path) -> None:
    Path(path).write_bytes(dumps_model(model))


def load_model(path):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read model {path}: {exc}") from exc
    return loads_model(data)
