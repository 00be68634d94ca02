"""Model checkpoints: metadata JSON + float32 LE blob with a tensor index.

Layout: magic "MPCK" | u32 header length | header JSON | raw float32 data.
The header holds arbitrary metadata plus, per tensor, name/shape/offset
(offsets in float32 elements into the blob).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import DataError

MAGIC = b"MPCK"


def save_checkpoint(path: str | Path, params: dict[str, np.ndarray],
                    metadata: dict | None = None) -> None:
    tensors = []
    blobs = []
    offset = 0
    for name in sorted(params):
        arr = np.ascontiguousarray(params[name], dtype="<f4")
        tensors.append({"name": name, "shape": list(arr.shape),
                        "offset": offset})
        blobs.append(arr.tobytes())
        offset += arr.size
    header = json.dumps({"metadata": metadata or {}, "tensors": tensors},
                        ensure_ascii=False, sort_keys=True,
                        separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise DataError(f"not a checkpoint file: {path}")
    header_len, = struct.unpack_from("<I", data, 4)
    header = json.loads(data[8:8 + header_len].decode("utf-8"))
    blob = data[8 + header_len:]
    params: dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = 4 * entry["offset"]
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=start)
        params[entry["name"]] = arr.reshape(shape).copy()
    return params, header["metadata"]
