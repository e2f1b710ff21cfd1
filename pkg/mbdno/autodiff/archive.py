"""
Named-tensor archive.

Little-endian layout:

    magic     8 bytes  b"MBDNOARC"
    version   uint32   1
    count     uint32   number of entries
    entries, each:
        name_len  uint16, name utf-8
        dtype     uint8    0 = float64, 1 = complex128 (stored as interleaved float64)
        ndim      uint8
        shape     uint64 * ndim
        payload   float64 * (prod(shape) or 2 * prod(shape) for complex)
    meta_len  uint64, metadata as utf-8 JSON
"""

import json
import os
import struct

import numpy as np

from ..errors import ValidationError

MAGIC = b"MBDNOARC"
VERSION = 1

DTYPE_CODES = {0: np.float64, 1: np.complex128}


def save_archive(path, tensors, metadata=None):
    chunks = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, array in tensors.items():
        array = np.asarray(array)
        code = 1 if np.iscomplexobj(array) else 0
        array = np.asarray(array, dtype=DTYPE_CODES[code], order="C")
        encoded = name.encode()
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<BB", code, array.ndim))
        chunks.append(struct.pack("<{}Q".format(array.ndim), *array.shape))
        payload = array.reshape(-1).view(np.float64)
        chunks.append(payload.astype("<f8", copy=False).tobytes())
    meta = json.dumps(metadata or {}, sort_keys=True).encode()
    chunks.append(struct.pack("<Q", len(meta)))
    chunks.append(meta)
    with open(path, "wb") as f:
        f.write(b"".join(chunks))


def load_archive(path):
    """Returns (dict of arrays in stored order, metadata dict)."""
    if not os.path.isfile(path):
        raise ValidationError("Archive '{}' does not exist".format(path))
    with open(path, "rb") as f:
        data = f.read()
    if data[:8] != MAGIC:
        raise ValidationError("'{}' is not a tensor archive".format(path))
    version, count = struct.unpack_from("<II", data, 8)
    if version != VERSION:
        raise ValidationError(
            "Unsupported archive version {} in '{}'".format(version, path)
        )
    offset = 16
    tensors = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        name = data[offset : offset + name_len].decode()
        offset += name_len
        code, ndim = struct.unpack_from("<BB", data, offset)
        offset += 2
        if code not in DTYPE_CODES:
            raise ValidationError("Unknown dtype code {} in '{}'".format(code, path))
        shape = struct.unpack_from("<{}Q".format(ndim), data, offset)
        offset += 8 * ndim
        size = int(np.prod(shape)) * (2 if code == 1 else 1)
        values = np.frombuffer(data, dtype="<f8", count=size, offset=offset)
        offset += 8 * size
        array = values.astype(np.float64)
        if code == 1:
            array = array.view(np.complex128)
        tensors[name] = array.reshape(shape)
    (meta_len,) = struct.unpack_from("<Q", data, offset)
    offset += 8
    metadata = json.loads(data[offset : offset + meta_len].decode())
    return tensors, metadata
