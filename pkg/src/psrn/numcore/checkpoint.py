"""Binary checkpoint files.

Layout: ``b"PSRNCKPT"``, u32 version, then records of
(u32 name length, UTF-8 name, u32 rank, u32 extents..., little-endian f64 values)
until end of file.
"""

import struct

import numpy as np

MAGIC = b"PSRNCKPT"
VERSION = 1


class CheckpointFormatError(ValueError):
    pass


def encode_checkpoint(arrays):
    """Serialize a name -> array mapping (insertion order kept)."""
    chunks = [MAGIC, struct.pack("<I", VERSION)]
    for name, arr in arrays.items():
        arr = np.asarray(arr, dtype="<f8")
        raw = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(raw)))
        chunks.append(raw)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(np.ascontiguousarray(arr).tobytes())
    return b"".join(chunks)


def decode_checkpoint(data):
    if data[:8] != MAGIC:
        raise CheckpointFormatError("bad magic at byte 0: not a PSRN checkpoint")
    if len(data) < 12:
        raise CheckpointFormatError("truncated header at byte 8")
    (version,) = struct.unpack_from("<I", data, 8)
    if version != VERSION:
        raise CheckpointFormatError(f"unsupported checkpoint version {version} at byte 8")
    pos = 12
    out = {}

    def need(n, what):
        if pos + n > len(data):
            raise CheckpointFormatError(f"truncated {what} at byte {pos}")

    while pos < len(data):
        need(4, "name length")
        (n,) = struct.unpack_from("<I", data, pos)
        pos += 4
        need(n, "name")
        name = data[pos:pos + n].decode("utf-8")
        pos += n
        need(4, "rank")
        (rank,) = struct.unpack_from("<I", data, pos)
        pos += 4
        need(4 * rank, "extents")
        shape = struct.unpack_from(f"<{rank}I", data, pos)
        pos += 4 * rank
        count = int(np.prod(shape, dtype=np.int64))
        need(8 * count, f"values of {name!r}")
        out[name] = np.frombuffer(data, dtype="<f8", count=count, offset=pos).reshape(shape).astype(np.float64)
        pos += 8 * count
    return out


def save_checkpoint(path, params):
    """Write a ParameterSet or name -> array mapping to ``path``."""
    arrays = {n: (params[n].values if hasattr(params[n], "values") else params[n]) for n in params}
    with open(path, "wb") as fh:
        fh.write(encode_checkpoint(arrays))


def load_checkpoint(path):
    with open(path, "rb") as fh:
        return decode_checkpoint(fh.read())
