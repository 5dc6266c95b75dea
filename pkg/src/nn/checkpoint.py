"""
Flat binary parameter checkpoints.

Layout: the 8-byte magic b"MIRLCKPT", a little-endian uint32 array count, then per
array a uint32 rank followed by that many uint64 dimensions, then every array's data
as little-endian float64 in C order, one after another.
"""

import logging
import struct

import numpy as np

from src.errors import ShapeError

logger = logging.getLogger(__name__)

MAGIC = b"MIRLCKPT"


def save_arrays(path, arrays):
    arrays = [np.ascontiguousarray(a, dtype='<f8') for a in arrays]
    with open(path, 'wb') as handle:
        handle.write(MAGIC)
        handle.write(struct.pack('<I', len(arrays)))
        for array in arrays:
            handle.write(struct.pack('<I', array.ndim))
            handle.write(struct.pack(f'<{array.ndim}Q', *array.shape))
        for array in arrays:
            handle.write(array.tobytes(order='C'))
    logger.debug("wrote %d arrays to %s", len(arrays), path)
    return path


def load_arrays(path):
    with open(path, 'rb') as handle:
        blob = handle.read()
    if blob[:len(MAGIC)] != MAGIC:
        raise ShapeError(f"{path} is not a parameter checkpoint")
    try:
        offset = len(MAGIC)
        (count,) = struct.unpack_from('<I', blob, offset)
        offset += 4
        shapes = []
        for _ in range(count):
            (rank,) = struct.unpack_from('<I', blob, offset)
            offset += 4
            shapes.append(struct.unpack_from(f'<{rank}Q', blob, offset))
            offset += 8 * rank
        arrays = []
        for shape in shapes:
            size = int(np.prod(shape, dtype=np.int64))
            data = np.frombuffer(blob, dtype='<f8', count=size, offset=offset)
            arrays.append(data.reshape(shape).astype(np.float64))
            offset += 8 * size
    except (struct.error, ValueError) as exc:
        raise ShapeError(f"checkpoint {path} is truncated or corrupt: {exc}") from exc
    if offset != len(blob):
        raise ShapeError(f"checkpoint {path} has {len(blob) - offset} trailing bytes")
    return arrays


def save_parameters(path, params):
    return save_arrays(path, [p.value for p in params])


def load_parameters(path, params):
    """Copy checkpointed values into existing parameter nodes (shapes must match)"""
    arrays = load_arrays(path)
    if len(arrays) != len(params):
        raise ShapeError(f"checkpoint holds {len(arrays)} arrays, model has {len(params)} parameters")
    for param, array in zip(params, arrays):
        if array.shape != param.value.shape:
            raise ShapeError(f"checkpoint array {array.shape} does not fit parameter {param.value.shape}")
        param.value = array
    return params
