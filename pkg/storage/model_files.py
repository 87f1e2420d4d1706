"""
EBEQ1 model files.

    magic    b"EBEQ1"
    kind     uint8: 1 = Q-table, 2 = network
    Q-table  uint32 rows, uint32 cols, float64 alpha, float64 gamma, rows*cols float64
    network  uint32 layers, then per layer: uint32 fan_in, uint32 fan_out,
             uint8 activation, fan_in*fan_out float64 weights, fan_out float64 biases

All integers and doubles are little-endian; matrices are row-major.
"""

import logging
import struct

import numpy as np

from services.dqn import ACTIVATIONS, MLP
from services.errors import ModelFileError
from services.tabular import QTable
from storage.files import atomic_write_bytes

logger = logging.getLogger(__name__)

MAGIC = b'EBEQ1'
KIND_TABLE = 1
KIND_NETWORK = 2
MODEL_SUFFIX = '.ebeq'


def _doubles(array):
    return np.ascontiguousarray(array, dtype='<f8').tobytes()


def encode_model(model):
    if isinstance(model, QTable):
        rows, cols = model.shape
        return b''.join((
            MAGIC, struct.pack('<B', KIND_TABLE),
            struct.pack('<IIdd', rows, cols, model.alpha, model.gamma),
            _doubles(model.table),
        ))
    if isinstance(model, MLP):
        parts = [MAGIC, struct.pack('<B', KIND_NETWORK), struct.pack('<I', len(model.weights))]
        for w, b, name in zip(model.weights, model.biases, model.activations):
            fan_in, fan_out = w.shape
            parts.append(struct.pack('<IIB', fan_in, fan_out, ACTIVATIONS.index(name)))
            parts.append(_doubles(w))
            parts.append(_doubles(b))
        return b''.join(parts)
    raise TypeError(f"Cannot serialise a {type(model).__name__}")


class _Reader:
    def __init__(self, data, source):
        self.data = data
        self.offset = 0
        self.source = source

    def unpack(self, fmt):
        size = struct.calcsize(fmt)
        if self.offset + size > len(self.data):
            raise ModelFileError(f"{self.source}: truncated model file")
        values = struct.unpack_from(fmt, self.data, self.offset)
        self.offset += size
        return values

    def doubles(self, count, shape):
        size = 8 * count
        if self.offset + size > len(self.data):
            raise ModelFileError(f"{self.source}: truncated model file")
        array = np.frombuffer(self.data, dtype='<f8', count=count, offset=self.offset)
        self.offset += size
        return array.astype(np.float64).reshape(shape)

    def finish(self):
        if self.offset != len(self.data):
            raise ModelFileError(f"{self.source}: {len(self.data) - self.offset} unexpected trailing bytes")


def decode_model(data, source='<bytes>'):
    if data[:len(MAGIC)] != MAGIC:
        raise ModelFileError(f"{source}: not an EBEQ1 model file")

    reader = _Reader(data, source)
    reader.offset = len(MAGIC)
    (kind,) = reader.unpack('<B')

    try:
        if kind == KIND_TABLE:
            rows, cols, alpha, gamma = reader.unpack('<IIdd')
            table = reader.doubles(rows * cols, (rows, cols))
            reader.finish()
            return QTable(table, alpha, gamma)

        if kind == KIND_NETWORK:
            (n_layers,) = reader.unpack('<I')
            weights, biases, activations = [], [], []
            for _ in range(n_layers):
                fan_in, fan_out, code = reader.unpack('<IIB')
                if code >= len(ACTIVATIONS):
                    raise ModelFileError(f"{source}: unknown activation code {code}")
                weights.append(reader.doubles(fan_in * fan_out, (fan_in, fan_out)))
                biases.append(reader.doubles(fan_out, (fan_out,)))
                activations.append(ACTIVATIONS[code])
            reader.finish()
            return MLP.from_parameters(weights, biases, activations)
    except ValueError as e:
        raise ModelFileError(f"{source}: {e}") from e

    raise ModelFileError(f"{source}: unknown model kind {kind}")


def save_model(model, path):
    path = atomic_write_bytes(path, encode_model(model))
    logger.debug(f"Saved {type(model).__name__} to {path}")
    return path


def load_model(path):
    try:
        with open(path, 'rb') as f:
            data = f.read()
    except OSError as e:
        logger.error(f"Failed to read model file {path}: {str(e)}")
        raise
    return decode_model(data, source=str(path))
