"""Binary checkpoint format with provenance chain and whole-file checksum.

Layout: magic ``VWLM``, u16 version, u32 header length, canonical-JSON
header (config, stage chain, vocab hash, dtype, tensor order), raw
little-endian tensor data in header order, trailing sha256.  Save after load
is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import (
    CheckpointVersionError,
    CorruptCheckpointError,
    TruncatedCheckpointError,
)
from ..fsio import atomic_write_bytes
from .model import Model, ModelConfig, init_model, tensor_shapes
from .train import StageRecord

MAGIC = b"VWLM"
FORMAT_VERSION = 1
_DTYPE_CODE = {"float32": "<f4", "float64": "<f8"}


@dataclass(frozen=True)
class ModelCheckpoint:
    config: ModelConfig
    params: dict[str, np.ndarray]
    stage_chain: tuple[StageRecord, ...]
    vocab_hash: str

    def model(self) -> Model:
        return Model(self.config, {k: p.copy() for k, p in self.params.items()})


def fresh_checkpoint(config: ModelConfig, seed: int, vocab_hash: str) -> ModelCheckpoint:
    """An untrained checkpoint; its stage chain fills in as stages run."""
    model = init_model(config, seed)
    return ModelCheckpoint(
        config=config, params=model.params, stage_chain=(), vocab_hash=vocab_hash
    )


def checkpoint_bytes(ckpt: ModelCheckpoint) -> bytes:
    dtype_code = _DTYPE_CODE[ckpt.config.precision]
    order = tensor_shapes(ckpt.config)
    header = {
        "config": ckpt.config.to_dict(),
        "stage_chain": [record.to_dict() for record in ckpt.stage_chain],
        "vocab_hash": ckpt.vocab_hash,
        "dtype": dtype_code,
        "tensors": [[name, list(shape)] for name, shape in order],
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = bytearray()
    body += MAGIC
    body += struct.pack("<H", FORMAT_VERSION)
    body += struct.pack("<I", len(header_bytes))
    body += header_bytes
    for name, shape in order:
        tensor = ckpt.params[name]
        assert tensor.shape == shape, f"{name}: {tensor.shape} != {shape}"
        body += np.ascontiguousarray(tensor, dtype=dtype_code).tobytes()
    body += hashlib.sha256(bytes(body)).digest()
    return bytes(body)


def save_checkpoint(ckpt: ModelCheckpoint, path: str | Path) -> None:
    atomic_write_bytes(path, checkpoint_bytes(ckpt))


def checkpoint_from_bytes(blob: bytes) -> ModelCheckpoint:
    prefix_len = len(MAGIC) + 2 + 4
    if len(blob) < prefix_len:
        raise TruncatedCheckpointError(f"file is only {len(blob)} bytes")
    if blob[: len(MAGIC)] != MAGIC:
        raise CorruptCheckpointError("bad magic bytes")
    (version,) = struct.unpack_from("<H", blob, len(MAGIC))
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(f"unsupported format version {version}")
    (header_len,) = struct.unpack_from("<I", blob, len(MAGIC) + 2)
    if len(blob) < prefix_len + header_len:
        raise TruncatedCheckpointError("header is cut short")
    try:
        header = json.loads(blob[prefix_len : prefix_len + header_len].decode("utf-8"))
        config = ModelConfig.from_dict(header["config"])
        stage_chain = tuple(StageRecord.from_dict(r) for r in header["stage_chain"])
        vocab_hash = header["vocab_hash"]
        dtype_code = header["dtype"]
        tensors = [(name, tuple(shape)) for name, shape in header["tensors"]]
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptCheckpointError(f"unreadable header: {exc}") from exc
    if dtype_code != _DTYPE_CODE[config.precision]:
        raise CorruptCheckpointError("dtype does not match config precision")
    if tensors != tensor_shapes(config):
        raise CorruptCheckpointError("tensor list does not match architecture")

    itemsize = np.dtype(dtype_code).itemsize
    data_len = sum(int(np.prod(shape)) * itemsize for _, shape in tensors)
    expected = prefix_len + header_len + data_len + hashlib.sha256().digest_size
    if len(blob) < expected:
        raise TruncatedCheckpointError(
            f"expected {expected} bytes, file has {len(blob)}"
        )
    if len(blob) > expected:
        raise CorruptCheckpointError("trailing bytes after checksum")
    digest = hashlib.sha256(blob[:-32]).digest()
    if digest != blob[-32:]:
        raise CorruptCheckpointError("checksum mismatch")

    params: dict[str, np.ndarray] = {}
    offset = prefix_len + header_len
    for name, shape in tensors:
        count = int(np.prod(shape))
        raw = np.frombuffer(blob, dtype=dtype_code, count=count, offset=offset)
        params[name] = raw.reshape(shape).astype(config.precision).copy()
        offset += count * itemsize
    return ModelCheckpoint(
        config=config, params=params, stage_chain=stage_chain, vocab_hash=vocab_hash
    )


def load_checkpoint(path: str | Path) -> ModelCheckpoint:
    return checkpoint_from_bytes(Path(path).read_bytes())
