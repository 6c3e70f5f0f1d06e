"""Checkpoint directories: config.json, vocab.txt, weights.bin, optstate.bin.

The binary tensor container stores, after the magic bytes "RUBT" and a
format version byte: tensor count (uint32 LE), then per tensor the name
length (uint16 LE), UTF-8 name, rank (uint8), dims (uint32 LE each), and
the data as little-endian float32 in row-major order. Tensors are written
in sorted-name order, which makes save -> load -> save byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .model import ModelConfig, parameter_shapes
from .wordpiece import Vocabulary, load_vocab, save_vocab

MAGIC = b"RUBT"
FORMAT_VERSION = 1

CONFIG_FILE = "config.json"
VOCAB_FILE = "vocab.txt"
WEIGHTS_FILE = "weights.bin"
OPTSTATE_FILE = "optstate.bin"

STEP_TENSOR = "step"
FIRST_MOMENT_PREFIX = "exp_avg."
SECOND_MOMENT_PREFIX = "exp_avg_sq."


class CheckpointFormatError(ValueError):
    """A checkpoint file is malformed or inconsistent."""


def tensors_to_bytes(tensors: dict[str, np.ndarray]) -> bytes:
    chunks = [MAGIC, struct.pack("<B", FORMAT_VERSION), struct.pack("<I", len(tensors))]
    for name in sorted(tensors):
        # asarray keeps 0-d arrays 0-d; tobytes(order="C") handles layout
        arr = np.asarray(tensors[name], dtype="<f4")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", arr.ndim))
        for dim in arr.shape:
            chunks.append(struct.pack("<I", dim))
        chunks.append(arr.tobytes(order="C"))
    return b"".join(chunks)


def tensors_from_bytes(blob: bytes, source: str = "<bytes>") -> dict[str, np.ndarray]:
    view = memoryview(blob)
    offset = 0

    def take(n: int) -> memoryview:
        nonlocal offset
        if offset + n > len(view):
            raise CheckpointFormatError(f"{source}: truncated tensor stream")
        piece = view[offset : offset + n]
        offset += n
        return piece

    if bytes(take(4)) != MAGIC:
        raise CheckpointFormatError(f"{source}: bad magic bytes")
    (version,) = struct.unpack("<B", take(1))
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"{source}: unsupported format version {version}")
    (count,) = struct.unpack("<I", take(4))
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2))
        name = bytes(take(name_len)).decode("utf-8")
        (rank,) = struct.unpack("<B", take(1))
        shape = tuple(struct.unpack("<I", take(4))[0] for _ in range(rank))
        n_values = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(take(4 * n_values), dtype="<f4").reshape(shape)
        if name in tensors:
            raise CheckpointFormatError(f"{source}: duplicate tensor {name!r}")
        tensors[name] = data.copy()
    if offset != len(view):
        raise CheckpointFormatError(f"{source}: trailing bytes after tensor stream")
    return tensors


def write_tensor_file(path: str, tensors: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as f:
        f.write(tensors_to_bytes(tensors))


def read_tensor_file(path: str) -> dict[str, np.ndarray]:
    with open(path, "rb") as f:
        return tensors_from_bytes(f.read(), source=path)


@dataclass
class OptimizerState:
    """Adam moments per parameter plus the global step counter."""

    first_moment: dict[str, np.ndarray]
    second_moment: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def zeros(cls, params: dict[str, np.ndarray]) -> "OptimizerState":
        return cls(
            first_moment={k: np.zeros_like(v, dtype=np.float32) for k, v in params.items()},
            second_moment={k: np.zeros_like(v, dtype=np.float32) for k, v in params.items()},
            step=0,
        )

    def to_tensors(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {
            STEP_TENSOR: np.asarray(float(self.step), dtype=np.float32)
        }
        for name, arr in self.first_moment.items():
            out[FIRST_MOMENT_PREFIX + name] = arr
        for name, arr in self.second_moment.items():
            out[SECOND_MOMENT_PREFIX + name] = arr
        return out

    @classmethod
    def from_tensors(cls, tensors: dict[str, np.ndarray]) -> "OptimizerState":
        if STEP_TENSOR not in tensors:
            raise CheckpointFormatError("optimizer state lacks the step counter")
        first = {}
        second = {}
        for name, arr in tensors.items():
            if name.startswith(FIRST_MOMENT_PREFIX):
                first[name[len(FIRST_MOMENT_PREFIX):]] = arr
            elif name.startswith(SECOND_MOMENT_PREFIX):
                second[name[len(SECOND_MOMENT_PREFIX):]] = arr
        return cls(first, second, step=int(tensors[STEP_TENSOR]))


@dataclass
class Checkpoint:
    config: ModelConfig
    vocab: Vocabulary
    params: dict[str, np.ndarray]
    opt_state: OptimizerState
    metadata: dict = field(default_factory=dict)

    def validate(self) -> None:
        if len(self.vocab) != self.config.vocab_size:
            raise CheckpointFormatError(
                f"vocab has {len(self.vocab)} tokens but config says "
                f"{self.config.vocab_size}"
            )
        expected = parameter_shapes(self.config)
        if set(expected) != set(self.params):
            missing = sorted(set(expected) - set(self.params))
            extra = sorted(set(self.params) - set(expected))
            raise CheckpointFormatError(
                f"parameter names do not match the config: missing {missing}, "
                f"unexpected {extra}"
            )
        for name, shape in expected.items():
            if tuple(self.params[name].shape) != shape:
                raise CheckpointFormatError(
                    f"tensor {name} has shape {self.params[name].shape}, "
                    f"expected {shape}"
                )

    def params_hash(self) -> str:
        return hashlib.sha256(tensors_to_bytes(self.params)).hexdigest()


def save_checkpoint(ck: Checkpoint, ckpt_dir: str) -> None:
    ck.validate()
    os.makedirs(ckpt_dir, exist_ok=True)
    payload = dict(ck.config.to_dict())
    payload["metadata"] = ck.metadata
    with open(os.path.join(ckpt_dir, CONFIG_FILE), "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    save_vocab(ck.vocab, os.path.join(ckpt_dir, VOCAB_FILE))
    write_tensor_file(os.path.join(ckpt_dir, WEIGHTS_FILE), ck.params)
    write_tensor_file(os.path.join(ckpt_dir, OPTSTATE_FILE), ck.opt_state.to_tensors())


def load_checkpoint(ckpt_dir: str) -> Checkpoint:
    config_path = os.path.join(ckpt_dir, CONFIG_FILE)
    with open(config_path, "r", encoding="utf-8") as f:
        payload = json.load(f)
    metadata = payload.pop("metadata", {})
    config = ModelConfig.from_dict(payload)
    vocab = load_vocab(os.path.join(ckpt_dir, VOCAB_FILE))
    params = read_tensor_file(os.path.join(ckpt_dir, WEIGHTS_FILE))
    opt_state = OptimizerState.from_tensors(
        read_tensor_file(os.path.join(ckpt_dir, OPTSTATE_FILE))
    )
    ck = Checkpoint(config, vocab, params, opt_state, metadata)
    ck.validate()
    return ck


def clone_params(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {name: arr.copy() for name, arr in params.items()}
