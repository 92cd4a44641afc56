"""Checkpoint files: one JSON header line, one base64 payload line.

The payload holds every parameter as little-endian float64, concatenated
in the order listed under ``"parameters"`` in the header, so the file can
be read without this package.
"""
from __future__ import annotations

import base64
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import ModelConfig, ModelParams, init_model

FORMAT = "magtrans-checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    model: ModelParams
    optimizer: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    seed: int | None = None


def atomic_write(path, data: bytes) -> None:
    """Write to a temporary sibling and rename; nothing is left behind on failure."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode(ckpt: Checkpoint) -> bytes:
    model = ckpt.model
    named = model.named_parameters()
    header = {
        "format": FORMAT,
        "version": VERSION,
        "model": model.config.to_dict(),
        "optimizer": ckpt.optimizer,
        "seed": ckpt.seed,
        "dims": model.dims,
        "metrics": ckpt.metrics,
        "parameters": [[name, list(t.shape)] for name, t in named],
        "dtype": "<f8",
    }
    payload = model.flat().astype("<f8").tobytes()
    head = json.dumps(header, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return (head + "\n" + base64.b64encode(payload).decode("ascii") + "\n").encode("utf-8")


def decode(data: bytes) -> Checkpoint:
    try:
        head, body = data.decode("utf-8").split("\n", 1)
        header = json.loads(head)
    except (UnicodeDecodeError, ValueError) as exc:
        raise CheckpointError(f"unreadable checkpoint header: {exc}") from None
    if header.get("format") != FORMAT or header.get("version") != VERSION:
        raise CheckpointError("not a checkpoint of a supported format/version")
    try:
        raw = base64.b64decode(body.strip(), validate=True)
    except ValueError as exc:
        raise CheckpointError(f"corrupt payload: {exc}") from None
    values = np.frombuffer(raw, dtype="<f8").astype(np.float64)

    cfg = ModelConfig.from_dict(header["model"])
    model = init_model(cfg)
    expected = [[n, list(t.shape)] for n, t in model.named_parameters()]
    if header["parameters"] != expected:
        raise CheckpointError("parameter layout does not match the stored model config")
    if values.size != model.parameter_count():
        raise CheckpointError(f"payload has {values.size} values, layout needs {model.parameter_count()}")
    model.load_flat(values)
    return Checkpoint(model, header.get("optimizer", {}), header.get("metrics", {}), header.get("seed"))


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    atomic_write(path, encode(ckpt))


def load_checkpoint(path) -> Checkpoint:
    return decode(Path(path).read_bytes())
