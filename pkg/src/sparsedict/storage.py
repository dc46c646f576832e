"""Binary matrix containers and run manifests.

Both containers share one layout: an 8-byte magic, the two dimensions as
little-endian unsigned 32-bit integers, then the entries as little-endian
IEEE-754 doubles in column-major order.

  SDICT v1 (magic ``SDICT\\0v1``): dictionaries, dims (m, K)
  SDATA v1 (magic ``SDATA\\0v1``): training sets and dense code matrices,
  dims (rows, cols)
"""

from __future__ import annotations

import json
import struct
import time
from pathlib import Path

import numpy as np

from .exceptions import FormatError

__all__ = [
    "MAGIC_DICT",
    "MAGIC_DATA",
    "save_dictionary",
    "load_dictionary",
    "save_dataset",
    "load_dataset",
    "write_json",
    "read_json",
    "write_manifest",
]

MAGIC_DICT = b"SDICT\x00v1"
MAGIC_DATA = b"SDATA\x00v1"
_HEADER = struct.Struct("<8sII")


def _save_matrix(path, M: np.ndarray, magic: bytes) -> None:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise FormatError("only 2-D matrices can be stored")
    rows, cols = M.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(magic, rows, cols))
        fh.write(np.asfortranarray(M).astype("<f8").tobytes(order="F"))


def _load_matrix(path, magic: bytes) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise FormatError(f"{path}: truncated header")
        got_magic, rows, cols = _HEADER.unpack(head)
        if got_magic != magic:
            raise FormatError(
                f"{path}: bad magic {got_magic!r}, expected {magic!r}")
        payload = fh.read()
    expected = rows * cols * 8
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}")
    data = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return data.reshape((rows, cols), order="F")


def save_dictionary(path, D: np.ndarray) -> None:
    _save_matrix(path, D, MAGIC_DICT)


def load_dictionary(path) -> np.ndarray:
    return _load_matrix(path, MAGIC_DICT)


def save_dataset(path, Y: np.ndarray) -> None:
    _save_matrix(path, Y, MAGIC_DATA)


def load_dataset(path) -> np.ndarray:
    return _load_matrix(path, MAGIC_DATA)


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def write_manifest(out_dir, command: str, *, seed: int, config_path=None,
                   inputs=None, outputs=None, extra=None) -> Path:
    """Record what a run did, next to its outputs."""
    from . import __version__

    manifest = {
        "command": command,
        "config": str(config_path) if config_path else None,
        "seed": seed,
        "inputs": [str(p) for p in (inputs or [])],
        "outputs": [str(p) for p in (outputs or [])],
        "tool_version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    if extra:
        manifest.update(extra)
    path = Path(out_dir) / "manifest.json"
    write_json(path, manifest)
    return path
