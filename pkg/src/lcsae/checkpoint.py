"""Versioned binary serialization for networks and population checkpoints.

Layout: magic, u64 header length, JSON header, then raw little-endian
array payload in header order.  The JSON is emitted with sorted keys so
identical state always produces identical bytes, and loads are atomic:
any inconsistency raises before state is handed out.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

from . import neural, xcsf
from .config import config_from_dict, config_to_dict

NETWORK_MAGIC = b"LCSAENT1"
POPULATION_MAGIC = b"LCSAECK1"
VERSION = 1


class CheckpointError(Exception):
    pass


class _ArrayBlock:
    """Collects arrays for the payload and hands out manifest indices."""

    def __init__(self):
        self.arrays = []
        self.manifest = []

    def add(self, arr: np.ndarray) -> int:
        if arr.dtype == np.float64:
            dtype = "<f8"
        elif arr.dtype == np.uint8:
            dtype = "|u1"
        else:
            raise CheckpointError(f"unsupported array dtype {arr.dtype}")
        self.manifest.append({"shape": list(arr.shape), "dtype": dtype})
        self.arrays.append(np.ascontiguousarray(arr))
        return len(self.arrays) - 1

    def payload(self) -> bytes:
        return b"".join(a.astype(a.dtype.newbyteorder("<"), copy=False).tobytes()
                        for a in self.arrays)


class _ArrayReader:
    def __init__(self, manifest, payload: bytes):
        self.entries = []
        offset = 0
        for entry in manifest:
            dtype = np.dtype(entry["dtype"])
            shape = tuple(entry["shape"])
            size = dtype.itemsize * int(np.prod(shape, dtype=np.int64)) if shape else dtype.itemsize
            count = int(np.prod(shape, dtype=np.int64))
            self.entries.append((offset, dtype, shape, count))
            offset += size
        if offset != len(payload):
            raise CheckpointError(
                f"payload is {len(payload)} bytes, manifest expects {offset}")
        self.payload = payload

    def get(self, index: int) -> np.ndarray:
        offset, dtype, shape, count = self.entries[index]
        arr = np.frombuffer(self.payload, dtype=dtype, count=count, offset=offset)
        return np.ascontiguousarray(arr.astype(dtype.newbyteorder("="), copy=True).reshape(shape))


def _layer_meta(layer: neural.Layer, block: _ArrayBlock) -> dict:
    return {
        "activation": int(layer.activation),
        "eta": layer.eta,
        "arrays": [block.add(layer.weights), block.add(layer.biases),
                   block.add(layer.mask), block.add(layer.mu),
                   block.add(layer.mom_w), block.add(layer.mom_b)],
    }


def _layer_from_meta(meta: dict, reader: _ArrayReader) -> neural.Layer:
    idx = meta["arrays"]
    return neural.Layer(
        weights=reader.get(idx[0]),
        biases=reader.get(idx[1]),
        mask=reader.get(idx[2]),
        activation=neural.Activation(meta["activation"]),
        eta=float(meta["eta"]),
        mu=reader.get(idx[3]),
        mom_w=reader.get(idx[4]),
        mom_b=reader.get(idx[5]),
    )


def _network_meta(net: neural.Network, block: _ArrayBlock) -> dict:
    return {"layers": [_layer_meta(layer, block) for layer in net.layers]}


def _network_from_meta(meta: dict, reader: _ArrayReader) -> neural.Network:
    return neural.Network([_layer_from_meta(m, reader) for m in meta["layers"]])


def _pack(magic: bytes, header: dict, payload: bytes) -> bytes:
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    return magic + struct.pack("<Q", len(blob)) + blob + payload


def _unpack(magic: bytes, data: bytes):
    if len(data) < len(magic) + 8:
        raise CheckpointError("file too short")
    if data[:len(magic)] != magic:
        raise CheckpointError(f"bad magic {data[:len(magic)]!r}")
    (hlen,) = struct.unpack("<Q", data[len(magic):len(magic) + 8])
    start = len(magic) + 8
    if len(data) < start + hlen:
        raise CheckpointError("truncated header")
    try:
        header = json.loads(data[start:start + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt header: {exc}") from exc
    if header.get("version") != VERSION:
        raise CheckpointError(f"unsupported version {header.get('version')}")
    return header, data[start + hlen:]


def network_to_bytes(net: neural.Network) -> bytes:
    block = _ArrayBlock()
    meta = _network_meta(net, block)
    header = {"version": VERSION, "network": meta, "arrays": block.manifest}
    return _pack(NETWORK_MAGIC, header, block.payload())


def network_from_bytes(data: bytes) -> neural.Network:
    header, payload = _unpack(NETWORK_MAGIC, data)
    reader = _ArrayReader(header["arrays"], payload)
    return _network_from_meta(header["network"], reader)


_CL_SCALARS = ("err", "fit", "num", "exp", "set_size", "ts", "born", "mtotal")


def population_to_bytes(pop: xcsf.Population, cfg, rng,
                        window: dict | None = None) -> bytes:
    """Serialize population, config, RNG state, and the partial metrics
    window so training can resume exactly where it stopped."""
    block = _ArrayBlock()
    classifiers = []
    for cl in pop.members:
        meta = {name: getattr(cl, name) for name in _CL_SCALARS}
        meta["condition"] = _network_meta(cl.condition, block)
        meta["prediction"] = _network_meta(cl.prediction, block)
        classifiers.append(meta)
    header = {
        "version": VERSION,
        "config": config_to_dict(cfg),
        "trial": pop.trial,
        "rng": rng.bit_generator.state,
        "window": window or {"mse_sum": 0.0, "m_sum": 0.0, "count": 0},
        "classifiers": classifiers,
        "arrays": block.manifest,
    }
    return _pack(POPULATION_MAGIC, header, block.payload())


def population_from_bytes(data: bytes):
    """Returns (population, config, rng, window)."""
    header, payload = _unpack(POPULATION_MAGIC, data)
    reader = _ArrayReader(header["arrays"], payload)
    members = []
    for meta in header["classifiers"]:
        cl = xcsf.Classifier(
            condition=_network_from_meta(meta["condition"], reader),
            prediction=_network_from_meta(meta["prediction"], reader),
            err=float(meta["err"]), fit=float(meta["fit"]),
            num=int(meta["num"]), exp=int(meta["exp"]),
            set_size=float(meta["set_size"]), ts=int(meta["ts"]),
            born=int(meta["born"]), mtotal=int(meta["mtotal"]),
        )
        members.append(cl)
    pop = xcsf.Population(members=members, trial=int(header["trial"]))
    cfg = config_from_dict(header["config"])
    bg = np.random.PCG64()
    bg.state = header["rng"]
    rng = np.random.Generator(bg)
    return pop, cfg, rng, header["window"]


def save_population(path, pop, cfg, rng, window=None) -> None:
    """Atomic write: serialize fully, then rename into place."""
    blob = population_to_bytes(pop, cfg, rng, window)
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as f:
        f.write(blob)
    os.replace(tmp, path)


def load_population(path):
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    return population_from_bytes(data)
