"""Self-describing JSON checkpoints.

A checkpoint carries the format version, the resolved config echo (with
seed), and every parameter as (name, shape, flat float64 values). The
serialization is canonical (sorted keys, repr-roundtrip floats), so
save -> load -> save is byte-identical.
"""

from __future__ import annotations

import json

import numpy as np

from .autodiff import value_of
from .config import FORMAT_VERSION, build_experiment, canonical_json
from .errors import ConfigError
from .trainer import build_model

_PREFIXES = ("T", "V")


def checkpoint_dict(model, resolved_config):
    params = []
    for prefix, net in (("T", model.T), ("V", model.V)):
        for name, tensor in net.tensors():
            arr = value_of(tensor)
            params.append({
                "name": f"{prefix}.{name}",
                "shape": list(arr.shape),
                "data": [float(v) for v in arr.ravel()],
            })
    return {
        "format_version": FORMAT_VERSION,
        "config": dict(resolved_config),
        "params": params,
    }


def save_checkpoint(path, model, resolved_config):
    payload = checkpoint_dict(model, resolved_config)
    with open(path, "w", newline="\n") as fh:
        fh.write(canonical_json(payload))
        fh.write("\n")


def load_checkpoint(path):
    """Rebuild a ModelPair from disk; shape tampering is rejected by name."""
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read checkpoint: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid checkpoint JSON ({exc})") from exc
    for key in ("format_version", "config", "params"):
        if key not in payload:
            raise ConfigError(f"{path}: checkpoint missing field {key!r}")
    if payload["format_version"] != FORMAT_VERSION:
        raise ConfigError(
            f"{path}: unsupported checkpoint version {payload['format_version']!r}"
        )
    exp = build_experiment(payload["config"])
    rng = np.random.default_rng(exp.seed)
    model = build_model(exp.trainer, exp.source.dim, rng)

    by_name = {}
    for prefix, net in (("T", model.T), ("V", model.V)):
        for name, tensor in net.tensors():
            by_name[f"{prefix}.{name}"] = tensor
    seen = set()
    for entry in payload["params"]:
        name = entry.get("name")
        if name not in by_name:
            raise ConfigError(f"{path}: unexpected parameter {name!r}")
        tensor = by_name[name]
        shape = tuple(entry["shape"])
        data = np.asarray(entry["data"], dtype=np.float64)
        if shape != tensor.data.shape or data.size != tensor.data.size:
            raise ConfigError(
                f"{path}: parameter {name} has shape {list(shape)} with "
                f"{data.size} values, expected {list(tensor.data.shape)}"
            )
        if not np.all(np.isfinite(data)):
            raise ConfigError(f"{path}: parameter {name} contains non-finite values")
        tensor.data[...] = data.reshape(shape)
        seen.add(name)
    missing = set(by_name) - seen
    if missing:
        raise ConfigError(f"{path}: checkpoint missing parameters {sorted(missing)}")
    return model, payload["config"]
