"""Binary dumps of noise lattices and field paths.

Format: raw little-endian float64, C (time-major) order, in ``<base>.bin``,
with a JSON sidecar ``<base>.json`` recording the format version, dtype,
shape, grid, and provenance.  Round trips are bit exact.
"""

import json
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .grid import FieldPath, make_grid
from .noise import WhiteNoiseLattice

__all__ = [
    "save_white_noise",
    "load_white_noise",
    "save_field_path",
    "load_field_path",
]

FORMAT_VERSION = 1
_DTYPE = "<f8"


def _grid_meta(grid):
    return {"L": grid.L, "M": grid.M, "dt": grid.dt, "K": grid.K}


def _write(base, array, meta):
    base = Path(base)
    base.parent.mkdir(parents=True, exist_ok=True)
    arr = np.ascontiguousarray(array, dtype=_DTYPE)
    arr.tofile(base.with_suffix(".bin"))
    meta = dict(meta, format="kpz-renorm-array", version=FORMAT_VERSION,
                dtype=_DTYPE, order="C", shape=list(arr.shape))
    base.with_suffix(".json").write_text(
        json.dumps(meta, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return base.with_suffix(".bin"), base.with_suffix(".json")


def _read(base):
    base = Path(base)
    meta_path = base.with_suffix(".json")
    if not meta_path.exists():
        raise ConfigurationError(f"missing sidecar metadata file {meta_path}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    if meta.get("format") != "kpz-renorm-array":
        raise ConfigurationError(f"{meta_path} is not a kpz-renorm array sidecar")
    if meta.get("version") != FORMAT_VERSION:
        raise ConfigurationError(
            f"unsupported dump version {meta.get('version')} (expected {FORMAT_VERSION})")
    arr = np.fromfile(base.with_suffix(".bin"), dtype=np.dtype(meta["dtype"]))
    arr = arr.reshape(meta["shape"])
    return arr.astype(float, copy=False), meta


def save_white_noise(noise, base):
    """Dump a :class:`WhiteNoiseLattice`; returns (bin path, json path)."""
    meta = {"kind": "white_noise", "grid": _grid_meta(noise.grid),
            "seed": noise.seed, "replica_id": noise.replica_id}
    return _write(base, noise.increments, meta)


def load_white_noise(base):
    arr, meta = _read(base)
    if meta.get("kind") != "white_noise":
        raise ConfigurationError(f"{base}: expected a white_noise dump, got {meta.get('kind')}")
    g = meta["grid"]
    grid = make_grid(g["L"], g["M"], g["dt"], g["K"])
    return WhiteNoiseLattice(arr, grid, int(meta["seed"]), int(meta["replica_id"]))


def save_field_path(path, base, **extra_meta):
    """Dump a :class:`FieldPath` with free-form provenance metadata
    (variant, level, seed, solver configuration...)."""
    meta = {"kind": "field_path", "grid": _grid_meta(path.grid)}
    meta.update(extra_meta)
    return _write(base, path.values, meta)


def load_field_path(base):
    arr, meta = _read(base)
    if meta.get("kind") != "field_path":
        raise ConfigurationError(f"{base}: expected a field_path dump, got {meta.get('kind')}")
    g = meta["grid"]
    grid = make_grid(g["L"], g["M"], g["dt"], g["K"])
    return FieldPath(arr, grid), meta
