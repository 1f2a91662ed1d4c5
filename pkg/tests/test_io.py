import json

import numpy as np
import pytest

from kpz_renorm import (
    ConfigurationError,
    cole_hopf,
    initial_profile,
    load_field_path,
    load_white_noise,
    make_grid,
    make_mollifier,
    mollify_noise,
    sample_white_noise,
    save_field_path,
    save_white_noise,
    solve_she,
)


def test_white_noise_round_trip(tmp_path, grid_small):
    noise = sample_white_noise(grid_small, 77, 2)
    bin_path, json_path = save_white_noise(noise, tmp_path / "w")
    assert bin_path.exists() and json_path.exists()
    back = load_white_noise(tmp_path / "w")
    assert np.array_equal(back.increments, noise.increments)
    assert back.grid == noise.grid
    assert back.seed == 77 and back.replica_id == 2

    meta = json.loads(json_path.read_text())
    assert meta["dtype"] == "<f8"
    assert meta["version"] == 1
    assert meta["shape"] == [grid_small.K, grid_small.M]


def test_field_path_round_trip(tmp_path, grid_small):
    noise = sample_white_noise(grid_small, 79, 0)
    moll = make_mollifier(grid_small, 4)
    f = initial_profile(grid_small, "sinusoid", amplitude=0.4)
    H = cole_hopf(solve_she(grid_small, mollify_noise(noise, moll), None, f))
    save_field_path(H, tmp_path / "h", variant="she_mollified", n=4, seed=79)
    back, meta = load_field_path(tmp_path / "h")
    assert np.array_equal(back.values, H.values)
    assert meta["variant"] == "she_mollified" and meta["n"] == 4


def test_missing_sidecar(tmp_path, grid_small):
    noise = sample_white_noise(grid_small, 81, 0)
    save_white_noise(noise, tmp_path / "w")
    (tmp_path / "w.json").unlink()
    with pytest.raises(ConfigurationError, match="sidecar"):
        load_white_noise(tmp_path / "w")


def test_kind_mismatch(tmp_path, grid_small):
    noise = sample_white_noise(grid_small, 83, 0)
    save_white_noise(noise, tmp_path / "w")
    with pytest.raises(ConfigurationError, match="field_path"):
        load_field_path(tmp_path / "w")


def test_little_endian_on_disk(tmp_path):
    g = make_grid(1.0, 8, 0.5, 1)
    from kpz_renorm.noise import WhiteNoiseLattice
    inc = np.arange(8, dtype=float).reshape(1, 8)
    save_white_noise(WhiteNoiseLattice(inc, g, 0, 0), tmp_path / "w")
    raw = np.fromfile(tmp_path / "w.bin", dtype="<f8")
    assert np.array_equal(raw, np.arange(8.0))
