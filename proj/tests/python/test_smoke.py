# Copyright 2026 The magslam Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math

import numpy as np
import pytest

import magslam

SHORT = {
    "schema_version": 1,
    "mode": "slamma",
    "n_se_modes": 60,
    "hyper": {"length_scale": 0.3, "sigma_se": 0.3},
    "motion": {"kind": "circle_no_rotation", "duration": 4.0},
    "seed": 11,
}


def test_rotation_round_trip():
    v = np.array([0.3, -0.2, 0.9])
    r = magslam.exp_rot(v)
    assert np.allclose(r @ r.T, np.eye(3), atol=1e-14)
    assert np.allclose(magslam.log_rot(r), v, atol=1e-12)
    assert magslam.rotation_angle(r, np.eye(3)) == pytest.approx(np.linalg.norm(v))


def test_basis_gradient_matches_finite_differences():
    b = magslam.Basis([-1, -1, -0.5], [1, 1, 0.5], 30, 0.4)
    assert b.n_weights == 33
    p = np.array([0.1, -0.2, 0.05])
    g = b.grad_phi(p)
    h = 1e-6
    for a in range(3):
        e = np.zeros(3)
        e[a] = h
        fd = (b.phi(p + e) - b.phi(p - e)) / (2 * h)
        assert np.allclose(g[a], fd, atol=1e-6)
    assert np.allclose(g[:, :3], np.eye(3))
    for hess in b.hess_phi(p):
        assert np.allclose(hess, hess.T, atol=1e-12)
    assert np.all(np.diff(b.eigenvalues()) >= 0)


def test_spectral_density_at_zero():
    ell, sigma = 0.5, 2.0
    expected = sigma**2 * (2 * math.pi * ell**2) ** 1.5
    assert magslam.spectral_density_se(0.0, ell, sigma) == pytest.approx(expected)


def test_presets_and_config():
    names = [p["name"] for p in magslam.presets()]
    assert len(names) == 10 and "snake_wide_1" in names
    cfg = magslam.config({"schema_version": 1, "preset": "snake_wide_1"})
    assert cfg["hyper"]["length_scale"] == pytest.approx(0.5)
    with pytest.raises(magslam.ConfigError):
        magslam.config({"schema_version": 1, "bogus": 1})


def test_simulate_slam_report(tmp_path):
    meta = magslam.simulate(SHORT, tmp_path / "ds")
    assert meta["master_seed"] == 11
    summary = magslam.slam(SHORT, tmp_path / "ds", tmp_path / "run")
    assert summary["mode"] == "slamma"
    assert not summary["diverged"]
    assert summary["max_iterations"] <= 5

    grid = magslam.read_csv(tmp_path / "run" / "map_grid.csv")
    for col in ("x", "y", "z", "mean_x", "mean_y", "mean_z", "norm", "std_norm"):
        assert col in grid
    mean = np.stack([grid["mean_x"], grid["mean_y"], grid["mean_z"]], axis=1)
    assert np.allclose(np.linalg.norm(mean, axis=1), grid["norm"])
    assert np.all(grid["std_norm"] >= 0)

    traj = magslam.read_csv(tmp_path / "run" / "trajectory.csv")
    assert len(traj["t"]) == 41

    magslam.export_map_grid(str(tmp_path / "run"), str(tmp_path / "g.csv"), 0.0, 0.2)
    assert np.all(magslam.read_csv(tmp_path / "g.csv")["z"] == 0.0)

    rep = magslam.report([tmp_path / "run"], tmp_path / "rep")
    assert "circle_no_rotation" in rep["groups"]


def test_missing_dataset_raises(tmp_path):
    with pytest.raises(magslam.DataError):
        magslam.slam(SHORT, tmp_path / "nothing", tmp_path / "run")


def test_consistency_stats():
    s = magslam.consistency_stats(np.array([[50.0, 51.0], [49.0, 50.0]]))
    assert s["range"] == pytest.approx([1.0, 1.0])
    assert s["median_range"] == pytest.approx(1.0)
