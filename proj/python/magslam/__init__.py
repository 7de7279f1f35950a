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
"""Magnetic-field SLAM with a magnetometer array.

Thin wrapper over the C++ core. Configurations are plain dicts following the
JSON config schema; run artifacts are the same files the CLI writes.
"""

import csv
import json
import os

import numpy as np

from ._magslam import (
    Basis,
    ConfigError,
    DataError,
    DivergenceError,
    consistency_stats,
    exp_rot,
    export_map_grid,
    log_rot,
    rotation_angle,
    spectral_density_se,
)
from . import _magslam

__all__ = [
    "Basis",
    "ConfigError",
    "DataError",
    "DivergenceError",
    "config",
    "consistency_stats",
    "exp_rot",
    "export_map_grid",
    "log_rot",
    "presets",
    "read_csv",
    "report",
    "rotation_angle",
    "simulate",
    "slam",
    "spectral_density_se",
]


def _config_text(cfg):
    if isinstance(cfg, (str, os.PathLike)):
        with open(cfg) as f:
            return f.read()
    return json.dumps(cfg)


def config(cfg):
    """Validated config with every default filled in."""
    return json.loads(_magslam.normalize_config_json(_config_text(cfg)))


def presets():
    return json.loads(_magslam.presets_json())


def simulate(cfg, out_dir, replicate=0):
    """Writes one simulated dataset directory; returns its metadata."""
    return json.loads(_magslam.simulate_json(_config_text(cfg), os.fspath(out_dir), replicate))


def slam(cfg, data_dir, out_dir):
    """Runs the configured mode on a dataset directory; returns summary.json."""
    return json.loads(
        _magslam.slam_json(_config_text(cfg), os.fspath(data_dir), os.fspath(out_dir)))


def report(run_dirs, out_dir, consistency=False):
    return json.loads(
        _magslam.report_json([os.fspath(d) for d in run_dirs], os.fspath(out_dir), consistency))


def read_csv(path):
    """Columns of a numeric export as float arrays (text columns stay str)."""
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise DataError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    out = {}
    for i, name in enumerate(header):
        col = [r[i] for r in body]
        try:
            out[name] = np.array([float(v) for v in col])
        except ValueError:
            out[name] = np.array(col)
    return out
