# Copyright 2026 The voxpan Authors. All Rights Reserved.
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
"""Panoptic occupancy toolkit: grids, sampling, sparsify, refine, metrics."""

import json as _json

from ._core import (
    GridSpec,
    VoxpanError,
    align_volume,
    coarse_to_fine,
    focal_loss,
    gradient_suite,
    lovasz_softmax_loss,
    miou,
    panoptic_quality,
    profile_grids,
    read_semantic_pvox,
    refine,
    softmax_rows,
    sparse_coarse_to_fine,
    supervision_grid_spec,
    total_loss,
    voxelize_majority,
    write_scene,
    write_semantic_pvox,
)
from ._core import run_pipeline_json as _run_pipeline_json


def run_pipeline(seed=0, profile="tiny", mode="oracle", sparse=False,
                 drop_box=None, temporal=True, camera_mask=False,
                 scene_dir="", timings=True):
    """Runs the end-to-end pipeline and returns the report as a dict."""
    return _json.loads(_run_pipeline_json(
        seed=seed, profile=profile, mode=mode, sparse=sparse,
        drop_box=drop_box, temporal=temporal, camera_mask=camera_mask,
        scene_dir=str(scene_dir), timings=timings))


__all__ = [
    "GridSpec",
    "VoxpanError",
    "align_volume",
    "coarse_to_fine",
    "focal_loss",
    "gradient_suite",
    "lovasz_softmax_loss",
    "miou",
    "panoptic_quality",
    "profile_grids",
    "read_semantic_pvox",
    "refine",
    "run_pipeline",
    "softmax_rows",
    "sparse_coarse_to_fine",
    "supervision_grid_spec",
    "total_loss",
    "voxelize_majority",
    "write_scene",
    "write_semantic_pvox",
]
