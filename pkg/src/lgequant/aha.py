"""Standardized 16-segment partition of the SA myocardium and its report.

Slices split base-to-apex into basal, mid and apical levels; basal and mid
levels divide into six 60-degree sectors, the apical level into four
90-degree sectors, numbered consecutively 1-16 from the configured angular
reference. The true apex segment (17, long-axis views only) is excluded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyMaskError
from .graphcut import Labeling, MyocardiumVolume

LEVELS = ("basal", "mid", "apical")
SEGMENTS_PER_LEVEL = {"basal": (1, 6), "mid": (7, 12), "apical": (13, 16)}


@dataclass
class AhaConfig:
    # Angle 0 points toward decreasing row index ("image up"); angles grow
    # toward increasing column index.
    reference_angle_deg: float = 0.0


@dataclass
class SegmentModel:
    segment_ids: np.ndarray            # (n_slices, rows, cols), 0 outside mask
    levels: list
    reference_angle_deg: float


@dataclass
class QuantReport:
    volumetric_percent: float
    segment_percent: np.ndarray        # (16,)
    segment_infarct_voxels: np.ndarray
    segment_myocardium_voxels: np.ndarray
    total_infarct_voxels: int
    total_myocardium_voxels: int


def assign_levels(n_slices: int) -> list:
    """Base-to-apex split into basal / mid / apical contiguous groups."""
    if n_slices < 3:
        raise ValueError("need at least 3 SA slices for the three levels")
    n_basal = int(np.ceil(n_slices / 3.0))
    n_mid = int(round(n_slices / 3.0))
    n_apical = n_slices - n_basal - n_mid
    return ["basal"] * n_basal + ["mid"] * n_mid + ["apical"] * n_apical


def voxel_angles_deg(mask_slice: np.ndarray) -> np.ndarray:
    """Angle of each masked voxel about the slice's myocardial centroid."""
    coords = np.argwhere(mask_slice)
    if coords.size == 0:
        raise EmptyMaskError("slice has no myocardium")
    centroid = coords.mean(axis=0)
    d = coords - centroid
    return np.degrees(np.arctan2(d[:, 1], -d[:, 0])) % 360.0


def assign_segments(volume: MyocardiumVolume, config: AhaConfig | None = None) -> SegmentModel:
    """Per-voxel segment ids from slice level and angle about the centroid."""
    config = config or AhaConfig()
    n_slices = volume.mask.shape[0]
    levels = assign_levels(n_slices)
    ids = np.zeros(volume.mask.shape, dtype=np.int16)
    for k in range(n_slices):
        mask_k = volume.mask[k]
        angles = voxel_angles_deg(mask_k)
        rel = (angles - config.reference_angle_deg) % 360.0
        first, last = SEGMENTS_PER_LEVEL[levels[k]]
        n_sectors = last - first + 1
        sector = np.floor(rel / (360.0 / n_sectors)).astype(np.int16)
        sector = np.minimum(sector, n_sectors - 1)
        coords = np.argwhere(mask_k)
        ids[k, coords[:, 0], coords[:, 1]] = first + sector
    return SegmentModel(segment_ids=ids, levels=levels,
                        reference_angle_deg=config.reference_angle_deg)


def quantify(labeling: Labeling, volume: MyocardiumVolume, segments: SegmentModel) -> QuantReport:
    """Volumetric and per-segment infarct percentages (I/M%)."""
    if labeling.mask.shape != volume.mask.shape:
        raise ValueError("labeling and volume shapes differ")
    infarct = labeling.infarct_mask()
    seg = segments.segment_ids
    myo_counts = np.zeros(16, dtype=np.int64)
    inf_counts = np.zeros(16, dtype=np.int64)
    for s in range(1, 17):
        in_seg = seg == s
        myo_counts[s - 1] = int(np.sum(in_seg & volume.mask))
        inf_counts[s - 1] = int(np.sum(in_seg & infarct))
    total_myo = int(volume.mask.sum())
    total_inf = int(infarct.sum())
    with np.errstate(invalid="ignore", divide="ignore"):
        seg_pct = np.where(myo_counts > 0, 100.0 * inf_counts / np.maximum(myo_counts, 1), 0.0)
    vol_pct = 100.0 * total_inf / total_myo if total_myo else 0.0
    return QuantReport(
        volumetric_percent=float(vol_pct),
        segment_percent=seg_pct,
        segment_infarct_voxels=inf_counts,
        segment_myocardium_voxels=myo_counts,
        total_infarct_voxels=total_inf,
        total_myocardium_voxels=total_myo,
    )
