"""End-to-end quantification driver: realign, normalize, classify, report."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import io as lio
from .aha import AhaConfig, assign_segments, quantify
from .dataset import ContourSet, LgeDataset
from .errors import LgeQuantError
from .graphcut import GraphCutConfig, MyocardiumVolume, classify
from .metrics import dice
from .normalize import iterate_normalization
from .plots import bullseye_svg
from .postprocess import PostprocessConfig, run_postprocessing
from .raster import polygon_mask
from .realign import AlignmentProblem, optimize


@dataclass
class PipelineConfig:
    """Every tunable of the pipeline, with its default."""

    gamma: float = 0.01                  # contiguous-cost weight
    lambda_: float = 1.0                 # graph-cut data-term weight
    graph_sigma: float | None = None     # None -> distance between fitted modes
    epsilon: float = 0.01                # normalization convergence on |ratio-1|
    max_iter: int = 20                   # normalization iteration cap
    n_bins: int = 64                     # relative-probability histogram bins
    boundary_fraction: float = 0.95
    max_rim_thickness_vox: int = 1
    min_volume_mm3: float = 100.0
    mvo_enclosure_fraction: float = 0.8
    reference_angle_deg: float = 0.0
    realign_max_sweeps: int = 50
    skip_realign: bool = False

    @classmethod
    def from_json(cls, path) -> "PipelineConfig":
        payload = json.loads(Path(path).read_text())
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(payload) - known
        if unknown:
            raise LgeQuantError(f"unknown config keys: {sorted(unknown)}")
        return cls(**payload)

    def to_dict(self) -> dict:
        return asdict(self)

    def postprocess(self) -> PostprocessConfig:
        return PostprocessConfig(
            boundary_fraction=self.boundary_fraction,
            max_rim_thickness_vox=self.max_rim_thickness_vox,
            min_volume_mm3=self.min_volume_mm3,
            mvo_enclosure_fraction=self.mvo_enclosure_fraction,
        )


class PipelineStageError(LgeQuantError):
    """Failure inside one named pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


def myocardium_volume(dataset: LgeDataset, contours: ContourSet, stack=None) -> MyocardiumVolume:
    """Masked myocardium grid from the contours and the (normalized) stack."""
    first = dataset.sa_slices[0].pose
    rows, cols = first.rows, first.cols
    if stack is None:
        stack = np.stack([s.pixels for s in dataset.sa_slices])
    n = len(dataset.sa_slices)
    if len(contours) != n:
        raise LgeQuantError("contours do not cover every SA slice")
    mask = np.zeros((n, rows, cols), dtype=bool)
    for k in range(n):
        epi = polygon_mask(contours.epi[k], rows, cols)
        endo = polygon_mask(contours.endo[k], rows, cols)
        mask[k] = epi & ~endo
    return MyocardiumVolume(
        intensity=np.asarray(stack, dtype=float),
        mask=mask,
        spacing_mm=(first.ps_row, first.ps_col, dataset.slice_spacing_mm),
    )


def run_pipeline(
    dataset: LgeDataset,
    contours: ContourSet,
    config: PipelineConfig | None = None,
    out_dir=None,
    truth: dict | None = None,
) -> dict:
    """Execute realign -> normalize -> classify -> postprocess -> quantify.

    Returns the report dict; when ``out_dir`` is given, also writes the
    realigned dataset, normalized volume, labeling, report JSON and the
    bull's eye plot there. Stage failures raise PipelineStageError; outputs
    of completed stages are preserved.
    """
    config = config or PipelineConfig()
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    report: dict = {"config": config.to_dict(), "stages": {}}

    # --- realign ---------------------------------------------------------
    try:
        if config.skip_realign:
            realigned = dataset
            report["stages"]["realign"] = {"skipped": True}
        else:
            problem = AlignmentProblem(
                sa_slices=dataset.sa_slices, la_slices=dataset.la_slices,
                sa_rois=[r if r is not None else _full_roi(s) for r, s in
                         zip(dataset.sa_rois, dataset.sa_slices)],
                gamma=config.gamma,
            )
            result = optimize(problem, max_sweeps=config.realign_max_sweeps)
            realigned = dataset.with_ipps(result.corrected_ipps)
            report["stages"]["realign"] = {
                "initial_cost": result.initial_cost,
                "final_cost": result.final_cost,
                "sweeps": result.iterations,
                "converged": result.converged,
                "translations_mm": [
                    [float(v) for v in row]
                    for row in result.diagnostics["translations_mm"]
                ],
                "degenerate_pairs": result.diagnostics["degenerate_pairs"],
            }
        if out is not None:
            lio.save_dataset(realigned, out / "realigned", name="realigned")
    except LgeQuantError as exc:
        raise PipelineStageError("realign", exc) from exc

    # --- normalize -------------------------------------------------------
    try:
        stack = np.stack([s.pixels for s in realigned.sa_slices])
        norm = iterate_normalization(
            stack, contours, epsilon=config.epsilon,
            max_iter=config.max_iter, n_bins=config.n_bins,
        )
        report["stages"]["normalize"] = {
            "iterations": norm.iterations,
            "converged": norm.converged,
            "reference_slice": norm.reference_index,
            "factors_per_iteration": [
                [float(f) for f in fs] for fs in norm.factors_per_iteration
            ],
            "rescale": [norm.rescale_lo, norm.rescale_hi],
            "mixture": None if norm.params is None else {
                "alpha_r": norm.params.alpha_r, "sigma_r": norm.params.sigma_r,
                "a": norm.params.a, "alpha_g": norm.params.alpha_g,
                "sigma_g": norm.params.sigma_g, "mu": norm.params.mu,
                "i_thrh": norm.params.i_thrh,
            },
            "relative_probability": None if norm.curve is None else {
                "bin_centers": [float(x) for x in norm.curve[0]],
                "values": [float(v) for v in norm.curve[1]],
            },
        }
        if norm.params is None:
            raise LgeQuantError("normalization produced no mixture parameters")
        if out is not None:
            lio.save_volume_f32(
                norm.stack,
                (realigned.sa_slices[0].pose.ps_row,
                 realigned.sa_slices[0].pose.ps_col,
                 realigned.slice_spacing_mm),
                out / "normalized",
            )
    except LgeQuantError as exc:
        if isinstance(exc, PipelineStageError):
            raise
        raise PipelineStageError("normalize", exc) from exc

    # --- classify --------------------------------------------------------
    try:
        volume = myocardium_volume(realigned, contours, stack=norm.stack)
        gc_config = GraphCutConfig(lambda_=config.lambda_, sigma=config.graph_sigma)
        raw_labeling = classify(volume, norm.params, gc_config)
        report["stages"]["classify"] = {
            "sigma": gc_config.resolved_sigma(norm.params),
            "lambda": config.lambda_,
            "raw_infarct_voxels": int(raw_labeling.infarct_mask().sum()),
        }
    except LgeQuantError as exc:
        raise PipelineStageError("classify", exc) from exc

    # --- postprocess -----------------------------------------------------
    try:
        labeling, audit = run_postprocessing(
            raw_labeling, volume, contours, norm.params, config.postprocess()
        )
        report["stages"]["postprocess"] = {"audit": audit}
        if out is not None:
            lio.save_labeling(
                labeling.labels, labeling.mask, volume.spacing_mm, out / "labeling"
            )
    except LgeQuantError as exc:
        raise PipelineStageError("postprocess", exc) from exc

    # --- quantify --------------------------------------------------------
    try:
        segments = assign_segments(volume, AhaConfig(config.reference_angle_deg))
        quant = quantify(labeling, volume, segments)
        report["stages"]["quantify"] = {
            "volumetric_percent": quant.volumetric_percent,
            "segment_percent": [float(v) for v in quant.segment_percent],
            "segment_infarct_voxels": [int(v) for v in quant.segment_infarct_voxels],
            "segment_myocardium_voxels": [
                int(v) for v in quant.segment_myocardium_voxels
            ],
            "total_infarct_voxels": quant.total_infarct_voxels,
            "total_myocardium_voxels": quant.total_myocardium_voxels,
        }
        if out is not None:
            bullseye_svg(
                quant.segment_percent, out / "bullseye.svg",
                reference_angle_deg=config.reference_angle_deg,
            )
    except LgeQuantError as exc:
        raise PipelineStageError("quantify", exc) from exc

    # --- reference comparison ---------------------------------------------
    if truth is not None and "infarct_mask" in truth:
        auto = labeling.infarct_mask()
        ref = np.asarray(truth["infarct_mask"], dtype=bool)
        ref_pct = 100.0 * ref.sum() / max(int(volume.mask.sum()), 1)
        report["reference"] = {
            "dice": dice(auto, ref),
            "auto_percent": quant.volumetric_percent,
            "reference_percent": float(ref_pct),
        }

    if out is not None:
        lio.write_report(report, out / "report.json")
    return report


def _full_roi(slice_image):
    from .geometry import full_image_roi

    return full_image_roi(slice_image.pose)
