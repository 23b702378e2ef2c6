"""End-to-end walkthrough: synthetic study -> realign -> normalize -> classify.

Generates a phantom with one transmural wedge infarct plus a dark
microvascular-obstruction pocket, misaligned slices and per-slice intensity
gains, runs the full pipeline, and compares the result against the generator's
ground truth.
"""

import tempfile
from pathlib import Path

import numpy as np

from lgequant import PhantomConfig, PipelineConfig, default_wedge_config, generate, run_pipeline

# The wedge spans the first two slices between 0 and 60 degrees; the pocket
# hides on the most basal slice. Slice origins are displaced in-plane to
# simulate breath-hold motion, and the gains mimic contrast washout drift.
rng = np.random.default_rng(7)
translations = np.zeros((8, 3))
translations[:, :2] = rng.uniform(-5.0, 5.0, size=(8, 2))

base = default_wedge_config(seed=7, noise_sigma=0.08)
config = PhantomConfig(**{
    **base.__dict__,
    "translations_mm": tuple(map(tuple, translations)),
    "gains": (0.85, 0.95, 1.0, 1.05, 1.1, 1.15),
})
dataset, truth = generate(config)
print(f"phantom: {len(dataset.sa_slices)} SA + {len(dataset.la_slices)} LA slices, "
      f"true infarct voxels: {int(truth.infarct_mask.sum())}")

out_dir = Path(tempfile.mkdtemp(prefix="lgequant_demo_"))
report = run_pipeline(dataset, truth.contours, PipelineConfig(), out_dir=out_dir,
                      truth={"infarct_mask": truth.infarct_mask})

realign = report["stages"]["realign"]
print(f"realign: cost {realign['initial_cost']:.4f} -> {realign['final_cost']:.4f} "
      f"in {realign['sweeps']} sweeps")
norm = report["stages"]["normalize"]
print(f"normalize: {norm['iterations']} iterations, threshold "
      f"{norm['mixture']['i_thrh']:.3f} on the [0,1] scale")
quant = report["stages"]["quantify"]
print(f"volumetric I/M%: {quant['volumetric_percent']:.2f}")
print("per-segment I/M%:", [round(v, 1) for v in quant["segment_percent"]])
print(f"Dice vs ground truth: {report['reference']['dice']:.4f}")
print(f"outputs (labeling, report, bull's eye): {out_dir}")
