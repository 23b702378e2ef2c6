"""Iterative intensity normalization of the SA stack via blood-pool means.

Signal intensity drifts from slice to slice within one study. The LV
intensity mixture is fitted on all voxels inside the epicardial contours,
its component intersection separates dark papillary muscle from bright blood
pool inside the endocardial contours, and every slice is scaled so its
blood-pool mean matches the middle (reference) slice. Because rescaling
reshapes the histogram, fit and scaling repeat until the per-slice ratios
settle; the whole stack is then mapped jointly to [0, 1] and the final
mixture parameters are carried along in those units for the classifier.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import ContourSet
from .errors import ContourError, FitError, NormalizationError, ThresholdError
from .raster import polygon_mask
from .realign import middle_slice_index
from .rician import (
    DEFAULT_BINS,
    RicianMixtureParams,
    build_relative_probability,
    find_threshold,
    fit_mixture,
)

DEFAULT_EPSILON = 0.01
DEFAULT_MAX_ITER = 20


@dataclass
class NormalizationResult:
    stack: np.ndarray                    # (n_sa, rows, cols), in [0, 1]
    factors_per_iteration: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    params: RicianMixtureParams | None = None   # in [0, 1] units
    curve: tuple | None = None           # (bin_centers, values) in [0, 1] units
    rescale_lo: float = 0.0
    rescale_hi: float = 1.0
    reference_index: int = 0


def _stack_array(stack) -> np.ndarray:
    arr = np.asarray(stack, dtype=float)
    if arr.ndim != 3:
        raise ValueError("stack must be (n_slices, rows, cols)")
    return arr


def _region_masks(contours: ContourSet, n_slices: int, rows: int, cols: int):
    if len(contours) != n_slices:
        raise ContourError(
            f"contours cover {len(contours)} slices but the stack has {n_slices}"
        )
    endo_masks, epi_masks = [], []
    for k in range(n_slices):
        epi_m = polygon_mask(contours.epi[k], rows, cols)
        endo_m = polygon_mask(contours.endo[k], rows, cols)
        if not epi_m.any():
            raise ContourError(f"slice {k}: epicardial polygon encloses no pixels")
        if not endo_m.any():
            raise ContourError(f"slice {k}: endocardial polygon encloses no pixels")
        endo_masks.append(endo_m)
        epi_masks.append(epi_m)
    return endo_masks, epi_masks


def lv_voxels(stack, contours: ContourSet) -> np.ndarray:
    """All intensities inside the epicardial contours, every slice concatenated."""
    arr = _stack_array(stack)
    _, epi_masks = _region_masks(contours, arr.shape[0], arr.shape[1], arr.shape[2])
    return np.concatenate([arr[k][epi_masks[k]] for k in range(arr.shape[0])])


def bp_pixels(slice_pixels, endo_polygon, i_thrh: float) -> np.ndarray:
    """Boolean mask of blood-pool pixels: inside endo and at least i_thrh.

    Pixels below the threshold are treated as papillary muscle and excluded.
    """
    pixels = np.asarray(slice_pixels, dtype=float)
    mask = polygon_mask(endo_polygon, pixels.shape[0], pixels.shape[1])
    mask &= pixels >= i_thrh
    if not mask.any():
        raise NormalizationError("no blood-pool pixels at or above the threshold")
    return mask


def iterate_normalization(
    stack,
    contours: ContourSet,
    epsilon: float = DEFAULT_EPSILON,
    max_iter: int = DEFAULT_MAX_ITER,
    n_bins: int = DEFAULT_BINS,
) -> NormalizationResult:
    """Normalize per-slice gains against the reference slice's blood pool.

    Each iteration refits the mixture on the current LV voxels, extracts
    blood-pool means above the refreshed threshold, multiplies every slice by
    reference_mean / slice_mean, and stops once all factors are within
    ``epsilon`` of 1 (or after ``max_iter`` iterations). The stack is then
    jointly min-max rescaled to [0, 1] and the last fitted parameters are
    returned in the rescaled units.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if max_iter < 0:
        raise ValueError("max_iter must be non-negative")
    work = _stack_array(stack).copy()
    n_slices, rows, cols = work.shape
    endo_masks, epi_masks = _region_masks(contours, n_slices, rows, cols)
    ref = middle_slice_index(n_slices)

    factors_hist = []
    params = None
    last_rp = None
    converged = False
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        lv = np.concatenate([work[k][epi_masks[k]] for k in range(n_slices)])
        try:
            rp = build_relative_probability(lv, n_bins=n_bins)
            last_rp = rp
            params = fit_mixture(rp)
            i_thrh = find_threshold(params)
        except (FitError, ThresholdError) as exc:
            raise NormalizationError(f"mixture fit failed: {exc}") from exc

        bp_means = np.empty(n_slices)
        for k in range(n_slices):
            bp = endo_masks[k] & (work[k] >= i_thrh)
            if not bp.any():
                raise NormalizationError(
                    f"slice {k}: no blood-pool pixels above the threshold"
                )
            bp_means[k] = work[k][bp].mean()
        factors = bp_means[ref] / bp_means
        for k in range(n_slices):
            work[k] *= factors[k]
        factors_hist.append(factors)
        if np.max(np.abs(factors - 1.0)) < epsilon:
            converged = True
            break

    lo = float(work.min())
    hi = float(work.max())
    if hi <= lo:
        raise NormalizationError("stack has zero intensity range")
    work = (work - lo) / (hi - lo)
    final_params = params.rescaled(lo, hi) if params is not None else None
    if final_params is not None and final_params.i_thrh is None:
        find_threshold(final_params)
    curve = None
    if last_rp is not None:
        curve = ((last_rp.bin_centers - lo) / (hi - lo), last_rp.values.copy())
    return NormalizationResult(
        stack=work,
        factors_per_iteration=factors_hist,
        iterations=iterations,
        converged=converged,
        params=final_params,
        curve=curve,
        rescale_lo=lo,
        rescale_hi=hi,
        reference_index=ref,
    )
