"""LV intensity model: shifted Rayleigh + Gaussian mixture.

The dark class (normal myocardium) is modeled by a Rayleigh distribution
shifted by an offset ``a`` (acquisition nulls normal myocardium toward an
unknown dark level), the bright class (infarct plus blood pool) by a
Gaussian. The mixture is fitted to the relative-probability curve of the LV
intensity histogram (histogram normalized by its largest count), and the
intersection of the two components between their modes gives the threshold
separating dark from bright voxels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, least_squares

from .errors import FitError, ThresholdError

DEFAULT_BINS = 64


@dataclass
class RicianMixtureParams:
    """Mixture parameters; amplitudes are relative (curve peak near 1)."""

    alpha_r: float
    sigma_r: float
    a: float
    alpha_g: float
    sigma_g: float
    mu: float
    i_thrh: float | None = None
    fit_residual: float | None = None

    def __post_init__(self):
        if self.alpha_r < 0 or self.alpha_g < 0:
            raise ValueError("amplitudes must be non-negative")
        if self.sigma_r <= 0 or self.sigma_g <= 0:
            raise ValueError("scale parameters must be positive")

    @property
    def rayleigh_mode(self) -> float:
        return self.sigma_r - self.a

    def rescaled(self, lo: float, hi: float) -> "RicianMixtureParams":
        """Parameters after the affine intensity map x -> (x - lo)/(hi - lo).

        The transformed mixture takes the same values at mapped positions, so
        thresholds and likelihood comparisons are preserved exactly.
        """
        s = hi - lo
        if s <= 0:
            raise ValueError("rescale range must have hi > lo")
        return RicianMixtureParams(
            alpha_r=self.alpha_r / s,
            sigma_r=self.sigma_r / s,
            a=(self.a + lo) / s,
            alpha_g=self.alpha_g / s,
            sigma_g=self.sigma_g / s,
            mu=(self.mu - lo) / s,
            i_thrh=None if self.i_thrh is None else (self.i_thrh - lo) / s,
            fit_residual=self.fit_residual,
        )


@dataclass(frozen=True)
class RelativeProbability:
    """Histogram normalized by its largest count (peak value exactly 1)."""

    bin_centers: np.ndarray
    values: np.ndarray


def rayleigh_shifted(x, p: RicianMixtureParams):
    """Shifted Rayleigh component; zero below the support point x = -a."""
    x = np.asarray(x, dtype=float)
    xa = x + p.a
    out = p.alpha_r * (xa / p.sigma_r ** 2) * np.exp(-(xa ** 2) / (2.0 * p.sigma_r ** 2))
    out = np.where(xa < 0, 0.0, out)
    return out if out.ndim else float(out)


def gaussian_term(x, p: RicianMixtureParams):
    x = np.asarray(x, dtype=float)
    out = (
        p.alpha_g / (np.sqrt(2.0 * np.pi) * p.sigma_g)
        * np.exp(-0.5 * ((x - p.mu) / p.sigma_g) ** 2)
    )
    return out if out.ndim else float(out)


def mixture(x, p: RicianMixtureParams):
    return rayleigh_shifted(x, p) + gaussian_term(x, p)


def build_relative_probability(intensities, n_bins: int = DEFAULT_BINS) -> RelativeProbability:
    """Equal-width histogram over [min, max], normalized by the largest count."""
    values = np.asarray(intensities, dtype=float).ravel()
    if values.size < 1:
        raise FitError("no intensity samples")
    if n_bins < 2:
        raise FitError("need at least 2 bins")
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        raise FitError("zero intensity range")
    counts, edges = np.histogram(values, bins=n_bins, range=(lo, hi))
    centers = 0.5 * (edges[:-1] + edges[1:])
    return RelativeProbability(bin_centers=centers, values=counts / counts.max())


def _otsu_split(centers: np.ndarray, weights: np.ndarray) -> int:
    """Index of the first bin of the upper class under Otsu's criterion."""
    w = weights / max(weights.sum(), 1e-300)
    best_k, best_var = 1, -1.0
    for k in range(1, len(centers)):
        w0 = w[:k].sum()
        w1 = w[k:].sum()
        if w0 <= 0 or w1 <= 0:
            continue
        m0 = float(np.dot(w[:k], centers[:k]) / w0)
        m1 = float(np.dot(w[k:], centers[k:]) / w1)
        var = w0 * w1 * (m0 - m1) ** 2
        if var > best_var:
            best_var, best_k = var, k
    return best_k


def _weighted_moments(centers, weights):
    wsum = max(float(weights.sum()), 1e-300)
    mean = float(np.dot(weights, centers) / wsum)
    var = float(np.dot(weights, (centers - mean) ** 2) / wsum)
    return mean, np.sqrt(max(var, 1e-300))


def _pack(alpha_r, sigma_r, a, alpha_g, sigma_g, mu):
    return np.array([np.log(alpha_r), np.log(sigma_r), a, np.log(alpha_g), np.log(sigma_g), mu])


def _unpack(theta) -> RicianMixtureParams:
    return RicianMixtureParams(
        alpha_r=float(np.exp(theta[0])), sigma_r=float(np.exp(theta[1])), a=float(theta[2]),
        alpha_g=float(np.exp(theta[3])), sigma_g=float(np.exp(theta[4])), mu=float(theta[5]),
    )


def fit_mixture(rp: RelativeProbability) -> RicianMixtureParams:
    """Least-squares fit of the mixture to the relative-probability curve.

    Positivity is enforced by fitting log-transformed amplitudes and scales.
    The start point is data driven: the bins are split at the Otsu threshold,
    the lower part moment-matches a Rayleigh (zero offset start), the upper
    part gives the Gaussian mean and width, and the two peak bin values set
    the amplitudes. Raises FitError when the mixture cannot beat a
    Rayleigh-only fit (no bright class to model).
    """
    centers = np.asarray(rp.bin_centers, dtype=float)
    values = np.asarray(rp.values, dtype=float)
    if centers.size < 12:
        raise FitError("need at least 12 bins to fit the mixture")
    if centers.size != values.size:
        raise FitError("bin_centers and values must have equal length")

    k = _otsu_split(centers, values)
    lo_c, lo_v = centers[:k], values[:k]
    hi_c, hi_v = centers[k:], values[k:]
    bin_w = float(centers[1] - centers[0])

    mean_lo, _ = _weighted_moments(lo_c, lo_v + 1e-12)
    sigma_r0 = max(abs(mean_lo) / np.sqrt(np.pi / 2.0), bin_w)
    a0 = 0.0
    mu0, sigma_g0 = _weighted_moments(hi_c, hi_v + 1e-12)
    sigma_g0 = max(sigma_g0, bin_w)
    peak_lo = max(float(lo_v.max()) if lo_v.size else 0.0, 1e-3)
    peak_hi = max(float(hi_v.max()) if hi_v.size else 0.0, 1e-3)
    alpha_r0 = peak_lo * sigma_r0 * np.exp(0.5)
    alpha_g0 = peak_hi * np.sqrt(2.0 * np.pi) * sigma_g0

    def resid(theta):
        return mixture(centers, _unpack(theta)) - values

    def ray_resid(theta3):
        p = RicianMixtureParams(
            alpha_r=float(np.exp(theta3[0])), sigma_r=float(np.exp(theta3[1])),
            a=float(theta3[2]), alpha_g=0.0, sigma_g=1.0, mu=0.0,
        )
        return rayleigh_shifted(centers, p) - values

    ray0 = np.array([np.log(alpha_r0), np.log(sigma_r0), a0])
    ray_sol = least_squares(ray_resid, ray0, method="trf", max_nfev=2000)
    ray_res = float(np.sum(ray_resid(ray_sol.x) ** 2))

    # Two starts: the Otsu-split moments, and the Rayleigh-only solution with
    # a Gaussian seeded on the upper bins. The second rescues lopsided
    # histograms where the split misplaces the dark component.
    starts = [
        _pack(alpha_r0, sigma_r0, a0, alpha_g0, sigma_g0, mu0),
        np.array([ray_sol.x[0], ray_sol.x[1], ray_sol.x[2],
                  np.log(alpha_g0), np.log(sigma_g0), mu0]),
    ]
    best = None
    for theta0 in starts:
        sol = least_squares(resid, theta0, method="trf", max_nfev=2000)
        res = float(np.sum(resid(sol.x) ** 2))
        if best is None or res < best[0]:
            best = (res, sol.x)
    params = _unpack(best[1])
    params.fit_residual = best[0]

    scale = float(np.sum(values ** 2))
    if ray_res < 1e-10 * scale or params.fit_residual >= 0.99 * ray_res:
        raise FitError(
            "relative probability is explained by the dark component alone; "
            "no bright class to model"
        )
    return params


def find_threshold(p: RicianMixtureParams) -> float:
    """Intersection of the two components between their modes.

    Scans from the Gaussian mode downward for the sign change of
    (Rayleigh - Gaussian) and refines it; stores the result in ``p.i_thrh``.
    """
    if p.alpha_r <= 0 or p.alpha_g <= 0:
        raise ThresholdError("both mixture components must be present")
    lo = p.rayleigh_mode
    hi = p.mu
    if not hi > lo:
        raise ThresholdError("Gaussian mode must lie above the Rayleigh mode")

    def f(x):
        return rayleigh_shifted(x, p) - gaussian_term(x, p)

    grid = np.linspace(hi, lo, 2049)
    fv = f(grid)
    root = None
    for i in range(len(grid) - 1):
        if fv[i] == 0.0:
            root = float(grid[i])
            break
        if fv[i] * fv[i + 1] < 0:
            root = float(brentq(f, grid[i + 1], grid[i], xtol=1e-15, rtol=8.9e-16))
            break
    if root is None or not (lo < root < hi):
        raise ThresholdError("components do not intersect between their modes")

    peak_r = p.alpha_r * np.exp(-0.5) / p.sigma_r
    peak_g = p.alpha_g / (np.sqrt(2.0 * np.pi) * p.sigma_g)
    if abs(f(root)) > 1e-9 * max(peak_r, peak_g):
        raise ThresholdError("intersection refinement did not converge")
    p.i_thrh = root
    return root
