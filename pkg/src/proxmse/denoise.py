"""Denoising experiments: NMSE of proximal estimators across noise levels.

Three estimators of a structured signal x0 from y = x0 + sigma*v:

* regularized: argmin_x sigma*lam*f(x) + 0.5*||y - x||^2 (closed-form prox),
  whose worst-case NMSE equals the mean squared distance to lam*subdiff.
* constrained: Euclidean projection onto {f(x) <= f(x0)}, whose worst-case
  NMSE equals the cone MSD.
* mixed: nonnegativity-constrained l1 regularization (one-sided soft
  threshold), upper bounded by the Minkowski-sum distance estimate that the
  run records alongside the NMSE.

Small sigma exposes the worst case: the default grid spans 1e-3 to 1 times
the smallest structural feature of x0 so the first grid point sits deep in
the regime where the first-order approximation is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import prox
from .errors import InvalidStructureError, NumericalError
from .signals import (
    BlockSparseStructure,
    LowRankStructure,
    SignalInstance,
    SignalStructure,
    SparseStructure,
    WeightedSparseStructure,
    as_matrix,
    as_vector,
    norm_value,
)
from .streams import stream

RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class SigmaRecord:
    """Per-noise-level NMSE statistics (and the mixed distance estimate, if any)."""

    sigma: float
    nmse_mean: float
    nmse_stderr: float
    trials: int
    d_mean: float | None = None
    d_stderr: float | None = None


@dataclass(frozen=True)
class DenoiseRun:
    structure: SignalStructure
    estimator: str
    lam: float | None
    sigma_grid: tuple[float, ...]
    records: tuple[SigmaRecord, ...]


def default_sigma_grid(inst: SignalInstance, points: int = 8) -> np.ndarray:
    """Logarithmic grid from 1e-3 to 1 times the smallest structural feature."""
    scale = inst.min_magnitude()
    return np.geomspace(1e-3 * scale, scale, points)


def trial_noise(seed: int, sigma_index: int, trial_index: int, dim: int) -> np.ndarray:
    """The standard normal draw used by trial (sigma_index, trial_index)."""
    return stream(seed, sigma_index, trial_index).standard_normal(dim)


def _check_grid(sigma_grid) -> np.ndarray:
    grid = np.asarray(sigma_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("sigma grid must be a nonempty 1-D array")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("sigma grid must be strictly positive and sorted ascending")
    return grid


def _prox_step(s: SignalStructure, y: np.ndarray, tau: float) -> prox.ProxResult:
    if isinstance(s, SparseStructure):
        return prox.soft_threshold(y, tau)
    if isinstance(s, WeightedSparseStructure):
        return prox.weighted_soft_threshold(y, tau, s.coordinate_weights)
    if isinstance(s, BlockSparseStructure):
        return prox.block_soft_threshold(y, tau, s.b)
    if isinstance(s, LowRankStructure):
        res = prox.singular_value_threshold(as_matrix(y, s.d), tau)
        return prox.ProxResult(as_vector(res.minimizer), res.objective, res.residual)
    raise InvalidStructureError(f"unknown structure {type(s).__name__}")


def _stats(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values)
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


def run_regularized(inst: SignalInstance, lam: float, sigma_grid, trials: int,
                    seed: int) -> DenoiseRun:
    """NMSE of the prox estimator with penalty sigma*lam at each grid sigma.

    Every trial's optimality residual must certify the prox solve to 1e-8.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if trials < 2:
        raise ValueError("need at least 2 trials")
    grid = _check_grid(sigma_grid)
    s = inst.structure
    x0 = inst.values
    records = []
    for si, sigma in enumerate(grid):
        nmse = []
        for ti in range(trials):
            v = trial_noise(seed, si, ti, inst.ambient_dim)
            y = x0 + sigma * v
            step = _prox_step(s, y, sigma * lam)
            if step.residual > RESIDUAL_TOL:
                raise NumericalError(
                    f"prox residual {step.residual:.3e} above {RESIDUAL_TOL} "
                    f"at sigma index {si}", index=ti,
                )
            err = step.minimizer - x0
            nmse.append(float(err @ err) / (sigma * sigma))
        mean, stderr = _stats(nmse)
        records.append(SigmaRecord(float(sigma), mean, stderr, trials))
    return DenoiseRun(s, "regularized", float(lam), tuple(grid.tolist()), tuple(records))


def run_constrained(inst: SignalInstance, sigma_grid, trials: int, seed: int) -> DenoiseRun:
    """NMSE of the projection onto the norm ball of radius f(x0)."""
    if trials < 2:
        raise ValueError("need at least 2 trials")
    grid = _check_grid(sigma_grid)
    s = inst.structure
    x0 = inst.values
    radius = norm_value(s, x0)
    if isinstance(s, SparseStructure):
        kind, bs = "l1", None
    elif isinstance(s, BlockSparseStructure):
        kind, bs = "l12", s.b
    elif isinstance(s, LowRankStructure):
        kind, bs = "nuclear", None
    else:
        raise InvalidStructureError(
            f"no ball projection for {type(s).__name__}"
        )
    records = []
    for si, sigma in enumerate(grid):
        nmse = []
        for ti in range(trials):
            v = trial_noise(seed, si, ti, inst.ambient_dim)
            y = x0 + sigma * v
            x_star = prox.project_ball(y, kind, radius, block_size=bs)
            err = x_star - x0
            nmse.append(float(err @ err) / (sigma * sigma))
        mean, stderr = _stats(nmse)
        records.append(SigmaRecord(float(sigma), mean, stderr, trials))
    return DenoiseRun(s, "constrained", None, tuple(grid.tolist()), tuple(records))


def mixed_distance_sq(s: SparseStructure, g: np.ndarray, lam: float) -> float:
    """Squared distance for the nonnegative + l1 estimator's error set.

    The set is the Minkowski sum of lam*subdiff(l1) at an entrywise-positive
    sparse point and the polar of the orthant's tangent cone: support
    coordinates pin to lam, off-support coordinates contribute only above lam.
    """
    g = np.asarray(g, dtype=float)
    on = np.zeros(s.n, dtype=bool)
    on[s.support] = True
    return float(((g[on] - lam) ** 2).sum()
                 + (np.maximum(g[~on] - lam, 0.0) ** 2).sum())


def run_mixed_nonneg_sparse(inst: SignalInstance, lam: float, sigma_grid,
                            trials: int, seed: int) -> DenoiseRun:
    """Nonnegativity-constrained l1 denoising of an entrywise-nonnegative signal.

    The estimator is the one-sided soft threshold max(y - sigma*lam, 0). Each
    record carries both the NMSE and the Minkowski-sum distance estimate from
    the same noise draws, so the upper-bound comparison shares randomness.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if trials < 2:
        raise ValueError("need at least 2 trials")
    grid = _check_grid(sigma_grid)
    s = inst.structure
    if not isinstance(s, SparseStructure):
        raise InvalidStructureError("mixed estimator requires a sparse instance")
    x0 = inst.values
    if np.any(x0 < 0) or np.any(x0[s.support] <= 0):
        raise ValueError("mixed estimator requires x0 >= 0 with positive support")
    records = []
    for si, sigma in enumerate(grid):
        nmse, dvals = [], []
        for ti in range(trials):
            v = trial_noise(seed, si, ti, inst.ambient_dim)
            y = x0 + sigma * v
            x_star = np.maximum(y - sigma * lam, 0.0)
            err = x_star - x0
            nmse.append(float(err @ err) / (sigma * sigma))
            dvals.append(mixed_distance_sq(s, v, lam))
        mean, stderr = _stats(nmse)
        d_mean, d_stderr = _stats(dvals)
        records.append(SigmaRecord(float(sigma), mean, stderr, trials, d_mean, d_stderr))
    return DenoiseRun(s, "mixed", float(lam), tuple(grid.tolist()), tuple(records))


def first_order_error(s: SignalStructure, z: np.ndarray, tau: float) -> np.ndarray:
    """Error vector of the linearized problem: z minus its projection on tau*subdiff.

    For small noise the true prox error converges to this vector, which is
    what makes the small-sigma NMSE equal the mean squared distance.
    """
    from . import geometry

    return np.asarray(z, dtype=float) - geometry.project_scaled_subdiff(s, z, tau)
