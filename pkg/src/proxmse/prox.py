"""Proximal operators of the structure-inducing norms and their ball projections.

Every operator returns a :class:`ProxResult` carrying the minimizer, the
objective value tau*f(x) + 0.5*||y - x||^2, and an optimality residual: the
distance from y - x to the tau-scaled subdifferential at the minimizer,
which is zero exactly when x solves the proximal problem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import InvalidStructureError
from .signals import (
    BlockSparseStructure,
    LowRankStructure,
    SignalStructure,
    SparseStructure,
    WeightedSparseStructure,
    SUPPORT_TOL,
    RANK_TOL,
    as_matrix,
    as_vector,
)


@dataclass(frozen=True)
class ProxResult:
    minimizer: np.ndarray
    objective: float
    residual: float


def soft_threshold(y, tau: float) -> ProxResult:
    """Coordinatewise shrink toward zero by tau; kills entries with |y_i| < tau."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    y = np.asarray(y, dtype=float)
    x = np.where(y >= tau, y - tau, np.where(np.abs(y) < tau, 0.0, y + tau))
    obj = tau * np.abs(x).sum() + 0.5 * ((y - x) ** 2).sum()
    res = prox_residual("l1", y.ravel(), x.ravel(), tau)
    return ProxResult(x, float(obj), res)


def weighted_soft_threshold(y, tau: float, weights) -> ProxResult:
    """Soft threshold with per-coordinate level tau * w_i."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    y = np.asarray(y, dtype=float)
    w = np.broadcast_to(np.asarray(weights, dtype=float), y.shape)
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    level = tau * w
    x = np.where(y >= level, y - level, np.where(np.abs(y) < level, 0.0, y + level))
    obj = tau * (w * np.abs(x)).sum() + 0.5 * ((y - x) ** 2).sum()
    # weighted residual: per-coordinate distance to [-tau*w, tau*w] off support,
    # pin to tau*w*sign on the support of x
    diff = (y - x).ravel()
    xf = x.ravel()
    wf = w.ravel()
    on = np.abs(xf) > SUPPORT_TOL
    res_sq = ((diff[on] - tau * wf[on] * np.sign(xf[on])) ** 2).sum()
    res_sq += (np.maximum(np.abs(diff[~on]) - tau * wf[~on], 0.0) ** 2).sum()
    return ProxResult(x, float(obj), float(np.sqrt(res_sq)))


def block_soft_threshold(y, tau: float, block_size: int) -> ProxResult:
    """Scale each size-b block by max(1 - tau/||y_b||, 0)."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size % block_size:
        raise ValueError(f"length {y.size} not divisible by block size {block_size}")
    blocks = y.reshape(-1, block_size)
    norms = np.linalg.norm(blocks, axis=1)
    scale = np.zeros_like(norms)
    big = norms > tau
    scale[big] = 1.0 - tau / norms[big]
    x = (blocks * scale[:, None]).reshape(-1)
    xn = np.linalg.norm(x.reshape(-1, block_size), axis=1)
    obj = tau * xn.sum() + 0.5 * ((y - x) ** 2).sum()
    res = prox_residual("l12", y, x, tau, block_size=block_size)
    return ProxResult(x, float(obj), res)


def singular_value_threshold(y, tau: float) -> ProxResult:
    """Soft threshold the singular values of a square matrix.

    Accepts a (d, d) matrix or its column-major flattening; the minimizer is
    returned in the same layout as the input.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    y = np.asarray(y, dtype=float)
    flat_input = y.ndim == 1
    if flat_input:
        d = int(round(np.sqrt(y.size)))
        if d * d != y.size:
            raise ValueError("flattened input must have square length")
        m = as_matrix(y, d)
    else:
        if y.ndim != 2 or y.shape[0] != y.shape[1]:
            raise ValueError("matrix input must be square")
        m = y
        d = m.shape[0]
    u, sv, vt = np.linalg.svd(m)
    shrunk = np.maximum(sv - tau, 0.0)
    x = (u[:, : sv.size] * shrunk) @ vt
    obj = tau * shrunk.sum() + 0.5 * ((m - x) ** 2).sum()
    res = prox_residual("nuclear", as_vector(m), as_vector(x), tau)
    out = as_vector(x) if flat_input else x
    return ProxResult(out, float(obj), res)


# ---------------------------------------------------------------------------
# Euclidean projections onto norm balls
# ---------------------------------------------------------------------------

def _l1_ball_shrink(mags: np.ndarray, radius: float) -> float:
    """Threshold theta such that sum max(mags - theta, 0) = radius (mags outside)."""
    u = np.sort(mags)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, u.size + 1)
    ok = u > (css - radius) / j
    rho = int(np.max(np.flatnonzero(ok))) + 1
    return float((css[rho - 1] - radius) / rho)


def project_ball(y, kind: str, radius: float, *, block_size: int | None = None) -> np.ndarray:
    """Euclidean projection onto {x : f(x) <= radius} for f in {l1, l1,2, nuclear}.

    l1 uses the sort-then-threshold rule; l1,2 applies it to the vector of
    block norms; nuclear applies the l1 rule to the singular values. Points
    already inside the ball are returned unchanged.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    y = np.asarray(y, dtype=float)
    if radius == 0:
        return np.zeros_like(y)
    if kind == "l1":
        mags = np.abs(y)
        if mags.sum() <= radius:
            return y.copy()
        theta = _l1_ball_shrink(mags.ravel(), radius)
        return np.sign(y) * np.maximum(mags - theta, 0.0)
    if kind == "l12":
        if block_size is None:
            raise ValueError("l12 projection needs block_size")
        if y.ndim != 1 or y.size % block_size:
            raise ValueError(f"length {y.size} not divisible by block size {block_size}")
        blocks = y.reshape(-1, block_size)
        norms = np.linalg.norm(blocks, axis=1)
        if norms.sum() <= radius:
            return y.copy()
        theta = _l1_ball_shrink(norms, radius)
        new_norms = np.maximum(norms - theta, 0.0)
        scale = np.zeros_like(norms)
        nz = norms > 0
        scale[nz] = new_norms[nz] / norms[nz]
        return (blocks * scale[:, None]).reshape(-1)
    if kind == "nuclear":
        flat_input = y.ndim == 1
        if flat_input:
            d = int(round(np.sqrt(y.size)))
            if d * d != y.size:
                raise ValueError("flattened input must have square length")
            m = as_matrix(y, d)
        else:
            m = y
        u, sv, vt = np.linalg.svd(m)
        if sv.sum() <= radius:
            return y.copy()
        theta = _l1_ball_shrink(sv, radius)
        x = (u[:, : sv.size] * np.maximum(sv - theta, 0.0)) @ vt
        return as_vector(x) if flat_input else x
    raise ValueError(f"unknown ball kind {kind!r}")


# ---------------------------------------------------------------------------
# Optimality residuals
# ---------------------------------------------------------------------------

def _structure_at(spec, x: np.ndarray, block_size: int | None) -> SignalStructure:
    """Structure descriptor of the norm family evaluated at the point x.

    Optimality of a proximal step requires a subgradient at the minimizer,
    so supports, signs and subspaces are recomputed at x, not at the signal
    the problem started from.
    """
    if isinstance(spec, WeightedSparseStructure):
        support = np.flatnonzero(np.abs(x) > SUPPORT_TOL)
        return WeightedSparseStructure(
            spec.n, support, np.sign(x[support]), spec.region_of, spec.weights
        )
    if spec == "l1" or isinstance(spec, SparseStructure):
        support = np.flatnonzero(np.abs(x) > SUPPORT_TOL)
        return SparseStructure(x.size, support, np.sign(x[support]))
    if spec == "l12" or isinstance(spec, BlockSparseStructure):
        b = spec.b if isinstance(spec, BlockSparseStructure) else block_size
        if b is None:
            raise ValueError("block residual needs block_size")
        blocks = x.reshape(-1, b)
        norms = np.linalg.norm(blocks, axis=1)
        active = np.flatnonzero(norms > SUPPORT_TOL)
        dirs = blocks[active] / norms[active, None]
        return BlockSparseStructure(x.size // b, b, active, dirs)
    if spec == "nuclear" or isinstance(spec, LowRankStructure):
        d = spec.d if isinstance(spec, LowRankStructure) else int(round(np.sqrt(x.size)))
        u, sv, vt = np.linalg.svd(as_matrix(x, d))
        r = int(np.sum(sv > RANK_TOL))
        return LowRankStructure(d, r, u[:, :r], vt[:r].T)
    raise InvalidStructureError(f"unknown norm family {spec!r}")


def prox_residual(spec, y, x_star, tau: float, *, block_size: int | None = None) -> float:
    """Distance from y - x_star to the tau-scaled subdifferential at x_star.

    A value <= tolerance certifies that x_star solves
    argmin_x tau*f(x) + 0.5*||y - x||^2. ``spec`` is a SignalStructure (for
    the weighted norm it supplies regions and weights) or one of the family
    tags 'l1', 'l12', 'nuclear'.
    """
    y = np.asarray(y, dtype=float).ravel()
    x_star = np.asarray(x_star, dtype=float).ravel()
    if x_star.shape != y.shape:
        raise ValueError("x_star must match the dimension of y")
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if tau == 0:
        return float(np.linalg.norm(y - x_star))
    s = _structure_at(spec, x_star, block_size)
    return float(np.sqrt(geometry.dist_sq_scaled_subdiff(s, y - x_star, tau)))
