"""Gaussian squared-distance geometry of scaled subdifferentials.

The central quantity is dist(g, lam * subdiff(f, x0))^2 for standard normal
g. Its expectation over g (the mean squared distance, MSD) equals the
worst-case normalized MSE of the corresponding proximal denoiser, and its
per-sample minimum over lam >= 0 is the squared distance to the cone of
subgradients, whose expectation governs constrained denoising and the
measurement count at which the constrained-LASSO behavior switches.

All distances reduce to the same one-dimensional convex scale profile

    dist^2(lam) = c0 - 2*c1*lam + c2*lam^2 + sum_j w_j * max(nu_j - lam, 0)^2

with structure-specific coefficients: for l1, nu holds the off-support
magnitudes; for l1,2 the inactive block norms; for the nuclear norm the
singular values of the part of g orthogonal to the signal's subspaces.
Monte Carlo paths exploit this form to vectorize over samples.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats

from .errors import BoundNotValidError, InvalidStructureError, NumericalError
from .signals import (
    BlockSparseStructure,
    LowRankStructure,
    SignalStructure,
    SparseStructure,
    WeightedSparseStructure,
    as_matrix,
    as_vector,
    degrees_of_freedom,
)
from .streams import stream


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo controls: sample count, seed, and chunked stream layout.

    Samples are generated in chunks of ``chunk``; chunk i draws from an
    independent stream keyed (seed, i), so chunks may be evaluated in any
    order or in parallel without changing the result.
    """

    samples: int
    seed: int
    chunk: int = 4096

    def __post_init__(self):
        if self.samples < 2:
            raise ValueError("need at least 2 Monte Carlo samples")
        if self.chunk < 1:
            raise ValueError("chunk must be positive")


@dataclass(frozen=True)
class ScalarMinConfig:
    """Golden-section controls for the convex scalar minimizations over lam."""

    tol: float = 1e-6
    max_iters: int = 200


@dataclass(frozen=True)
class MsdEstimate:
    """Point estimate of a mean squared distance, with its standard error."""

    mean: float
    stderr: float
    samples: int
    lam: float | None = None

    def to_json(self) -> str:
        return json.dumps(
            {"mean": self.mean, "stderr": self.stderr, "samples": self.samples,
             "lambda": self.lam}
        )


@dataclass(frozen=True)
class GeometryConstants:
    """Scalar invariants of a structure's subdifferential.

    subgradient_radius: largest Euclidean norm over the subdifferential.
    sphere_max_value:   largest norm value attainable on the unit sphere
                        while keeping the same subdifferential.
    tuning_lipschitz:   Lipschitz constant of the per-sample optimal scale
                        as a function of the Gaussian sample.
    dof:                degrees of freedom of the structure class.
    """

    subgradient_radius: float
    sphere_max_value: float
    tuning_lipschitz: float
    dof: int


# ---------------------------------------------------------------------------
# Pointwise distance and projection
# ---------------------------------------------------------------------------

def _check_vector(s: SignalStructure, g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.ndim == 2 and isinstance(s, LowRankStructure) and g.shape == (s.d, s.d):
        g = as_vector(g)
    if g.shape != (s.ambient_dim,):
        raise ValueError(
            f"vector has shape {g.shape}, structure ambient dimension is {s.ambient_dim}"
        )
    return g


def dist_sq_scaled_subdiff(s: SignalStructure, g: np.ndarray, lam: float) -> float:
    """Squared distance from g to the lam-scaled subdifferential at the signal.

    Sparse: sum_S (g_i - lam*sign_i)^2 + sum_off max(|g_i| - lam, 0)^2.
    Block:  active blocks pin to lam*direction; inactive block norms clip at lam.
    Low rank: the component inside the singular subspaces pins to lam*u v^T;
    the orthogonal component's singular values clip at lam (spectral ball).
    Weighted sparse: the l1 formula with lam replaced by lam*w per region.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    g = _check_vector(s, g)
    if isinstance(s, SparseStructure):
        on = (g[s.support] - lam * s.signs) ** 2
        off = np.delete(g, s.support)
        return float(on.sum() + (np.maximum(np.abs(off) - lam, 0.0) ** 2).sum())
    if isinstance(s, WeightedSparseStructure):
        w = s.coordinate_weights
        on = (g[s.support] - lam * w[s.support] * s.signs) ** 2
        mask = np.ones(s.n, dtype=bool)
        mask[s.support] = False
        off = np.maximum(np.abs(g[mask]) - lam * w[mask], 0.0) ** 2
        return float(on.sum() + off.sum())
    if isinstance(s, BlockSparseStructure):
        blocks = g.reshape(s.t, s.b)
        on = ((blocks[s.active] - lam * s.directions) ** 2).sum()
        inactive = np.setdiff1d(np.arange(s.t), s.active)
        norms = np.linalg.norm(blocks[inactive], axis=1)
        return float(on + (np.maximum(norms - lam, 0.0) ** 2).sum())
    if isinstance(s, LowRankStructure):
        m = as_matrix(g, s.d)
        h = _offspace_part(s, m)
        pt = m - h
        sv = np.linalg.svd(h, compute_uv=False) if s.r < s.d else np.zeros(0)
        on = ((pt - lam * s.u @ s.v.T) ** 2).sum()
        return float(on + (np.maximum(sv - lam, 0.0) ** 2).sum())
    raise InvalidStructureError(f"unknown structure {type(s).__name__}")


def _offspace_part(s: LowRankStructure, m: np.ndarray) -> np.ndarray:
    """(I - uu^T) m (I - vv^T): the component outside the signal's subspaces."""
    um = s.u @ (s.u.T @ m)
    h = m - um
    return h - (h @ s.v) @ s.v.T


def project_scaled_subdiff(s: SignalStructure, g: np.ndarray, lam: float) -> np.ndarray:
    """Closest point to g inside the lam-scaled subdifferential (unique)."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    g = _check_vector(s, g)
    if isinstance(s, SparseStructure):
        p = np.clip(g, -lam, lam)
        p[s.support] = lam * s.signs
        return p
    if isinstance(s, WeightedSparseStructure):
        w = s.coordinate_weights
        p = np.clip(g, -lam * w, lam * w)
        p[s.support] = lam * w[s.support] * s.signs
        return p
    if isinstance(s, BlockSparseStructure):
        blocks = g.reshape(s.t, s.b).copy()
        norms = np.linalg.norm(blocks, axis=1)
        big = norms > lam
        scale = np.ones(s.t)
        scale[big] = lam / norms[big]
        blocks *= scale[:, None]
        blocks[s.active] = lam * s.directions
        return blocks.reshape(-1)
    if isinstance(s, LowRankStructure):
        m = as_matrix(g, s.d)
        h = _offspace_part(s, m)
        if s.r < s.d:
            uu, sv, vvt = np.linalg.svd(h)
            clipped = np.minimum(sv, lam)
            w = (uu[:, : sv.size] * clipped) @ vvt
        else:
            w = np.zeros_like(m)
        return as_vector(lam * s.u @ s.v.T + w)
    raise InvalidStructureError(f"unknown structure {type(s).__name__}")


# ---------------------------------------------------------------------------
# Reduced scale profiles (vectorized over Monte Carlo samples)
# ---------------------------------------------------------------------------

@dataclass
class _Profile:
    """Per-sample coefficients of dist^2 as a function of lam (see module doc)."""

    c0: np.ndarray          # (N,)
    c1: np.ndarray          # (N,)
    c2: float
    nu: np.ndarray          # (N, J) clip thresholds
    w: np.ndarray | None    # (J,) column weights, None means all ones


def _profile(s: SignalStructure, G: np.ndarray) -> _Profile:
    n_samp = G.shape[0]
    if isinstance(s, SparseStructure):
        gs = G[:, s.support]
        mask = np.ones(s.n, dtype=bool)
        mask[s.support] = False
        return _Profile(
            c0=(gs ** 2).sum(axis=1),
            c1=gs @ s.signs,
            c2=float(s.k),
            nu=np.abs(G[:, mask]),
            w=None,
        )
    if isinstance(s, WeightedSparseStructure):
        w = s.coordinate_weights
        gs = G[:, s.support]
        ws = w[s.support]
        mask = np.ones(s.n, dtype=bool)
        mask[s.support] = False
        off_idx = np.flatnonzero(mask)
        pos = off_idx[w[off_idx] > 0]
        zero = off_idx[w[off_idx] == 0]
        c0 = (gs ** 2).sum(axis=1) + (G[:, zero] ** 2).sum(axis=1)
        return _Profile(
            c0=c0,
            c1=gs @ (ws * s.signs),
            c2=float((ws ** 2).sum()),
            nu=np.abs(G[:, pos]) / w[pos],
            w=w[pos] ** 2,
        )
    if isinstance(s, BlockSparseStructure):
        blocks = G.reshape(n_samp, s.t, s.b)
        ga = blocks[:, s.active, :]
        inactive = np.setdiff1d(np.arange(s.t), s.active)
        return _Profile(
            c0=(ga ** 2).sum(axis=(1, 2)),
            c1=np.einsum("nkb,kb->n", ga, s.directions),
            c2=float(s.k),
            nu=np.linalg.norm(blocks[:, inactive, :], axis=2),
            w=None,
        )
    if isinstance(s, LowRankStructure):
        d, r = s.d, s.r
        # rows are column-major flattenings, so the C-order reshape is the transpose
        mats = np.transpose(G.reshape(n_samp, d, d), (0, 2, 1))
        uvt = s.u @ s.v.T
        c1 = np.einsum("nij,ij->n", mats, uvt)
        if r < d:
            uperp = _complement_basis(s.u)
            vperp = _complement_basis(s.v)
            b = np.einsum("ip,nij->npj", uperp, mats) @ vperp
            nu = np.linalg.svd(b, compute_uv=False)
            c0 = (mats ** 2).sum(axis=(1, 2)) - (b ** 2).sum(axis=(1, 2))
        else:
            nu = np.zeros((n_samp, 0))
            c0 = (mats ** 2).sum(axis=(1, 2))
        return _Profile(c0=c0, c1=c1, c2=float(r), nu=nu, w=None)
    raise InvalidStructureError(f"unknown structure {type(s).__name__}")


def _complement_basis(u: np.ndarray) -> np.ndarray:
    d, r = u.shape
    q, _ = np.linalg.qr(u, mode="complete")
    # columns r..d of the full Q span the orthogonal complement of range(u)
    q_perp = q[:, r:]
    # re-orthogonalize against u explicitly to kill rounding leakage
    q_perp = q_perp - u @ (u.T @ q_perp)
    q_perp, _ = np.linalg.qr(q_perp)
    return q_perp


def _profile_eval(p: _Profile, lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    lam_col = lam[:, None] if lam.ndim == 1 else lam
    t = np.maximum(p.nu - lam_col, 0.0)
    t *= t
    off = t @ p.w if p.w is not None else t.sum(axis=1)
    return p.c0 - 2.0 * p.c1 * lam + p.c2 * lam * lam + off


def _lam_bracket(p: _Profile) -> np.ndarray:
    """Per-sample upper bound on the minimizing lam.

    The minimum-norm subgradient has norm sqrt(c2); convexity of the distance
    in lam then confines the minimizer to [0, 2*||g|| / sqrt(c2)]. When the
    support part is empty (c2 = 0) the off-part is flat beyond its largest
    clip threshold.
    """
    norm = np.sqrt(_profile_eval(p, np.zeros(p.c0.shape[0])))
    if p.c2 > 0:
        hi = 2.0 * norm / math.sqrt(p.c2)
    else:
        hi = 2.0 * (p.nu.max(axis=1) if p.nu.shape[1] else np.zeros_like(norm))
    return np.maximum(hi, 1e-12)


def _golden_argmin(f, hi: np.ndarray, opt: ScalarMinConfig) -> np.ndarray:
    """Vectorized golden-section argmin of per-sample convex functions on [0, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    invphi2 = (3.0 - math.sqrt(5.0)) / 2.0
    a = np.zeros_like(hi)
    b = hi.astype(float).copy()
    h = b - a
    c = a + invphi2 * h
    d = a + invphi * h
    fc = f(c)
    fd = f(d)
    it = 0
    while h.max() > opt.tol and it < opt.max_iters:
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        h = b - a
        c = a + invphi2 * h
        d = a + invphi * h
        probe = np.where(left, c, d)
        fp = f(probe)
        fc_new = np.where(left, fp, fd)
        fd_new = np.where(left, fc, fp)
        fc, fd = fc_new, fd_new
        it += 1
    if h.max() > opt.tol:
        idx = int(np.argmax(h))
        raise NumericalError(
            f"scalar search did not reach tol={opt.tol} in {opt.max_iters} iterations",
            index=idx,
        )
    return 0.5 * (a + b)


def _chunks(s: SignalStructure, mc: McConfig):
    """Yield (chunk_index, start, profile) over the configured sample streams."""
    dim = s.ambient_dim
    done = 0
    ci = 0
    while done < mc.samples:
        n_chunk = min(mc.chunk, mc.samples - done)
        rng = stream(mc.seed, ci)
        G = rng.standard_normal((n_chunk, dim))
        yield ci, done, _profile(s, G)
        done += n_chunk
        ci += 1


def _estimate(values: np.ndarray, lam: float | None) -> MsdEstimate:
    n = values.size
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(n))
    return MsdEstimate(mean=mean, stderr=stderr, samples=n, lam=lam)


# ---------------------------------------------------------------------------
# Monte Carlo estimators
# ---------------------------------------------------------------------------

def msd_lambda(s: SignalStructure, lam: float, mc: McConfig) -> MsdEstimate:
    """Monte Carlo estimate of E dist(g, lam*subdiff)^2 over standard normal g."""
    return msd_lambda_curve(s, [lam], mc)[0]


def msd_lambda_curve(s: SignalStructure, lams, mc: McConfig) -> list[MsdEstimate]:
    """Estimates for several lam values sharing one set of Gaussian samples.

    Common random numbers across lam make the curve smooth in lam and keep
    comparisons between scales free of independent sampling noise.
    """
    lams = [float(l) for l in lams]
    if any(l < 0 for l in lams):
        raise ValueError("lam must be nonnegative")
    vals = [[] for _ in lams]
    for _, _, prof in _chunks(s, mc):
        for j, lam in enumerate(lams):
            vals[j].append(_profile_eval(prof, lam))
    return [_estimate(np.concatenate(v), lam) for v, lam in zip(vals, lams)]


def msd_cone(s: SignalStructure, mc: McConfig,
             opt: ScalarMinConfig = ScalarMinConfig()) -> MsdEstimate:
    """Monte Carlo estimate of E min_{lam>=0} dist(g, lam*subdiff)^2.

    The inner minimum is the squared distance to the cone generated by the
    subdifferential; the map lam -> dist is convex, so a golden-section
    search per sample is exact to the configured tolerance.
    """
    vals = []
    for _, _, prof in _chunks(s, mc):
        hi = _lam_bracket(prof)
        lam_star = _golden_argmin(lambda l: _profile_eval(prof, l), hi, opt)
        vals.append(_profile_eval(prof, lam_star))
    return _estimate(np.concatenate(vals), None)


def optimal_lambda(s: SignalStructure, mc: McConfig,
                   opt: ScalarMinConfig = ScalarMinConfig()) -> tuple[float, MsdEstimate]:
    """Scale minimizing the Monte Carlo estimate of the mean squared distance.

    Uses common random numbers: the sample set is drawn once and the smooth
    sample-average function of lam is minimized by golden-section search,
    so the returned argmin is deterministic given the seed. The minimizer is
    unique because the support part contributes a strictly convex c2*lam^2.
    """
    profiles = [prof for _, _, prof in _chunks(s, mc)]
    total = sum(p.c0.size for p in profiles)
    hi = max(float(_lam_bracket(p).max()) for p in profiles)

    def mean_at(lam_arr: np.ndarray) -> np.ndarray:
        lam = float(lam_arr[0])
        acc = 0.0
        for p in profiles:
            acc += float(_profile_eval(p, lam).sum())
        return np.array([acc / total])

    lam_star = float(_golden_argmin(mean_at, np.array([hi]), opt)[0])
    vals = np.concatenate([_profile_eval(p, lam_star) for p in profiles])
    return lam_star, _estimate(vals, lam_star)


# ---------------------------------------------------------------------------
# Exact l1 curve and closed-form bounds
# ---------------------------------------------------------------------------

def soft_tail_moment(lam: float) -> float:
    """E max(|g| - lam, 0)^2 for standard normal g, in closed form."""
    lam = float(lam)
    return float(2.0 * ((1.0 + lam * lam) * stats.norm.sf(lam) - lam * stats.norm.pdf(lam)))


def soft_tail_moment_quadrature(lam: float) -> float:
    """Same moment by adaptive quadrature; independent check of the closed form."""
    val, _ = integrate.quad(lambda t: (t - lam) ** 2 * stats.norm.pdf(t), lam, np.inf)
    return float(2.0 * val)


def msd_lambda_exact_l1(n: int, k: int, lam: float) -> float:
    """Exact E dist(g, lam*subdiff)^2 for a k-sparse signal under the l1 norm.

    Equals k*(1 + lam^2) + (n - k) * E max(|g| - lam, 0)^2: support
    coordinates are pinned to lam*sign, off-support coordinates clip at lam.
    """
    if k < 1 or k > n:
        raise InvalidStructureError(f"need 1 <= k <= n, got k={k}, n={n}")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    return float(k * (1.0 + lam * lam) + (n - k) * soft_tail_moment(lam))


def geometry_constants(s: SignalStructure) -> GeometryConstants:
    """Subdifferential radius, peak sphere value, tuning Lipschitz constant, dof."""
    if isinstance(s, SparseStructure):
        radius, peak = math.sqrt(s.n), math.sqrt(s.k)
    elif isinstance(s, WeightedSparseStructure):
        w = s.coordinate_weights
        radius = math.sqrt(float((w ** 2).sum()))
        peak = math.sqrt(float((w[s.support] ** 2).sum()))
    elif isinstance(s, BlockSparseStructure):
        radius, peak = math.sqrt(s.t), math.sqrt(s.k)
    elif isinstance(s, LowRankStructure):
        radius, peak = math.sqrt(s.d), math.sqrt(s.r)
    else:
        raise InvalidStructureError(f"unknown structure {type(s).__name__}")
    if peak <= 0:
        raise InvalidStructureError("structure has an empty support")
    return GeometryConstants(
        subgradient_radius=radius,
        sphere_max_value=peak,
        tuning_lipschitz=1.0 / peak,
        dof=degrees_of_freedom(s),
    )


def table1_threshold(s: SignalStructure) -> float:
    """Smallest lam at which the closed-form MSD bound is valid."""
    if isinstance(s, SparseStructure):
        return math.sqrt(2.0 * math.log(s.n / s.k))
    if isinstance(s, BlockSparseStructure):
        return math.sqrt(s.b) + math.sqrt(2.0 * math.log(s.t / s.k))
    if isinstance(s, LowRankStructure):
        return 2.0 * math.sqrt(s.d)
    raise InvalidStructureError(f"no closed-form bound for {type(s).__name__}")


def table1_bound(s: SignalStructure, lam: float) -> float:
    """Closed-form upper bound on the MSD at scale lam.

    Sparse: (lam^2 + 3) k           for lam >= sqrt(2 log(n/k))
    Low rank: (lam^2 + 2d) r + 2d   for lam >= 2 sqrt(d)
    Block: (lam^2 + b + 2) k        for lam >= sqrt(b) + sqrt(2 log(t/k))
    """
    thr = table1_threshold(s)
    if lam < thr:
        raise BoundNotValidError(
            f"bound requires lam >= {thr:.6g}, got {lam}", threshold=thr
        )
    if isinstance(s, SparseStructure):
        return float((lam * lam + 3.0) * s.k)
    if isinstance(s, BlockSparseStructure):
        return float((lam * lam + s.b + 2.0) * s.k)
    if isinstance(s, LowRankStructure):
        return float((lam * lam + 2.0 * s.d) * s.r + 2.0 * s.d)
    raise InvalidStructureError(f"no closed-form bound for {type(s).__name__}")


def _lipschitz_excess(radius_lipschitz: float, cone_msd: float) -> float:
    return 2.0 * math.pi * (
        radius_lipschitz ** 2 + radius_lipschitz * math.sqrt(cone_msd) + 1.0
    )


def lipschitz_upper_bound(s: SignalStructure, cone_msd: float) -> float:
    """Upper bound on the optimally tuned MSD from the cone MSD alone.

    cone_msd + 2*pi*(R^2 L^2 + R L sqrt(cone_msd) + 1), where R is the
    subdifferential radius and L the tuning Lipschitz constant. Unlike the
    sandwich gap this needs no norm value, only subdifferential data.
    """
    if cone_msd < 0:
        raise ValueError("cone_msd must be nonnegative")
    gc = geometry_constants(s)
    rl = gc.subgradient_radius * gc.tuning_lipschitz
    return float(cone_msd + _lipschitz_excess(rl, cone_msd))
