"""Constrained LASSO experiments over random measurement operators.

Solves min_x ||y - A x||^2 subject to f(x) <= f(x0) by projected gradient,
for Haar-random partial unitary (rows orthonormal) or i.i.d. Gaussian A,
and estimates three normalized quantities per measurement count m:

    eta = ||A(x* - x0)||^2 / sigma^2   (projected error)
    F   = ||y - A x*||^2 / sigma^2     (residual cost)
    E   = ||x* - x0||^2 / sigma^2      (full error)

eta and F split the noise energy (eta + F = m in expectation) and switch
behavior at m near the cone MSD of the structure: below it eta tracks m and
the cost vanishes; above it eta flattens at the cone MSD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import prox
from .errors import InvalidStructureError, RunQualityError
from .geometry import McConfig, msd_cone
from .signals import (
    BlockSparseStructure,
    LowRankStructure,
    SignalInstance,
    SparseStructure,
    norm_value,
)
from .streams import stream


@dataclass(frozen=True)
class SolverConfig:
    """Projected-gradient controls.

    ``step=None`` selects 1 for partial-unitary operators (operator norm is
    exactly one) and 1/sigma_max(A)^2 otherwise, estimated by power
    iteration to 1e-6 relative accuracy.

    Convergence is certified by relative objective decrease below ``tol`` or
    by the objective reaching ``cost_floor``. The floor matters when the
    optimal cost is exactly zero: the objective then decays geometrically
    forever and a relative-decrease test alone can never fire.
    """

    max_iters: int = 600_000
    tol: float = 1e-12
    step: float | None = None
    cost_floor: float = 0.0

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.cost_floor < 0:
            raise ValueError("cost_floor must be nonnegative")


@dataclass(frozen=True)
class BallSpec:
    kind: str                      # "l1" | "l12" | "nuclear"
    radius: float
    block_size: int | None = None


@dataclass(frozen=True)
class LassoSolution:
    x: np.ndarray
    cost: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class TrialDiagnostics:
    eta: float
    f: float
    e: float
    energy: float          # (||A(x*-x0)||^2 + ||y - A x*||^2) / sigma^2
    noise_energy: float    # ||v||^2
    cost: float
    cost_at_truth: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class LassoSweepRecord:
    m: int
    eta_mean: float
    eta_stderr: float
    f_mean: float
    f_stderr: float
    e_mean: float
    e_stderr: float
    predicted_eta: float
    trials: int
    excluded_trials: int


def ball_for(inst: SignalInstance) -> BallSpec:
    """The level-set ball {f(x) <= f(x0)} of the instance's structure norm."""
    s = inst.structure
    radius = norm_value(s, inst.values)
    if isinstance(s, SparseStructure):
        return BallSpec("l1", radius)
    if isinstance(s, BlockSparseStructure):
        return BallSpec("l12", radius, block_size=s.b)
    if isinstance(s, LowRankStructure):
        return BallSpec("nuclear", radius)
    raise InvalidStructureError(f"no ball constraint for {type(s).__name__}")


def _haar_partial_unitary(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    g = rng.standard_normal((n, m))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return (q * signs).T


def sample_partial_unitary(m: int, n: int, seed: int) -> np.ndarray:
    """Haar-random m x n matrix with orthonormal rows (A A^T = I_m)."""
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    return _haar_partial_unitary(stream(seed), m, n)


def sample_gaussian_matrix(m: int, n: int, seed: int) -> np.ndarray:
    """m x n matrix of i.i.d. standard normal entries."""
    if m < 1 or n < 1:
        raise ValueError("dimensions must be positive")
    return stream(seed).standard_normal((m, n))


def _operator_norm_sq(a: np.ndarray, rel_tol: float = 1e-6, max_iters: int = 500) -> float:
    """Largest squared singular value by power iteration on A^T A."""
    n = a.shape[1]
    v = np.ones(n) / math.sqrt(n)
    prev = 0.0
    for _ in range(max_iters):
        w = a.T @ (a @ v)
        est = float(np.linalg.norm(w))
        if est == 0.0:
            return 0.0
        v = w / est
        if abs(est - prev) <= rel_tol * est:
            break
        prev = est
    return est


def _project(x: np.ndarray, ball: BallSpec) -> np.ndarray:
    return prox.project_ball(x, ball.kind, ball.radius, block_size=ball.block_size)


def solve_constrained_lasso(a: np.ndarray, y: np.ndarray, ball: BallSpec,
                            cfg: SolverConfig = SolverConfig(),
                            x_init: np.ndarray | None = None) -> LassoSolution:
    """Projected gradient for min_x ||y - A x||^2 over the ball.

    Iterates x <- project(x + step * A^T (y - A x)) and stops when the
    relative objective decrease falls below cfg.tol (converged) or at
    cfg.max_iters (flagged non-converged; the caller decides what to do).
    """
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    step = cfg.step if cfg.step is not None else 1.0 / _operator_norm_sq(a)
    x = np.zeros(a.shape[1]) if x_init is None else np.asarray(x_init, dtype=float).copy()
    x = _project(x, ball)
    r = y - a @ x
    cost = float(r @ r)
    converged = cost <= cfg.cost_floor
    it = 0
    while not converged and it < cfg.max_iters:
        x = _project(x + step * (a.T @ r), ball)
        r = y - a @ x
        new_cost = float(r @ r)
        it += 1
        if cost - new_cost <= cfg.tol * cost or new_cost <= cfg.cost_floor:
            converged = True
        cost = new_cost
    return LassoSolution(x, cost, it, converged)


def estimate_lasso_point(inst: SignalInstance, m: int, sigma: float, trials: int,
                         matrix_kind: str = "unitary",
                         cfg: SolverConfig = SolverConfig(), seed: int = 0,
                         d_reference: float | None = None,
                         mc: McConfig | None = None,
                         collect: bool = False):
    """Estimate (eta, F, E) at one measurement count m.

    Each trial draws a fresh operator and noise vector from the stream keyed
    (seed, m, trial), solves from the feasible warm start x0 (so the cost can
    never exceed the cost at the truth), and accumulates the three normalized
    statistics. Non-converged trials are excluded but counted; more than 10%
    exclusions raise RunQualityError. ``predicted_eta`` is min(m, D) with D
    the cone MSD (``d_reference``, estimated via ``mc`` when not supplied).

    Returns the sweep record, or (record, diagnostics) when ``collect``.
    """
    n = inst.ambient_dim
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    if trials < 2:
        raise ValueError("need at least 2 trials")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if matrix_kind not in ("unitary", "gaussian"):
        raise ValueError(f"unknown matrix kind {matrix_kind!r}")
    if d_reference is None:
        d_reference = msd_cone(inst.structure, mc or McConfig(samples=20_000, seed=seed)).mean
    ball = ball_for(inst)
    x0 = inst.values
    etas, fs, es, diags = [], [], [], []
    excluded = 0
    for ti in range(trials):
        rng = stream(seed, m, ti)
        if matrix_kind == "unitary":
            a = _haar_partial_unitary(rng, m, n)
            step = 1.0 if cfg.step is None else cfg.step
        else:
            a = rng.standard_normal((m, n))
            step = cfg.step
        v = rng.standard_normal(m)
        y = a @ x0 + sigma * v
        # floor small enough that stopping on it perturbs the per-trial
        # energy identity by at most ~2e-7 of the noise energy
        floor = cfg.cost_floor or 1e-14 * sigma * sigma * float(v @ v)
        cfg_t = SolverConfig(cfg.max_iters, cfg.tol, step, floor)
        sol = solve_constrained_lasso(a, y, ball, cfg_t, x_init=x0)
        if not sol.converged:
            excluded += 1
            continue
        proj_err = a @ (sol.x - x0)
        s2 = sigma * sigma
        eta = float(proj_err @ proj_err) / s2
        f_val = sol.cost / s2
        err = sol.x - x0
        e_val = float(err @ err) / s2
        etas.append(eta)
        fs.append(f_val)
        es.append(e_val)
        if collect:
            diags.append(TrialDiagnostics(
                eta=eta, f=f_val, e=e_val, energy=eta + f_val,
                noise_energy=float(v @ v), cost=sol.cost,
                cost_at_truth=s2 * float(v @ v),
                iterations=sol.iterations, converged=sol.converged,
            ))
    if excluded > 0.1 * trials:
        raise RunQualityError(
            f"{excluded}/{trials} trials failed to converge at m={m}"
        )

    def ms(vals):
        arr = np.asarray(vals)
        return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))

    eta_mean, eta_stderr = ms(etas)
    f_mean, f_stderr = ms(fs)
    e_mean, e_stderr = ms(es)
    record = LassoSweepRecord(
        m=m, eta_mean=eta_mean, eta_stderr=eta_stderr,
        f_mean=f_mean, f_stderr=f_stderr, e_mean=e_mean, e_stderr=e_stderr,
        predicted_eta=float(min(m, d_reference)), trials=trials - excluded,
        excluded_trials=excluded,
    )
    return (record, diags) if collect else record


def default_sigma(inst: SignalInstance, scale: float = 1e-4) -> float:
    """Operational small-noise level: scale times the signal's Euclidean norm."""
    return float(scale * np.linalg.norm(inst.values))


def sweep_measurements(inst: SignalInstance, m_grid, sigma: float | None = None,
                       trials: int = 50, matrix_kind: str = "unitary",
                       cfg: SolverConfig = SolverConfig(), seed: int = 0,
                       mc: McConfig | None = None,
                       d_reference: float | None = None,
                       collect: bool = False):
    """One LassoSweepRecord per measurement count in ascending m_grid.

    The cone MSD is estimated once and shared by every record's prediction.
    Returns the list of records, or (records, {m: diagnostics}) if ``collect``.
    """
    m_grid = [int(m) for m in m_grid]
    if any(m2 <= m1 for m1, m2 in zip(m_grid, m_grid[1:])):
        raise ValueError("m grid must be sorted strictly ascending")
    if m_grid and m_grid[-1] > inst.ambient_dim:
        raise ValueError("measurement counts cannot exceed the ambient dimension")
    if sigma is None:
        sigma = default_sigma(inst)
    if d_reference is None:
        d_reference = msd_cone(inst.structure, mc or McConfig(samples=20_000, seed=seed)).mean
    records, all_diags = [], {}
    for m in m_grid:
        out = estimate_lasso_point(
            inst, m, sigma, trials, matrix_kind, cfg, seed,
            d_reference=d_reference, collect=collect,
        )
        if collect:
            rec, diags = out
            all_diags[m] = diags
        else:
            rec = out
        records.append(rec)
    return (records, all_diags) if collect else records
