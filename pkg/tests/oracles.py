"""Independent brute-force oracles shared by the unit and acceptance tests.

Each oracle discretizes the free parameters of a scaled subdifferential (or
of a scalar proximal objective) and minimizes directly, staying independent
of the closed-form code paths it is used to check.
"""

import numpy as np

from proxmse import signals


def brute_sparse(support, signs, g, lam, step=1e-4):
    total = 0.0
    sset = {int(i): sgn for i, sgn in zip(support, signs)}
    grid = np.arange(-1.0, 1.0 + step / 2, step)
    for i, gi in enumerate(g):
        if i in sset:
            total += (gi - lam * sset[i]) ** 2
        else:
            total += np.min((gi - lam * grid) ** 2)
    return total


def brute_weighted(s, g, lam, step=1e-4):
    w = s.coordinate_weights
    sset = {int(i): sgn for i, sgn in zip(s.support, s.signs)}
    grid = np.arange(-1.0, 1.0 + step / 2, step)
    total = 0.0
    for i, gi in enumerate(g):
        if i in sset:
            total += (gi - lam * w[i] * sset[i]) ** 2
        else:
            total += np.min((gi - lam * w[i] * grid) ** 2)
    return total


def brute_block(s, g, lam, radial_step=1e-3, angle_step=1e-3):
    blocks = np.asarray(g).reshape(s.t, s.b)
    active = {int(i): d for i, d in zip(s.active, s.directions)}
    total = 0.0
    radii = np.arange(0.0, 1.0 + radial_step / 2, radial_step)
    for bi, gb in enumerate(blocks):
        if bi in active:
            total += np.sum((gb - lam * active[bi]) ** 2)
        elif s.b == 1:
            grid = np.arange(-1.0, 1.0 + radial_step / 2, radial_step)
            total += np.min((gb[0] - lam * grid) ** 2)
        elif s.b == 2:
            angles = np.arange(0.0, 2 * np.pi, angle_step)
            sx = np.outer(radii, np.cos(angles)).ravel()
            sy = np.outer(radii, np.sin(angles)).ravel()
            total += np.min((gb[0] - lam * sx) ** 2 + (gb[1] - lam * sy) ** 2)
        else:
            raise NotImplementedError("oracle covers block sizes 1 and 2")
    return total


def brute_lowrank_codim1(s, g, lam, step=1e-4):
    """Low-rank oracle for d - r = 1: the off part is a scalar in [-1, 1]."""
    assert s.d - s.r == 1
    m = signals.as_matrix(g, s.d)

    def complement(f):
        q, _ = np.linalg.qr(f, mode="complete")
        return q[:, s.r:]

    up = complement(s.u)
    vp = complement(s.v)
    fixed = s.u @ s.v.T
    free = up @ vp.T
    grid = np.arange(-1.0, 1.0 + step / 2, step)
    vals = [np.sum((m - lam * (fixed + w * free)) ** 2) for w in grid]
    return min(vals)


def grid_prox_scalar(y, tau, weight=1.0, step=1e-4):
    """Grid minimizer of 0.5*(y - x)^2 + tau*weight*|x|."""
    span = abs(y) + 1.0
    xs = np.arange(-span, span + step / 2, step)
    obj = 0.5 * (y - xs) ** 2 + tau * weight * np.abs(xs)
    return xs[int(np.argmin(obj))]
