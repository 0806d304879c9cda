"""Admissibility certificates: disjointness and the supercaloric bound.

The weak inequality (Delta_g - d_t) u >= -1 is verified two ways, since no
single numerical criterion captures "in the weak sense":

* pointwise with slack, via the discrete operator, restricted to nodes whose
  full stencil avoids the other phase's positivity set (one-sided stencils at
  the interface are biased); and
* pairings against a fixed battery of nonnegative smooth space-time bumps,
  integrating by parts onto the bump.

u_pm(0, 0) = 0 is NOT enforced; the records carry the origin values as a flag.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.ndimage as ndi

from .. import geometry
from .solver import assemble_laplacian

__all__ = [
    "ValidityRecord",
    "ResidualRecord",
    "pair_validity_check",
    "supercaloric_residual_check",
]


@dataclass(frozen=True)
class ValidityRecord:
    product_max: float        # disjointness defect max u_+ u_-
    min_plus: float           # nonnegativity margins
    min_minus: float
    scale: float
    origin_plus: float        # u_pm at (0, 0); recorded, not enforced
    origin_minus: float
    passed: bool


@dataclass(frozen=True)
class ResidualRecord:
    min_plus: float           # min over checkable nodes of (Delta_g - d_t) u + 1
    min_minus: float
    weak_min_plus: float      # min bump pairing, normalized by the bump mass
    weak_min_minus: float
    checkable_plus: int
    checkable_minus: int
    slack: float
    passed: bool


def _sample_on_grid(phase, grid):
    pts = grid.points()
    frames = [np.asarray(phase.value(pts, t), dtype=float).reshape(grid.shape())
              for t in grid.times]
    return np.stack(frames)


def pair_validity_check(pair, grid, tol=1e-10):
    """max u_+ u_- <= tol * scale^2 and min u_pm >= -tol * max(1, scale)."""
    up = _sample_on_grid(pair.plus, grid)
    um = _sample_on_grid(pair.minus, grid)
    scale = max(float(np.max(np.abs(up))), float(np.max(np.abs(um))), 0.0)
    product_max = float(np.max(up * um))
    min_plus = float(np.min(up))
    min_minus = float(np.min(um))
    origin = np.zeros((1, grid.dim))
    rec = ValidityRecord(
        product_max=product_max,
        min_plus=min_plus,
        min_minus=min_minus,
        scale=scale,
        origin_plus=float(pair.plus.value(origin, 0.0)[0]),
        origin_minus=float(pair.minus.value(origin, 0.0)[0]),
        passed=(product_max <= tol * max(scale, 1e-300) ** 2
                and min_plus >= -tol * max(1.0, scale)
                and min_minus >= -tol * max(1.0, scale)),
    )
    pair.admissibility["validity"] = rec
    return rec


def _bump_battery(chart, grid):
    """Deterministic nonnegative C^2 bumps compactly supported inside Q."""
    n = chart.dim
    L = grid.half_width
    T = -float(grid.times[0])
    centers = [np.zeros(n)]
    for d in range(n):
        for s in (-1.0, 1.0):
            c = np.zeros(n)
            c[d] = 0.35 * L * s
            centers.append(c)
    widths = [0.3 * L, 0.5 * L]
    t_centers = [-0.65 * T, -0.35 * T]
    t_width = 0.25 * T
    battery = []
    for c in centers:
        for w in widths:
            if np.linalg.norm(c) + w >= 0.95 * L:
                continue
            for tc in t_centers:
                battery.append((c, w, tc, t_width))
    return battery


def _bump_fields(chart, X, c, w):
    """(psi, Delta_g psi) for psi = max(0, 1 - |x-c|^2/w^2)^3."""
    X = np.atleast_2d(X)
    D = X - c
    q = np.sum(D * D, axis=1) / w ** 2
    base = np.maximum(0.0, 1.0 - q)
    psi = base ** 3
    # grad psi = -6/w^2 base^2 D ; hess = 24/w^4 base D D^T - 6/w^2 base^2 I
    g_inv, _ = geometry.inverse_metric_and_density(chart, X)
    drift = geometry.divergence_drift(chart, X)
    grad = (-6.0 / w ** 2) * base[:, None] ** 2 * D
    hess = ((24.0 / w ** 4) * base[:, None, None] * (D[:, :, None] * D[:, None, :])
            + (-6.0 / w ** 2) * (base ** 2)[:, None, None] * np.eye(chart.dim))
    lap = np.einsum("mij,mij->m", g_inv, hess) + np.einsum("mj,mj->m", drift, grad)
    return psi, lap


def _weak_pairings(u_frames, chart, grid, battery):
    """min over bumps of (iint u (Delta_g psi + d_t psi) + iint psi) / iint psi."""
    pts = grid.points()
    _, dens = geometry.inverse_metric_and_density(chart, pts)
    cell = grid.h ** grid.dim
    times = grid.times
    tw = np.zeros(len(times))
    tw[1:] += 0.5 * np.diff(times)
    tw[:-1] += 0.5 * np.diff(times)
    u_flat = u_frames.reshape(len(times), -1)
    worst = np.inf
    for (c, w, tc, tww) in battery:
        psi_x, lap_x = _bump_fields(chart, pts, c, w)
        tau = (times - tc) / tww
        base_t = np.maximum(0.0, 1.0 - tau ** 2)
        psi_t = base_t ** 3
        dpsi_t = -6.0 * tau / tww * base_t ** 2
        mass = float(np.sum(tw * psi_t) * np.dot(psi_x, dens) * cell)
        if mass <= 0:
            continue
        total = 0.0
        for m, t in enumerate(times):
            integrand = u_flat[m] * (lap_x * psi_t[m] + psi_x * dpsi_t[m]) + psi_x * psi_t[m]
            total += tw[m] * float(np.dot(integrand, dens)) * cell
        worst = min(worst, total / mass)
    return worst


def supercaloric_residual_check(pair, chart, grid, tol=1e-8, slack_coeff=1.0,
                                weak_form=True):
    """Certificate for (Delta_g - d_t) u_pm >= -1.

    Pointwise: min over checkable space-time nodes of the discrete residual
    plus one; pass needs min >= -tol - slack_coeff * sqrt(h).  Weak form: the
    minimum normalized bump pairing must clear the same threshold.
    """
    L, act = assemble_laplacian(chart, grid)
    slack = slack_coeff * np.sqrt(grid.h)
    battery = _bump_battery(chart, grid) if weak_form else []
    results = {}
    for sign, phase, other in (("plus", pair.plus, pair.minus),
                               ("minus", pair.minus, pair.plus)):
        u = _sample_on_grid(phase, grid)
        v = _sample_on_grid(other, grid)
        pos_tol = 1e-12 * max(1.0, float(np.max(np.abs(v))))
        times = grid.times
        worst = np.inf
        checkable_total = 0
        for m in range(1, len(times)):
            dt = times[m] - times[m - 1]
            clean = ~ndi.binary_dilation(v[m] > pos_tol,
                                         structure=np.ones((3,) * grid.dim, dtype=bool))
            mask = clean.ravel() & act
            count = int(np.count_nonzero(mask))
            if count == 0:
                continue
            checkable_total += count
            lap = L @ u[m].ravel()
            resid = lap - (u[m].ravel() - u[m - 1].ravel()) / dt + 1.0
            worst = min(worst, float(np.min(resid[mask])))
        weak = _weak_pairings(u, chart, grid, battery) if weak_form else np.nan
        results[sign] = (worst, weak, checkable_total)

    wp, wkp, cp = results["plus"]
    wm, wkm, cm = results["minus"]
    ok = (wp >= -tol - slack and wm >= -tol - slack)
    if weak_form:
        ok = ok and wkp >= -tol - slack and wkm >= -tol - slack
    rec = ResidualRecord(min_plus=wp, min_minus=wm, weak_min_plus=wkp,
                         weak_min_minus=wkm, checkable_plus=cp,
                         checkable_minus=cm, slack=slack, passed=bool(ok))
    pair.admissibility["residual"] = rec
    return rec
