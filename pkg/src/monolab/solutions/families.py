"""Admissible two-phase pairs: analytic families and evolved grid pairs.

Every phase exposes vectorized ``value(X, s)`` and ``grad(X, s)`` samplers.
Families (direction e defaults to the first axis):

* Null                  (0, 0)
* TwoPlaneCaloric       (alpha (x.e)_+, beta (x.e)_-), caloric on flat charts
* PowerWedge            (((x.e)_+)^(1+beta), ((x.e)_-)^(1+beta)), beta in (0,1]
* DriftTwoPlane         ((x.e)_+ (1+ct), (x.e)_- (1+ct)), c in [0, 1/2];
                        the residual is -c (x.e)_pm, genuinely negative
* NumericPair           two heat evolutions on complementary half-cubes with
                        zero interface values and a bounded-below source
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grids import GridPhaseSampler
from .solver import solve_heat

__all__ = ["Phase", "TwoPhasePair", "make_family", "rescale_pair", "FAMILY_NAMES"]

FAMILY_NAMES = ("Null", "TwoPlaneCaloric", "PowerWedge", "DriftTwoPlane", "NumericPair")


@dataclass(eq=False)
class Phase:
    value: Callable          # (X (m,n), s) -> (m,)
    grad: Callable           # (X (m,n), s) -> (m,n)


@dataclass(eq=False)
class TwoPhasePair:
    plus: Phase
    minus: Phase
    family: str
    params: dict = field(default_factory=dict)
    admissibility: dict = field(default_factory=dict)


def _unit_direction(n, params):
    e = np.asarray(params.get("direction", np.eye(n)[0]), dtype=float)
    if e.shape != (n,) or not np.linalg.norm(e) > 0:
        raise ValueError("direction must be a nonzero vector of the chart dimension")
    return e / np.linalg.norm(e)


def _null_phase(n):
    return Phase(value=lambda X, s: np.zeros(np.atleast_2d(X).shape[0]),
                 grad=lambda X, s: np.zeros(np.atleast_2d(X).shape))


def _plane_phase(e, amp, sign, power=1.0, drift=0.0):
    def value(X, s):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        d = sign * (X @ e)
        pos = np.maximum(d, 0.0)
        return amp * pos ** power * (1.0 + drift * s)

    def grad(X, s):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        d = sign * (X @ e)
        pos = np.maximum(d, 0.0)
        slope = np.where(d > 0.0, power * pos ** (power - 1.0), 0.0)
        return (amp * (1.0 + drift * s) * slope * sign)[:, None] * e[None, :]

    return Phase(value=value, grad=grad)


def _bump(X, center, width):
    r2 = np.sum((X - center) ** 2, axis=1) / width ** 2
    return np.maximum(0.0, 1.0 - r2) ** 3


def _numeric_pair(n, params, chart, grid):
    seed = int(params.get("seed", 0))
    overlap = bool(params.get("overlap", False))
    depth = float(params.get("source_depth", 0.5))
    n_bumps = int(params.get("n_bumps", 2))
    if not 0.0 <= depth <= 1.0:
        raise ValueError("source_depth must lie in [0, 1] (keeps the residual >= -1)")
    if chart is None or grid is None:
        raise ValueError("NumericPair needs a chart and a SpaceTimeGrid")
    rng = np.random.default_rng(seed)
    pts = grid.points()
    L = grid.half_width

    def one_side(sgn):
        margin = 0.15 * L
        centers, widths, amps = [], [], []
        for _ in range(n_bumps):
            w = rng.uniform(0.12, 0.25) * L
            c = rng.uniform(-0.6 * L, 0.6 * L, size=n)
            lo = margin + w if not overlap else -0.3 * L
            c[0] = sgn * rng.uniform(lo, max(lo + 0.05 * L, 0.65 * L - w))
            centers.append(c)
            widths.append(w)
            amps.append(rng.uniform(0.5, 1.0))
        src_amp = depth * rng.uniform(0.5, 1.0)
        src_c = np.array(centers[0])
        src_w = widths[0] * 1.5

        def initial(X):
            out = np.zeros(np.atleast_2d(X).shape[0])
            for c, w, a in zip(centers, widths, amps):
                out += a * _bump(np.atleast_2d(X), c, w)
            return out

        def source(X, t):
            return -src_amp * _bump(np.atleast_2d(X), src_c, src_w)

        side = pts[:, 0] * sgn
        active = side > 1e-12 if not overlap else np.ones(len(pts), dtype=bool)
        zero = lambda X, t: np.zeros(np.atleast_2d(X).shape[0])
        gf = solve_heat(chart, source, initial, zero, grid,
                        active=active.reshape(grid.shape()).ravel())
        return gf

    gf_plus = one_side(+1)
    gf_minus = one_side(-1)
    sp_plus = GridPhaseSampler(gf_plus, other=gf_minus)
    sp_minus = GridPhaseSampler(gf_minus, other=gf_plus)
    return (Phase(value=sp_plus.value, grad=sp_plus.grad),
            Phase(value=sp_minus.value, grad=sp_minus.grad),
            {"grid_plus": gf_plus, "grid_minus": gf_minus})


def make_family(name, params=None, chart=None, grid=None):
    """Build an admissible two-phase pair; unknown names or bad parameters raise."""
    params = dict(params or {})
    n = chart.dim if chart is not None else int(params.get("dim", 2))
    if name == "Null":
        return TwoPhasePair(plus=_null_phase(n), minus=_null_phase(n),
                            family=name, params=params)
    if name == "TwoPlaneCaloric":
        alpha = float(params.get("alpha", 1.0))
        beta = float(params.get("beta", 1.0))
        if alpha < 0 or beta < 0:
            raise ValueError("plane slopes must be nonnegative")
        e = _unit_direction(n, params)
        return TwoPhasePair(plus=_plane_phase(e, alpha, +1.0),
                            minus=_plane_phase(e, beta, -1.0),
                            family=name, params=params)
    if name == "PowerWedge":
        beta = float(params.get("beta", 0.5))
        if not 0.0 < beta <= 1.0:
            raise ValueError("wedge exponent beta must lie in (0, 1]")
        e = _unit_direction(n, params)
        p = 1.0 + beta
        return TwoPhasePair(plus=_plane_phase(e, 1.0, +1.0, power=p),
                            minus=_plane_phase(e, 1.0, -1.0, power=p),
                            family=name, params=params)
    if name == "DriftTwoPlane":
        c = float(params.get("c", 0.5))
        if not 0.0 <= c <= 0.5:
            raise ValueError("drift coefficient must lie in [0, 1/2] "
                             "(residual -c (x.e)_pm must stay >= -1 on the chart)")
        e = _unit_direction(n, params)
        return TwoPhasePair(plus=_plane_phase(e, 1.0, +1.0, drift=c),
                            minus=_plane_phase(e, 1.0, -1.0, drift=c),
                            family=name, params=params)
    if name == "NumericPair":
        plus, minus, extra = _numeric_pair(n, params, chart, grid)
        pair = TwoPhasePair(plus=plus, minus=minus, family=name, params=params)
        pair.admissibility.update(extra)
        return pair
    raise ValueError(f"unknown two-phase family {name!r}; known: {FAMILY_NAMES}")


def rescale_pair(pair, r):
    """Parabolic rescale u(y, s) -> u(r y, r^2 s) / r^2 (preserves the -1 bound)."""
    if not r > 0:
        raise ValueError("rescale factor must be positive")
    r = float(r)

    def scaled(phase):
        def value(X, s):
            return phase.value(r * np.atleast_2d(X), r * r * s) / (r * r)

        def grad(X, s):
            return phase.grad(r * np.atleast_2d(X), r * r * s) / r

        return Phase(value=value, grad=grad)

    return TwoPhasePair(plus=scaled(pair.plus), minus=scaled(pair.minus),
                        family=pair.family,
                        params={**pair.params, "rescaled_by": r})
