"""Space-time grids and grid-backed field samplers.

The spatial grid is uniform on the cube [-L, L]^n with a node at the origin.
The time mesh lives on (-T, 0] and, for the geometric constructor, marches
from -T toward 0 with steps shrinking by a fixed ratio (coarsest step first),
the final step snapped to land exactly on 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["SpaceTimeGrid", "GridFunction", "GridPhaseSampler"]


@dataclass(frozen=True, eq=False)
class SpaceTimeGrid:
    dim: int
    half_width: float            # L; cube is [-L, L]^n
    h: float                     # actual spatial step (2L / (nodes - 1))
    times: np.ndarray            # strictly increasing, last element exactly 0
    ratio: float | None = None   # geometric grading ratio, if built that way

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or len(t) < 2:
            raise ValueError("need at least two time nodes")
        if np.any(np.diff(t) <= 0):
            raise ValueError("time nodes must be strictly increasing")
        if t[-1] != 0.0:
            raise ValueError("time mesh must end exactly at 0")
        object.__setattr__(self, "times", t)

    @classmethod
    def geometric(cls, dim, half_width, h, ratio, dt0, depth=None):
        """Mesh on (-T, 0] with steps dt0, dt0*ratio, ... snapped onto 0.

        T defaults to half_width^2 (the parabolic scaling of the cube).
        Requires dt0 > T (1 - ratio) so the geometric sum reaches 0.
        """
        if not 0.0 < ratio < 1.0:
            raise ValueError("grading ratio must lie in (0, 1)")
        T = half_width ** 2 if depth is None else float(depth)
        if dt0 <= T * (1.0 - ratio):
            raise ValueError("coarsest step too small: geometric steps never reach 0")
        times = [-T]
        step = float(dt0)
        floor = 1e-9 * T
        while True:
            nxt = times[-1] + step
            if nxt > -max(step * ratio * 0.5, floor):
                break
            times.append(nxt)
            step *= ratio
        times.append(0.0)
        n_nodes = 2 * int(round(half_width / h)) + 1
        h_eff = 2.0 * half_width / (n_nodes - 1)
        return cls(dim=dim, half_width=float(half_width), h=h_eff,
                   times=np.array(times), ratio=float(ratio))

    @classmethod
    def from_times(cls, dim, half_width, h, times):
        n_nodes = 2 * int(round(half_width / h)) + 1
        h_eff = 2.0 * half_width / (n_nodes - 1)
        return cls(dim=dim, half_width=float(half_width), h=h_eff,
                   times=np.asarray(times, dtype=float))

    @property
    def n_axis(self):
        return int(round(2.0 * self.half_width / self.h)) + 1

    def axis(self):
        return np.linspace(-self.half_width, self.half_width, self.n_axis)

    def points(self):
        """All node coordinates, flattened C-order, shape (n_axis^dim, dim)."""
        ax = self.axis()
        grids = np.meshgrid(*([ax] * self.dim), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def shape(self):
        return (self.n_axis,) * self.dim


@dataclass(eq=False)
class GridFunction:
    grid: SpaceTimeGrid
    values: np.ndarray           # (n_times, n_axis, ..., n_axis)

    def __post_init__(self):
        want = (len(self.grid.times),) + self.grid.shape()
        if self.values.shape != want:
            raise ValueError(f"value array shape {self.values.shape} != {want}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function carries non-finite values")


def _multilinear(grid, frame, X):
    """Multilinear interpolation of one time frame at points X (m, n)."""
    n = grid.dim
    na = grid.n_axis
    c = (X + grid.half_width) / grid.h
    i0 = np.clip(np.floor(c).astype(int), 0, na - 2)
    frac = np.clip(c - i0, 0.0, 1.0)
    out = np.zeros(X.shape[0])
    for corner in range(2 ** n):
        idx = []
        wgt = np.ones(X.shape[0])
        for d in range(n):
            bit = (corner >> d) & 1
            idx.append(i0[:, d] + bit)
            wgt = wgt * (frac[:, d] if bit else (1.0 - frac[:, d]))
        out += wgt * frame[tuple(idx)]
    return out


class GridPhaseSampler:
    """Callable value/gradient samplers backed by a GridFunction.

    Gradients are central differences of the interpolant with the grid step;
    where the opposite phase is positive on one side, a one-sided difference
    from the clean side is used instead (interface stencils are biased).
    """

    def __init__(self, gf, other=None):
        self.gf = gf
        self.other = other
        self.pos_tol = 1e-12 * max(1.0, float(np.max(np.abs(gf.values))))

    def _frame_pair(self, s):
        t = self.gf.grid.times
        if s <= t[0]:
            return 0, 0, 0.0
        if s >= t[-1]:
            return len(t) - 1, len(t) - 1, 0.0
        j = int(np.searchsorted(t, s, side="right") - 1)
        j = min(j, len(t) - 2)
        theta = (s - t[j]) / (t[j + 1] - t[j])
        return j, j + 1, float(theta)

    def value(self, X, s):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        j0, j1, th = self._frame_pair(s)
        v0 = _multilinear(self.gf.grid, self.gf.values[j0], X)
        if j1 == j0 or th == 0.0:
            return v0
        v1 = _multilinear(self.gf.grid, self.gf.values[j1], X)
        return (1.0 - th) * v0 + th * v1

    def _other_positive(self, X, s):
        if self.other is None:
            return np.zeros(X.shape[0], dtype=bool)
        tol = 1e-12 * max(1.0, float(np.max(np.abs(self.other.values))))
        j0, j1, th = self._frame_pair(s)
        v = _multilinear(self.other.grid, self.other.values[j0], X)
        if j1 != j0 and th > 0.0:
            v = np.maximum(v, _multilinear(self.other.grid, self.other.values[j1], X))
        return v > tol

    def grad(self, X, s):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n = self.gf.grid.dim
        h = self.gf.grid.h
        out = np.empty((X.shape[0], n))
        v_c = self.value(X, s)
        for d in range(n):
            e = np.zeros(n)
            e[d] = h
            v_p = self.value(X + e, s)
            v_m = self.value(X - e, s)
            central = (v_p - v_m) / (2.0 * h)
            o_p = self._other_positive(X + e, s)
            o_m = self._other_positive(X - e, s)
            fwd = (v_p - v_c) / h
            bwd = (v_c - v_m) / h
            g = np.where(o_p & ~o_m, bwd, central)
            g = np.where(o_m & ~o_p, fwd, g)
            g = np.where(o_m & o_p, 0.0, g)
            out[:, d] = g
        return out
