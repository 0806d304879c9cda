"""Reduction of curved slice measures to Gauss measure, and the Gaussian
functional inequalities.

Two maps do the reduction at a fixed slice s of the parabolic rescaling at
scale r.  The first integrates the metric square root along rays,
y(x) = int_0^1 g^{1/2}(tx) x dt; for exact normal-coordinate metrics the Gauss
lemma makes this the identity, and its promised conclusions (Jacobian
1 + O(r^2 |y|^2), Euclidean gradient norms up to O(r^2 |x|^2)) are what the
tests pin down.  The remaining density deviation A(y) (volume density and, for
the order-zero kernel, its -1/4 power) is absorbed by the radial map
z -> z + psi(z) solving z . psi = v ln(1 + A) outside the unit ball (v the
Gauss variance of the slice; v = 1 is the unit-variance calibration), blended to zero
inside by a quintic profile, so |psi| and |D psi| stay O(r^2).

The inequality layer: Rayleigh quotients, the logarithmic Poincare check, the
disjoint-support two-phase lower bound (quotients summing to at least 1), and
its curved-chart version with the r^2 deficit ladder.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import functional, geometry, kernels, quadrature
from .cutoff import smoothstep
from .errors import DegenerateInputError, DomainError, PreconditionError

__all__ = [
    "GaussMeasure",
    "GaussField",
    "TransformPair",
    "gauss_density",
    "gauss_integral",
    "rayleigh_quotient",
    "gaussian_poincare_check",
    "bkp_sum",
    "first_transform",
    "second_transform",
    "pushforward_deviation",
    "pushforward_ladder",
    "manifold_bkp_deficit",
    "bkp_deficit_ladder",
    "half_plane_field",
]


@dataclass(frozen=True)
class GaussMeasure:
    dim: int
    variance: float

    def __post_init__(self):
        if self.variance <= 0:
            raise ValueError("variance must be positive")


@dataclass(eq=False)
class GaussField:
    value: Callable            # X (m,n) -> (m,)
    grad: Callable             # X (m,n) -> (m,n)


def half_plane_field(n, sign=+1, power=1.0, axis=0):
    """((x.e)_pm)^power with its gradient; the workhorse test field."""
    def value(X):
        X = np.atleast_2d(X)
        d = sign * X[:, axis]
        return np.maximum(d, 0.0) ** power

    def grad(X):
        X = np.atleast_2d(X)
        d = sign * X[:, axis]
        out = np.zeros_like(X)
        out[:, axis] = np.where(d > 0, power * np.maximum(d, 0.0) ** (power - 1.0) * sign, 0.0)
        return out

    return GaussField(value=value, grad=grad)


def gauss_density(measure, X):
    X = np.atleast_2d(X)
    v = measure.variance
    return ((2.0 * np.pi * v) ** (-measure.dim / 2.0)
            * np.exp(-np.sum(X * X, axis=1) / (2.0 * v)))


def gauss_integral(f, measure, cfg=None):
    # r_tail 9 puts the truncated tail below 1e-8 even at unit variance
    cfg = cfg or quadrature.default_config(measure.dim, r_tail=9.0)
    fn = f.value if isinstance(f, GaussField) else f
    return quadrature.gauss_weighted_integral(fn, measure.dim, measure.variance, cfg)


def rayleigh_quotient(f, measure, cfg=None):
    """int |grad f|^2 dnu / int f^2 dnu; invariant under positive scaling."""
    num = gauss_integral(lambda X: np.sum(np.asarray(f.grad(X)) ** 2, axis=1),
                         measure, cfg)
    den = gauss_integral(lambda X: np.asarray(f.value(X)) ** 2, measure, cfg)
    if den <= 0:
        raise DegenerateInputError("zero-mass field in a Rayleigh quotient")
    return num / den


def gaussian_poincare_check(f, measure, cfg=None, tol=1e-8):
    """log(1/|f|_nu) int f^2 dnu <= 2 int |grad f|^2 dnu, with |f|_nu = int f dnu.

    Inputs outside the hypothesis class (|f|_nu not in (0,1), or vanishing
    gradient, e.g. constants) are flagged, not judged.
    """
    fnu = gauss_integral(lambda X: np.asarray(f.value(X)), measure, cfg)
    l2 = gauss_integral(lambda X: np.asarray(f.value(X)) ** 2, measure, cfg)
    if fnu <= 0 or l2 <= 0:
        raise DegenerateInputError("field must have positive mass")
    grad2 = gauss_integral(lambda X: np.sum(np.asarray(f.grad(X)) ** 2, axis=1),
                           measure, cfg)
    hypothesis_ok = bool(fnu < 1.0 and grad2 > tol * l2)
    lhs = np.log(1.0 / fnu) * l2
    rhs = 2.0 * grad2
    return {
        "f_nu": fnu,
        "l2": l2,
        "lhs": lhs,
        "rhs": rhs,
        "margin": rhs - lhs,
        "hypothesis_ok": hypothesis_ok,
        "passed": bool(lhs <= rhs + tol) if hypothesis_ok else None,
    }


def bkp_sum(f_plus, f_minus, measure, cfg=None, tol=1e-3, n_check=2000,
            seed=20240119):
    """Sum of the two Rayleigh quotients for disjointly supported phases."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n_check, measure.dim)) * np.sqrt(measure.variance)
    vp = np.asarray(f_plus.value(X))
    vm = np.asarray(f_minus.value(X))
    scale = max(float(np.max(np.abs(vp))), float(np.max(np.abs(vm))), 1e-300)
    if float(np.max(vp * vm)) > 1e-10 * scale ** 2:
        raise PreconditionError("phases overlap: f_+ f_- > 0 on samples")
    lam_p = rayleigh_quotient(f_plus, measure, cfg)
    lam_m = rayleigh_quotient(f_minus, measure, cfg)
    s = lam_p + lam_m
    return {
        "lambda_plus": lam_p,
        "lambda_minus": lam_m,
        "sum": s,
        "deficit": s - 1.0,
        "passed": bool(s - 1.0 >= -tol),
    }


# ---------------------------------------------------------------------------
# the two reduction transforms


class RayTransform:
    """y(x) = int_0^1 g^{1/2}(tx) x dt on a (rescaled) chart."""

    def __init__(self, chart, n_nodes=16):
        self.chart = chart
        nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
        self.t_nodes = 0.5 * (nodes + 1.0)
        self.t_weights = 0.5 * weights

    def forward(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros_like(X)
        for t, w in zip(self.t_nodes, self.t_weights):
            g = geometry.metric_fields(self.chart, t * X, 0)["g"]
            vals, vecs = np.linalg.eigh(g)
            if np.any(vals <= 0):
                raise DomainError("metric not SPD along a ray")
            root = np.einsum("mik,mk,mjk->mij", vecs, np.sqrt(vals), vecs)
            out += w * np.einsum("mij,mj->mi", root, X)
        return out

    def jacobian_det(self, X, step=1e-3):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n = X.shape[1]
        J = np.empty((X.shape[0], n, n))
        for d in range(n):
            e = np.zeros(n)
            e[d] = step
            J[:, :, d] = (self.forward(X + e) - self.forward(X - e)) / (2.0 * step)
        return np.linalg.det(J), J

    def inverse(self, Y, n_iter=6, tol=1e-12):
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        X = Y.copy()
        for _ in range(n_iter):
            res = self.forward(X) - Y
            if float(np.max(np.abs(res))) < tol:
                break
            _, J = self.jacobian_det(X)
            X = X - np.linalg.solve(J, res[..., None])[..., 0]
        return X


class PsiMap:
    """z -> z + psi(z) with z . psi = variance * ln(1 + A(z)) outside B_1."""

    def __init__(self, a_field, r, variance=1.0, blend_start=0.5):
        self.a_field = a_field
        self.r = float(r)
        self.variance = float(variance)
        self.blend_start = float(blend_start)

    def psi(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        rho = np.sqrt(np.sum(Z * Z, axis=1))
        a = np.asarray(self.a_field(Z), dtype=float)
        if np.any(a <= -1.0):
            raise DomainError("density deviation A <= -1: log undefined")
        blend = smoothstep((rho - self.blend_start) / (1.0 - self.blend_start))
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.where(rho > self.blend_start,
                            self.variance * np.log1p(a) / np.maximum(rho, 1e-300) ** 2,
                            0.0)
        return (blend * coef)[:, None] * Z

    def forward(self, Z):
        return np.atleast_2d(Z) + self.psi(Z)

    def jacobian_det(self, Z, step=1e-2):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        n = Z.shape[1]
        J = np.empty((Z.shape[0], n, n))
        for d in range(n):
            e = np.zeros(n)
            e[d] = step
            J[:, :, d] = (self.forward(Z + e) - self.forward(Z - e)) / (2.0 * step)
        return np.linalg.det(J)


@dataclass(eq=False)
class TransformPair:
    ray: RayTransform
    psi_map: PsiMap
    scale: float
    a_field: Callable
    variance: float


def first_transform(chart, r, n_nodes=16):
    """Ray-integrated square-root map on the rescaled chart g(r .)."""
    if r > chart.radius / 4.0 + 1e-12:
        raise ValueError("first transform expects r <= radius/4")
    return RayTransform(geometry.rescale_chart(chart, r), n_nodes=n_nodes)


def second_transform(a_field, r, variance=1.0, blend_start=0.5):
    return PsiMap(a_field, r, variance=variance, blend_start=blend_start)


def _slice_variance(s):
    if s not in (-0.5, -1.0):
        raise ValueError("pushforward slices are s = -1/2 or s = -1")
    return 2.0 * (-s)


def pushforward_deviation(chart, r, kernel_kind="parametrix0", s=-0.5, cfg=None,
                          sample_radius=4.0, sample_axis=17):
    """Compose both transforms at slice s and measure how far the pushforward
    density sits from the Gauss density; returns the record and the maps."""
    cfg = cfg or quadrature.default_config(chart.dim)
    n = chart.dim
    v = _slice_variance(s)
    t = -s
    chart_r = geometry.rescale_chart(chart, r)
    kern = kernels.KernelSpec(kernel_kind, chart_r)
    ray = RayTransform(chart_r)
    measure = GaussMeasure(n, v)

    def density_after_ray(Y):
        X = ray.inverse(Y)
        jac, _ = ray.jacobian_det(X)
        kv = kernels.kernel_values(kern, X, t)
        _, dens = geometry.inverse_metric_and_density(chart_r, X)
        return kv * dens / jac

    def a_field(Y):
        return density_after_ray(Y) / gauss_density(measure, Y) - 1.0

    psi_map = PsiMap(a_field, r, variance=v)

    def pushforward_density(Z):
        Y = psi_map.forward(Z)
        return density_after_ray(Y) * psi_map.jacobian_det(Z)

    ax = np.linspace(-sample_radius, sample_radius, sample_axis)
    grids = np.meshgrid(*([ax] * n), indexing="ij")
    Z = np.stack([g.ravel() for g in grids], axis=1)
    dev = pushforward_density(Z) / gauss_density(measure, Z) - 1.0
    mass = quadrature.gauss_weighted_integral(
        lambda W: pushforward_density(W) / gauss_density(measure, W), n, v, cfg)
    record = {
        "r": r,
        "s": s,
        "variance": v,
        "sup_deviation": float(np.max(np.abs(dev))),
        "mass": mass,
        "mass_defect": abs(mass - 1.0),
    }
    return record, TransformPair(ray=ray, psi_map=psi_map, scale=r,
                                 a_field=a_field, variance=v)


def pushforward_ladder(chart, rs, kernel_kind="parametrix0", s=-0.5, cfg=None):
    recs = [pushforward_deviation(chart, r, kernel_kind, s, cfg)[0] for r in rs]
    sups = [rec["sup_deviation"] for rec in recs]
    defects = [rec["mass_defect"] for rec in recs]
    fitted_mass_const = max((d / r ** 2 for r, d in zip(rs, defects)), default=np.nan)
    return {
        "rs": list(rs),
        "records": recs,
        "sup_slope": functional.fit_log_slope(rs, sups, floor=1e-12),
        "mass_defect_slope": functional.fit_log_slope(rs, defects, floor=1e-12),
        "fitted_mass_constant": float(fitted_mass_const),
    }


# ---------------------------------------------------------------------------
# curved-chart two-phase lower bound


def manifold_bkp_deficit(input_, r, cfg=None):
    """Rayleigh quotients of the rescaled truncated phases on the s = -1 slice
    under the rescaled kernel measure; their sum against 1."""
    rin = functional.rescaled_input(input_, r)
    cfg = cfg or rin.quad
    out = {}
    for sign, name in ((+1, "plus"), (-1, "minus")):
        num = functional.boundary_energy(rin, 1.0, sign, cfg)
        den = functional.slice_mass(rin, -1.0, sign, cfg)
        if den <= 0:
            raise DegenerateInputError(
                f"phase {name} vanishes on the s = -1 slice (its energy is "
                "then bounded and the dichotomy is moot)")
        out[name] = num / den
    s = out["plus"] + out["minus"]
    return {
        "r": r,
        "lambda_plus": out["plus"],
        "lambda_minus": out["minus"],
        "sum": s,
        "deficit": s - 1.0,
        "negative_part": max(0.0, 1.0 - s),
        "lower_bound_constant": (1.0 - s) / r ** 2,
    }


def bkp_deficit_ladder(input_, rs, cfg=None, noise_floor=1e-10):
    recs = [manifold_bkp_deficit(input_, r, cfg) for r in rs]
    devs = [abs(rec["deficit"]) for rec in recs]
    negs = [rec["negative_part"] for rec in recs]
    return {
        "rs": list(rs),
        "records": recs,
        "deviation_slope": functional.fit_log_slope(rs, devs, floor=noise_floor),
        "negative_part_slope": functional.fit_log_slope(rs, negs, floor=noise_floor),
        "all_nonnegative": bool(max(negs) <= noise_floor),
        "max_negative_part": float(max(negs)),
        "fitted_lower_bound_constant": float(max(
            (rec["negative_part"] / rec["r"] ** 2 for rec in recs))),
    }
