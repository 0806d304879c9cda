import numpy as np
import pytest

from monolab import cutoff, geometry, kernels, quadrature
from monolab import functional as fn
from monolab.solutions import make_family


@pytest.fixture(scope="session")
def euclid2():
    return geometry.euclidean_chart(2)


@pytest.fixture(scope="session")
def sphere2():
    return geometry.constant_curvature_chart(2, 1.0, radius=1.0)


@pytest.fixture(scope="session")
def perturbed2():
    return geometry.perturbed_chart(2, 0.05)


@pytest.fixture(scope="session")
def quad2():
    return quadrature.default_config(2)


@pytest.fixture(scope="session")
def lean_quad2():
    # light config for unit tests that only need ~0.5% accuracy
    return quadrature.default_config(2, nodes=48, slices_per_scale=16,
                                     time_blocks=12)


def build_input(chart, pair_name, pair_params=None, kind="gauss", cfg=None):
    pair = make_family(pair_name, pair_params or {}, chart=chart)
    return fn.MonotonicityInput(
        chart=chart,
        pair=pair,
        profile=cutoff.build_cutoff(chart),
        kernel=kernels.KernelSpec(kind, chart),
        quad=cfg or quadrature.default_config(chart.dim),
    )


@pytest.fixture(scope="session")
def caloric_input(euclid2, quad2):
    return build_input(euclid2, "TwoPlaneCaloric", {"alpha": 1.0, "beta": 1.0},
                       cfg=quad2)


@pytest.fixture(scope="session")
def caloric_ladder(caloric_input):
    """Shared default-quadrature ladder for acceptance criteria 1 and 2."""
    import time

    t0 = time.time()
    ladder = fn.dyadic_ladder(caloric_input, 2, 5, c0=10.0, c1=1.0)
    return ladder, time.time() - t0
