import time

import numpy as np
import pytest

from star_sl.fixtures import make_fixture


@pytest.fixture(scope="session")
def generic_fixture():
    """m=5, p=2 star with random sigma_1, sigma_3 and fixed small known edges."""
    t0 = time.perf_counter()
    fx = make_fixture(m=5, p=2, amplitude=0.3, n_max=30, seed=0)
    fx.build_seconds = time.perf_counter() - t0
    return fx


@pytest.fixture(scope="session")
def generic_reconstruction(generic_fixture):
    from star_sl.pipeline import run_full_reconstruction

    fx = generic_fixture
    t0 = time.perf_counter()
    report = run_full_reconstruction(fx.m, fx.p, fx.known(), fx.specL, fx.specL0,
                                     truth=(fx.sigma1, fx.sigma_p1))
    report.seconds = time.perf_counter() - t0
    return report


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
