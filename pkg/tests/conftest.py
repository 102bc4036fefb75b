import numpy as np
import pytest

import dp_relu
from dp_relu.datagen import CovarianceSpec, GroundTruth
from dp_relu.datagen import sample_w_star


@pytest.fixture(scope="session", autouse=True)
def _warm_backend():
    """Compile jitted kernels once so per-test timings exclude the JIT."""
    dp_relu.warmup()


@pytest.fixture()
def numpy_backend():
    """Force the pure-numpy kernels for bit-exactness checks."""
    previous = dp_relu.backend_name()
    dp_relu.set_backend("numpy")
    yield
    dp_relu.set_backend(previous)


def make_ground_truth(d, sigma, gt_seed=0, design="gaussian", cov=None):
    rng = np.random.default_rng(np.random.SeedSequence(gt_seed))
    cov = cov or CovarianceSpec.identity(d)
    return GroundTruth(w_star=sample_w_star(d, 1.0, rng), sigma=sigma, cov=cov, design=design)
