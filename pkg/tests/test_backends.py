"""Numba and numpy kernel backends must agree."""

import numpy as np
import pytest

import dp_relu
from dp_relu._backend import available_backends
from dp_relu.datagen import generate_dataset
from dp_relu.privacy import PrivacyParams
from dp_relu.threshold import ThresholdParams
from dp_relu.trainers import TrainerConfig, run_dp_glmtron, run_dp_mbglmtron, run_glmtron

from conftest import make_ground_truth

needs_numba = pytest.mark.skipif(
    "numba" not in available_backends(), reason="numba not installed"
)


@pytest.fixture()
def restore_backend():
    previous = dp_relu.backend_name()
    yield
    dp_relu.set_backend(previous)


class TestSelection:
    def test_set_and_report(self, restore_backend):
        dp_relu.set_backend("numpy")
        assert dp_relu.backend_name() == "numpy"

    def test_rejects_unknown(self):
        with pytest.raises(ValueError):
            dp_relu.set_backend("fortran")

    def test_env_var(self, restore_backend, monkeypatch):
        import dp_relu._backend as backend

        monkeypatch.setenv("DP_RELU_BACKEND", "numpy")
        backend._active = None
        assert dp_relu.backend_name() == "numpy"
        backend._active = None
        monkeypatch.delenv("DP_RELU_BACKEND")


@needs_numba
class TestAgreement:
    def run_all(self, backend):
        dp_relu.set_backend(backend)
        gt = make_ground_truth(5, 0.4)
        data = generate_dataset(gt, 400, seed=1)
        pub = generate_dataset(gt, 32, seed=2)
        th = ThresholdParams(upsilon=16.0, delta_grid=0.25)
        out = {}
        out["glm"] = run_glmtron(data, TrainerConfig(eta=0.01, seed=3)).iterates
        priv = PrivacyParams.shuffle(0.05, 1e-5, 400)
        tr = run_dp_glmtron(data, pub, TrainerConfig(eta=0.01, seed=3, threshold=th), priv)
        out["dp_glm"] = tr.iterates
        out["dp_glm_s"] = tr.thresholds
        privz = PrivacyParams.zcdp(0.5, 1e-5)
        cfg = TrainerConfig(eta=0.2, seed=3, batch_b=60, estimating_m=20, threshold=th)
        tr = run_dp_mbglmtron(data, cfg, privz)
        out["mb"] = tr.iterates
        out["mb_gamma"] = tr.gammas
        return out

    def test_paths_agree(self, restore_backend):
        a = self.run_all("numba")
        b = self.run_all("numpy")
        for key in a:
            np.testing.assert_allclose(a[key], b[key], rtol=1e-9, atol=1e-12, err_msg=key)

    def test_grid_choices_identical(self, restore_backend):
        a = self.run_all("numba")
        b = self.run_all("numpy")
        np.testing.assert_array_equal(a["dp_glm_s"], b["dp_glm_s"])
        np.testing.assert_array_equal(a["mb_gamma"], b["mb_gamma"])
