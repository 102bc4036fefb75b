"""Tracing-attack statistic and the membership harness."""

import numpy as np
import pytest

from dp_relu.attack import attack_statistic, attack_statistics, membership_experiment
from dp_relu.trainers import TrainerConfig, run_glmtron

from conftest import make_ground_truth


class TestStatistic:
    def test_zero_when_models_agree(self):
        w = np.array([1.0, 2.0])
        assert attack_statistic(w, w, np.array([3.0, 1.0]), 5.0) == 0.0

    def test_hand_computed(self):
        # residual 1, gate 1, <(0.5, 0.5), (2, 1)> = 1.5
        val = attack_statistic(
            np.array([1.0, 0.0]), np.array([1.5, 0.5]), np.array([2.0, 1.0]), 3.0
        )
        assert val == pytest.approx(1.5)

    def test_gated_to_zero(self):
        val = attack_statistic(
            np.array([-1.0, 0.0]), np.array([0.5, 0.5]), np.array([2.0, 1.0]), 3.0
        )
        assert val == 0.0

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(0)
        w_ref, m_out = rng.standard_normal(3), rng.standard_normal(3)
        X, Y = rng.standard_normal((10, 3)), rng.standard_normal(10)
        batch = attack_statistics(w_ref, m_out, X, Y)
        singles = [attack_statistic(w_ref, m_out, X[i], Y[i]) for i in range(10)]
        np.testing.assert_allclose(batch, singles)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            attack_statistics(np.zeros(2), np.zeros(3), np.zeros((4, 2)), np.zeros(4))


class TestMembershipExperiment:
    def test_identity_mechanism_all_zero(self):
        gt = make_ground_truth(5, 1.0)
        rep = membership_experiment(lambda data, s: gt.w_star, gt, 50, 100, 3, seed=0)
        assert rep.in_mean == 0.0
        assert rep.out_mean == 0.0
        assert rep.in_sum == 0.0
        assert rep.separation_z == 0.0

    def test_counts(self):
        gt = make_ground_truth(4, 1.0)
        rep = membership_experiment(lambda data, s: gt.w_star + 0.1, gt, 30, 70, 4, seed=1)
        assert rep.n_in == 120 and rep.n_out == 280

    def test_glmtron_leaks_and_fresh_pairs_do_not(self):
        gt = make_ground_truth(10, 1.0)

        def trainer(data, s):
            return run_glmtron(data, TrainerConfig(eta=0.02, epochs=40, seed=s)).final_average

        rep = membership_experiment(trainer, gt, 100, 400, 8, seed=7)
        assert abs(rep.out_mean) <= 3 * rep.out_se
        assert rep.in_sum > 0.0
        assert rep.separation_z > 3.0

    def test_leakage_grows_with_dimension(self):
        sums = []
        for d in (5, 10, 20, 40):
            gt = make_ground_truth(d, 1.0, gt_seed=1)

            def trainer(data, s):
                return run_glmtron(data, TrainerConfig(eta=0.02, epochs=40, seed=s)).final_average

            rep = membership_experiment(trainer, gt, 10 * d, 200, 20, seed=99)
            sums.append(rep.in_sum)
        assert all(a < b for a, b in zip(sums, sums[1:]))

    def test_requires_trials(self):
        gt = make_ground_truth(3, 1.0)
        with pytest.raises(ValueError):
            membership_experiment(lambda d, s: gt.w_star, gt, 10, 10, 0, seed=0)

    def test_deterministic(self):
        gt = make_ground_truth(4, 1.0)

        def trainer(data, s):
            return run_glmtron(data, TrainerConfig(eta=0.05, seed=s)).final_average

        a = membership_experiment(trainer, gt, 40, 60, 3, seed=5)
        b = membership_experiment(trainer, gt, 40, 60, 3, seed=5)
        assert a == b
