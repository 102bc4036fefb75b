"""Tracing-attack statistic and the membership-inference harness.

The statistic scores a candidate example against a released model:

    T = < M(D) - w,  (y - relu(<w, x>)) x 1[<w, x> > 0] >

with w the reference (true) parameter.  For examples independent of the
training set the statistic has mean zero; for training members of an
accurate estimator the statistics are positively correlated with the
released model's deviation, so their sum grows with the dimension.  The
harness measures both effects and the gap between them as a z-score.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .datagen import GroundTruth, generate_dataset
from .model import Dataset, relu

__all__ = ["AttackReport", "attack_statistic", "attack_statistics", "membership_experiment"]

# A mechanism under attack: consumes a dataset and a seed, returns a model.
Trainer = Callable[[Dataset, int], np.ndarray]


@dataclass(frozen=True)
class AttackReport:
    in_mean: float
    out_mean: float
    in_sum: float
    out_se: float
    n_in: int
    n_out: int
    separation_z: float


def attack_statistic(w_ref: np.ndarray, m_out: np.ndarray, x: np.ndarray, y: float) -> float:
    """Tracing statistic for a single candidate example."""
    return float(attack_statistics(w_ref, m_out, np.asarray(x, float)[None, :], np.array([y]))[0])


def attack_statistics(w_ref, m_out, X, Y) -> np.ndarray:
    """Vectorized statistics for a batch of candidates."""
    w_ref = np.asarray(w_ref, dtype=np.float64)
    m_out = np.asarray(m_out, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if w_ref.shape != m_out.shape or X.shape[1] != w_ref.shape[0]:
        raise ValueError("dimension mismatch between models and candidates")
    z = X @ w_ref
    resid = np.asarray(Y, dtype=np.float64) - relu(z)
    return (X @ (m_out - w_ref)) * resid * (z > 0.0)


def membership_experiment(
    trainer: Trainer,
    gt: GroundTruth,
    n: int,
    n_fresh: int,
    trials: int,
    seed: int,
) -> AttackReport:
    """Run the tracing attack against a mechanism.

    Per trial: draw a training set of size n and n_fresh independent pairs
    from the same distribution, train, and score all members ("in") and
    all fresh pairs ("out") against the true parameter.  Fresh pairs are
    independent of the released model, which realises the replaced-example
    setting for the unbiasedness check.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    in_all, out_all, in_sums = [], [], []
    for child in np.random.SeedSequence(seed).spawn(trials):
        s_data, s_fresh, s_train = (int(c.generate_state(1)[0]) for c in child.spawn(3))
        data = generate_dataset(gt, n, s_data)
        fresh = generate_dataset(gt, n_fresh, s_fresh)
        m_out = trainer(data, s_train)
        t_in = attack_statistics(gt.w_star, m_out, data.x, data.y)
        t_out = attack_statistics(gt.w_star, m_out, fresh.x, fresh.y)
        in_all.append(t_in)
        out_all.append(t_out)
        in_sums.append(float(np.sum(t_in)))
    t_in = np.concatenate(in_all)
    t_out = np.concatenate(out_all)
    in_mean = float(np.mean(t_in))
    out_mean = float(np.mean(t_out))
    in_se = float(np.std(t_in, ddof=1) / np.sqrt(t_in.size)) if t_in.size > 1 else 0.0
    out_se = float(np.std(t_out, ddof=1) / np.sqrt(t_out.size)) if t_out.size > 1 else 0.0
    denom = (in_se**2 + out_se**2) ** 0.5
    z = (in_mean - out_mean) / denom if denom > 0 else 0.0
    return AttackReport(
        in_mean=in_mean,
        out_mean=out_mean,
        in_sum=float(np.mean(in_sums)),
        out_se=out_se,
        n_in=t_in.size,
        n_out=t_out.size,
        separation_z=z,
    )
