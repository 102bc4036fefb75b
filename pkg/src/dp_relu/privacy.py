"""Noise calibration and privacy accounting.

Two calibration regimes are supported:

* ``zcdp``: the mini-batch trainers run under zero-concentrated DP with
  per-pass cost 1/f^2, converted to (eps, delta)-DP through
  eps = rho + 2 sqrt(rho log(1/delta)).
* ``shuffle_amplified``: the one-pass trainer relies on amplification by
  shuffling, f = c3 * log(n/delta) / (eps sqrt(n)), valid only for
  eps <= sqrt(log(n/delta)/n).  Outside that range the formula is still
  applied but the calibration carries a warning flag; failing hard would
  make ordinary epsilon grids unrunnable.

Natural logarithms throughout.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "REGIMES",
    "calibrate_zcdp_multiplier",
    "ShuffleCalibration",
    "calibrate_shuffle_multiplier",
    "zcdp_to_approx_dp",
    "gaussian_noise",
    "ZcdpLedger",
    "ledger_compose_sequential",
    "PrivacyParams",
]

REGIMES = ("shuffle_amplified", "zcdp")

logger = logging.getLogger("dp_relu")
if os.environ.get("DP_RELU_LOG"):
    logging.basicConfig()
    logger.setLevel(os.environ["DP_RELU_LOG"].upper())


def _check_eps_delta(epsilon: float, delta: float) -> None:
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")


def calibrate_zcdp_multiplier(epsilon: float, delta: float) -> float:
    """Noise multiplier making a 1/f^2-zCDP mechanism (eps, delta)-DP.

    Returns sqrt(8 log(1/delta)) / eps when eps <= log(1/delta) and
    2 sqrt(log(1/delta) + eps) / eps otherwise.  Both closed forms are
    admissible; the branch choice mirrors the calibration statement the
    mini-batch trainer is analysed under.
    """
    _check_eps_delta(epsilon, delta)
    log_inv_delta = math.log(1.0 / delta)
    if epsilon <= log_inv_delta:
        return math.sqrt(8.0 * log_inv_delta) / epsilon
    return 2.0 * math.sqrt(log_inv_delta + epsilon) / epsilon


class ShuffleCalibration(NamedTuple):
    """Result of the shuffle-amplified calibration."""

    multiplier: float
    regime_bound: float
    in_regime: bool


def calibrate_shuffle_multiplier(
    epsilon: float, delta: float, n: int, c3: float = 1.0
) -> ShuffleCalibration:
    """f = c3 * log(n/delta) / (eps sqrt(n)), plus the regime check.

    The amplification argument needs eps <= sqrt(log(n/delta)/n); a
    violation is reported (and logged), not raised.
    """
    _check_eps_delta(epsilon, delta)
    if n < 1:
        raise ValueError("n must be >= 1")
    if c3 <= 0:
        raise ValueError("c3 must be positive")
    log_term = math.log(n / delta)
    f = c3 * log_term / (epsilon * math.sqrt(n))
    bound = math.sqrt(log_term / n)
    in_regime = epsilon <= bound
    if not in_regime:
        logger.warning(
            "shuffle calibration outside its validity regime: eps=%.4g > %.4g; "
            "the amplified guarantee does not apply at this budget",
            epsilon,
            bound,
        )
    return ShuffleCalibration(f, bound, in_regime)


def zcdp_to_approx_dp(rho: float, delta: float) -> float:
    """Smallest eps such that rho-zCDP implies (eps, delta)-DP:
    eps = rho + 2 sqrt(rho log(1/delta))."""
    if rho < 0:
        raise ValueError("rho must be >= 0")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return rho + 2.0 * math.sqrt(rho * math.log(1.0 / delta))


def gaussian_noise(std: float, d: int, rng) -> np.ndarray:
    """d iid N(0, std^2) draws; std = 0 returns exact zeros."""
    if std < 0:
        raise ValueError("std must be >= 0")
    if std == 0.0:
        return np.zeros(d)
    return std * rng.standard_normal(d)


@dataclass(frozen=True)
class ZcdpLedger:
    """Accumulated zCDP cost.  Sequential composition adds; parallel
    composition over disjoint data takes the max."""

    rho_total: float = 0.0

    def __post_init__(self):
        if self.rho_total < 0:
            raise ValueError("rho_total must be >= 0")

    def add_sequential(self, rho_step: float) -> "ZcdpLedger":
        if rho_step < 0:
            raise ValueError("rho_step must be >= 0")
        return ZcdpLedger(self.rho_total + rho_step)

    def combine_parallel(self, other: "ZcdpLedger") -> "ZcdpLedger":
        return ZcdpLedger(max(self.rho_total, other.rho_total))

    def to_approx_dp(self, delta: float) -> float:
        return zcdp_to_approx_dp(self.rho_total, delta)


def ledger_compose_sequential(ledger: ZcdpLedger, rho_step: float) -> ZcdpLedger:
    return ledger.add_sequential(rho_step)


@dataclass(frozen=True)
class PrivacyParams:
    """(epsilon, delta, noise multiplier, regime) bundle governing all noise."""

    epsilon: float
    delta: float
    noise_multiplier: float
    regime: str = "zcdp"

    def __post_init__(self):
        _check_eps_delta(self.epsilon, self.delta)
        if self.noise_multiplier < 0:
            raise ValueError("noise multiplier must be >= 0")
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.regime == "zcdp" and self.noise_multiplier > 0:
            achieved = zcdp_to_approx_dp(1.0 / self.noise_multiplier**2, self.delta)
            if achieved > self.epsilon * (1 + 1e-9):
                raise ValueError(
                    f"noise multiplier {self.noise_multiplier:.4g} only achieves "
                    f"eps={achieved:.4g} > requested {self.epsilon:.4g}"
                )

    @classmethod
    def zcdp(cls, epsilon: float, delta: float) -> "PrivacyParams":
        return cls(epsilon, delta, calibrate_zcdp_multiplier(epsilon, delta), "zcdp")

    @classmethod
    def shuffle(
        cls, epsilon: float, delta: float, n: int, c3: float = 1.0
    ) -> "PrivacyParams":
        cal = calibrate_shuffle_multiplier(epsilon, delta, n, c3)
        return cls(epsilon, delta, cal.multiplier, "shuffle_amplified")
