"""Training algorithms: non-private GLMtron, the one-pass DP variant with a
public-data threshold search, the mini-batch DP variant with private
threshold estimation, and a DP-SGD baseline (the mini-batch structure with
the indicator-gated gradient).

Every trainer is a deterministic function of (data, config, privacy
params); all randomness derives from ``config.seed`` through one seed
sequence, with the standardized noise draws fixed before any scaling by
the noise multiplier.  Runs with the same seed therefore share noise
directions across different budgets, which the epsilon-sweep tests exploit
as common random numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .datagen import r_x_squared
from .model import Dataset, empirical_risk
from .privacy import PrivacyParams, ZcdpLedger, zcdp_to_approx_dp
from .threshold import ThresholdParams, threshold_defaults_from_data

__all__ = [
    "TrainerConfig",
    "PrivacyReport",
    "LossRecord",
    "TrainTrace",
    "permute",
    "average_iterates",
    "run_glmtron",
    "run_dp_glmtron",
    "run_dp_mbglmtron",
    "run_dp_sgd",
    "default_step_size",
]

# Above this many total steps, iterates are no longer stored on the trace.
_RECORD_CAP = 200_000


@dataclass
class TrainerConfig:
    """Step size, pass structure, and clip-scale constants for a run."""

    eta: float
    epochs: int = 1
    batch_b: int = 32
    estimating_m: int | None = None  # None: max(1, ceil(b/10))
    seed: int = 0
    alpha: float = 3.0
    trace_h: float | None = None  # None: mean ||x||^2 of the training data
    c2: float = 2.0
    a: float = 0.5
    threshold: ThresholdParams | None = None  # None: derived from the data
    cache_thresholds: bool = False
    eval_every: int | None = None
    record_iterates: bool | None = None

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_b < 1:
            raise ValueError("batch size must be >= 1")
        if self.estimating_m is not None and self.estimating_m < 1:
            raise ValueError("estimating size must be >= 1")

    @property
    def m(self) -> int:
        if self.estimating_m is not None:
            return self.estimating_m
        return max(1, math.ceil(self.batch_b / 10))


@dataclass(frozen=True)
class PrivacyReport:
    """Nominal budget plus the ledger-derived effective guarantee."""

    epsilon_nominal: float
    delta: float
    rho_total: float
    epsilon_effective: float
    regime_warning: str | None = None


@dataclass(frozen=True)
class LossRecord:
    step: int
    train_loss: float
    test_loss: float


@dataclass
class TrainTrace:
    """Everything a run produced: iterates, thresholds, losses, privacy."""

    final_average: np.ndarray
    w_final: np.ndarray
    n_steps: int
    iterates: np.ndarray | None
    thresholds: np.ndarray
    gammas: np.ndarray | None
    losses: list[LossRecord]
    effective_privacy: PrivacyReport | None
    clip_fraction: float
    meta: dict = field(default_factory=dict)


def permute(data: Dataset, rng) -> Dataset:
    """Uniformly random seeded reordering of the dataset."""
    idx = rng.permutation(len(data))
    return data.subset(idx)


def average_iterates(trace: TrainTrace, start: int = 0) -> np.ndarray:
    """Mean of iterates w_start .. w_{T-1}; start = 0 is the trainer's output."""
    if trace.iterates is None:
        raise ValueError("trace does not carry iterates (run was too long)")
    if not 0 <= start < trace.n_steps:
        raise ValueError("start must satisfy 0 <= start < number of steps")
    return trace.iterates[start : trace.n_steps].mean(axis=0)


def default_step_size(
    n: int,
    d: int,
    trace_h: float,
    kappa: float = 1.0,
    f: float = 0.0,
    alpha: float = 3.0,
    c2: float = 2.0,
    a: float = 0.5,
    c1: float = 1.0,
) -> float:
    """Theory-style default: min of 1/(2 R_x^2) and the noise-limited branch."""
    r2 = r_x_squared(alpha, trace_h, a, 1.0 / n)
    eta = 1.0 / (2.0 * r2)
    if f > 0.0:
        eta = min(eta, c1 / (math.log(n) ** (4.0 * a) * c2**2 * r2 * kappa**2 * d * f**2))
    return eta


class _RunAccumulator:
    """Accumulates iterates across epochs: running prefix sums for the
    final average, cadenced prefix-average loss evaluations, and optional
    full iterate storage."""

    def __init__(self, d, total_steps, record, train_data, test_data, eval_every):
        self.sum = np.zeros(d)
        self.steps_done = 0
        self.record = record
        self.rows = [] if record else None
        self.losses: list[LossRecord] = []
        self.train_data = train_data
        self.test_data = test_data
        self.total_steps = total_steps
        self.eval_steps = self._eval_schedule(total_steps, eval_every)
        self._eval_idx = 0

    @staticmethod
    def _eval_schedule(total_steps, eval_every):
        if eval_every is None:
            eval_every = max(1, math.ceil(total_steps / 100))
        pts = list(range(eval_every, total_steps + 1, eval_every))
        if not pts or pts[-1] != total_steps:
            pts.append(total_steps)
        return pts

    def _evaluate(self, avg, step):
        train = empirical_risk(avg, self.train_data)
        test = empirical_risk(avg, self.test_data) if self.test_data is not None else math.nan
        self.losses.append(LossRecord(step, train, test))

    def add_epoch(self, epoch_iterates: np.ndarray):
        t_ep = epoch_iterates.shape[0] - 1
        prefix = np.cumsum(epoch_iterates[:-1], axis=0)
        while self._eval_idx < len(self.eval_steps):
            step = self.eval_steps[self._eval_idx]
            local = step - self.steps_done
            if local > t_ep:
                break
            avg = (self.sum + prefix[local - 1]) / step
            self._evaluate(avg, step)
            self._eval_idx += 1
        self.sum += prefix[-1]
        self.steps_done += t_ep
        if self.record:
            self.rows.append(epoch_iterates[:-1].copy())

    def finish(self, w_final: np.ndarray):
        final_average = self.sum / self.steps_done
        iterates = None
        if self.record:
            self.rows.append(w_final[None, :])
            iterates = np.vstack(self.rows)
        return final_average, iterates


def _should_record(cfg: TrainerConfig, total_steps: int) -> bool:
    if cfg.record_iterates is not None:
        return cfg.record_iterates
    return total_steps <= _RECORD_CAP


def _eval_cadence(cfg: TrainerConfig, t_per_epoch: int) -> int | None:
    """Once per epoch in multi-epoch mode, every ceil(T/100) steps one-pass."""
    if cfg.eval_every is not None:
        return cfg.eval_every
    return t_per_epoch if cfg.epochs > 1 else None


def _epoch_streams(seed: int, epochs: int):
    """Per-epoch (permutation rng, update-noise rng, count-noise rng)."""
    for child in np.random.SeedSequence(seed).spawn(epochs):
        p, g, u = child.spawn(3)
        yield (
            np.random.default_rng(p),
            np.random.default_rng(g),
            np.random.default_rng(u),
        )


def run_glmtron(data: Dataset, cfg: TrainerConfig, test_data: Dataset | None = None) -> TrainTrace:
    """Non-private one-pass-per-epoch GLMtron from w0 = 0, in data order."""
    if len(data) == 0:
        raise ValueError("dataset must be nonempty")
    kern = _backend.kernels()
    total = cfg.epochs * len(data)
    acc = _RunAccumulator(
        data.d, total, _should_record(cfg, total), data, test_data, _eval_cadence(cfg, len(data))
    )
    w = np.zeros(data.d)
    for _ in range(cfg.epochs):
        iterates = kern.glmtron_path(data.x, data.y, cfg.eta, w, False)
        acc.add_epoch(iterates)
        w = iterates[-1]
    final_average, iterates = acc.finish(w)
    return TrainTrace(
        final_average=final_average,
        w_final=w,
        n_steps=total,
        iterates=iterates,
        thresholds=np.empty(0),
        gammas=None,
        losses=acc.losses,
        effective_privacy=None,
        clip_fraction=0.0,
        meta={"algorithm": "glmtron"},
    )


def _shuffle_regime_warning(priv: PrivacyParams, n: int) -> str | None:
    bound = math.sqrt(math.log(n / priv.delta) / n)
    if priv.epsilon > bound:
        return (
            f"epsilon={priv.epsilon:.4g} exceeds the shuffle-amplification bound "
            f"{bound:.4g} at n={n}; the amplified guarantee does not apply"
        )
    return None


def run_dp_glmtron(
    data: Dataset,
    public_set: Dataset,
    cfg: TrainerConfig,
    priv: PrivacyParams,
    test_data: Dataset | None = None,
) -> TrainTrace:
    """One-pass DP-GLMtron: shuffle, adaptively clip against a threshold
    searched on the public set, and add 2 f s_t Gaussian noise per step."""
    if len(data) == 0:
        raise ValueError("dataset must be nonempty")
    if len(public_set) == 0:
        raise ValueError("public estimating set must be nonempty")
    if public_set.d != data.d:
        raise ValueError("public set dimension does not match the data")
    if priv.regime != "shuffle_amplified":
        raise ValueError("DP-GLMtron is calibrated under the shuffle_amplified regime")
    params = cfg.threshold or threshold_defaults_from_data(data)
    grid = params.grid()
    kern = _backend.kernels()
    n, d = data.x.shape
    f = priv.noise_multiplier
    total = cfg.epochs * n
    acc = _RunAccumulator(
        d, total, _should_record(cfg, total), data, test_data, _eval_cadence(cfg, n)
    )
    w = np.zeros(d)
    thresholds = []
    clipped = 0
    for perm_rng, g_rng, _ in _epoch_streams(cfg.seed, cfg.epochs):
        shuffled = permute(data, perm_rng)
        noise_g = g_rng.standard_normal((n, d))
        iterates, s_used, c = kern.dp_glmtron_path(
            shuffled.x,
            shuffled.y,
            public_set.x,
            public_set.y,
            grid,
            cfg.eta,
            f,
            noise_g,
            cfg.cache_thresholds,
            w,
        )
        acc.add_epoch(iterates)
        w = iterates[-1]
        thresholds.append(s_used)
        clipped += c
    final_average, iterates = acc.finish(w)
    # Each sample is touched by exactly one Gaussian-mechanism update per
    # epoch (sensitivity 2 eta s_t, std 2 f s_t eta), so one pass costs
    # 1/(2 f^2) under parallel composition; epochs compose sequentially.
    ledger = ZcdpLedger()
    if f > 0.0:
        for _ in range(cfg.epochs):
            ledger = ledger.add_sequential(1.0 / (2.0 * f**2))
        eps_eff = zcdp_to_approx_dp(ledger.rho_total, priv.delta)
    else:
        eps_eff = math.inf
    report = PrivacyReport(
        epsilon_nominal=priv.epsilon,
        delta=priv.delta,
        rho_total=ledger.rho_total if f > 0.0 else math.inf,
        epsilon_effective=eps_eff,
        regime_warning=_shuffle_regime_warning(priv, n),
    )
    return TrainTrace(
        final_average=final_average,
        w_final=w,
        n_steps=total,
        iterates=iterates,
        thresholds=np.concatenate(thresholds),
        gammas=None,
        losses=acc.losses,
        effective_privacy=report,
        clip_fraction=clipped / total,
        meta={"algorithm": "dp_glmtron"},
    )


def _run_minibatch(
    data: Dataset,
    cfg: TrainerConfig,
    priv: PrivacyParams,
    test_data: Dataset | None,
    use_indicator: bool,
    name: str,
) -> TrainTrace:
    if priv.regime != "zcdp":
        raise ValueError(f"{name} is calibrated under the zcdp regime")
    n, d = data.x.shape
    b, m = cfg.batch_b, cfg.m
    if n < b + m:
        raise ValueError(f"need at least b + m = {b + m} samples, got {n}")
    t_per_epoch = n // (b + m)
    params = cfg.threshold or threshold_defaults_from_data(data)
    grid = params.grid()
    k = params.n_doublings
    f = priv.noise_multiplier
    count_noise_std = f * math.sqrt(k)
    trace_h = cfg.trace_h
    if trace_h is None:
        trace_h = float(np.mean(np.sum(data.x * data.x, axis=1)))
    clip_mult = math.sqrt(2.0 * cfg.alpha * trace_h) * cfg.c2 * math.log(n) ** (2.0 * cfg.a)
    kern = _backend.kernels()
    total = cfg.epochs * t_per_epoch
    acc = _RunAccumulator(
        d, total, _should_record(cfg, total), data, test_data, _eval_cadence(cfg, t_per_epoch)
    )
    w = np.zeros(d)
    thresholds, gammas = [], []
    clipped = 0
    grads = 0
    for perm_rng, g_rng, u_rng in _epoch_streams(cfg.seed, cfg.epochs):
        shuffled = permute(data, perm_rng)
        noise_g = g_rng.standard_normal((t_per_epoch, d))
        noise_u = u_rng.standard_normal((t_per_epoch, k + 1))
        iterates, s_used, g_used, c, ng = kern.dp_minibatch_path(
            shuffled.x,
            shuffled.y,
            grid,
            cfg.eta,
            f,
            b,
            m,
            clip_mult,
            count_noise_std,
            noise_g,
            noise_u,
            use_indicator,
            w,
        )
        acc.add_epoch(iterates)
        w = iterates[-1]
        thresholds.append(s_used)
        gammas.append(g_used)
        clipped += c
        grads += ng
    final_average, iterates = acc.finish(w)
    # Disjoint blocks within a pass compose in parallel: one epoch costs
    # exactly 1/f^2 (threshold counts 1/(2f^2) + gradient step 1/(2f^2)).
    ledger = ZcdpLedger()
    if f > 0.0:
        for _ in range(cfg.epochs):
            ledger = ledger.add_sequential(1.0 / f**2)
        eps_eff = zcdp_to_approx_dp(ledger.rho_total, priv.delta)
    else:
        eps_eff = math.inf
    report = PrivacyReport(
        epsilon_nominal=priv.epsilon,
        delta=priv.delta,
        rho_total=ledger.rho_total if f > 0.0 else math.inf,
        epsilon_effective=eps_eff,
    )
    return TrainTrace(
        final_average=final_average,
        w_final=w,
        n_steps=total,
        iterates=iterates,
        thresholds=np.concatenate(thresholds),
        gammas=np.concatenate(gammas),
        losses=acc.losses,
        effective_privacy=report,
        clip_fraction=clipped / max(1, grads),
        meta={
            "algorithm": name,
            "t_per_epoch": t_per_epoch,
            "dropped_per_epoch": n - t_per_epoch * (b + m),
            "clip_mult": clip_mult,
        },
    )


def run_dp_mbglmtron(
    data: Dataset,
    cfg: TrainerConfig,
    priv: PrivacyParams,
    test_data: Dataset | None = None,
) -> TrainTrace:
    """Mini-batch DP-GLMtron: per block, m samples set the threshold through
    noisy counts and b samples supply the averaged clipped update."""
    return _run_minibatch(data, cfg, priv, test_data, False, "dp_mbglmtron")


def run_dp_sgd(
    data: Dataset,
    cfg: TrainerConfig,
    priv: PrivacyParams,
    test_data: Dataset | None = None,
) -> TrainTrace:
    """DP-SGD baseline: the mini-batch structure with the indicator-gated
    gradient in place of the GLMtron pseudo-gradient; same accounting."""
    return _run_minibatch(data, cfg, priv, test_data, True, "dp_sgd")
