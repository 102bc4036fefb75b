"""Command-line interface.

Subcommands:

* ``train``      one (algorithm, epsilon, seed) cell
* ``sweep``      the full grid from a config
* ``attack``     membership-inference experiment
* ``calibrate``  print the noise multiplier for a budget
* ``check``      distributional diagnostics for a synthetic source

A JSON config file (``--config``) supplies defaults; explicit flags
override the file, and the file overrides built-ins.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .datagen import (
    check_covariance,
    check_fourth_moment,
    check_symmetry_moment,
    check_tail,
)
from .experiments import (
    ALGORITHMS,
    CsvSource,
    DeltaRule,
    ExperimentConfig,
    RunResult,
    SyntheticSource,
    run_cell,
    write_results,
)
from .privacy import PrivacyParams, calibrate_shuffle_multiplier, calibrate_zcdp_multiplier
from .trainers import TrainerConfig, run_dp_mbglmtron, run_glmtron


def _parse_kv(pairs: list[str], what: str) -> dict:
    out = {}
    for token in pairs:
        if "=" not in token:
            raise SystemExit(f"{what}: expected key=value, got {token!r}")
        k, v = token.split("=", 1)
        out[k] = v
    return out


def _synthetic_from_tokens(tokens: list[str]) -> SyntheticSource:
    kv = _parse_kv(tokens, "--synthetic")
    known = {"d", "n", "sigma", "design", "w_norm", "gt_seed"}
    unknown = set(kv) - known
    if unknown:
        raise SystemExit(f"--synthetic: unknown keys {sorted(unknown)}")
    return SyntheticSource(
        d=int(kv.get("d", 8)),
        n=int(kv.get("n", 20000)),
        sigma=float(kv.get("sigma", 0.5)),
        design=kv.get("design", "gaussian"),
        w_norm=float(kv.get("w_norm", 1.0)),
        gt_seed=int(kv.get("gt_seed", 0)),
    )


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--csv", help="CSV dataset path")
    p.add_argument("--target", help="label column name or index")
    p.add_argument("--synthetic", nargs="+", metavar="KEY=VALUE", help="synthetic source, e.g. d=8 n=20000 sigma=0.5 design=gaussian")
    p.add_argument("--algorithm", choices=ALGORITHMS)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float, help="fixed delta (otherwise 1/N^delta-power)")
    p.add_argument("--delta-power", type=float, dest="delta_power")
    p.add_argument("--eta", type=float)
    p.add_argument("--batch", type=int)
    p.add_argument("--estimating", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int)


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _setting(args, file_cfg: dict, key: str, default):
    """Priority: explicit flag > config file > default."""
    val = getattr(args, key, None)
    if val is not None:
        return val
    if key in file_cfg:
        return file_cfg[key]
    return default


def _build_experiment_config(args) -> ExperimentConfig:
    file_cfg = _load_config_file(args.config)
    if args.synthetic:
        source = _synthetic_from_tokens(args.synthetic)
    elif args.csv:
        if args.target is None and "target" not in file_cfg:
            raise SystemExit("--csv requires --target (no default target is guessed)")
        target = args.target if args.target is not None else file_cfg["target"]
        try:
            target = int(target)
        except (TypeError, ValueError):
            pass
        source = CsvSource(path=args.csv, target=target)
    elif "synthetic" in file_cfg:
        source = SyntheticSource(**file_cfg["synthetic"])
    elif "csv" in file_cfg:
        source = CsvSource(path=file_cfg["csv"], target=file_cfg["target"])
    else:
        raise SystemExit("no data source: pass --synthetic or --csv/--target")

    if args.delta is not None:
        rule = DeltaRule("fixed", args.delta)
    elif args.delta_power is not None:
        rule = DeltaRule("n_power", args.delta_power)
    elif "delta" in file_cfg:
        rule = DeltaRule("fixed", float(file_cfg["delta"]))
    else:
        rule = DeltaRule("n_power", float(file_cfg.get("delta_power", 1.1)))

    trainer = TrainerConfig(
        eta=float(_setting(args, file_cfg, "eta", 0.01)),
        epochs=int(_setting(args, file_cfg, "epochs", 1)),
        batch_b=int(_setting(args, file_cfg, "batch", 32)),
        estimating_m=_setting(args, file_cfg, "estimating", None),
    )
    algorithms = (
        (args.algorithm,)
        if args.algorithm
        else tuple(file_cfg.get("algorithms", ("dp_mbglmtron",)))
    )
    epsilons = (
        (args.epsilon,) if args.epsilon is not None else tuple(file_cfg.get("epsilons", (0.05, 0.2, 0.5)))
    )
    if args.seeds:
        seeds = tuple(args.seeds)
    elif args.seed is not None:
        seeds = (args.seed,)
    else:
        seeds = tuple(file_cfg.get("seeds", (0, 1, 2, 3, 4)))
    return ExperimentConfig(
        source=source,
        algorithms=algorithms,
        epsilons=epsilons,
        seeds=seeds,
        delta_rule=rule,
        trainer=trainer,
        eta_overrides=dict(file_cfg.get("eta_overrides", {})),
        test_fraction=float(file_cfg.get("test_fraction", 0.2)),
        mc_samples=int(file_cfg.get("mc_samples", 100_000)),
        public_m=int(file_cfg.get("public_m", 64)),
        c3=float(file_cfg.get("c3", 1.0)),
        workers=int(_setting(args, file_cfg, "workers", 1)),
    )


def _cmd_train(args) -> int:
    cfg = _build_experiment_config(args)
    alg = cfg.algorithms[0]
    eps = cfg.epsilons[0]
    seed = cfg.seeds[0]
    cell = run_cell(cfg, alg, eps, seed)
    if cell.error:
        print(f"cell failed: {cell.error}", file=sys.stderr)
        return 1
    print(f"algorithm={alg} epsilon={eps:g} seed={seed}")
    print(f"final_train={cell.final_train:.6g} final_test={cell.final_test:.6g}")
    if cell.excess_risk == cell.excess_risk:  # not NaN
        print(f"excess_risk={cell.excess_risk:.6g}")
    print(f"effective_epsilon={cell.effective_epsilon:.6g} delta={cell.delta:.6g}")
    if args.out:
        files = write_results(RunResult(cfg, [cell]), args.out)
        print(f"wrote {len(files)} files to {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    from .experiments import run_experiment

    cfg = _build_experiment_config(args)
    result = run_experiment(cfg)
    failures = [c for c in result.cells if c.error]
    for agg in result.aggregates():
        print(
            f"{agg['algorithm']:>13s} eps={agg['epsilon']:<6g} "
            f"train={agg['final_train_mean']:.6g}±{agg['final_train_std']:.2g} "
            f"test={agg['final_test_mean']:.6g}±{agg['final_test_std']:.2g}"
        )
    if failures:
        print(f"{len(failures)} cell(s) failed:", file=sys.stderr)
        for c in failures:
            print(f"  {c.algorithm} eps={c.epsilon} seed={c.seed}: {c.error}", file=sys.stderr)
    if args.out:
        files = write_results(result, args.out)
        print(f"wrote {len(files)} files to {args.out}")
    return 1 if failures else 0


def _cmd_attack(args) -> int:
    from .attack import membership_experiment

    file_cfg = _load_config_file(args.config)
    src = _synthetic_from_tokens(args.synthetic) if args.synthetic else SyntheticSource(
        d=20, n=200, sigma=1.0
    )
    gt = src.ground_truth()
    eta = float(_setting(args, file_cfg, "eta", 0.02))
    epochs = int(_setting(args, file_cfg, "epochs", 40))
    seed = int(_setting(args, file_cfg, "seed", 0))
    trials = int(file_cfg.get("trials", 20))
    n_fresh = int(file_cfg.get("n_fresh", 1000))
    if args.algorithm in (None, "glmtron"):
        def trainer(data, s):
            return run_glmtron(data, TrainerConfig(eta=eta, epochs=epochs, seed=s)).final_average
        name = "glmtron"
    elif args.algorithm == "dp_mbglmtron":
        eps = args.epsilon if args.epsilon is not None else 0.05
        def trainer(data, s):
            n = len(data)
            delta = 1.0 / n**1.1 if args.delta is None else args.delta
            priv = PrivacyParams.zcdp(eps, delta)
            b = max(1, n // 2 - n // 20)
            cfg = TrainerConfig(eta=eta, epochs=epochs, seed=s, batch_b=b)
            return run_dp_mbglmtron(data, cfg, priv).final_average
        name = f"dp_mbglmtron(eps={args.epsilon})"
    else:
        raise SystemExit("attack supports --algorithm glmtron or dp_mbglmtron")
    rep = membership_experiment(trainer, gt, src.n, n_fresh, trials, seed)
    print(f"mechanism={name} d={src.d} n={src.n} trials={trials}")
    print(f"in_mean={rep.in_mean:.6g}  in_sum={rep.in_sum:.6g}  (n_in={rep.n_in})")
    print(f"out_mean={rep.out_mean:.6g} ± {rep.out_se:.2g} SE (n_out={rep.n_out})")
    print(f"separation_z={rep.separation_z:.3f}")
    return 0


def _cmd_calibrate(args) -> int:
    if args.epsilon is None:
        raise SystemExit("calibrate requires --epsilon")
    delta = args.delta
    if delta is None:
        if args.n is None:
            raise SystemExit("calibrate requires --delta or --n (for delta = 1/N^power)")
        delta = 1.0 / args.n ** (args.delta_power or 1.1)
    if args.regime == "zcdp":
        f = calibrate_zcdp_multiplier(args.epsilon, delta)
        print(f"regime=zcdp epsilon={args.epsilon:g} delta={delta:.6g}")
        print(f"noise_multiplier={f:.10g}")
    else:
        if args.n is None:
            raise SystemExit("shuffle calibration requires --n")
        cal = calibrate_shuffle_multiplier(args.epsilon, delta, args.n, args.c3)
        print(f"regime=shuffle_amplified epsilon={args.epsilon:g} delta={delta:.6g} n={args.n}")
        print(f"noise_multiplier={cal.multiplier:.10g}")
        print(f"regime_bound={cal.regime_bound:.6g} in_regime={cal.in_regime}")
        if not cal.in_regime:
            print("WARNING: epsilon exceeds the shuffle-amplification regime; "
                  "the amplified guarantee does not apply", file=sys.stderr)
    return 0


def _cmd_check(args) -> int:
    src = _synthetic_from_tokens(args.synthetic) if args.synthetic else SyntheticSource(d=8, n=20000, sigma=0.5)
    gt = src.ground_truth()
    n = int(args.samples)
    seed = args.seed if args.seed is not None else 0
    reports = [
        check_covariance(gt, n, seed),
        check_symmetry_moment(gt, n, seed + 1),
        check_fourth_moment(gt, n, seed + 2),
        check_tail(gt, n, seed + 3),
    ]
    ok = True
    for r in reports:
        print(r)
        ok = ok and r.passed
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dp-relu",
        description="Differentially private ReLU regression toolkit",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run one (algorithm, epsilon, seed) cell")
    _add_common(p_train)

    p_sweep = sub.add_parser("sweep", help="run the full grid")
    _add_common(p_sweep)

    p_attack = sub.add_parser("attack", help="membership-inference experiment")
    _add_common(p_attack)

    p_cal = sub.add_parser("calibrate", help="print the noise multiplier for a budget")
    p_cal.add_argument("--epsilon", type=float, required=True)
    p_cal.add_argument("--delta", type=float)
    p_cal.add_argument("--delta-power", type=float, dest="delta_power")
    p_cal.add_argument("--n", type=int)
    p_cal.add_argument("--regime", choices=("zcdp", "shuffle_amplified"), default="zcdp")
    p_cal.add_argument("--c3", type=float, default=1.0)

    p_check = sub.add_parser("check", help="distributional diagnostics")
    p_check.add_argument("--synthetic", nargs="+", metavar="KEY=VALUE")
    p_check.add_argument("--samples", type=int, default=200_000)
    p_check.add_argument("--seed", type=int)

    args = parser.parse_args(argv)
    handlers = {
        "train": _cmd_train,
        "sweep": _cmd_sweep,
        "attack": _cmd_attack,
        "calibrate": _cmd_calibrate,
        "check": _cmd_check,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
