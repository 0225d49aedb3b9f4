"""Command-line front end: run simulations, attack scenarios, and checks.

Subcommands:

* ``simulate``: run a config file to its horizon and optionally emit the
  artifact set (report.json, interarrivals.csv, rewards.csv,
  difficulty.csv, blocks.jsonl).
* ``attack``: run a named adversary scenario and emit attack_report.json.
* ``check``: reduced-scale invariant suites for quick health checks.
* ``stats``: recompute summary statistics from a blocks.jsonl dump.

Exit codes: 0 success, 1 failed check assertion, 2 bad configuration or
arguments, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from typing import List, Optional

from . import attacks, simnet, slashing, stats
from .chain import BlockKind


ATTACK_NAMES = (
    "double-spend",
    "long-range",
    "selfish",
    "split-stake",
    "future-mining",
    "public-double-spend",
)

CHECK_SUITES = (
    "poisson-merge",
    "fairness",
    "difficulty-convergence",
    "split-stake",
    "slashing-negatives",
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _load_config(args) -> simnet.SimConfig:
    config = simnet.parse_config_file(args.config)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["rng_seed"] = args.seed
    if getattr(args, "latency", None) is not None:
        overrides["latency"] = simnet.LatencyModel.parse(args.latency)
    if getattr(args, "slashing", None) is not None:
        overrides["slashing"] = args.slashing
    if overrides:
        config = replace(config, **overrides)
        config.validate()
    return config


def _print_summary(report: simnet.SimReport) -> None:
    summary = report.to_summary_dict()
    blocks = summary["blocks"]
    print(f"blocks      total={blocks['total']}  pow={blocks['pow']}  "
          f"pos={blocks['pos']}  orphaned={blocks['orphaned']}")
    for cls in ("all", "pow", "pos"):
        info = summary["interarrivals"][cls]
        if "mean" in info:
            print(f"gap [{cls:>3}]   mean={info['mean']:.3f}s  std={info['std']:.3f}s  "
                  f"ks={info['ks']:.5f} (1% crit {info['ks_critical_1pct']:.5f})")
    diff = summary["difficulty"]
    ratio = diff["ratio_mean_post_warmup"]
    ratio_text = f"{ratio:.3f}" if ratio is not None else "n/a"
    print(f"difficulty  d_w={diff['final_w']:.3f}  d_s={diff['final_s']:.3f}  "
          f"ratio(post-warmup)={ratio_text}")
    print(f"orphans     proxy={summary['orphan_proxy'] * 100:.2f}%")
    top = sorted(report.rewards.items(), key=lambda kv: (-kv[1], kv[0]))[:5]
    shares = "  ".join(f"{a}:{v:.0f}" for a, v in top)
    print(f"rewards     top {shares}")
    if "slashing" in summary:
        print(f"slashing    mode={summary['slashing']['mode']}  "
              f"evidence={summary['slashing']['evidence_count']}")
    print(f"runtime     {report.runtime_seconds:.2f}s")


def cmd_simulate(args) -> int:
    try:
        config = _load_config(args)
    except simnet.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = simnet.run(config)
    _print_summary(report)
    if args.out:
        try:
            paths = simnet.write_artifacts(report, args.out, force=args.force)
        except (OSError, FileExistsError) as exc:
            print(f"artifact error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"artifacts   {args.out} ({len(paths)} files)")
    return EXIT_OK


def _attack_config(args) -> simnet.SimConfig:
    if args.config:
        return simnet.parse_config_file(args.config)
    return simnet.quick_config()


def cmd_attack(args) -> int:
    try:
        config = _attack_config(args)
    except simnet.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = args.seed if args.seed is not None else 1
    name = args.name
    payload: dict = {"attack": name, "rng_seed": seed}
    trajectories = None

    if name == "double-spend":
        trials = args.trials or 200
        setup = attacks.AttackSetup(
            attacker_hash=60.0, attacker_stake=60.0,
            honest_hash=40.0, honest_stake=40.0,
            td_wc=100.0, td_sc=100.0, horizon=10_000.0,
        )
        lhs, feasible = attacks.double_spend_feasible(setup)
        rate, _ = attacks.double_spend_win_rate(config, setup, trials, seed)
        sample = attacks.run_private_double_spend(config, setup, rng_seed=seed)
        trajectories = sample.weight_trajectories
        payload.update({
            "setup": {
                "attacker_hash": setup.attacker_hash,
                "attacker_stake": setup.attacker_stake,
                "honest_hash": setup.honest_hash,
                "honest_stake": setup.honest_stake,
                "td_wc": setup.td_wc, "td_sc": setup.td_sc,
                "horizon": setup.horizon,
            },
            "lhs": lhs, "feasible": feasible,
            "trials": trials, "win_rate": rate,
            "sample_outcome": attacks.outcome_to_dict(sample) | {"weight_trajectories": None},
        })
        print(f"double-spend  lhs={lhs:.1f} feasible={feasible}  "
              f"win_rate={rate:.3f} over {trials} trials")
    elif name == "long-range":
        trials = args.trials or 100
        report = simnet.run(config)
        depth = max(1, report.total_blocks // 2)
        outcomes = [
            attacks.run_long_range_attack(
                config, depth, attacker_stake_share=1.0,
                rng_seed=seed + i, report=report,
            )
            for i in range(trials)
        ]
        max_ratio = max(o.max_product_ratio for o in outcomes)
        any_won = any(o.attacker_won for o in outcomes)
        trajectories = outcomes[0].weight_trajectories
        payload.update({
            "depth": depth, "attacker_stake_share": 1.0, "trials": trials,
            "any_attacker_won": any_won, "max_product_ratio": max_ratio,
            "omega_bound": outcomes[0].meta["omega_bound"],
        })
        print(f"long-range  depth={depth} stake=100%  attacker_won={any_won}  "
              f"max_ratio={max_ratio:.6f}  omega_bound={outcomes[0].meta['omega_bound']:.3f}")
    elif name == "selfish":
        share = 1.0 / 3.0
        pair = attacks.selfish_mining_comparison(config, share, rng_seed=seed,
                                                 duration=200_000.0)
        hybrid, control = pair["hybrid"], pair["pow_only"]
        reference = attacks.selfish_mining_reference_share(share)
        payload.update({
            "attacker_hash_share": share,
            "hybrid_revenue_share": hybrid.revenue_share,
            "pow_only_revenue_share": control.revenue_share,
            "reference_share_gamma0": reference,
            "pos_interleave_losses": hybrid.pos_interleave_losses,
        })
        print(f"selfish  share={share:.3f}  hybrid={hybrid.revenue_share:.4f}  "
              f"pow-only={control.revenue_share:.4f}  reference={reference:.4f}")
    elif name == "split-stake":
        rounds = args.trials or 100_000
        result = attacks.run_split_stake_nas(config, k_splits=10, rounds=rounds,
                                             rng_seed=seed)
        payload.update({
            "rounds": result.rounds, "k_splits": result.k_splits,
            "ks_two_sample": result.ks_two_sample,
            "ks_two_sample_critical": result.ks_two_sample_critical,
            "indistinguishable": result.indistinguishable,
        })
        print(f"split-stake  k=10 rounds={rounds}  ks={result.ks_two_sample:.5f} "
              f"(crit {result.ks_two_sample_critical:.5f})  "
              f"indistinguishable={result.indistinguishable}")
    elif name == "future-mining":
        transcript = attacks.run_future_mining_game(config, rng_seed=seed)
        payload.update({
            "t_a": transcript.t_a, "t_b": transcript.t_b, "t_x": transcript.t_x,
            "events": transcript.events,
            "weight_terms": transcript.weight_terms,
            "checks": transcript.checks,
        })
        for line in transcript.events:
            print(line)
        status = "pass" if transcript.all_checks_pass else "FAIL"
        print(f"future-mining checks: {status}")
        if not transcript.all_checks_pass:
            return EXIT_CHECK_FAILED
    elif name == "public-double-spend":
        trials = args.trials or 50
        results = {}
        for policy in slashing.StakerPolicy:
            rate, _ = slashing.public_double_spend_win_rate(
                config, policy, attacker_hash_share=0.6, trials=trials,
                rng_seed=seed, duration=20_000.0,
            )
            results[policy.value] = rate
            print(f"public-double-spend  policy={policy.value:<17} "
                  f"win_rate={rate:.3f} over {trials} trials")
        payload.update({"attacker_hash_share": 0.6, "trials": trials,
                        "win_rates": results})
    else:  # argparse choices should prevent this
        print(f"unknown attack {name!r}; valid: {', '.join(ATTACK_NAMES)}",
              file=sys.stderr)
        return EXIT_CONFIG

    if args.out:
        try:
            attacks.write_attack_report(args.out, payload, trajectories,
                                        force=args.force)
        except (OSError, FileExistsError) as exc:
            print(f"artifact error: {exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


# ---------------------------------------------------------------------------
# Check suites (reduced scale, pinned seeds)


def _check_poisson_merge() -> List[str]:
    # Start at the equilibrium difficulties so the whole day is stationary;
    # the merge law is about steady state, not the controller ramp.
    probe = simnet.baseline_config()
    config = simnet.baseline_config(
        duration=86_400.0,
        d_genesis_w=probe.total_hash * 2.0 * probe.t,
        d_genesis_s=probe.total_stake * 2.0 * probe.t,
    )
    report = simnet.run(config)
    failures = []
    split = abs(report.pos_blocks - report.pow_blocks) / max(report.total_blocks, 1)
    if split > 0.02:
        failures.append(f"pos/pow split off by {split * 100:.2f}% (limit 2%)")
    fits = simnet.summarize_interarrivals(report)
    mean = fits["all"].mean
    if not 0.9 * config.t <= mean <= 1.15 * config.t:
        failures.append(f"combined mean gap {mean:.3f}s not near t={config.t}")
    for cls, fit in fits.items():
        crit = stats.ks_critical(fit.sample_count)
        if fit.ks_statistic >= crit:
            failures.append(f"{cls} gaps fail exponential KS "
                            f"({fit.ks_statistic:.5f} >= {crit:.5f})")
    return failures


def _check_fairness() -> List[str]:
    config = simnet.baseline_config(duration=5 * 86_400.0)
    report = simnet.run(config)
    failures = []
    for cls, score in simnet.fairness_scores(report).items():
        if score >= 0.05:
            failures.append(f"{cls} proportionality {score:.4f} >= 0.05")
    return failures


def _check_difficulty_convergence() -> List[str]:
    config = simnet.baseline_config(duration=2 * 86_400.0)
    report = simnet.run(config)
    failures = []
    if not report.ratio_samples:
        return ["run too short to pass warm-up"]
    ratio = sum(report.ratio_samples) / len(report.ratio_samples)
    if not 8.5 <= ratio <= 11.5:
        failures.append(f"d_s/d_w mean {ratio:.3f} outside [8.5, 11.5]")
    target = config.total_hash * 2.0 * config.t
    tail = report.difficulty_trace_w[simnet.WARMUP_BLOCKS:]
    low, high = min(tail) / target, max(tail) / target
    if low < 0.7 or high > 1.4:
        failures.append(f"d_w wandered to [{low:.3f}, {high:.3f}]x target")
    return failures


def _check_split_stake() -> List[str]:
    config = simnet.quick_config()
    result = attacks.run_split_stake_nas(config, k_splits=10, rounds=20_000)
    failures = []
    if not result.indistinguishable:
        failures.append(
            f"split vs single KS {result.ks_two_sample:.5f} exceeds "
            f"{result.ks_two_sample_critical:.5f}")
    if result.ks_split_vs_model >= result.ks_model_critical:
        failures.append("split min-delay rejects the pooled-rate model")
    return failures


def _check_slashing_negatives() -> List[str]:
    config = simnet.baseline_config(duration=7_200.0)
    report = simnet.run(config)
    rows = list(report.tree.dump_rows())
    failures = []
    found = slashing.detect_all(rows)
    if found:
        failures.append(f"honest run produced {len(found)} evidence entries")
    # The detectors must also stay blind to deliberate stake splitting.
    split = attacks.run_split_stake_nas(config, k_splits=5, rounds=1_000)
    if not split.indistinguishable:
        failures.append("split-stake strategy is distinguishable, should not be")
    return failures


CHECKS = {
    "poisson-merge": _check_poisson_merge,
    "fairness": _check_fairness,
    "difficulty-convergence": _check_difficulty_convergence,
    "split-stake": _check_split_stake,
    "slashing-negatives": _check_slashing_negatives,
}


def cmd_check(args) -> int:
    suites = list(CHECKS) if args.suite == "all" else [args.suite]
    failed = []
    for suite in suites:
        failures = CHECKS[suite]()
        if failures:
            failed.append(suite)
            for reason in failures:
                print(f"FAIL {suite}: {reason}")
        else:
            print(f"ok   {suite}")
    if failed:
        print(f"failed suites: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_stats(args) -> int:
    try:
        rows = slashing.load_rows(args.blocks)
    except OSError as exc:
        print(f"cannot read {args.blocks}: {exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"malformed dump {args.blocks}: {exc}", file=sys.stderr)
        return EXIT_IO
    canonical, side = slashing.split_canonical(rows)
    produced = [r for r in canonical if r["kind"] != BlockKind.GENESIS.value]
    print(f"rows        {len(rows)} total, {len(produced)} canonical, "
          f"{len(side)} side")
    for cls in ("pow", "pos", "all"):
        if cls == "all":
            ts = sorted(r["timestamp"] for r in produced)
        else:
            ts = sorted(r["timestamp"] for r in produced if r["kind"] == cls)
        if len(ts) < 2:
            continue
        gaps = [b - a for a, b in zip(ts, ts[1:])]
        mean = sum(gaps) / len(gaps)
        line = f"gap [{cls:>3}]   n={len(gaps)}  mean={mean:.3f}s"
        if len(gaps) >= stats.MIN_FIT_SAMPLES:
            fit = stats.fit_exponential(gaps)
            line += (f"  std={fit.std:.3f}s  ks={fit.ks_statistic:.5f} "
                     f"(1% crit {stats.ks_critical(len(gaps)):.5f})")
        print(line)
    for kind in ("pow", "pos"):
        trace = [r["difficulty"] for r in produced if r["kind"] == kind]
        if trace:
            print(f"difficulty  {kind}: first={trace[0]:.3f} last={trace[-1]:.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="powpos",
        description="Hybrid PoW/PoS chain simulator and attack lab",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a configuration to its horizon")
    sim.add_argument("--config", required=True, help="key = value config file")
    sim.add_argument("--seed", type=int, help="override rng_seed")
    sim.add_argument("--out", help="artifact output directory")
    sim.add_argument("--force", action="store_true",
                     help="overwrite existing artifacts")
    sim.add_argument("--latency", help="perfect | fixed:SECS | uniform:LO:HI")
    sim.add_argument("--slashing", help="off | evidence | dunkle:N")
    sim.set_defaults(func=cmd_simulate)

    atk = sub.add_parser("attack", help="run an adversary scenario")
    atk.add_argument("name", choices=ATTACK_NAMES)
    atk.add_argument("--config", help="base network config (default: quick)")
    atk.add_argument("--trials", type=int, help="Monte Carlo trial count")
    atk.add_argument("--seed", type=int, help="base rng seed")
    atk.add_argument("--out", help="attack report output directory")
    atk.add_argument("--force", action="store_true",
                     help="overwrite existing reports")
    atk.set_defaults(func=cmd_attack)

    chk = sub.add_parser("check", help="run reduced-scale invariant suites")
    chk.add_argument("suite", choices=CHECK_SUITES + ("all",))
    chk.set_defaults(func=cmd_check)

    st = sub.add_parser("stats", help="recompute statistics from a dump")
    st.add_argument("blocks", help="path to blocks.jsonl")
    st.set_defaults(func=cmd_stats)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
