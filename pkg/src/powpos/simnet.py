"""Deterministic discrete-event simulation of the hybrid chain network.

Miners and stakers produce blocks against their current view of the chain.
Under perfect latency every participant shares one view, which the engine
exploits by keeping a single block tree.  Under a latency model each
participant gets its own replica fed by per-message delivery events, plus an
omniscient observer replica used only for metrics.

Everything runs off one virtual clock and one run seed.  Event ties are
broken by insertion order, mining solve times come from per-miner RNG
streams, and forging delays are pure functions of chain state, so a run is
a deterministic function of its configuration.

Scale note: the flagship configuration (ten miners, ten stakers, thirty
simulated days, a quarter million blocks) is expected to finish in minutes;
latency-model runs fan every block out to every replica and are meant for
shorter horizons.
"""

from __future__ import annotations

import heapq
import json
import math
import os
import time
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import stats
from .chain import Block, BlockKind, BlockTree, ImportResult, make_genesis
from .crypto import HashOracle
from .difficulty import AdaptiveRule, DifficultyParams
from .forging import (
    MinerContext,
    PosEligibility,
    StakerContext,
    build_pow_block,
    forge_pos_block,
    pos_eligibility,
    pow_solve_time,
)
from .ledger import Ledger

# Same-kind block count treated as controller warm-up in convergence metrics.
WARMUP_BLOCKS = 2000


class ConfigError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class LatencyModel:
    """Per-message delivery delay: none, a constant, or a uniform range."""

    kind: str = "perfect"
    lo: float = 0.0
    hi: float = 0.0

    @classmethod
    def perfect(cls) -> "LatencyModel":
        return cls("perfect")

    @classmethod
    def fixed(cls, delay: float) -> "LatencyModel":
        return cls("fixed", delay, delay)

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "LatencyModel":
        return cls("uniform", lo, hi)

    @classmethod
    def parse(cls, spec: str) -> "LatencyModel":
        parts = spec.strip().split(":")
        try:
            if parts[0] == "perfect" and len(parts) == 1:
                return cls.perfect()
            if parts[0] == "fixed" and len(parts) == 2:
                return cls.fixed(float(parts[1]))
            if parts[0] == "uniform" and len(parts) == 3:
                return cls.uniform(float(parts[1]), float(parts[2]))
        except ValueError:
            pass
        raise ConfigError(
            f"bad latency spec {spec!r}; expected perfect, fixed:SECS or uniform:LO:HI"
        )

    @property
    def is_perfect(self) -> bool:
        return self.kind == "perfect"

    def validate(self) -> None:
        if self.kind not in ("perfect", "fixed", "uniform"):
            raise ConfigError(f"unknown latency kind {self.kind!r}")
        if self.lo < 0 or self.hi < self.lo:
            raise ConfigError("latency bounds must satisfy 0 <= lo <= hi")

    def sample(self, rng) -> float:
        if self.kind == "uniform":
            return rng.uniform(self.lo, self.hi)
        return self.lo

    def spec_string(self) -> str:
        if self.kind == "perfect":
            return "perfect"
        if self.kind == "fixed":
            return f"fixed:{self.lo:g}"
        return f"uniform:{self.lo:g}:{self.hi:g}"


@dataclass(frozen=True, slots=True)
class SimConfig:
    """Run parameters.

    ``t`` is the combined block-time target in seconds; each kind then aims
    for one block per ``2t``.  ``stakers`` and ``miners`` are (account,
    power) pairs; stake is active from genesis, rewards stay liquid.
    """

    t: float = 10.0
    alpha: float = 0.01
    duration: float = 3600.0
    stakers: Tuple[Tuple[int, float], ...] = ()
    miners: Tuple[Tuple[int, float], ...] = ()
    maturation_height: int = 100
    withdrawal_height: int = 100
    t_future: float = 10.0
    latency: LatencyModel = LatencyModel("perfect")
    block_reward: float = 1.0
    rng_seed: int = 1
    d_genesis_w: float = 1.0
    d_genesis_s: float = 1.0
    d_min: float = 1e-9
    slashing: str = "off"

    def validate(self) -> None:
        problems = []
        if self.t <= 0:
            problems.append("t must be positive")
        if self.alpha <= 0:
            problems.append("alpha must be positive")
        if self.duration <= 0:
            problems.append("duration must be positive")
        if not self.stakers and not self.miners:
            problems.append("at least one staker or miner is required")
        accounts = [a for a, _ in self.stakers] + [a for a, _ in self.miners]
        if len(set(accounts)) != len(accounts):
            problems.append("participant accounts must be unique")
        if any(v <= 0 for _, v in self.stakers):
            problems.append("stakes must be positive")
        if any(v <= 0 for _, v in self.miners):
            problems.append("hash powers must be positive")
        if self.maturation_height < 1:
            problems.append("maturation_height must be at least 1")
        if self.withdrawal_height < 1:
            problems.append("withdrawal_height must be at least 1")
        if self.t_future < 0:
            problems.append("t_future must be non-negative")
        if self.block_reward < 0:
            problems.append("block_reward must be non-negative")
        if self.d_genesis_w <= 0 or self.d_genesis_s <= 0:
            problems.append("genesis difficulties must be positive")
        if self.d_min <= 0:
            problems.append("d_min must be positive")
        try:
            self.latency.validate()
        except ConfigError as exc:
            problems.append(str(exc))
        mode = self.slashing.split(":")[0]
        if mode not in ("off", "evidence", "dunkle"):
            problems.append(f"unknown slashing mode {self.slashing!r}")
        elif mode == "dunkle":
            parts = self.slashing.split(":")
            try:
                if len(parts) != 2 or float(parts[1]) < 0:
                    raise ValueError
            except ValueError:
                problems.append("dunkle slashing needs a non-negative multiple, dunkle:N")
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def difficulty_params(self) -> DifficultyParams:
        return DifficultyParams(
            target_gap=2.0 * self.t,
            alpha=self.alpha,
            d_min=self.d_min,
            d_genesis_w=self.d_genesis_w,
            d_genesis_s=self.d_genesis_s,
        )

    @property
    def total_stake(self) -> float:
        return sum(v for _, v in self.stakers)

    @property
    def total_hash(self) -> float:
        return sum(v for _, v in self.miners)

    def summary_dict(self) -> dict:
        return {
            "t": self.t,
            "alpha": self.alpha,
            "duration": self.duration,
            "stakers": [[a, v] for a, v in self.stakers],
            "miners": [[a, v] for a, v in self.miners],
            "maturation_height": self.maturation_height,
            "withdrawal_height": self.withdrawal_height,
            "t_future": self.t_future,
            "latency": self.latency.spec_string(),
            "block_reward": self.block_reward,
            "rng_seed": self.rng_seed,
            "d_genesis_w": self.d_genesis_w,
            "d_genesis_s": self.d_genesis_s,
            "d_min": self.d_min,
            "slashing": self.slashing,
        }


def baseline_config(**overrides) -> SimConfig:
    """The flagship 30-day configuration: ten stakers against ten miners."""
    stakes = [160.0, 80.0, 40.0, 30.0, 20.0, 10.0, 10.0, 10.0, 10.0, 10.0]
    hashes = [16.0, 8.0, 4.0, 3.0, 2.0, 1.0, 1.0, 1.0, 1.0, 1.0]
    cfg = SimConfig(
        t=10.0,
        alpha=0.01,
        duration=30 * 86400.0,
        stakers=tuple((i, s) for i, s in enumerate(stakes)),
        miners=tuple((10 + i, h) for i, h in enumerate(hashes)),
        rng_seed=2,
    )
    return replace(cfg, **overrides) if overrides else cfg


def quick_config(**overrides) -> SimConfig:
    """A six-hour variant of the baseline for demos and determinism checks."""
    overrides.setdefault("duration", 6 * 3600.0)
    return baseline_config(**overrides)


def _parse_participants(raw: str, auto_start: int) -> Tuple[Tuple[int, float], ...]:
    entries = raw.replace(",", " ").split()
    out = []
    next_account = auto_start
    for entry in entries:
        if ":" in entry:
            acct_text, amount_text = entry.split(":", 1)
            account = int(acct_text)
            amount = float(amount_text)
        else:
            account = next_account
            amount = float(entry)
        next_account = max(next_account, account + 1)
        out.append((account, amount))
    return tuple(out)


def parse_config_file(path: str) -> SimConfig:
    """Read a flat key = value file into a :class:`SimConfig`.

    Unknown keys are errors.  ``stakers``/``miners`` take space- or
    comma-separated powers, either bare (accounts auto-assigned, stakers
    first) or as explicit ``account:power`` pairs.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc

    raw: Dict[str, str] = {}
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in text.split("=", 1))
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        raw[key] = value

    kwargs: Dict[str, object] = {}
    casts = {
        "t": float,
        "alpha": float,
        "duration": float,
        "maturation_height": int,
        "withdrawal_height": int,
        "t_future": float,
        "block_reward": float,
        "rng_seed": int,
        "d_genesis_w": float,
        "d_genesis_s": float,
        "d_min": float,
    }
    for key, value in raw.items():
        try:
            if key in casts:
                kwargs[key] = casts[key](value)
            elif key == "stakers":
                kwargs[key] = _parse_participants(value, auto_start=0)
            elif key == "miners":
                start = max((a + 1 for a, _ in kwargs.get("stakers", ())), default=0)
                kwargs[key] = _parse_participants(value, auto_start=start)
            elif key == "latency":
                kwargs[key] = LatencyModel.parse(value)
            elif key == "slashing":
                kwargs[key] = value
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})") from exc
    config = SimConfig(**kwargs)  # type: ignore[arg-type]
    config.validate()
    return config


# ---------------------------------------------------------------------------
# Engine


@dataclass(slots=True)
class _View:
    index: int
    tree: BlockTree
    # Blocks whose parent has not arrived yet, keyed by the missing parent.
    orphans: Dict[int, List[Block]] = field(default_factory=dict)


@dataclass(slots=True)
class _Producer:
    index: int
    view: int
    epoch: int = 0
    event_live: bool = False
    miner: Optional[MinerContext] = None
    rng: Optional[object] = None
    staker: Optional[StakerContext] = None
    slot: Optional[PosEligibility] = None


class _Engine:
    def __init__(self, config: SimConfig):
        self.config = config
        self.oracle = HashOracle(config.rng_seed)
        self.params = config.difficulty_params
        self.genesis = make_genesis(self.oracle)
        self.ledger = Ledger(config.maturation_height, config.withdrawal_height)
        for account, stake in config.stakers:
            self.ledger.grant_active(account, stake)

        self.observer = _View(0, self._new_tree())
        self.views = [self.observer]
        self.producers: List[_Producer] = []
        shared = config.latency.is_perfect
        for account, power in config.miners:
            view = self._bind_view(shared)
            self.producers.append(
                _Producer(
                    index=len(self.producers),
                    view=view,
                    miner=MinerContext(account, power),
                    rng=self.oracle.rng("miner", account),
                )
            )
        for account, _stake in config.stakers:
            view = self._bind_view(shared)
            self.producers.append(
                _Producer(
                    index=len(self.producers),
                    view=view,
                    staker=StakerContext(account, self.oracle.keypair(account)),
                )
            )
        self.by_view: Dict[int, List[_Producer]] = {}
        for p in self.producers:
            self.by_view.setdefault(p.view, []).append(p)

        self.latency_rng = self.oracle.rng("latency")
        self.heap: List[tuple] = []
        self._seq = 0
        self.now = 0.0
        self.produced = 0

    def _new_tree(self) -> BlockTree:
        return BlockTree(self.genesis, AdaptiveRule(self.params))

    def _bind_view(self, shared: bool) -> int:
        if shared:
            return 0
        view = _View(len(self.views), self._new_tree())
        self.views.append(view)
        return view.index

    # -- events ----------------------------------------------------------

    def _push(self, at: float, tag: str, payload: tuple) -> None:
        self._seq += 1
        heapq.heappush(self.heap, (at, self._seq, tag, payload))

    def _refresh(self, view: _View, now: float) -> None:
        """Re-arm production for every participant bound to ``view``."""
        if now > self.config.duration:
            return
        tip = view.tree.canonical_tip
        for p in self.by_view.get(view.index, ()):
            if p.miner is not None:
                d_w = view.tree.expected_difficulty(tip, BlockKind.POW)
                wait = pow_solve_time(p.miner, d_w, p.rng)
                p.epoch += 1
                p.event_live = True
                self._push(now + wait, "pow", (p.index, p.epoch))
            else:
                anchor = view.tree.seed_anchor(tip)
                d_s = view.tree.expected_difficulty(tip, BlockKind.POS)
                if (
                    p.event_live
                    and p.slot is not None
                    and p.slot.anchor_id == anchor.id
                    and p.slot.difficulty == d_s
                ):
                    continue  # context unchanged, pending slot still valid
                power = self.ledger.voting_power(
                    p.staker.account, view.tree.block(tip).height
                )
                slot = pos_eligibility(self.oracle, view.tree, tip, p.staker, power)
                p.slot = slot
                p.epoch += 1
                if math.isfinite(slot.eligible_at):
                    p.event_live = True
                    self._push(max(now, slot.eligible_at), "pos", (p.index, p.epoch))
                else:
                    p.event_live = False

    def _publish(self, producer: _Producer, block: Block, now: float) -> None:
        view = self.views[producer.view]
        before = view.tree.canonical_tip
        result = view.tree.import_block(block, now, self.config.t_future)
        assert result in (
            ImportResult.EXTENDED_CANONICAL,
            ImportResult.SIDE_CHAIN,
            ImportResult.REORG,
        ), f"own block import failed: {result}"
        self.produced += 1
        if view is not self.observer:
            self.observer.tree.import_block(block)
            for other in self.views[1:]:
                if other is view:
                    continue
                delay = self.config.latency.sample(self.latency_rng)
                self._push(now + delay, "deliver", (other.index, block))
        if view.tree.canonical_tip != before:
            self._refresh(view, now)

    def _receive(self, view: _View, block: Block, now: float) -> None:
        if block.id in view.tree:
            return
        if block.parent_id not in view.tree:
            view.orphans.setdefault(block.parent_id, []).append(block)
            return
        before = view.tree.canonical_tip
        result = view.tree.import_block(block, now, self.config.t_future)
        if result is ImportResult.REJECTED_FUTURE:
            self._push(block.timestamp - self.config.t_future, "wake", (view.index, block))
            return
        if result in (
            ImportResult.EXTENDED_CANONICAL,
            ImportResult.SIDE_CHAIN,
            ImportResult.REORG,
        ):
            waiting = view.orphans.pop(block.id, None)
            if waiting:
                for child in waiting:
                    self._receive(view, child, now)
            if view.tree.canonical_tip != before:
                self._refresh(view, now)

    def _fire_pow(self, p: _Producer, now: float) -> None:
        view = self.views[p.view]
        parent = view.tree.canonical_tip
        block = build_pow_block(self.oracle, view.tree, parent, p.miner, solved_at=now)
        self._publish(p, block, now)

    def _fire_pos(self, p: _Producer, now: float) -> None:
        view = self.views[p.view]
        parent = view.tree.canonical_tip
        power = self.ledger.voting_power(p.staker.account, view.tree.block(parent).height)
        block = forge_pos_block(
            self.oracle, view.tree, parent, p.staker, power, now=now
        )
        self._publish(p, block, now)

    def run(self) -> None:
        for view in self.views:
            self._refresh(view, 0.0)
        duration = self.config.duration
        while self.heap:
            at = self.heap[0][0]
            draining = at > duration
            at, _seq, tag, payload = heapq.heappop(self.heap)
            self.now = at
            if tag in ("pow", "pos"):
                if draining:
                    continue  # production stops at the horizon
                index, epoch = payload
                p = self.producers[index]
                if epoch != p.epoch:
                    continue
                p.event_live = False
                if tag == "pow":
                    self._fire_pow(p, at)
                else:
                    self._fire_pos(p, at)
            elif tag == "deliver":
                view_index, block = payload
                self._receive(self.views[view_index], block, at)
            elif tag == "wake":
                view_index, block = payload
                self._receive(self.views[view_index], block, at)


# ---------------------------------------------------------------------------
# Reports


@dataclass
class SimReport:
    """Outcome of one run, with the observer tree attached for inspection."""

    config: SimConfig
    total_blocks: int
    pow_blocks: int
    pos_blocks: int
    stored_blocks: int
    orphan_count: int
    canonical_height: int
    td_w: float
    td_s: float
    interarrival_all: List[float]
    interarrival_pow: List[float]
    interarrival_pos: List[float]
    rewards_pow: Dict[int, float]
    rewards_pos: Dict[int, float]
    difficulty_trace_w: List[float]
    difficulty_trace_s: List[float]
    ratio_samples: List[float]
    seconds_histogram: Dict[int, int]
    runtime_seconds: float
    evidence: Optional[list] = None
    dunkle_net: Optional[Dict[int, float]] = None
    tree: Optional[BlockTree] = None
    ledger_snapshot: Optional[dict] = None

    @property
    def rewards(self) -> Dict[int, float]:
        combined = dict(self.rewards_pow)
        for account, amount in self.rewards_pos.items():
            combined[account] = combined.get(account, 0.0) + amount
        return combined

    def _class_summary(self, samples: List[float]) -> dict:
        if len(samples) < stats.MIN_FIT_SAMPLES:
            return {"count": len(samples)}
        fit = stats.fit_exponential(samples)
        return {
            "count": fit.sample_count,
            "mean": fit.mean,
            "std": fit.std,
            "rate": fit.rate,
            "ks": fit.ks_statistic,
            "ks_critical_1pct": stats.ks_critical(fit.sample_count),
        }

    def to_summary_dict(self) -> dict:
        ratio_mean = (
            float(np.mean(self.ratio_samples)) if self.ratio_samples else None
        )
        out = {
            "config": self.config.summary_dict(),
            "blocks": {
                "total": self.total_blocks,
                "pow": self.pow_blocks,
                "pos": self.pos_blocks,
                "stored": self.stored_blocks,
                "orphaned": self.orphan_count,
                "canonical_height": self.canonical_height,
            },
            "weights": {
                "td_w": self.td_w,
                "td_s": self.td_s,
                "product": self.td_w * self.td_s,
            },
            "interarrivals": {
                "all": self._class_summary(self.interarrival_all),
                "pow": self._class_summary(self.interarrival_pow),
                "pos": self._class_summary(self.interarrival_pos),
            },
            "difficulty": {
                "final_w": self.difficulty_trace_w[-1] if self.difficulty_trace_w else None,
                "final_s": self.difficulty_trace_s[-1] if self.difficulty_trace_s else None,
                "ratio_mean_post_warmup": ratio_mean,
                "warmup_blocks": WARMUP_BLOCKS,
            },
            "rewards": {
                "pow": {str(a): v for a, v in sorted(self.rewards_pow.items())},
                "pos": {str(a): v for a, v in sorted(self.rewards_pos.items())},
                "total": sum(self.rewards_pow.values()) + sum(self.rewards_pos.values()),
            },
            "orphan_proxy": orphan_proxy(self),
            "seconds_histogram": {str(k): v for k, v in sorted(self.seconds_histogram.items())},
        }
        if self.evidence is not None:
            out["slashing"] = {
                "mode": self.config.slashing,
                "evidence_count": len(self.evidence),
            }
            if self.dunkle_net is not None:
                out["slashing"]["dunkle_net"] = {
                    str(a): v for a, v in sorted(self.dunkle_net.items())
                }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_summary_dict(), sort_keys=True, indent=2) + "\n"


def run(config: SimConfig) -> SimReport:
    """Run one simulation to its horizon and summarize the observer view."""
    config.validate()
    started = time.perf_counter()
    engine = _Engine(config)
    engine.run()
    return _build_report(engine, time.perf_counter() - started)


def _build_report(engine: _Engine, runtime: float) -> SimReport:
    config = engine.config
    tree = engine.observer.tree
    chain = tree.canonical_chain()
    blocks = chain[1:]  # genesis is not a produced block

    ts_all: List[float] = []
    ts_pow: List[float] = []
    ts_pos: List[float] = []
    rewards_pow: Dict[int, float] = {a: 0.0 for a, _ in config.miners}
    rewards_pos: Dict[int, float] = {a: 0.0 for a, _ in config.stakers}
    trace_w: List[float] = []
    trace_s: List[float] = []
    ratio_samples: List[float] = []
    current_w = config.d_genesis_w
    current_s = config.d_genesis_s

    for b in blocks:
        ts_all.append(b.timestamp)
        if b.kind is BlockKind.POW:
            ts_pow.append(b.timestamp)
            trace_w.append(b.difficulty)
            current_w = b.difficulty
            rewards_pow[b.producer] = rewards_pow.get(b.producer, 0.0) + config.block_reward
        else:
            ts_pos.append(b.timestamp)
            trace_s.append(b.difficulty)
            current_s = b.difficulty
            rewards_pos[b.producer] = rewards_pos.get(b.producer, 0.0) + config.block_reward
        if len(trace_w) > WARMUP_BLOCKS and len(trace_s) > WARMUP_BLOCKS:
            ratio_samples.append(current_s / current_w)

    def gaps(ts: List[float]) -> List[float]:
        if len(ts) < 2:
            return []
        ordered = sorted(ts)
        return [b - a for a, b in zip(ordered, ordered[1:])]

    hist = Counter(int(math.floor(t)) for t in ts_all)
    seconds_histogram = Counter(hist.values())

    for b in blocks:
        engine.ledger.credit(b.producer, config.block_reward)

    tip_weight = tree.chain_weight(tree.canonical_tip)
    report = SimReport(
        config=config,
        total_blocks=len(blocks),
        pow_blocks=len(ts_pow),
        pos_blocks=len(ts_pos),
        stored_blocks=len(tree) - 1,
        orphan_count=len(tree) - 1 - len(blocks),
        canonical_height=blocks[-1].height if blocks else 0,
        td_w=tip_weight.td_w,
        td_s=tip_weight.td_s,
        interarrival_all=gaps(ts_all),
        interarrival_pow=gaps(ts_pow),
        interarrival_pos=gaps(ts_pos),
        rewards_pow=rewards_pow,
        rewards_pos=rewards_pos,
        difficulty_trace_w=trace_w,
        difficulty_trace_s=trace_s,
        ratio_samples=ratio_samples,
        seconds_histogram=dict(seconds_histogram),
        runtime_seconds=runtime,
        tree=tree,
        ledger_snapshot=engine.ledger.snapshot(),
    )

    mode = config.slashing.split(":")[0]
    if mode in ("evidence", "dunkle"):
        from . import slashing as slashing_mod

        rows = list(tree.dump_rows())
        report.evidence = slashing_mod.detect_all(rows)
        if mode == "dunkle":
            multiple = float(config.slashing.split(":")[1])
            report.dunkle_net = slashing_mod.dunkle_settlement_from_rows(
                rows, config.block_reward, multiple
            )
    return report


# ---------------------------------------------------------------------------
# Derived metrics


def poisson_collision_fraction(rate: float) -> float:
    """Expected fraction of Poisson arrivals sharing a 1 s slot with an earlier one.

    For arrivals at ``rate`` per second, a unit interval holds ``rate`` blocks
    in expectation of which ``1 - exp(-rate)`` are firsts; the rest would lose
    a propagation race in a real network.
    """
    if rate <= 0:
        raise ValueError("rate must be positive")
    return (rate - (1.0 - math.exp(-rate))) / rate


def orphan_proxy(report: SimReport) -> float:
    """Estimated (perfect latency) or actual (latency model) orphan fraction."""
    if report.total_blocks == 0:
        return 0.0
    if report.config.latency.is_perfect:
        extra = sum((n - 1) * seconds for n, seconds in report.seconds_histogram.items())
        return extra / report.total_blocks
    return report.orphan_count / max(report.stored_blocks, 1)


def summarize_interarrivals(report: SimReport) -> Dict[str, stats.FitResult]:
    """Exponential fits per block class; classes too small to fit are skipped."""
    out = {}
    for name, samples in (
        ("all", report.interarrival_all),
        ("pow", report.interarrival_pow),
        ("pos", report.interarrival_pos),
    ):
        if len(samples) >= stats.MIN_FIT_SAMPLES:
            out[name] = stats.fit_exponential(samples)
    return out


@dataclass(frozen=True, slots=True)
class FairnessRow:
    account: int
    block_class: str
    power_share: float
    reward_share: float


def fairness_rows(report: SimReport) -> List[FairnessRow]:
    config = report.config
    rows = []
    for cls, participants, rewards in (
        ("pos", config.stakers, report.rewards_pos),
        ("pow", config.miners, report.rewards_pow),
    ):
        total_power = sum(v for _, v in participants)
        total_reward = sum(rewards.values())
        if total_power <= 0 or total_reward <= 0:
            continue
        for account, power in participants:
            rows.append(
                FairnessRow(
                    account=account,
                    block_class=cls,
                    power_share=power / total_power,
                    reward_share=rewards.get(account, 0.0) / total_reward,
                )
            )
    return rows


def fairness_scores(report: SimReport, min_share: float = 0.03) -> Dict[str, float]:
    """Per-class proportionality scores (worst relative deviation)."""
    config = report.config
    scores = {}
    for cls, participants, rewards in (
        ("pos", config.stakers, report.rewards_pos),
        ("pow", config.miners, report.rewards_pow),
    ):
        if not participants:
            continue
        power = [v for _, v in participants]
        reward = [rewards.get(a, 0.0) for a, _ in participants]
        if sum(reward) <= 0:
            continue
        scores[cls] = stats.proportionality_score(power, reward, min_share=min_share)
    return scores


# ---------------------------------------------------------------------------
# Artifacts


ARTIFACT_NAMES = ("report.json", "interarrivals.csv", "rewards.csv",
                  "difficulty.csv", "blocks.jsonl")


def write_artifacts(report: SimReport, outdir: str, force: bool = False) -> List[str]:
    """Write the run artifacts; refuses to overwrite without ``force``."""
    os.makedirs(outdir, exist_ok=True)
    existing = [n for n in ARTIFACT_NAMES if os.path.exists(os.path.join(outdir, n))]
    if existing and not force:
        raise FileExistsError(
            f"artifacts already present in {outdir} ({', '.join(existing)}); "
            "pass force to overwrite"
        )
    paths = []

    path = os.path.join(outdir, "report.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    paths.append(path)

    path = os.path.join(outdir, "interarrivals.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("class,gap_seconds\n")
        for cls, samples in (
            ("all", report.interarrival_all),
            ("pow", report.interarrival_pow),
            ("pos", report.interarrival_pos),
        ):
            for gap in samples:
                fh.write(f"{cls},{gap!r}\n")
    paths.append(path)

    path = os.path.join(outdir, "rewards.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("account,class,power,reward\n")
        for row in fairness_rows(report):
            power = dict(report.config.stakers if row.block_class == "pos"
                         else report.config.miners)[row.account]
            reward = (report.rewards_pos if row.block_class == "pos"
                      else report.rewards_pow).get(row.account, 0.0)
            fh.write(f"{row.account},{row.block_class},{power!r},{reward!r}\n")
    paths.append(path)

    path = os.path.join(outdir, "difficulty.csv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("index,kind,difficulty\n")
        for kind, trace in (("pow", report.difficulty_trace_w),
                            ("pos", report.difficulty_trace_s)):
            for index, value in enumerate(trace):
                fh.write(f"{index},{kind},{value!r}\n")
    paths.append(path)

    path = os.path.join(outdir, "blocks.jsonl")
    with open(path, "w", encoding="utf-8") as fh:
        if report.tree is not None:
            report.tree.write_jsonl(fh)
    paths.append(path)
    return paths
