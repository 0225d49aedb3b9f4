"""Block production for miners and stakers.

Mining is collapsed to its event-level law: at difficulty ``d_w``, a miner
with hash power ``h`` (attempts per second) solves after an exponential wait
with rate ``h / d_w``, drawn from the miner's private RNG stream.

Forging is deterministic per chain context.  A staker signs the last seed on
the chain being extended, hashes the signature into a unit value ``u`` in
(0, 1], and becomes eligible after

    delay = d_s * |ln u| / V

seconds measured from the last PoS block's timestamp (genesis anchors round
one).  Since ``|ln u|`` is standard exponential for uniform ``u``, the delay
is exponential with rate ``V / d_s``, so forging wins are proportional to
voting power and splitting stake across accounts buys nothing.  The forged
block's timestamp is the eligibility instant itself, recomputable by any
validator from the seed, so stakers cannot steer their next draw by shading
timestamps.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional

from .chain import Block, BlockKind, BlockTree
from .crypto import Digest, HashOracle, KeyPair


class EligibilityError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class MinerContext:
    account: int
    hash_power: float


@dataclass(frozen=True, slots=True)
class StakerContext:
    account: int
    key: KeyPair


@dataclass(frozen=True, slots=True)
class PosEligibility:
    """One staker's forging slot for a given chain context."""

    seed: Digest
    delay: float
    eligible_at: float
    anchor_id: int
    anchor_timestamp: float
    difficulty: float


def pow_solve_time(miner: MinerContext, d_w: float, rng: random.Random) -> float:
    """Exponential solve wait at rate ``hash_power / d_w``."""
    if d_w <= 0:
        raise ValueError("work difficulty must be positive")
    if miner.hash_power <= 0:
        raise ValueError("hash power must be positive")
    return rng.expovariate(miner.hash_power / d_w)

def pos_delay(oracle: HashOracle, signed_seed: Digest, d_s: float, voting_power: float) -> float:
    """Forging delay for a signed seed; infinite for zero voting power."""
    if d_s <= 0:
        raise ValueError("stake difficulty must be positive")
    if voting_power < 0:
        raise ValueError("voting power must be non-negative")
    if voting_power == 0:
        return math.inf
    unit = oracle.hash(signed_seed).unit
    return d_s * abs(math.log(unit)) / voting_power


def pos_eligibility(
    oracle: HashOracle,
    tree: BlockTree,
    parent_id: int,
    staker: StakerContext,
    voting_power: float,
) -> PosEligibility:
    """Evaluate the staker's slot on the chain ending at ``parent_id``.

    The eligibility delay uses the difficulty the new block itself will
    carry, and is anchored at the timestamp of the chain's last PoS block.
    """
    anchor = tree.seed_anchor(parent_id)
    assert anchor.seed is not None
    signed = oracle.sign_seed(anchor.seed, staker.key.sk)
    difficulty = tree.expected_difficulty(parent_id, BlockKind.POS)
    if difficulty is None:
        raise EligibilityError("chain context does not define a stake difficulty")
    delay = pos_delay(oracle, signed, difficulty, voting_power)
    return PosEligibility(
        seed=signed,
        delay=delay,
        eligible_at=anchor.timestamp + delay,
        anchor_id=anchor.id,
        anchor_timestamp=anchor.timestamp,
        difficulty=difficulty,
    )


def _block_id(oracle: HashOracle, parent_id: int, kind: BlockKind, difficulty: float,
              timestamp: float, height: int, producer: int, seed: Optional[Digest]) -> int:
    parts = ["block-id", parent_id, kind, difficulty, timestamp, height, producer]
    if seed is not None:
        parts.append(seed)
    return oracle.hash(*parts).value


def forge_pos_block(
    oracle: HashOracle,
    tree: BlockTree,
    parent_id: int,
    staker: StakerContext,
    voting_power: float,
    now: Optional[float] = None,
    txs: tuple = (),
    provenance: str = "honest",
) -> Block:
    """Build the staker's PoS block on ``parent_id``.

    The timestamp is forced to the eligibility instant.  Passing ``now``
    enforces that the slot has arrived; forging ahead of it is reserved for
    flagged attack strategies.
    """
    slot = pos_eligibility(oracle, tree, parent_id, staker, voting_power)
    if not math.isfinite(slot.eligible_at):
        raise EligibilityError("zero voting power never becomes eligible")
    if now is not None and now < slot.eligible_at and provenance == "honest":
        raise EligibilityError("slot not reached; early forging is an attack behavior")
    parent = tree.block(parent_id)
    timestamp = slot.anchor_timestamp + slot.delay
    height = parent.height + 1
    return Block(
        id=_block_id(oracle, parent_id, BlockKind.POS, slot.difficulty, timestamp,
                     height, staker.account, slot.seed),
        parent_id=parent_id,
        kind=BlockKind.POS,
        difficulty=slot.difficulty,
        timestamp=timestamp,
        height=height,
        producer=staker.account,
        seed=slot.seed,
        txs=txs,
        provenance=provenance,
    )


def build_pow_block(
    oracle: HashOracle,
    tree: BlockTree,
    parent_id: int,
    miner: MinerContext,
    solved_at: float,
    txs: tuple = (),
    provenance: str = "honest",
) -> Block:
    """Build the miner's PoW block on ``parent_id``, stamped at solve time.

    The parent may have stopped being the canonical tip since mining began;
    importing such a block simply lands it on a side chain.
    """
    difficulty = tree.expected_difficulty(parent_id, BlockKind.POW)
    if difficulty is None:
        raise ValueError("chain context does not define a work difficulty")
    parent = tree.block(parent_id)
    height = parent.height + 1
    return Block(
        id=_block_id(oracle, parent_id, BlockKind.POW, difficulty, solved_at,
                     height, miner.account, None),
        parent_id=parent_id,
        kind=BlockKind.POW,
        difficulty=difficulty,
        timestamp=solved_at,
        height=height,
        producer=miner.account,
        seed=None,
        txs=txs,
        provenance=provenance,
    )


def verify_pos_block(
    oracle: HashOracle,
    tree: BlockTree,
    block: Block,
    producer_key: KeyPair,
    voting_power: float,
) -> bool:
    """Recompute a PoS block's seed and forced timestamp from its parent.

    Signature verification is modeled by recomputation: the simulation holds
    every key, so a block checks out iff its seed equals the signature of the
    parent chain's seed anchor under the producer's key and its timestamp
    equals the anchored eligibility instant.
    """
    if block.kind is not BlockKind.POS or block.parent_id is None:
        return False
    if block.parent_id not in tree:
        return False
    anchor = tree.seed_anchor(block.parent_id)
    assert anchor.seed is not None
    expected_seed = oracle.sign_seed(anchor.seed, producer_key.sk)
    if block.seed != expected_seed:
        return False
    delay = pos_delay(oracle, expected_seed, block.difficulty, voting_power)
    return block.timestamp == anchor.timestamp + delay
