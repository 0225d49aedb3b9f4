"""Block tree and fork choice for a dual-difficulty chain.

Every block is either mined (PoW) or forged (PoS) and carries the difficulty
of its own kind.  A chain accumulates the two kinds separately into a weight
pair ``(td_w, td_s)``; the canonical chain is the tip maximizing the product
``td_w * td_s``, with exact ties resolved in favor of the first-seen tip.
Multiplying the two totals means neither resource dominates: growing the
product requires contributions from both work and stake.

Genesis is its own block kind.  It carries the base weight pair and the seed
that anchors the first staking round, but it counts as neither a PoW nor a PoS
ancestor for difficulty retargeting, so both kinds bootstrap symmetrically.

The tree keeps side branches and orphaned blocks: misbehavior detection needs
them after the fact.  Rejected-as-future blocks are not stored; the caller may
re-deliver them once its clock catches up.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Optional, Tuple

from .crypto import Digest, HashOracle


class BlockKind(Enum):
    POW = "pow"
    POS = "pos"
    GENESIS = "genesis"


@dataclass(frozen=True, slots=True)
class Block:
    """An immutable block record.

    ``seed`` is present exactly on PoS and genesis blocks.  ``provenance`` is
    analysis metadata (honest vs. named attack strategies); it takes no part
    in consensus and is excluded from dumps.
    """

    id: int
    parent_id: Optional[int]
    kind: BlockKind
    difficulty: float
    timestamp: float
    height: int
    producer: Optional[int]
    seed: Optional[Digest] = None
    state_root: int = 0
    tx_root: int = 0
    txs: tuple = ()
    provenance: str = "honest"


@dataclass(frozen=True, slots=True)
class WeightPair:
    """Cumulative per-kind difficulty totals along one chain."""

    td_w: float
    td_s: float

    @property
    def product(self) -> float:
        return self.td_w * self.td_s

    def child(self, kind: BlockKind, difficulty: float) -> "WeightPair":
        if kind is BlockKind.POW:
            return WeightPair(self.td_w + difficulty, self.td_s)
        if kind is BlockKind.POS:
            return WeightPair(self.td_w, self.td_s + difficulty)
        raise ValueError("genesis weight is fixed at tree construction")


class ImportResult(Enum):
    EXTENDED_CANONICAL = "extended_canonical"
    SIDE_CHAIN = "side_chain"
    REORG = "reorg"
    REJECTED_FUTURE = "rejected_future"
    INVALID = "invalid"
    DUPLICATE = "duplicate"


@dataclass(slots=True)
class TreeNode:
    block: Block
    weight: WeightPair
    arrival_order: int
    children: List[int] = field(default_factory=list)
    # Nearest same-kind block at or above this node's parent, by id.
    # None when no such ancestor exists (genesis matches neither kind).
    pow_anchor: Optional[int] = None
    pos_anchor: Optional[int] = None


def make_genesis(oracle: HashOracle, timestamp: float = 0.0) -> Block:
    """The genesis block: seed anchor for round one, base of both weights."""
    from .crypto import genesis_seed

    return Block(
        id=oracle.hash("genesis-id").value,
        parent_id=None,
        kind=BlockKind.GENESIS,
        difficulty=1.0,
        timestamp=timestamp,
        height=0,
        producer=None,
        seed=genesis_seed(oracle),
    )


class BlockTree:
    """All known blocks of one node's view, plus the canonical tip.

    ``rule`` supplies the expected difficulty for a new block given its parent
    context; imports carrying any other difficulty are invalid.  Scripted
    scenarios may pass a rule that skips the check.
    """

    def __init__(self, genesis: Block, rule, base_weight: Tuple[float, float] = (1.0, 1.0)):
        if genesis.kind is not BlockKind.GENESIS:
            raise ValueError("tree must be rooted at a genesis block")
        self.rule = rule
        self.genesis_id = genesis.id
        root = TreeNode(
            block=genesis,
            weight=WeightPair(*base_weight),
            arrival_order=0,
        )
        self.nodes: Dict[int, TreeNode] = {genesis.id: root}
        # Insertion-ordered for deterministic fork choice iteration.
        self.tips: Dict[int, None] = {genesis.id: None}
        self.canonical_tip: int = genesis.id
        self._arrivals = 0

    # -- queries ---------------------------------------------------------

    def __contains__(self, block_id: int) -> bool:
        return block_id in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def block(self, block_id: int) -> Block:
        return self.nodes[block_id].block

    def node(self, block_id: int) -> TreeNode:
        return self.nodes[block_id]

    def chain_weight(self, tip_id: int) -> WeightPair:
        if tip_id not in self.nodes:
            raise KeyError(f"unknown block {tip_id:#x}")
        return self.nodes[tip_id].weight

    def weight_product(self, tip_id: int) -> float:
        return self.chain_weight(tip_id).product

    def last_two_of_kind(
        self, parent_id: int, kind: BlockKind
    ) -> Tuple[Optional[Block], Optional[Block]]:
        """Latest and second-latest same-kind blocks at or above ``parent_id``."""
        anchor = self._anchor(parent_id, kind)
        if anchor is None:
            return None, None
        latest = self.nodes[anchor]
        prev_anchor = self._anchor(latest.block.parent_id, kind)
        if prev_anchor is None:
            return latest.block, None
        return latest.block, self.nodes[prev_anchor].block

    def _anchor(self, block_id: Optional[int], kind: BlockKind) -> Optional[int]:
        if block_id is None:
            return None
        node = self.nodes[block_id]
        if kind is BlockKind.POW:
            return block_id if node.block.kind is BlockKind.POW else node.pow_anchor
        return block_id if node.block.kind is BlockKind.POS else node.pos_anchor

    def seed_anchor(self, block_id: int) -> Block:
        """Last seed-carrying block at or above ``block_id`` (PoS, else genesis)."""
        node = self.nodes[block_id]
        if node.block.seed is not None:
            return node.block
        anchor = node.pos_anchor
        if anchor is None:
            return self.nodes[self.genesis_id].block
        return self.nodes[anchor].block

    def expected_difficulty(self, parent_id: int, kind: BlockKind) -> Optional[float]:
        return self.rule.expected(self, parent_id, kind)

    def fork_choice(self) -> int:
        """Tip maximizing the weight product; exact ties go to first seen."""
        best_id = None
        best_product = -math.inf
        best_arrival = math.inf
        for tip_id in self.tips:
            node = self.nodes[tip_id]
            product = node.weight.product
            if product > best_product or (
                product == best_product and node.arrival_order < best_arrival
            ):
                best_id = tip_id
                best_product = product
                best_arrival = node.arrival_order
        assert best_id is not None
        return best_id

    # -- import ----------------------------------------------------------

    def import_block(
        self,
        block: Block,
        local_clock: float = math.inf,
        t_future: float = math.inf,
    ) -> ImportResult:
        if block.id in self.nodes:
            return ImportResult.DUPLICATE
        if block.parent_id is None or block.parent_id not in self.nodes:
            return ImportResult.INVALID
        if block.kind is BlockKind.GENESIS:
            return ImportResult.INVALID
        if not (block.difficulty > 0):
            return ImportResult.INVALID
        if (block.seed is not None) != (block.kind is BlockKind.POS):
            return ImportResult.INVALID
        parent = self.nodes[block.parent_id]
        if block.height != parent.block.height + 1:
            return ImportResult.INVALID
        expected = self.expected_difficulty(block.parent_id, block.kind)
        if expected is not None and block.difficulty != expected:
            return ImportResult.INVALID
        if block.timestamp > local_clock + t_future:
            # Too far ahead of this node's clock; not stored, may come back.
            return ImportResult.REJECTED_FUTURE

        self._arrivals += 1
        node = TreeNode(
            block=block,
            weight=parent.weight.child(block.kind, block.difficulty),
            arrival_order=self._arrivals,
            pow_anchor=self._anchor(block.parent_id, BlockKind.POW),
            pos_anchor=self._anchor(block.parent_id, BlockKind.POS),
        )
        self.nodes[block.id] = node
        parent.children.append(block.id)
        self.tips.pop(block.parent_id, None)
        self.tips[block.id] = None

        old_tip = self.canonical_tip
        new_tip = self.fork_choice()
        self.canonical_tip = new_tip
        if new_tip == block.id:
            if block.parent_id == old_tip:
                return ImportResult.EXTENDED_CANONICAL
            return ImportResult.REORG
        return ImportResult.SIDE_CHAIN

    # -- traversal and export -------------------------------------------

    def path_to_genesis(self, tip_id: int) -> List[Block]:
        path = []
        cursor: Optional[int] = tip_id
        while cursor is not None:
            node = self.nodes[cursor]
            path.append(node.block)
            cursor = node.block.parent_id
        return path

    def canonical_chain(self) -> List[Block]:
        """Genesis-first list of canonical blocks."""
        chain = self.path_to_genesis(self.canonical_tip)
        chain.reverse()
        return chain

    def canonical_ids(self) -> set:
        return {b.id for b in self.path_to_genesis(self.canonical_tip)}

    def dump_rows(self) -> Iterator[dict]:
        """One plain dict per block, in arrival order, genesis first."""
        ordered = sorted(self.nodes.values(), key=lambda n: n.arrival_order)
        for node in ordered:
            b = node.block
            yield {
                "id": format(b.id, "064x"),
                "parent": None if b.parent_id is None else format(b.parent_id, "064x"),
                "kind": b.kind.value,
                "difficulty": b.difficulty,
                "timestamp": b.timestamp,
                "height": b.height,
                "producer": b.producer,
                "td_w": node.weight.td_w,
                "td_s": node.weight.td_s,
            }

    def write_jsonl(self, fileobj) -> None:
        for row in self.dump_rows():
            fileobj.write(json.dumps(row, sort_keys=True))
            fileobj.write("\n")
