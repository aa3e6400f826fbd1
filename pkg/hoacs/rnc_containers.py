"""
Lookup structures keyed by encoded values.

RncTree orders keys with the encoded less-than, so lookups are logarithmic
in a balanced tree without ever decoding a key. RncGrid indexes a dense
array by the canonical residues directly: one array access per lookup at the cost
of M cells. LinearScanTable is the equality-only baseline.
"""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from dataclasses import dataclass
import logging
from typing import Any

import numpy as np

from hoacs.errors import OutOfRange
from hoacs.events import emit_word, event_bus, intrinsic
from hoacs.rnc_core import EncodedValue, ModuliSet, check_bound, encode
from hoacs.rnc_ops import eq_enc, less_than

logger = logging.getLogger(__name__)

# Dense grids above this many cells are refused.
GRID_CELL_LIMIT = 1 << 24


@dataclass
class _Node:
    key: EncodedValue
    payload: Any
    left: _Node | None = None
    right: _Node | None = None


class RncTree:
    """Unbalanced binary search tree; ``comparisons`` counts encoded comparisons."""

    def __init__(self, moduli: ModuliSet) -> None:
        self.moduli = moduli
        self.root: _Node | None = None
        self.size = 0
        self.comparisons = 0

    def __len__(self) -> int:
        return self.size

    def _equal(self, a: EncodedValue, b: EncodedValue) -> bool:
        self.comparisons += 1
        return eq_enc(a, b, self.moduli)

    def _less(self, a: EncodedValue, b: EncodedValue) -> bool:
        self.comparisons += 1
        return less_than(a, b, self.moduli)

    def insert(self, key: EncodedValue, payload: Any) -> None:
        check_bound(key, self.moduli)
        if self.root is None:
            self.root = _Node(key, payload)
            self.size = 1
            return
        cur = self.root
        while True:
            if self._equal(key, cur.key):
                cur.payload = payload
                return
            if self._less(key, cur.key):
                if cur.left is None:
                    cur.left = _Node(key, payload)
                    break
                cur = cur.left
            else:
                if cur.right is None:
                    cur.right = _Node(key, payload)
                    break
                cur = cur.right
        self.size += 1

    def get(self, key: EncodedValue) -> Any | None:
        check_bound(key, self.moduli)
        cur = self.root
        while cur is not None:
            if self._equal(key, cur.key):
                return cur.payload
            cur = cur.left if self._less(key, cur.key) else cur.right
        return None

    def inorder(self) -> Iterator[tuple[EncodedValue, Any]]:
        def _walk(node: _Node | None) -> Iterator[tuple[EncodedValue, Any]]:
            if node is None:
                return
            yield from _walk(node.left)
            yield node.key, node.payload
            yield from _walk(node.right)

        yield from _walk(self.root)


class RncGrid:
    def __init__(self, moduli: ModuliSet) -> None:
        if moduli.dynamic_range > GRID_CELL_LIMIT:
            raise OutOfRange(
                f"grid over {moduli} needs {moduli.dynamic_range} cells, limit is {GRID_CELL_LIMIT}"
            )
        self.moduli = moduli
        self.cells = np.full(moduli.moduli, None, dtype=object)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells.shape

    def index(self, key: EncodedValue) -> tuple[int, ...]:
        check_bound(key, self.moduli)
        cell = key.canonical_components()
        for i in cell:
            emit_word(i, 8, "grid_index")
        return cell

    def put(self, key: EncodedValue, payload: Any) -> None:
        self.cells[self.index(key)] = payload

    def get(self, key: EncodedValue) -> Any | None:
        return self.cells[self.index(key)]


class LinearScanTable:
    """Equality-scan baseline with the same interface as RncTree."""

    def __init__(self, moduli: ModuliSet) -> None:
        self.moduli = moduli
        self.entries: list[tuple[EncodedValue, Any]] = []
        self.comparisons = 0

    def __len__(self) -> int:
        return len(self.entries)

    def insert(self, key: EncodedValue, payload: Any) -> None:
        check_bound(key, self.moduli)
        for i, (k, _) in enumerate(self.entries):
            self.comparisons += 1
            if eq_enc(key, k, self.moduli):
                self.entries[i] = (k, payload)
                return
        self.entries.append((key, payload))

    def get(self, key: EncodedValue) -> Any | None:
        check_bound(key, self.moduli)
        for k, payload in self.entries:
            self.comparisons += 1
            if eq_enc(key, k, self.moduli):
                return payload
        return None


@intrinsic("tree_insert")
def tree_insert(tree: RncTree, key: EncodedValue, payload: Any) -> None:
    tree.insert(key, payload)


@intrinsic("tree_get")
def tree_get(tree: RncTree, key: EncodedValue) -> Any | None:
    return tree.get(key)


@intrinsic("grid_put")
def grid_put(grid: RncGrid, key: EncodedValue, payload: Any) -> None:
    grid.put(key, payload)


@intrinsic("grid_get")
def grid_get(grid: RncGrid, key: EncodedValue) -> Any | None:
    return grid.get(key)


def grid_from_table(table: Sequence[Any], moduli: ModuliSet) -> RncGrid:
    if len(table) > moduli.dynamic_range:
        raise OutOfRange(f"{len(table)} entries do not fit the dynamic range {moduli.dynamic_range}")
    grid = RncGrid(moduli)
    with event_bus.suspended():
        for i, payload in enumerate(table):
            grid.put(encode(i, moduli), payload)
    logger.debug("built %s grid from %d entries", "x".join(map(str, grid.shape)), len(table))
    return grid


def tree_from_table(table: Sequence[Any], moduli: ModuliSet) -> RncTree:
    """Insert entries median-first so the tree is balanced."""
    if len(table) > moduli.dynamic_range:
        raise OutOfRange(f"{len(table)} entries do not fit the dynamic range {moduli.dynamic_range}")
    tree = RncTree(moduli)
    with event_bus.suspended():
        pending = [(0, len(table))]
        while pending:
            lo, hi = pending.pop()
            if lo >= hi:
                continue
            mid = (lo + hi) // 2
            tree.insert(encode(mid, moduli), table[mid])
            pending.extend([(lo, mid), (mid + 1, hi)])
    tree.comparisons = 0
    logger.debug("built tree of %d entries", len(tree))
    return tree
