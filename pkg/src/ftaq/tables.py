"""Bit-parallel exhaustive evaluation.

A *table* is a Python int with one bit per status vector over an ordered
leaf list: bit ``i`` holds the value at the vector whose binary expansion is
``i``, first leaf most significant.
"""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from .errors import FormulaError, GuardExceededError
from .model import DEFAULT_MAX_LEAVES, StatusVector, TreeModel


class BoolSpace:
    def __init__(self, leaves, *, max_leaves: int | None = None, force: bool = False):
        self.leaves = tuple(leaves)
        n = len(self.leaves)
        limit = DEFAULT_MAX_LEAVES if max_leaves is None else max_leaves
        if n > limit and not force:
            raise GuardExceededError(n, limit)
        self.n = n
        self.size = 1 << n
        self.full = (1 << self.size) - 1
        self.position = {leaf: j for j, leaf in enumerate(self.leaves)}
        self._masks: dict[str, int] = {}
        for j, leaf in enumerate(self.leaves):
            w = 1 << (n - 1 - j)
            block = ((1 << w) - 1) << w
            self._masks[leaf] = block * (self.full // ((1 << (2 * w)) - 1))

    def weight(self, leaf: str) -> int:
        return 1 << (self.n - 1 - self.position[leaf])

    def leaf_mask(self, leaf: str) -> int:
        return self._masks[leaf]

    def const(self, value) -> int:
        return self.full if value else 0

    def neg(self, table: int) -> int:
        return self.full & ~table

    def set_to_zero(self, table: int, leaf: str) -> int:
        """Table of the function with ``leaf`` forced to 0."""
        low = table & ~self._masks[leaf]
        return low | (low << self.weight(leaf))

    def first(self, table: int) -> int | None:
        """Index of the witness vector: fewest failed leaves, then lexicographic ids.

        Among equally sized failed sets the lexicographically smallest sorted id
        tuple is the numerically largest index.
        """
        if not table:
            return None
        idx = self.indices(table)
        sizes = np.bitwise_count(idx)
        return int(idx[sizes == sizes.min()].max())

    def vector(self, index: int) -> StatusVector:
        return StatusVector.from_index(self.leaves, index)

    def to_bool_array(self, table: int) -> np.ndarray:
        nbytes = max(1, (self.size + 7) // 8)
        raw = np.frombuffer(table.to_bytes(nbytes, "little"), dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")[: self.size].astype(bool)

    def from_bool_array(self, bits: np.ndarray) -> int:
        packed = np.packbits(np.asarray(bits, dtype=bool), bitorder="little")
        return int.from_bytes(packed.tobytes(), "little")

    def indices(self, table: int) -> np.ndarray:
        return np.flatnonzero(self.to_bool_array(table))

    def failed_sets(self, table: int) -> list[frozenset[str]]:
        leaves = self.leaves
        n = self.n
        out = []
        for i in self.indices(table):
            i = int(i)
            out.append(frozenset(leaves[j] for j in range(n) if (i >> (n - 1 - j)) & 1))
        return out

    def bit_columns(self) -> np.ndarray:
        """``(n, 2**n)`` array of leaf bits per vector index."""
        idx = np.arange(self.size, dtype=np.int64)
        shifts = np.arange(self.n - 1, -1, -1, dtype=np.int64)[:, None]
        return ((idx[None, :] >> shifts) & 1).astype(bool)

    def product_weights(self, probs: Mapping[str, float]) -> np.ndarray:
        weights = np.ones(1)
        for leaf in self.leaves:
            p = float(probs[leaf])
            weights = np.kron(weights, np.array([1.0 - p, p]))
        return weights


class NodeTables:
    """Structure-function tables of model nodes over a :class:`BoolSpace`.

    ``dual=True`` builds the tables of ``f -> structure(complement(f))``,
    which is what path-set reasoning needs.
    """

    def __init__(self, model: TreeModel, space: BoolSpace):
        self.model = model
        self.space = space
        self._cache: dict[tuple, int] = {}

    def table(self, element: str, evidence: Mapping[str, int] | None = None,
              dual: bool = False) -> int:
        key_ev = tuple(sorted((evidence or {}).items()))
        return self._table(element, key_ev, dict(key_ev), dual)

    def _table(self, nid: str, key_ev, evidence, dual) -> int:
        if nid in evidence:
            return self.space.const(evidence[nid])
        key = (nid, key_ev, dual)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        node = self.model[nid]
        space = self.space
        if node.is_leaf:
            if nid not in space.position:
                raise FormulaError(f"{nid} is outside the quantified leaf set")
            mask = space.leaf_mask(nid)
            result = space.neg(mask) if dual else mask
        elif node.op == "and":
            result = space.full
            for child in node.children:
                result &= self._table(child, key_ev, evidence, dual)
        else:
            result = 0
            for child in node.children:
                result |= self._table(child, key_ev, evidence, dual)
        self._cache[key] = result
        return result
