"""Reduced ordered binary decision diagrams, just enough for probabilities.

Nodes are integers; ``0`` and ``1`` are the terminals.  Shared subtrees of the
fault tree become shared variables, so Shannon expansion over the diagram
yields exact probabilities without enumerating vectors.
"""

from __future__ import annotations

from collections.abc import Mapping


class BDD:
    def __init__(self, order):
        self.order = tuple(order)
        self.level = {var: i for i, var in enumerate(self.order)}
        terminal_level = len(self.order)
        # node -> (level, low, high)
        self._nodes: list[tuple[int, int, int]] = [(terminal_level, 0, 0), (terminal_level, 1, 1)]
        self._unique: dict[tuple[int, int, int], int] = {}
        self._ite_cache: dict[tuple[int, int, int], int] = {}

    FALSE = 0
    TRUE = 1

    def __len__(self) -> int:
        return len(self._nodes)

    def _mk(self, level: int, low: int, high: int) -> int:
        if low == high:
            return low
        key = (level, low, high)
        node = self._unique.get(key)
        if node is None:
            node = len(self._nodes)
            self._nodes.append(key)
            self._unique[key] = node
        return node

    def var(self, name: str) -> int:
        return self._mk(self.level[name], 0, 1)

    def const(self, value) -> int:
        return 1 if value else 0

    def _cofactors(self, u: int, level: int) -> tuple[int, int]:
        lvl, low, high = self._nodes[u]
        if lvl == level:
            return low, high
        return u, u

    def ite(self, f: int, g: int, h: int) -> int:
        if f == 1:
            return g
        if f == 0:
            return h
        if g == h:
            return g
        if g == 1 and h == 0:
            return f
        key = (f, g, h)
        cached = self._ite_cache.get(key)
        if cached is not None:
            return cached
        level = min(self._nodes[f][0], self._nodes[g][0], self._nodes[h][0])
        f0, f1 = self._cofactors(f, level)
        g0, g1 = self._cofactors(g, level)
        h0, h1 = self._cofactors(h, level)
        result = self._mk(level, self.ite(f0, g0, h0), self.ite(f1, g1, h1))
        self._ite_cache[key] = result
        return result

    def neg(self, u: int) -> int:
        return self.ite(u, 0, 1)

    def conj(self, u: int, v: int) -> int:
        return self.ite(u, v, 0)

    def disj(self, u: int, v: int) -> int:
        return self.ite(u, 1, v)

    def implies(self, u: int, v: int) -> int:
        return self.ite(u, v, 1)

    def support(self, u: int) -> set[str]:
        seen: set[int] = set()
        out: set[str] = set()
        stack = [u]
        while stack:
            cur = stack.pop()
            if cur in seen or cur < 2:
                continue
            seen.add(cur)
            level, low, high = self._nodes[cur]
            out.add(self.order[level])
            stack.extend((low, high))
        return out

    def probability(self, u: int, probs: Mapping[str, float]) -> float:
        """Pr(u = 1) when variables are independent with ``Pr(var = 1) = probs[var]``."""
        memo: dict[int, float] = {0: 0.0, 1: 1.0}

        def visit(node: int) -> float:
            cached = memo.get(node)
            if cached is not None:
                return cached
            level, low, high = self._nodes[node]
            p = float(probs[self.order[level]])
            value = (1.0 - p) * visit(low) + p * visit(high)
            memo[node] = value
            return value

        return visit(u)
