"""Partial orders on ``range(n)``, stored as transitive-closure bitsets.

``Poset.succ[i]`` has bit ``j`` set iff ``i`` strictly precedes ``j``;
``Poset.pred[j]`` is the transpose. Both are closed under transitivity, so
every query below is a handful of integer bit operations.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._errors import (
    CycleDetected,
    EmptySet,
    EmptySubset,
    ExtensionCountExceedsCap,
    IndexOutOfRange,
    NotGloballyMaximal,
    SamePlayer,
    SubsetNotInLayer,
)
from ._validation import as_mask, check_permutation, members

DEFAULT_CAP = 10_000_000


class Poset:
    """Immutable strict partial order on players ``0..n-1``.

    Build instances with :func:`build_poset`; the constructor trusts its
    arguments.
    """

    def __init__(self, n: int, succ: Sequence[int], pred: Sequence[int]):
        self.n = n
        self.succ = tuple(succ)
        self.pred = tuple(pred)

    @cached_property
    def reach(self) -> np.ndarray:
        """Boolean matrix with ``reach[i, j]`` true iff ``i`` precedes ``j``."""
        out = np.zeros((self.n, self.n), dtype=bool)
        for i, row in enumerate(self.succ):
            out[i, members(row)] = True
        return out

    @cached_property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    def precedes(self, i: int, j: int) -> bool:
        return bool(self.succ[i] >> j & 1)

    def strict_pairs(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in members(self.succ[i])]

    def __eq__(self, other):
        return isinstance(other, Poset) and self.n == other.n and self.succ == other.succ

    def __hash__(self):
        return hash((self.n, self.succ))

    def __repr__(self):
        return f"Poset(n={self.n}, pairs={self.strict_pairs()})"


@dataclass(frozen=True)
class OrderedPartition:
    """Layers ``B_1, ..., B_m``; ``i`` precedes ``j`` iff ``i``'s layer comes first."""

    layers: tuple[frozenset[int], ...]

    def __post_init__(self):
        layers = tuple(frozenset(int(i) for i in b) for b in self.layers)
        object.__setattr__(self, "layers", layers)
        seen = [i for b in layers for i in b]
        if any(not b for b in layers):
            raise ValueError("layers must be nonempty")
        if sorted(seen) != list(range(len(seen))):
            raise ValueError("layers must partition range(n)")

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.layers)

    def layer_of(self, i: int) -> int:
        for r, b in enumerate(self.layers):
            if i in b:
                return r
        raise IndexOutOfRange(f"player {i} not in partition")

    def poset(self) -> Poset:
        return self._poset

    @cached_property
    def _poset(self) -> Poset:
        n = self.n
        masks = [as_mask(b) for b in self.layers]
        succ = [0] * n
        pred = [0] * n
        below = 0
        for r, b in enumerate(self.layers):
            above = 0
            for m in masks[r + 1:]:
                above |= m
            for i in b:
                succ[i] = above
                pred[i] = below
            below |= masks[r]
        return Poset(n, succ, pred)

    def refine(self, layer_index: int, subset: Iterable[int]) -> OrderedPartition:
        """Split one layer ``B`` into consecutive layers ``(B - G, G)``."""
        g = frozenset(int(i) for i in subset)
        if not g:
            raise EmptySubset("subset G must be nonempty")
        if not 0 <= layer_index < len(self.layers):
            raise IndexOutOfRange(f"layer index {layer_index} out of range")
        block = self.layers[layer_index]
        if not g <= block:
            raise SubsetNotInLayer(f"{sorted(g - block)} not in layer {layer_index}")
        if g == block:
            return self
        split = (block - g, g)
        return OrderedPartition(
            self.layers[:layer_index] + split + self.layers[layer_index + 1:]
        )


def build_poset(n: int, edges: Iterable[tuple[int, int]]) -> Poset:
    """Transitive closure of a DAG given as ``(from, to)`` pairs."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    children = [0] * n
    for a, b in edges:
        a, b = int(a), int(b)
        if not (0 <= a < n and 0 <= b < n):
            raise IndexOutOfRange(f"edge ({a}, {b}) outside [0, {n})")
        if a == b:
            raise CycleDetected(f"self-loop on {a}")
        children[a] |= 1 << b

    # Kahn's algorithm; lowest index first keeps the order deterministic.
    indeg = [0] * n
    for a in range(n):
        for b in members(children[a]):
            indeg[b] += 1
    ready = [i for i in range(n) if indeg[i] == 0]
    topo = []
    while ready:
        ready.sort(reverse=True)
        a = ready.pop()
        topo.append(a)
        for b in members(children[a]):
            indeg[b] -= 1
            if indeg[b] == 0:
                ready.append(b)
    if len(topo) < n:
        stuck = sorted(set(range(n)) - set(topo))
        raise CycleDetected(f"edges contain a directed cycle through {stuck}")

    succ = [0] * n
    for a in reversed(topo):
        row = children[a]
        for b in members(children[a]):
            row |= succ[b]
        succ[a] = row
    pred = [0] * n
    for a in range(n):
        for b in members(succ[a]):
            pred[b] |= 1 << a
    return Poset(n, succ, pred)


def antichain(n: int) -> Poset:
    return build_poset(n, [])


def chain(n: int) -> Poset:
    return build_poset(n, [(i, i + 1) for i in range(n - 1)])


def is_feasible(p: Poset, subset) -> bool:
    """True iff the subset is downward closed."""
    s = as_mask(subset, p.n)
    for i in members(s):
        if p.pred[i] & ~s:
            return False
    return True


def _max_mask(p: Poset, s: int) -> int:
    out = 0
    for i in members(s):
        if not p.succ[i] & s:
            out |= 1 << i
    return out


def maximal_elements(p: Poset, subset) -> frozenset[int]:
    s = as_mask(subset, p.n)
    if not s:
        raise EmptySet("maximal elements of the empty set are undefined")
    return frozenset(members(_max_mask(p, s)))


def is_linear_extension(p: Poset, order: Sequence[int]) -> bool:
    order = check_permutation(order, p.n)
    placed = 0
    for x in order:
        if p.pred[x] & ~placed:
            return False
        placed |= 1 << x
    return True


def initial_linear_extension(p: Poset) -> tuple[int, ...]:
    """Topological sort taking the lowest admissible index at every step."""
    placed = 0
    order = []
    for _ in range(p.n):
        for x in range(p.n):
            if not placed >> x & 1 and not p.pred[x] & ~placed:
                break
        order.append(x)
        placed |= 1 << x
    return tuple(order)


def iter_linear_extensions(p: Poset) -> Iterator[tuple[int, ...]]:
    """All linear extensions in lexicographic order (depth-first search)."""
    n = p.n
    pred = p.pred
    order = [0] * n
    # stack of (depth, placed mask, next candidate to try)
    stack = [(0, 0, 0)]
    while stack:
        depth, placed, start = stack.pop()
        if depth == n:
            yield tuple(order)
            continue
        for x in range(start, n):
            if not placed >> x & 1 and not pred[x] & ~placed:
                stack.append((depth, placed, x + 1))
                order[depth] = x
                stack.append((depth + 1, placed | 1 << x, 0))
                break


def _depths(p: Poset) -> list[int]:
    """Longest-path depth of every player (0 for minimal players)."""
    depth = [0] * p.n
    # a topological order of the closure is any order by predecessor count
    for i in sorted(range(p.n), key=lambda i: p.pred[i].bit_count()):
        preds = members(p.pred[i])
        depth[i] = 1 + max(depth[j] for j in preds) if preds else 0
    return depth


def extension_lower_bound(p: Poset) -> int:
    """Product of factorials of the depth-layer sizes.

    Listing the layers in depth order, each in any internal order, always
    gives a linear extension, so this never exceeds the true count.
    """
    sizes = Counter(_depths(p))
    return math.prod(math.factorial(c) for c in sizes.values())


def enumerate_linear_extensions(p: Poset, cap: int = DEFAULT_CAP) -> list[tuple[int, ...]]:
    if extension_lower_bound(p) > cap:
        raise ExtensionCountExceedsCap(f"more than {cap} linear extensions")
    out = []
    for ext in iter_linear_extensions(p):
        if len(out) >= cap:
            raise ExtensionCountExceedsCap(f"more than {cap} linear extensions")
        out.append(ext)
    return out


def detect_ordered_partition(p: Poset) -> OrderedPartition | None:
    """Return the layering if the poset is an ordered partition, else None."""
    depth = _depths(p)
    for i in range(p.n):
        for j in range(p.n):
            if p.precedes(i, j) != (depth[i] < depth[j]):
                return None
    m = max(depth) + 1
    return OrderedPartition(
        tuple(frozenset(i for i in range(p.n) if depth[i] == r) for r in range(m))
    )


def limit_poset_maximal(p: Poset, i: int) -> Poset:
    """Poset reached as ``lambda_i -> inf`` for a globally maximal player ``i``.

    Every other globally maximal player is put below ``i``.
    """
    if not 0 <= i < p.n:
        raise IndexOutOfRange(f"player {i} outside [0, {p.n})")
    if p.succ[i]:
        raise NotGloballyMaximal(f"player {i} has successors {members(p.succ[i])}")
    tops = members(_max_mask(p, p.full_mask))
    extra = [(j, i) for j in tops if j != i]
    return build_poset(p.n, p.strict_pairs() + extra)


def limit_poset_refine(op: OrderedPartition, layer_index: int, subset) -> Poset:
    return op.refine(layer_index, subset).poset()


def incomparable(p: Poset, i: int, j: int) -> bool:
    if i == j:
        raise SamePlayer(f"incomparable() needs two distinct players, got {i} twice")
    return not (p.precedes(i, j) or p.precedes(j, i))
