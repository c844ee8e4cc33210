"""Integer <-> tree-shape unranking and equation-space counting.

Tree index ``i`` is mapped to a tree shape by recursively splitting the bits
of an integer. Bit position 0 (least significant) is even. Even-position bits
form the right-subtree index ``c``; odd-position bits form the left-subtree
index ``b``. This convention is frozen so stored indices stay meaningful.

``binary`` mode enumerates full binary trees (every internal node has two
children) and is a bijection onto them. ``mixed`` mode also yields arity-1
nodes: index 2 is a unary node over a leaf and indices >= 3 split ``i``
itself (not ``i - 1``).
"""

from __future__ import annotations

import threading
from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache
from itertools import accumulate
from typing import NamedTuple, Union

from srurgs.errors import ConfigurationError
from srurgs.space import SearchSpaceConfig

MODES = ("binary", "mixed")


@dataclass(frozen=True, slots=True)
class Leaf:
    def __str__(self):
        return "L"


@dataclass(frozen=True, slots=True)
class UnaryNode:
    child: TreeShape

    def __str__(self):
        return f"U({self.child})"


@dataclass(frozen=True, slots=True)
class BinaryNode:
    left: TreeShape
    right: TreeShape

    def __str__(self):
        return f"B({self.left},{self.right})"


TreeShape = Union[Leaf, UnaryNode, BinaryNode]
LEAF = Leaf()


class NodeCounts(NamedTuple):
    l: int  # arity-1 slots
    k: int  # arity-2 slots
    j: int  # terminal slots

    def __add__(self, other):
        return NodeCounts(self.l + other.l, self.k + other.k, self.j + other.j)


class Cardinalities(NamedTuple):
    G: int
    A: int
    B: int

    @property
    def total(self) -> int:
        return self.G * self.A * self.B


def deinterleave(a: int) -> tuple[int, int]:
    """Split ``a`` into (odd-position bits, even-position bits), each repacked."""
    if a < 0:
        raise ValueError("deinterleave requires a non-negative integer")
    b = c = 0
    pos = 0
    while a:
        c |= (a & 1) << pos
        a >>= 1
        b |= (a & 1) << pos
        a >>= 1
        pos += 1
    return b, c


def interleave(b: int, c: int) -> int:
    """Inverse of :func:`deinterleave`."""
    if b < 0 or c < 0:
        raise ValueError("interleave requires non-negative integers")
    a = 0
    pos = 0
    while b or c:
        a |= (c & 1) << (2 * pos)
        a |= (b & 1) << (2 * pos + 1)
        b >>= 1
        c >>= 1
        pos += 1
    return a


def _check_mode(mode: str):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def _split(i: int, mode: str) -> tuple[int, int]:
    return deinterleave(i - 1 if mode == "binary" else i)


def _base_shape(i: int, mode: str) -> TreeShape | None:
    if i == 0:
        return LEAF
    if i == 1:
        return BinaryNode(LEAF, LEAF)
    if i == 2 and mode == "mixed":
        return UnaryNode(LEAF)
    return None


class _Memo:
    """Shared cache: concurrent readers, serialized insertion."""

    def __init__(self):
        self._data: dict = {}
        self._lock = threading.Lock()

    def get(self, key):
        return self._data.get(key)

    def put(self, key, value):
        with self._lock:
            return self._data.setdefault(key, value)

    def clear(self):
        with self._lock:
            self._data.clear()

    def __len__(self):
        return len(self._data)


_shape_memo = _Memo()
_count_memo = _Memo()


def tree_from_index(i: int, mode: str = "binary") -> TreeShape:
    _check_mode(mode)
    if i < 0:
        raise ValueError("tree index must be non-negative")
    cached = _shape_memo.get((mode, i))
    if cached is not None:
        return cached
    shape = _base_shape(i, mode)
    if shape is None:
        b, c = _split(i, mode)
        shape = BinaryNode(tree_from_index(b, mode), tree_from_index(c, mode))
    return _shape_memo.put((mode, i), shape)


def tree_from_index_binary(i: int) -> TreeShape:
    return tree_from_index(i, "binary")


def tree_from_index_mixed(i: int) -> TreeShape:
    return tree_from_index(i, "mixed")


def tree_from_index_uncached(i: int, mode: str = "binary") -> TreeShape:
    """Same mapping without the memo; used to cross-check the cache."""
    _check_mode(mode)
    shape = _base_shape(i, mode)
    if shape is not None:
        return shape
    b, c = _split(i, mode)
    return BinaryNode(tree_from_index_uncached(b, mode), tree_from_index_uncached(c, mode))


def node_counts(i: int, mode: str = "binary") -> NodeCounts:
    """Return (l, k, j) for tree ``i`` from the children's counts, memoized.

    The shape itself is never built: counts of the root's subtrees are added
    and one arity-2 slot is added for the root.
    """
    _check_mode(mode)
    if i < 0:
        raise ValueError("tree index must be non-negative")
    cached = _count_memo.get((mode, i))
    if cached is not None:
        return cached
    if i == 0:
        counts = NodeCounts(0, 0, 1)
    elif i == 1:
        counts = NodeCounts(0, 1, 2)
    elif i == 2 and mode == "mixed":
        counts = NodeCounts(1, 0, 1)
    else:
        b, c = _split(i, mode)
        counts = node_counts(b, mode) + node_counts(c, mode) + NodeCounts(0, 1, 0)
    return _count_memo.put((mode, i), counts)


def count_shape(shape: TreeShape) -> NodeCounts:
    """Count node classes by walking the shape directly."""
    if isinstance(shape, Leaf):
        return NodeCounts(0, 0, 1)
    if isinstance(shape, UnaryNode):
        return count_shape(shape.child) + NodeCounts(1, 0, 0)
    return count_shape(shape.left) + count_shape(shape.right) + NodeCounts(0, 1, 0)


def shape_height(shape: TreeShape) -> int:
    if isinstance(shape, Leaf):
        return 0
    if isinstance(shape, UnaryNode):
        return 1 + shape_height(shape.child)
    return 1 + max(shape_height(shape.left), shape_height(shape.right))


def arrangements(i: int, space: SearchSpaceConfig) -> Cardinalities:
    """Per-tree counts of unary, binary and terminal arrangements."""
    l, k, j = node_counts(i, space.mode)
    if l > 0 and space.f == 0:
        raise ConfigurationError(f"tree {i} has {l} unary slot(s) but no unary function is permitted")
    return Cardinalities(space.f**l, space.n**k, space.m**j)


@lru_cache(maxsize=64)
def _prefix_sums(mode: str, f: int, n: int, m: int, N: int) -> tuple[int, ...]:
    weights = []
    for i in range(N):
        l, k, j = node_counts(i, mode)
        if l > 0 and f == 0:
            raise ConfigurationError(f"tree {i} has {l} unary slot(s) but no unary function is permitted")
        weights.append(f**l * n**k * m**j)
    return tuple(accumulate(weights))


def cumulative_equations(space: SearchSpaceConfig) -> tuple[int, ...]:
    """Running totals of equations for trees ``0..N-1``."""
    return _prefix_sums(space.mode, space.f, space.n, space.m, space.N)


def total_equations(space: SearchSpaceConfig) -> int:
    """Exact number of (unsimplified) equations over the first N trees."""
    return cumulative_equations(space)[-1]


def locate_equation(space: SearchSpaceConfig, u: int) -> tuple[int, int]:
    """Map a global equation ordinal ``u`` in [0, M) to (tree index, offset in that tree)."""
    sums = cumulative_equations(space)
    if not 0 <= u < sums[-1]:
        raise IndexError(f"equation ordinal {u} outside [0, {sums[-1]})")
    i = bisect_right(sums, u)
    offset = u - (sums[i - 1] if i else 0)
    return i, offset
