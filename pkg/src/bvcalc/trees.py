"""Planar rooted trees with labelled leaves.

A tree is a nested tuple: a leaf is an int label, an internal vertex is a
tuple of two or more subtrees, ordered left to right.  Trees grow upward;
the root sits at the bottom, inputs are above their vertex.

Internal vertices are indexed by their position in depth-first pre-order
(vertex first, then children left to right).  This order is the canonical
vertex order used for all Koszul-sign bookkeeping downstream; a vertex is
addressed by its *path*, the tuple of child indices from the root.

A shuffle tree is a planar tree in which, at every vertex, the minimal leaf
labels of the inputs increase from left to right.  `enumerate_sbt` lists
the shuffle binary trees on {1..n}; these are the planar representatives
used everywhere else in the package.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Sequence

Tree = object  # int (leaf) or tuple of Trees (internal vertex)


def is_leaf(t) -> bool:
    return isinstance(t, int)


def leaves(t) -> list[int]:
    """Leaf labels read left to right."""
    if is_leaf(t):
        return [t]
    out: list[int] = []
    for c in t:
        out.extend(leaves(c))
    return out


def leaf_set(t) -> frozenset:
    return frozenset(leaves(t))


def nleaves(t) -> int:
    return 1 if is_leaf(t) else sum(nleaves(c) for c in t)


def nvertices(t) -> int:
    return 0 if is_leaf(t) else 1 + sum(nvertices(c) for c in t)


def min_leaf(t) -> int:
    return t if is_leaf(t) else min(min_leaf(c) for c in t)


def is_binary(t) -> bool:
    if is_leaf(t):
        return True
    return len(t) == 2 and all(is_binary(c) for c in t)


def is_shuffle(t) -> bool:
    """Minimal leaf labels of the inputs increase left to right, everywhere."""
    if is_leaf(t):
        return True
    mins = [min_leaf(c) for c in t]
    if any(a >= b for a, b in zip(mins, mins[1:])):
        return False
    return all(is_shuffle(c) for c in t)


def preorder_paths(t) -> list[tuple[int, ...]]:
    """Paths of the internal vertices in depth-first pre-order."""
    out: list[tuple[int, ...]] = []

    def walk(node, path):
        if is_leaf(node):
            return
        out.append(path)
        for k, c in enumerate(node):
            walk(c, path + (k,))

    walk(t, ())
    return out


def subtree_at(t, path: Sequence[int]):
    for k in path:
        t = t[k]
    return t


def replace_at(t, path: Sequence[int], new):
    if not path:
        return new
    k = path[0]
    return tuple(c if j != k else replace_at(c, path[1:], new)
                 for j, c in enumerate(t))


def relabel(t, mapping: dict):
    if is_leaf(t):
        return mapping[t]
    return tuple(relabel(c, mapping) for c in t)


def std_relabel(t) -> tuple[object, tuple[int, ...]]:
    """Relabel leaves by 1..k in increasing order of the original labels.

    Returns (relabelled tree, original labels sorted).  Order-isomorphic
    relabelling preserves the shuffle property.
    """
    labels = tuple(sorted(leaves(t)))
    mapping = {lab: j + 1 for j, lab in enumerate(labels)}
    return relabel(t, mapping), labels


# ---------------------------------------------------------------------------
# enumeration


@lru_cache(maxsize=None)
def _shuffle_trees_on(labels: tuple[int, ...]) -> tuple:
    if len(labels) == 1:
        return (labels[0],)
    m, rest = labels[0], labels[1:]
    out = []
    for k in range(len(rest)):
        for extra in itertools.combinations(rest, k):
            left_labels = tuple(sorted((m,) + extra))
            right_labels = tuple(sorted(set(rest) - set(extra)))
            for left in _shuffle_trees_on(left_labels):
                for right in _shuffle_trees_on(right_labels):
                    out.append((left, right))
    return tuple(out)


def enumerate_sbt(n: int) -> list:
    """All shuffle binary trees with leaves 1..n."""
    if n < 2:
        raise ValueError("shuffle binary trees need arity >= 2")
    return list(_shuffle_trees_on(tuple(range(1, n + 1))))


def shuffle_trees_on(labels: Iterable[int]) -> list:
    labs = tuple(sorted(labels))
    if len(labs) < 2:
        raise ValueError("need at least two labels")
    return list(_shuffle_trees_on(labs))


def double_factorial_count(n: int) -> int:
    """(2n-3)!! = number of binary trees on n labelled leaves."""
    out = 1
    for k in range(2 * n - 3, 0, -2):
        out *= k
    return out


@lru_cache(maxsize=None)
def binary_shapes(n: int) -> tuple:
    """All planar binary shapes with leaves labelled 1..n left to right."""
    def build(lo: int, hi: int) -> list:
        if hi == lo:
            return [lo]
        out = []
        for mid in range(lo, hi):
            for left in build(lo, mid):
                for right in build(mid + 1, hi):
                    out.append((left, right))
        return out

    return tuple(build(1, n))


def left_comb_on(labels: Sequence[int]):
    """Left comb: every right input is a leaf; labels assigned in order."""
    labs = list(labels)
    if len(labs) < 2:
        raise ValueError("left comb needs arity >= 2")
    t = (labs[0], labs[1])
    for lab in labs[2:]:
        t = (t, lab)
    return t


def left_comb(n: int):
    return left_comb_on(list(range(1, n + 1)))


def count_shuffle_left_combs(n: int) -> int:
    """Number of leaf labelings of the left-comb shape passing the shuffle
    condition, counted by brute enumeration."""
    if n < 2:
        raise ValueError("need arity >= 2")
    count = 0
    for perm in itertools.permutations(range(1, n + 1)):
        if is_shuffle(left_comb_on(perm)):
            count += 1
    return count


# ---------------------------------------------------------------------------
# the two permutations attached to a shuffle tree


def leaf_permutation(t) -> tuple[int, ...]:
    """Leaf labels read left to right, as a one-line permutation."""
    return tuple(leaves(t))


def level_permutation(t) -> tuple[int, ...]:
    """Levelization permutation of a binary tree with n leaves.

    Vertices are numbered left to right (in-order); levels 1..n-1 top to
    bottom.  Vertices are spread onto distinct levels compatibly with the
    tree order (children above their parent); among vertices of the same
    depth the leftmost is placed topmost.  Returns the map vertex -> level.
    """
    if not is_binary(t):
        raise ValueError("level permutation is defined for binary trees")
    if is_leaf(t):
        raise ValueError("tree has no internal vertex")
    order: list[tuple[int, int]] = []  # (depth, in-order position)

    def walk(node, depth):
        if is_leaf(node):
            return
        walk(node[0], depth + 1)
        order.append((depth, len(order)))
        walk(node[1], depth + 1)

    walk(t, 0)
    positions = list(range(len(order)))
    positions.sort(key=lambda i: (-order[i][0], i))
    sigma = [0] * len(order)
    for level, vertex in enumerate(positions, start=1):
        sigma[vertex] = level
    return tuple(sigma)


# ---------------------------------------------------------------------------
# vertex weights


def vertex_weights(t) -> list[Fraction]:
    """Weight of each vertex of a binary tree, in pre-order.

    The weight of a vertex is the product of the leaf counts of its two
    inputs; the weights of a tree with n leaves sum to n(n-1)/2.
    """
    if not is_binary(t):
        raise ValueError("weights are defined for binary trees")
    out: list[Fraction] = []

    def walk(node) -> int:
        if is_leaf(node):
            return 1
        slot = len(out)
        out.append(Fraction(0))
        m = walk(node[0])
        k = walk(node[1])
        out[slot] = Fraction(m * k)
        return m + k

    walk(t)
    return out


def total_weight(n: int) -> Fraction:
    return Fraction(math.comb(n, 2))


# ---------------------------------------------------------------------------
# edge cuts


@dataclass(frozen=True)
class Cut:
    """One two-factor decomposition of a tree.

    The upper factor is the full subtree at `path`; the lower factor is the
    tree with that subtree collapsed to a leaf carrying min(upper leaves).
    `slot` is the 1-based rank of that leaf among the lower factor's sorted
    leaf labels.  `block_start`/`block_size` locate the upper factor's
    vertices inside the pre-order of the original tree, for sign purposes.
    """

    path: tuple[int, ...]
    lower: object
    upper: object
    slot: int
    block_start: int
    block_size: int


def edge_cut_decompositions(t, vertex_degrees: Optional[Sequence[int]] = None):
    """All decompositions t = lower o_slot upper with both factors nontrivial.

    Returns a list of (Cut, sign).  The sign is the Koszul sign of moving
    the upper factor's vertex decorations (degrees given in pre-order by
    `vertex_degrees`) past the lower decorations that follow them; with no
    degrees every sign is +1.  A single-vertex tree yields the empty list.
    """
    paths = preorder_paths(t)
    out = []
    for idx, path in enumerate(paths):
        if not path:
            continue  # upper factor may not be the whole tree
        upper = subtree_at(t, path)
        size = nvertices(upper)
        marker = min_leaf(upper)
        lower = replace_at(t, path, marker)
        slot = sorted(leaves(lower)).index(marker) + 1
        sign = 1
        if vertex_degrees is not None:
            block = sum(vertex_degrees[idx:idx + size])
            tail = sum(vertex_degrees[idx + size:])
            if block % 2 and tail % 2:
                sign = -1
        out.append((Cut(path, lower, upper, slot, idx, size), sign))
    return out


def graft(lower, upper):
    """Inverse of a cut: replace the leaf labelled min(upper) by upper."""
    marker = min_leaf(upper)

    def walk(node):
        if is_leaf(node):
            return upper if node == marker else node
        return tuple(walk(c) for c in node)

    return walk(lower)
