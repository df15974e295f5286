"""Structural ordering of leaf regions around a query point.

Leaves are ranked by how many branch nodes separate them from the leaf the
query belongs to: the origin leaf first, then the leaves exposed by walking
one parent up (the sibling subtree), then the grandparent's other subtree,
and so on until the root.  Within each exposed subtree leaves keep stable
depth-first discovery order, left child before right.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tree import Branch, LinearModelTree


@dataclass(frozen=True)
class LeafOrder:
    origin_leaf: int
    ordered: list[int]
    distances: list[int]

    def __len__(self) -> int:
        return len(self.ordered)


def _check_in_bounds(tree: LinearModelTree, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (tree.input_dim,):
        raise ValueError(f"expected {tree.input_dim}-vector, got shape {x.shape}")
    lo, hi = tree.input_bounds[:, 0], tree.input_bounds[:, 1]
    if np.any(x < lo) or np.any(x > hi):
        raise ValueError("query point outside the tree's input bounds")
    return x


def _subtree_leaves(tree: LinearModelTree, root: int) -> list[int]:
    """Leaf ids under `root` in depth-first order, left child first."""
    found = []
    stack = [root]
    while stack:
        nid = stack.pop()
        nd = tree.nodes[nid]
        if isinstance(nd, Branch):
            stack.append(nd.right)  # popped after left
            stack.append(nd.left)
        else:
            found.append(nid)
    return found


def order_leaves(tree: LinearModelTree, x, max_leaves: int | None = None) -> LeafOrder:
    """Order all leaves from structurally closest to furthest around x.

    The distance of a leaf is the number of branch nodes traversed from the
    origin leaf up to the lowest common ancestor plus one step down into the
    exposed sibling subtree; every leaf of one exposed subtree shares it.
    """
    x = _check_in_bounds(tree, x)
    origin = tree.locate_leaf(x)
    ordered = [origin]
    distances = [0]
    levels_up = 0
    current = origin
    while (parent := tree.parent(current)) is not None:
        if max_leaves is not None and len(ordered) >= max_leaves:
            break
        levels_up += 1
        branch = tree.nodes[parent]
        sibling = branch.right if branch.left == current else branch.left
        for leaf in _subtree_leaves(tree, sibling):
            ordered.append(leaf)
            distances.append(levels_up + 1)
            if max_leaves is not None and len(ordered) >= max_leaves:
                break
        current = parent
    if max_leaves is not None:
        ordered = ordered[:max_leaves]
        distances = distances[:max_leaves]
    return LeafOrder(origin_leaf=origin, ordered=ordered, distances=distances)


def ordered_prefix(tree: LinearModelTree, x, max_leaves: int) -> LeafOrder:
    """First `max_leaves` entries of order_leaves without finishing the ascent."""
    if max_leaves < 1:
        raise ValueError("max_leaves must be >= 1")
    return order_leaves(tree, x, max_leaves=max_leaves)
