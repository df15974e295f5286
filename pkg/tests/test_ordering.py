"""Leaf ordering against an independent graph-path oracle."""

import numpy as np
import pytest

from lmtcf.ordering import order_leaves, ordered_prefix
from lmtcf.tree import Branch, Leaf, LinearModelTree

from conftest import make_random_tree


def graph_distance_oracle(tree: LinearModelTree, origin_leaf: int) -> dict[int, int]:
    """BFS edge distances on the undirected tree graph, then distance(leaf) =
    edges from the origin up to the lowest common ancestor plus the one step
    down into the exposed subtree.  Written independently of the ordering code.
    """
    adj: dict[int, list[int]] = {i: [] for i in range(len(tree.nodes))}
    for i, node in enumerate(tree.nodes):
        if isinstance(node, Branch):
            adj[i] += [node.left, node.right]
            adj[node.left].append(i)
            adj[node.right].append(i)

    bfs = {origin_leaf: 0}
    frontier = [origin_leaf]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in bfs:
                    bfs[v] = bfs[u] + 1
                    nxt.append(v)
        frontier = nxt

    def ancestors(nid):
        out = [nid]
        while (p := tree.parent(nid)) is not None:
            out.append(p)
            nid = p
        return out

    origin_anc = ancestors(origin_leaf)
    origin_set = set(origin_anc)
    distances = {origin_leaf: 0}
    for leaf_id in tree.leaf_ids:
        if leaf_id == origin_leaf:
            continue
        lca = next(a for a in ancestors(leaf_id) if a in origin_set)
        distances[leaf_id] = bfs[lca] + 1
    return distances


@pytest.fixture
def depth2_tree():
    # complete depth-2 tree: leaves LL=2, LR=3, RL=5, RR=6
    nodes = [
        Branch(0, 0.0, 1, 4),
        Branch(1, 0.0, 2, 3),
        Leaf(np.array([[0.0, 0.0]]), np.array([0.0]), 0),
        Leaf(np.array([[0.0, 0.0]]), np.array([1.0]), 1),
        Branch(1, 0.0, 5, 6),
        Leaf(np.array([[0.0, 0.0]]), np.array([2.0]), 2),
        Leaf(np.array([[0.0, 0.0]]), np.array([3.0]), 3),
    ]
    return LinearModelTree(nodes, 0, [[-1, 1], [-1, 1]], [[-5, 5]], ["a", "b"], ["o"])


def test_depth1_orders_sibling_second():
    nodes = [
        Branch(0, 0.0, 1, 2),
        Leaf(np.array([[1.0]]), np.array([0.0]), 0),
        Leaf(np.array([[2.0]]), np.array([0.0]), 1),
    ]
    tree = LinearModelTree(nodes, 0, [[-1, 1]], [[-3, 3]], ["x0"], ["y0"])
    order = order_leaves(tree, [-0.5])
    assert order.ordered == [1, 2]
    assert order.distances == [0, 2]


def test_depth2_order_and_distances(depth2_tree):
    order = order_leaves(depth2_tree, [-0.5, -0.5])  # leftmost leaf LL
    assert order.ordered == [2, 3, 5, 6]  # LL, LR, then RL before RR (left-first DFS)
    assert order.distances == [0, 2, 3, 3]
    oracle = graph_distance_oracle(depth2_tree, 2)
    assert [oracle[l] for l in order.ordered] == order.distances


def test_out_of_bounds_query_rejected(depth2_tree):
    with pytest.raises(ValueError):
        order_leaves(depth2_tree, [2.0, 0.0])


def test_random_trees_match_graph_oracle():
    rng = np.random.default_rng(31)
    for _ in range(100):
        m = int(rng.integers(1, 5))
        tree = make_random_tree(rng, n_leaves=int(rng.integers(2, 64)), m=m)
        x = rng.uniform(-1, 1, size=m)
        order = order_leaves(tree, x)
        oracle = graph_distance_oracle(tree, order.origin_leaf)
        assert [oracle[l] for l in order.ordered] == order.distances


def test_order_is_permutation_with_monotone_distances():
    rng = np.random.default_rng(37)
    for _ in range(20):
        tree = make_random_tree(rng, n_leaves=int(rng.integers(2, 50)), m=3)
        x = rng.uniform(-1, 1, size=3)
        order = order_leaves(tree, x)
        assert sorted(order.ordered) == sorted(tree.leaf_ids)
        assert order.ordered[0] == order.origin_leaf
        assert all(a <= b for a, b in zip(order.distances, order.distances[1:]))


def test_first_non_origin_leaf_is_in_sibling_subtree():
    rng = np.random.default_rng(41)
    for _ in range(20):
        tree = make_random_tree(rng, n_leaves=int(rng.integers(3, 40)), m=2)
        x = rng.uniform(-1, 1, size=2)
        order = order_leaves(tree, x)
        parent = tree.parent(order.origin_leaf)
        branch = tree.nodes[parent]
        sibling = branch.right if branch.left == order.origin_leaf else branch.left
        sibling_leaves = set()
        stack = [sibling]
        while stack:
            nid = stack.pop()
            node = tree.nodes[nid]
            if isinstance(node, Branch):
                stack += [node.left, node.right]
            else:
                sibling_leaves.add(nid)
        assert order.ordered[1] in sibling_leaves


def test_prefix_is_prefix_of_full_order():
    rng = np.random.default_rng(43)
    for _ in range(20):
        tree = make_random_tree(rng, n_leaves=int(rng.integers(12, 80)), m=2)
        x = rng.uniform(-1, 1, size=2)
        full = order_leaves(tree, x)
        prefix = ordered_prefix(tree, x, 10)
        assert prefix.ordered == full.ordered[:10]
        assert prefix.distances == full.distances[:10]


def test_prefix_edge_cases():
    rng = np.random.default_rng(47)
    tree = make_random_tree(rng, n_leaves=6, m=2)
    x = np.zeros(2)
    assert ordered_prefix(tree, x, 1).ordered == [order_leaves(tree, x).origin_leaf]
    assert ordered_prefix(tree, x, 100).ordered == order_leaves(tree, x).ordered
    with pytest.raises(ValueError):
        ordered_prefix(tree, x, 0)
