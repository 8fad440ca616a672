"""Regression trees with per-node coverage counts and a leaf-coverage
conditional-expectation estimator.

The estimator descends the tree once: at a split on a known feature it follows
the instance's branch, at a split on an unknown feature it averages both
children weighted by training coverage. This is the path-dependent reading of
coverage-based conditioning; it coincides with exact empirical conditioning
only on trees whose split structure realizes the conditioning sets (the
alternative, fully interventional reading replaces unknown features from a
background distribution and is intentionally not implemented here).

Serialization is a line-oriented text format, one node per line:

    tree <k>
    <id> split <feature> <threshold> <left_id> <right_id> <coverage>
    <id> leaf <value> <coverage>

The first node of each block is the root. Floats are written with ``repr`` so
round-trips are exact. A file with several ``tree`` blocks loads as an
ensemble whose score is the sum of its trees' scores.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import TabularDataset
from .games import Coalition


class TreeFormatError(ValueError):
    """Malformed tree text."""


class ZeroCoverageError(ValueError):
    """Conditioning descended into a region with no training coverage."""


@dataclass(frozen=True)
class TreeNode:
    node_id: int
    feature: int  # -1 for leaves
    threshold: float
    left: int  # -1 for leaves
    right: int
    value: float  # leaf prediction; 0.0 for splits
    coverage: int

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


class DecisionTree:
    """Binary regression tree; rows with feature <= threshold go left."""

    def __init__(self, nodes: list[TreeNode]):
        if not nodes:
            raise TreeFormatError("a tree needs at least one node")
        self._by_id = {n.node_id: n for n in nodes}
        if len(self._by_id) != len(nodes):
            raise TreeFormatError("duplicate node ids")
        self.root_id = nodes[0].node_id
        self.nodes = list(nodes)
        for n in nodes:
            if not n.is_leaf:
                if n.left not in self._by_id or n.right not in self._by_id:
                    raise TreeFormatError(f"node {n.node_id} references missing children")
                child_cov = self._by_id[n.left].coverage + self._by_id[n.right].coverage
                if child_cov != n.coverage:
                    raise TreeFormatError(
                        f"node {n.node_id} coverage {n.coverage} != children sum {child_cov}"
                    )

    def node(self, node_id: int) -> TreeNode:
        return self._by_id[node_id]

    @property
    def arity(self) -> int:
        feats = [n.feature for n in self.nodes if not n.is_leaf]
        return max(feats) + 1 if feats else 1

    def score(self, row) -> float:
        node = self._by_id[self.root_id]
        while not node.is_leaf:
            node = self._by_id[node.left if row[node.feature] <= node.threshold else node.right]
        return node.value


class TreeEnsemble:
    """Sum of decision trees."""

    def __init__(self, trees: list[DecisionTree]):
        if not trees:
            raise TreeFormatError("an ensemble needs at least one tree")
        self.trees = list(trees)
        self.arity = max(t.arity for t in trees)

    def score(self, row) -> float:
        return sum(t.score(row) for t in self.trees)


def tree_conditional_expectation(tree, x, known: Coalition) -> float:
    """Coverage-weighted expected prediction given the features in ``known``.

    With everything known this is the plain prediction; with nothing known it
    is the coverage-weighted mean over leaves. Accepts a single tree or an
    ensemble (summing per tree).
    """
    if isinstance(tree, TreeEnsemble):
        return sum(tree_conditional_expectation(t, x, known) for t in tree.trees)

    def descend(node: TreeNode) -> float:
        if node.is_leaf:
            return node.value
        if known.contains(node.feature):
            child = tree.node(node.left if x[node.feature] <= node.threshold else node.right)
            if child.coverage == 0:
                raise ZeroCoverageError(
                    f"conditioning path reached zero-coverage node {child.node_id}"
                )
            return descend(child)
        left, right = tree.node(node.left), tree.node(node.right)
        total = left.coverage + right.coverage
        if total == 0:
            raise ZeroCoverageError(f"node {node.node_id} has zero total child coverage")
        out = 0.0
        if left.coverage:
            out += descend(left) * (left.coverage / total)
        if right.coverage:
            out += descend(right) * (right.coverage / total)
        return out

    root = tree.node(tree.root_id)
    if root.coverage == 0:
        raise ZeroCoverageError("root has zero coverage")
    return descend(root)


def build_tree_from_data(data: TabularDataset, targets, max_depth: int) -> DecisionTree:
    """Greedy variance-reduction splitter with midpoint thresholds.

    Deterministic: ties are broken by lowest feature index, then lowest
    threshold. Splitting continues while the node is impure and depth remains,
    even when the best split yields no immediate variance reduction (an XOR
    pattern needs the zero-gain first cut). Constant targets produce a single
    leaf.
    """
    y = np.asarray(targets, dtype=float)
    if y.shape != (data.n_rows,):
        raise ValueError(f"targets must have length {data.n_rows}")
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    rows = data.rows
    nodes: list[TreeNode] = []

    def sse(values: np.ndarray) -> float:
        return float(np.sum((values - values.mean()) ** 2)) if len(values) else 0.0

    def best_split(idx: np.ndarray):
        best = None  # (sse, feature, threshold)
        for j in range(data.n_features):
            col = rows[idx, j]
            uniq = np.unique(col)
            for a, b in zip(uniq[:-1], uniq[1:]):
                t = (a + b) / 2.0
                left = idx[rows[idx, j] <= t]
                right = idx[rows[idx, j] > t]
                key = (sse(y[left]) + sse(y[right]), j, t)
                if best is None or key < best:
                    best = key
        return best

    def grow(idx: np.ndarray, depth: int) -> int:
        node_id = len(nodes)
        nodes.append(None)  # placeholder, replaced below
        pure = bool(np.all(y[idx] == y[idx][0]))
        split = None if (depth >= max_depth or pure) else best_split(idx)
        if split is None:
            nodes[node_id] = TreeNode(node_id, -1, 0.0, -1, -1, float(y[idx].mean()), len(idx))
            return node_id
        _, j, t = split
        left_id = grow(idx[rows[idx, j] <= t], depth + 1)
        right_id = grow(idx[rows[idx, j] > t], depth + 1)
        nodes[node_id] = TreeNode(node_id, j, float(t), left_id, right_id, 0.0, len(idx))
        return node_id

    grow(np.arange(data.n_rows), 0)
    return DecisionTree(nodes)


def dump_tree_text(model) -> str:
    """Serialize a tree or ensemble to the documented line format."""
    trees = model.trees if isinstance(model, TreeEnsemble) else [model]
    lines = []
    for k, tree in enumerate(trees):
        lines.append(f"tree {k}")
        ordering = [tree.node(tree.root_id)] + [
            n for n in tree.nodes if n.node_id != tree.root_id
        ]
        for n in ordering:
            if n.is_leaf:
                lines.append(f"{n.node_id} leaf {n.value!r} {n.coverage}")
            else:
                lines.append(
                    f"{n.node_id} split {n.feature} {n.threshold!r} {n.left} {n.right} {n.coverage}"
                )
    return "\n".join(lines) + "\n"


def load_tree_text(text: str):
    """Parse the line format; one block gives a DecisionTree, several an ensemble."""
    blocks: list[list[TreeNode]] = []
    current: list[TreeNode] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "tree":
            current = []
            blocks.append(current)
            continue
        if current is None:
            current = []
            blocks.append(current)
        try:
            node_id, kind = int(parts[0]), parts[1]
            if kind == "leaf":
                current.append(TreeNode(node_id, -1, 0.0, -1, -1, float(parts[2]), int(parts[3])))
            elif kind == "split":
                current.append(
                    TreeNode(
                        node_id,
                        int(parts[2]),
                        float(parts[3]),
                        int(parts[4]),
                        int(parts[5]),
                        0.0,
                        int(parts[6]),
                    )
                )
            else:
                raise TreeFormatError(f"line {lineno}: unknown node kind {kind!r}")
        except (IndexError, ValueError) as exc:
            raise TreeFormatError(f"line {lineno}: {exc}") from None
    if not blocks or not blocks[0]:
        raise TreeFormatError("no tree nodes found")
    trees = [DecisionTree(nodes) for nodes in blocks]
    return trees[0] if len(trees) == 1 else TreeEnsemble(trees)


def save_tree(model, path) -> None:
    Path(path).write_text(dump_tree_text(model))


def load_tree(path):
    return load_tree_text(Path(path).read_text())
