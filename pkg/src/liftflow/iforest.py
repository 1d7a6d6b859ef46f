"""Isolation Forest, implemented from scratch on numpy arrays.

Trees are grown on uniform subsamples by picking a random non-constant
feature and a uniform split value strictly inside that feature's range;
recursion stops at the height limit, a single point, or an all-identical
partition. A point's anomaly score is 2**(-E(h)/c(psi)) where E(h) is the
mean path length over trees (leaf depth plus the c() adjustment for the leaf
size) and c(n) is the expected unsuccessful-search path length in a BST.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DataError

EULER_GAMMA = 0.5772156649

DEFAULT_TREE_COUNT = 100
DEFAULT_SUBSAMPLE = 256

SERIAL_VERSION = "liftflow-iforest-v1"


def c(n: int) -> float:
    """Average path length of unsuccessful BST search among n points."""
    if n <= 1:
        return 0.0
    h = np.log(n - 1) + EULER_GAMMA
    return float(2.0 * h - 2.0 * (n - 1) / n)


def anomaly_score(avg_path_length: float, psi: int) -> float:
    """s = 2**(-E(h)/c(psi)); s=0.5 exactly when E(h)=c(psi), s->1 as E(h)->0."""
    return float(2.0 ** (-avg_path_length / c(psi)))


@dataclass
class TreeNode:
    # internal: feature >= 0, value set, children set; external: size only
    feature: int = -1
    value: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    size: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


def _build_tree(x: np.ndarray, depth: int, height_limit: int,
                rng: np.random.Generator) -> TreeNode:
    n = x.shape[0]
    if n <= 1 or depth >= height_limit:
        return TreeNode(size=n)
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    candidates = np.flatnonzero(hi > lo)  # never split a constant feature
    if candidates.size == 0:
        return TreeNode(size=n)
    f = int(rng.choice(candidates))
    v = float(rng.uniform(lo[f], hi[f]))
    # keep v strictly above the minimum so both children are non-empty even
    # when rounding collapses the draw onto an endpoint of a tiny range
    v = min(max(v, float(np.nextafter(lo[f], hi[f]))), float(hi[f]))
    mask = x[:, f] < v
    return TreeNode(
        feature=f,
        value=v,
        left=_build_tree(x[mask], depth + 1, height_limit, rng),
        right=_build_tree(x[~mask], depth + 1, height_limit, rng),
        size=n,
    )


def _path_lengths(node: TreeNode, x: np.ndarray, idx: np.ndarray, depth: int,
                  out: np.ndarray) -> None:
    if node.is_leaf:
        out[idx] = depth + c(node.size)
        return
    mask = x[idx, node.feature] < node.value
    _path_lengths(node.left, x, idx[mask], depth + 1, out)
    _path_lengths(node.right, x, idx[~mask], depth + 1, out)


class IsolationForest:
    """Fitted forest; immutable after fit, safe to share between readers."""

    def __init__(self, trees: list[TreeNode], dim: int, effective_subsample: int,
                 tree_count: int, subsample_size: int, seed: int):
        self.trees = trees
        self.dim = dim
        self.effective_subsample = effective_subsample
        self.tree_count = tree_count
        self.subsample_size = subsample_size
        self.seed = seed
        self._c_psi = c(effective_subsample)

    def path_lengths(self, data: np.ndarray) -> np.ndarray:
        data = np.asarray(data, dtype=float)
        if data.ndim == 1:
            data = data[None, :]
        if data.shape[1] != self.dim:
            raise DataError(f"expected {self.dim}-dimensional points, got {data.shape[1]}")
        total = np.zeros(data.shape[0])
        idx = np.arange(data.shape[0])
        buf = np.zeros(data.shape[0])
        for tree in self.trees:
            _path_lengths(tree, data, idx, 0, buf)
            total += buf
        return total / len(self.trees)

    def scores(self, data: np.ndarray) -> np.ndarray:
        """Anomaly scores in (0, 1]; higher is more anomalous."""
        eh = self.path_lengths(data)
        return np.power(2.0, -eh / self._c_psi)

    def score(self, x) -> tuple[float, float]:
        """(E(h), s) for a single point."""
        eh = float(self.path_lengths(np.asarray(x, dtype=float)[None, :])[0])
        return eh, anomaly_score(eh, self.effective_subsample)


def fit(data: np.ndarray, tree_count: int = DEFAULT_TREE_COUNT,
        subsample_size: int = DEFAULT_SUBSAMPLE, seed: int = 0) -> IsolationForest:
    """Build a forest on independent uniform subsamples without replacement.

    Per-tree RNGs are spawned from SeedSequence([seed, tree_index]) so the
    forest is reproducible and trees can be built independently.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise DataError(f"training data must be a 2-D array, got ndim={data.ndim}")
    n, dim = data.shape
    if n < 2:
        raise DataError(f"need at least 2 training points, got {n}")
    if tree_count < 1:
        raise ConfigurationError(f"tree_count must be >= 1, got {tree_count}")
    if subsample_size < 2:
        raise ConfigurationError(f"subsample_size must be >= 2, got {subsample_size}")

    psi = min(subsample_size, n)
    height_limit = int(np.ceil(np.log2(psi)))
    trees = []
    for k in range(tree_count):
        rng = np.random.default_rng(np.random.SeedSequence(
            [seed & 0xFFFFFFFFFFFFFFFF, k]))
        sample = data[rng.choice(n, size=psi, replace=False)]
        trees.append(_build_tree(sample, 0, height_limit, rng))
    return IsolationForest(trees, dim, psi, tree_count, subsample_size, seed)


def threshold_by_contamination(scores, contamination: float,
                               ) -> tuple[float, np.ndarray]:
    """Nearest-rank threshold with an exact flag-count guarantee.

    Exactly ceil(contamination * n) points are flagged; ties resolve toward
    higher scores, then lower input index. The returned threshold is the
    (1 - contamination) nearest-rank quantile of the scores.
    """
    if not 0 < contamination < 1:
        raise ConfigurationError(
            f"contamination must be in (0, 1), got {contamination}")
    scores = np.asarray(scores, dtype=float)
    n = scores.shape[0]
    if n == 0:
        raise ConfigurationError("scores must be non-empty")
    k = int(np.ceil((1.0 - contamination) * n))
    threshold = float(np.sort(scores)[max(k, 1) - 1])
    flag_count = int(np.ceil(contamination * n))
    order = np.lexsort((np.arange(n), -scores))  # score desc, then index asc
    flags = np.zeros(n, dtype=bool)
    flags[order[:flag_count]] = True
    return threshold, flags


def save(forest: IsolationForest, path: str | Path) -> None:
    """Versioned flat-text serialization: preorder node records per tree."""
    lines = [f"{SERIAL_VERSION} trees={forest.tree_count} psi={forest.subsample_size} "
             f"effective_psi={forest.effective_subsample} dim={forest.dim} seed={forest.seed}"]

    def emit(node: TreeNode) -> None:
        if node.is_leaf:
            lines.append(f"E {node.size}")
        else:
            lines.append(f"I {node.feature} {node.value!r} {node.size}")
            emit(node.left)
            emit(node.right)

    for tree in forest.trees:
        lines.append("T")
        emit(tree)
    Path(path).write_text("\n".join(lines) + "\n")


def load(path: str | Path) -> IsolationForest:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(SERIAL_VERSION):
        raise DataError(f"not a {SERIAL_VERSION} file: {path}")
    meta = dict(kv.split("=") for kv in lines[0].split()[1:])
    pos = 1

    def parse() -> TreeNode:
        nonlocal pos
        parts = lines[pos].split()
        pos += 1
        if parts[0] == "E":
            return TreeNode(size=int(parts[1]))
        node = TreeNode(feature=int(parts[1]), value=float(parts[2]), size=int(parts[3]))
        node.left = parse()
        node.right = parse()
        return node

    trees = []
    while pos < len(lines):
        if lines[pos] != "T":
            raise DataError(f"malformed forest file at line {pos + 1}")
        pos += 1
        trees.append(parse())
    return IsolationForest(trees, int(meta["dim"]), int(meta["effective_psi"]),
                           int(meta["trees"]), int(meta["psi"]), int(meta["seed"]))
