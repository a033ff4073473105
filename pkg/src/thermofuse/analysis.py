"""Exploratory-analysis stack: wild-type/mutant substitution counts, PCA,
k-means clustering and a random-forest classifier over reduced embeddings.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from thermofuse.errors import DegenerateModelError, DomainError, ShapeError
from thermofuse.features import AA_ORDER, AA_INDEX
from thermofuse.training import MutationRecord


@dataclass
class SubstitutionCounts:
    """20x20 grid: rows wild-type residue, columns mutant residue."""

    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (20, 20):
            raise ShapeError("substitution counts must be 20x20")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def top_pairs(self, n: int = 5) -> list[tuple[str, str, int]]:
        flat = [(AA_ORDER[i], AA_ORDER[j], int(self.counts[i, j]))
                for i in range(20) for j in range(20) if self.counts[i, j] > 0]
        flat.sort(key=lambda t: (-t[2], t[0], t[1]))
        return flat[:n]


def substitution_counts(records: list[MutationRecord]) -> SubstitutionCounts:
    counts = np.zeros((20, 20), dtype=np.int64)
    for r in records:
        counts[AA_INDEX[r.wt_aa], AA_INDEX[r.mut_aa]] += 1
    return SubstitutionCounts(counts)


# ---------------------------------------------------------------------------
# PCA


@dataclass
class PcaModel:
    mean: np.ndarray
    components: np.ndarray          # k x d, orthonormal rows
    explained_variance: np.ndarray  # k, non-increasing

    def __post_init__(self):
        if np.any(np.diff(self.explained_variance) > 1e-12):
            raise DomainError("explained variances must be non-increasing")


def pca_fit(X, k: int) -> PcaModel:
    """Principal axes by descending variance, via SVD of the centered data.

    Component signs are normalized so each row's largest-magnitude entry is
    positive, which keeps the fit reproducible across platforms.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DomainError("PCA needs an n x d matrix with n >= 2")
    n, d = X.shape
    if not 1 <= k <= min(n - 1, d):
        raise DomainError(f"k must lie in [1, min(n-1, d)] = [1, {min(n - 1, d)}], got {k}")
    mean = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - mean, full_matrices=False)
    components = vt[:k].copy()
    for row in components:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0:
            row *= -1.0
    return PcaModel(mean=mean, components=components,
                    explained_variance=(s[:k] ** 2) / (n - 1))


def pca_transform(model: PcaModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return (X - model.mean) @ model.components.T


def pca_inverse(model: PcaModel, Y) -> np.ndarray:
    return np.asarray(Y, dtype=np.float64) @ model.components + model.mean


# ---------------------------------------------------------------------------
# k-means


@dataclass
class KMeansModel:
    k: int
    centroids: np.ndarray
    inertia: float
    assignments: np.ndarray
    inertia_history: list[float] = field(default_factory=list)


def _nearest(X: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    assign = d2.argmin(axis=1)
    return assign, d2[np.arange(len(X)), assign]


def kmeans(X, k: int, seed: int = 0, max_iter: int = 100) -> KMeansModel:
    """Seeded k-means++ initialization followed by Lloyd iterations.

    Stops at an assignment fixed point or after max_iter sweeps.  The
    inertia after every sweep is recorded and checked to be non-increasing.
    Empty clusters are re-seeded on the point farthest from its centroid.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DomainError("k-means needs an n x d matrix")
    n = X.shape[0]
    if not 1 <= k <= n:
        raise DomainError(f"k must lie in [1, n={n}], got {k}")
    rng = np.random.default_rng(seed)

    centroids = np.empty((k, X.shape[1]))
    centroids[0] = X[rng.integers(n)]
    d2 = ((X - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[j] = X[rng.integers(n)]
        else:
            centroids[j] = X[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((X - centroids[j]) ** 2).sum(axis=1))

    assign, dist2 = _nearest(X, centroids)
    history = [float(dist2.sum())]
    for _ in range(max_iter):
        for j in range(k):
            members = X[assign == j]
            if len(members):
                centroids[j] = members.mean(axis=0)
            else:
                centroids[j] = X[np.argmax(dist2)]
        new_assign, dist2 = _nearest(X, centroids)
        inertia = float(dist2.sum())
        assert inertia <= history[-1] + 1e-9, "Lloyd iteration increased inertia"
        history.append(inertia)
        if np.array_equal(new_assign, assign):
            assign = new_assign
            break
        assign = new_assign
    return KMeansModel(k=k, centroids=centroids, inertia=history[-1],
                       assignments=assign, inertia_history=history)


# ---------------------------------------------------------------------------
# random forest


@dataclass
class ForestParams:
    n_trees: int = 100
    max_depth: Optional[int] = 12  # None = unlimited
    min_leaf: int = 1
    seed: int = 0
    bootstrap: bool = True
    subsample_features: bool = True  # sqrt(d) features per split


@dataclass
class _Node:
    label: Optional[str] = None
    feature: int = -1
    threshold: float = 0.0
    left: Optional["_Node"] = None
    right: Optional["_Node"] = None


@dataclass
class RandomForest:
    trees: list[_Node]
    params: ForestParams
    classes: list[str]

    @property
    def n_trees(self) -> int:
        return len(self.trees)


def _majority(labels: np.ndarray, classes: list[str]) -> str:
    best, best_count = None, -1
    for c in classes:  # classes sorted: lexicographic tie-break built in
        count = int((labels == c).sum())
        if count > best_count:
            best, best_count = c, count
    return best


def _gini(labels: np.ndarray, classes: list[str]) -> float:
    n = len(labels)
    g = 1.0
    for c in classes:
        p = (labels == c).sum() / n
        g -= p * p
    return g


def _grow(X: np.ndarray, labels: np.ndarray, depth: int, params: ForestParams,
          classes: list[str], rng: np.random.Generator) -> _Node:
    if ((params.max_depth is not None and depth >= params.max_depth)
            or len(labels) <= params.min_leaf
            or len(set(labels.tolist())) == 1):
        return _Node(label=_majority(labels, classes))
    d = X.shape[1]
    if params.subsample_features:
        m = max(1, int(np.sqrt(d)))
        features = sorted(rng.choice(d, size=m, replace=False).tolist())
    else:
        features = range(d)
    parent = _gini(labels, classes)
    # An impure node splits on the best candidate even at zero gain (the
    # children can still untangle it, e.g. XOR-style data).
    best = None  # (gain, feature, threshold)
    for f in features:
        values = np.unique(X[:, f])
        for lo, hi in zip(values, values[1:]):
            thr = (lo + hi) / 2.0
            mask = X[:, f] <= thr
            nl = int(mask.sum())
            if nl < params.min_leaf or len(labels) - nl < params.min_leaf:
                continue
            w = nl / len(labels)
            gain = parent - (w * _gini(labels[mask], classes)
                             + (1 - w) * _gini(labels[~mask], classes))
            if best is None or gain > best[0] + 1e-15:
                best = (gain, f, thr)
    if best is None:
        return _Node(label=_majority(labels, classes))
    _, f, thr = best
    mask = X[:, f] <= thr
    return _Node(feature=f, threshold=thr,
                 left=_grow(X[mask], labels[mask], depth + 1, params, classes, rng),
                 right=_grow(X[~mask], labels[~mask], depth + 1, params, classes, rng))


def forest_fit(X, labels, params: ForestParams | None = None) -> RandomForest:
    """Bootstrap-sampled CART trees with Gini splits and sqrt(d) feature
    subsampling; per-tree seeds derive from the forest seed.
    """
    params = params or ForestParams()
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=object)
    if X.ndim != 2 or len(labels) != X.shape[0]:
        raise ShapeError("X must be n x d with one label per row")
    classes = sorted(set(labels.tolist()))
    if len(classes) < 2:
        raise DegenerateModelError("training labels contain a single class")
    seeds = np.random.SeedSequence(params.seed).spawn(params.n_trees)
    trees = []
    for tree_seed in seeds:
        rng = np.random.default_rng(tree_seed)
        if params.bootstrap:
            idx = rng.integers(len(labels), size=len(labels))
        else:
            idx = np.arange(len(labels))
        trees.append(_grow(X[idx], labels[idx], 0, params, classes, rng))
    return RandomForest(trees=trees, params=params, classes=classes)


def _tree_predict(node: _Node, x: np.ndarray) -> str:
    while node.label is None:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.label


def forest_predict(forest: RandomForest, x) -> str:
    """Majority vote across trees; ties resolve to the smaller label."""
    x = np.asarray(x, dtype=np.float64)
    votes: dict[str, int] = {}
    for tree in forest.trees:
        label = _tree_predict(tree, x)
        votes[label] = votes.get(label, 0) + 1
    return max(sorted(votes), key=lambda c: votes[c])


def tree_predict(forest: RandomForest, tree_index: int, x) -> str:
    return _tree_predict(forest.trees[tree_index], np.asarray(x, dtype=np.float64))
