"""From-scratch classifiers and evaluation.

CART decision trees with Gini impurity, a bagged random forest with
mean-decrease-in-impurity feature importances, k-nearest-neighbours and
logistic regression baselines, stratified k-fold cross-validation and a
randomized hyperparameter search.  Everything is deterministic given a seed:
per-tree and per-fold generators are derived from the master seed with a
splitmix-style mixer so results are reproducible across runs and platforms.

Ties are always broken the same way: split candidates by lowest feature
index then lowest threshold, predicted classes by lowest label index.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .dataset import FeatureStats, LabeledFeatureSet
from .errors import (
    EmptyDatasetError,
    NoSplitsError,
    SingleClassError,
    TooFewSamplesError,
    UntrainedModelError,
)

_MASK64 = (1 << 64) - 1


def derive_seed(master: int, *indices: int) -> int:
    """Splitmix64-style child seed: mix(master, i1, i2, ...)."""
    z = master & _MASK64
    for idx in indices:
        z = (z + (idx + 1) * 0x9E3779B97F4A7C15) & _MASK64
        z ^= z >> 30
        z = (z * 0xBF58476D1CE4E5B9) & _MASK64
        z ^= z >> 27
        z = (z * 0x94D049BB133111EB) & _MASK64
        z ^= z >> 31
    return z


# --- CART ------------------------------------------------------------------


@dataclass
class TreeNode:
    """Split node or leaf; leaves have feature None and carry class counts."""

    counts: np.ndarray
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - (p @ p))


def _best_split(x_node, y_node, feature_ids, n_classes, parent_counts):
    """Best (feature, threshold, gain) over midpoints of distinct values.

    Returns None when no feature in the subset has two distinct values.
    Gains are compared strictly, so the first candidate in (feature asc,
    threshold asc) order wins ties.
    """
    n = y_node.size
    parent_gini = _gini(parent_counts)
    onehot = (y_node[:, None] == np.arange(n_classes)).astype(np.float64)
    best = None
    best_gain = -1.0
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    for f in feature_ids:
        x = x_node[:, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        if xs[0] == xs[-1]:
            continue
        valid = xs[:-1] < xs[1:]
        left = np.cumsum(onehot[order], axis=0)[:-1]
        right = parent_counts - left
        gini_l = 1.0 - np.einsum("ij,ij->i", left, left) / n_left**2
        gini_r = 1.0 - np.einsum("ij,ij->i", right, right) / n_right**2
        gains = parent_gini - (n_left * gini_l + n_right * gini_r) / n
        gains[~valid] = -np.inf
        i = int(np.argmax(gains))
        if gains[i] > best_gain:
            thr = (xs[i] + xs[i + 1]) / 2.0
            if thr >= xs[i + 1]:  # adjacent floats can round the midpoint up
                thr = float(xs[i])
            best_gain = float(gains[i])
            best = (int(f), float(thr), best_gain)
    return best


def _grow_tree(features, labels, indices, depth, max_depth, min_samples_split,
               features_per_split, rng, n_classes) -> TreeNode:
    counts = np.bincount(labels[indices], minlength=n_classes)
    node = TreeNode(counts=counts)
    n = indices.size
    if (
        n < 2
        or n < min_samples_split
        or counts.max() == n
        or (max_depth is not None and depth >= max_depth)
    ):
        return node

    n_features = features.shape[1]
    if features_per_split >= n_features:
        feats = np.arange(n_features)
    else:
        feats = np.sort(rng.choice(n_features, features_per_split, replace=False))

    best = _best_split(features[indices], labels[indices], feats,
                       n_classes, counts.astype(np.float64))
    if best is None:
        return node

    node.feature, node.threshold, _ = best
    mask = features[indices, node.feature] <= node.threshold
    node.left = _grow_tree(features, labels, indices[mask], depth + 1,
                           max_depth, min_samples_split, features_per_split,
                           rng, n_classes)
    node.right = _grow_tree(features, labels, indices[~mask], depth + 1,
                            max_depth, min_samples_split, features_per_split,
                            rng, n_classes)
    return node


def _leaf_for(root: TreeNode, row: np.ndarray) -> TreeNode:
    node = root
    while not node.is_leaf:
        node = node.left if row[node.feature] <= node.threshold else node.right
    return node


@dataclass
class ForestParams:
    """Forest hyperparameters; features_per_split None means ceil(sqrt(F))."""

    n_trees: int = 100
    max_depth: int | None = None
    min_samples_split: int = 2
    features_per_split: int | None = None
    bootstrap: bool = True

    def resolved_features_per_split(self, n_features: int) -> int:
        if self.features_per_split is None:
            return math.ceil(math.sqrt(n_features))
        return self.features_per_split


@dataclass
class RandomForestModel:
    trees: list
    label_names: tuple
    feature_names: tuple
    params: ForestParams
    seed: int
    importances: np.ndarray | None = None
    kind: str = "forest"

    @property
    def n_classes(self) -> int:
        return len(self.label_names)

    def predict_proba(self, features) -> np.ndarray:
        if not self.trees:
            raise UntrainedModelError("model has no trees")
        rows = np.atleast_2d(np.asarray(features, dtype=float))
        out = np.zeros((rows.shape[0], self.n_classes))
        for i, row in enumerate(rows):
            acc = np.zeros(self.n_classes)
            for root in self.trees:
                leaf = _leaf_for(root, row)
                acc += leaf.counts / leaf.counts.sum()
            out[i] = acc / len(self.trees)
        return out

    def predict(self, features) -> np.ndarray:
        return np.argmax(self.predict_proba(features), axis=1)


def train_tree(dataset: LabeledFeatureSet, max_depth: int | None = None,
               min_samples_split: int = 2,
               features_per_split: int | None = None,
               seed: int = 0) -> RandomForestModel:
    """Single CART tree (a forest of one, grown on the full sample)."""
    params = ForestParams(
        n_trees=1,
        max_depth=max_depth,
        min_samples_split=min_samples_split,
        features_per_split=(features_per_split
                            if features_per_split is not None
                            else dataset.n_features),
        bootstrap=False,
    )
    model = train_forest(dataset, params, seed)
    return replace(model, kind="tree")


def train_forest(dataset: LabeledFeatureSet,
                 params: ForestParams | None = None,
                 seed: int = 0) -> RandomForestModel:
    """Bagged CART ensemble, deterministic for a given seed."""
    if dataset.n == 0:
        raise EmptyDatasetError("cannot train on an empty dataset")
    params = params or ForestParams()
    if params.n_trees < 1:
        raise ValueError("need at least one tree")
    feats = dataset.features
    labels = dataset.labels
    n_classes = dataset.n_classes
    per_split = params.resolved_features_per_split(dataset.n_features)

    trees = []
    for t in range(params.n_trees):
        rng = np.random.default_rng(derive_seed(seed, t))
        if params.bootstrap:
            indices = rng.integers(0, dataset.n, dataset.n)
        else:
            indices = np.arange(dataset.n)
        trees.append(
            _grow_tree(feats, labels, indices, 0, params.max_depth,
                       params.min_samples_split, per_split, rng, n_classes)
        )

    model = RandomForestModel(
        trees=trees,
        label_names=tuple(dataset.label_names),
        feature_names=tuple(dataset.feature_names),
        params=params,
        seed=seed,
    )
    try:
        model.importances = feature_importances(model)
    except NoSplitsError:
        model.importances = None
    return model


def feature_importances(model: RandomForestModel) -> np.ndarray:
    """Mean decrease in impurity per feature, normalized to sum 1.

    Each split contributes (samples reaching node / samples at root) times
    the Gini decrease it achieves; contributions are accumulated per feature
    within a tree, averaged over trees, then normalized.
    """
    if not model.trees:
        raise UntrainedModelError("model has no trees")
    n_features = len(model.feature_names)
    total = np.zeros(n_features)
    for root in model.trees:
        imp = np.zeros(n_features)
        n_root = root.counts.sum()
        stack = [root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                continue
            n = node.counts.sum()
            n_l = node.left.counts.sum()
            n_r = node.right.counts.sum()
            child_gini = (n_l * _gini(node.left.counts)
                          + n_r * _gini(node.right.counts)) / n
            imp[node.feature] += (n / n_root) * (_gini(node.counts) - child_gini)
            stack.append(node.left)
            stack.append(node.right)
        total += imp
    total /= len(model.trees)
    s = total.sum()
    if s == 0:
        raise NoSplitsError("no split in any tree; importances undefined")
    return total / s


# --- kNN and logistic regression ---------------------------------------------


@dataclass
class KnnModel:
    features_std: np.ndarray
    labels: np.ndarray
    k: int
    stats: FeatureStats
    label_names: tuple
    kind: str = "knn"

    def predict(self, features) -> np.ndarray:
        rows = np.atleast_2d(self.stats.standardize(features))
        n_classes = len(self.label_names)
        out = np.empty(rows.shape[0], dtype=int)
        for i, row in enumerate(rows):
            d2 = np.sum((self.features_std - row) ** 2, axis=1)
            nearest = np.argsort(d2, kind="stable")[: self.k]
            votes = np.bincount(self.labels[nearest], minlength=n_classes)
            out[i] = int(np.argmax(votes))
        return out


def train_knn(dataset: LabeledFeatureSet, k: int) -> KnnModel:
    if dataset.n == 0:
        raise EmptyDatasetError("cannot train on an empty dataset")
    if not 1 <= k <= dataset.n:
        raise ValueError("k must be in [1, n]")
    stats = FeatureStats.from_features(dataset.features)
    return KnnModel(
        features_std=stats.standardize(dataset.features),
        labels=dataset.labels,
        k=k,
        stats=stats,
        label_names=tuple(dataset.label_names),
    )


def knn_classify(dataset: LabeledFeatureSet, query, k: int) -> int:
    """Majority vote among the k nearest (z-scored Euclidean) neighbours."""
    return int(train_knn(dataset, k).predict(np.atleast_2d(query))[0])


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def logistic_loss(weights, bias, features_std, labels01, l2):
    """Regularized mean cross-entropy (bias unpenalized)."""
    z = features_std @ weights + bias
    # log(1 + exp(-|z|)) + max(z,0) - z*y, numerically stable
    loss = np.mean(np.logaddexp(0.0, z) - labels01 * z)
    return float(loss + 0.5 * l2 * (weights @ weights))


def _logistic_gradient(weights, bias, features_std, labels01, l2):
    p = _sigmoid(features_std @ weights + bias)
    resid = p - labels01
    grad_w = features_std.T @ resid / labels01.size + l2 * weights
    grad_b = float(resid.mean())
    return grad_w, grad_b


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    stats: FeatureStats
    label_names: tuple
    kind: str = "logreg"

    def predict_proba(self, features) -> np.ndarray:
        z = np.atleast_2d(self.stats.standardize(features)) @ self.weights
        p1 = _sigmoid(z + self.bias)
        return np.column_stack([1.0 - p1, p1])

    def predict(self, features) -> np.ndarray:
        return np.argmax(self.predict_proba(features), axis=1)


def logistic_regression_train(dataset: LabeledFeatureSet, l2: float = 1e-4,
                              epochs: int = 500, lr: float = 0.5,
                              seed: int = 0) -> LogisticModel:
    """Full-batch gradient descent on z-scored features, binary labels.

    The quadratic penalty is applied as a proximal (implicit) step,
    ``w <- (w - lr*grad_data) / (1 + lr*l2)``, which stays stable for
    arbitrarily large ``l2``; the unpenalized bias takes plain steps.
    """
    if dataset.n == 0:
        raise EmptyDatasetError("cannot train on an empty dataset")
    if dataset.n_classes != 2:
        raise SingleClassError("logistic regression needs exactly 2 classes")
    stats = FeatureStats.from_features(dataset.features)
    z = stats.standardize(dataset.features)
    y = dataset.labels.astype(float)
    rng = np.random.default_rng(seed)
    w = rng.normal(0.0, 0.01, dataset.n_features)
    b = 0.0
    for _ in range(epochs):
        grad_w, grad_b = _logistic_gradient(w, b, z, y, 0.0)
        w = (w - lr * grad_w) / (1.0 + lr * l2)
        b -= lr * grad_b
    return LogisticModel(weights=w, bias=b, stats=stats,
                         label_names=tuple(dataset.label_names))


# --- cross-validation and search ---------------------------------------------


def stratified_kfold(dataset: LabeledFeatureSet, k: int, seed: int) -> list:
    """k disjoint index folds with per-class counts differing by at most 1."""
    if k < 2:
        raise ValueError("need k >= 2 folds")
    counts = dataset.class_counts()
    if counts.min() < k:
        raise TooFewSamplesError(
            f"smallest class has {counts.min()} members, need >= {k}"
        )
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    for cls in range(dataset.n_classes):
        idx = np.nonzero(dataset.labels == cls)[0]
        rng.shuffle(idx)
        for i, sample in enumerate(idx):
            folds[i % k].append(int(sample))
    return [np.sort(np.array(f, dtype=int)) for f in folds]


@dataclass
class CVResult:
    fold_accuracies: list
    mean_accuracy: float
    confusion: np.ndarray  # rows true class, columns predicted


def evaluate(dataset: LabeledFeatureSet, trainer, k: int, seed: int) -> CVResult:
    """Stratified k-fold CV of ``trainer(train_set, fold_seed) -> model``."""
    folds = stratified_kfold(dataset, k, seed)
    n_classes = dataset.n_classes
    confusion = np.zeros((n_classes, n_classes), dtype=int)
    accuracies = []
    for i, test_idx in enumerate(folds):
        train_idx = np.concatenate([f for j, f in enumerate(folds) if j != i])
        train_set = LabeledFeatureSet(
            features=dataset.features[train_idx],
            labels=dataset.labels[train_idx],
            label_names=dataset.label_names,
            feature_names=dataset.feature_names,
        )
        model = trainer(train_set, derive_seed(seed, i + 1))
        predicted = model.predict(dataset.features[test_idx])
        truth = dataset.labels[test_idx]
        accuracies.append(float(np.mean(predicted == truth)))
        np.add.at(confusion, (truth, predicted), 1)
    return CVResult(
        fold_accuracies=accuracies,
        mean_accuracy=float(np.mean(accuracies)),
        confusion=confusion,
    )


@dataclass
class HyperparamGrid:
    """Candidate values for the forest search (values per D-defaults)."""

    n_trees: tuple = (50, 100, 200)
    max_depth: tuple = (4, 8, 16, None)
    min_samples_split: tuple = (2, 5, 10)
    features_per_split: tuple = (2, 3, 4)
    iterations: int = 40

    def combinations(self) -> list:
        return [
            ForestParams(n_trees=nt, max_depth=md, min_samples_split=ms,
                         features_per_split=fs)
            for nt, md, ms, fs in itertools.product(
                self.n_trees, self.max_depth,
                self.min_samples_split, self.features_per_split)
        ]


def random_grid_search(dataset: LabeledFeatureSet, grid: HyperparamGrid,
                       k: int, seed: int):
    """Uniform sample of distinct grid points, each scored by k-fold CV.

    Returns ``(best_params, best_cv_result)``; ties keep the first sampled
    combination.  Folds are identical across combinations so scores are
    comparable.
    """
    combos = grid.combinations()
    if not combos:
        raise ValueError("empty hyperparameter grid")
    n_eval = min(grid.iterations, len(combos))
    rng = np.random.default_rng(derive_seed(seed, 0xC0))
    chosen = rng.choice(len(combos), size=n_eval, replace=False)
    best = None
    for pos in chosen:
        params = combos[int(pos)]
        result = evaluate(
            dataset,
            lambda ds, s, p=params: train_forest(ds, p, s),
            k,
            seed,
        )
        if best is None or result.mean_accuracy > best[1].mean_accuracy:
            best = (params, result)
    return best


# --- serialization -----------------------------------------------------------

MODEL_FORMAT_HEADER = "radiofp-model v1"


def _write_nodes(root: TreeNode, lines: list) -> int:
    """Pre-order node listing; returns the number of nodes written."""
    ids = {}

    def assign(node):
        ids[id(node)] = len(ids)
        if not node.is_leaf:
            assign(node.left)
            assign(node.right)

    assign(root)

    def emit(node):
        nid = ids[id(node)]
        if node.is_leaf:
            counts = " ".join(str(int(c)) for c in node.counts)
            lines.append(f"{nid} leaf {counts}")
        else:
            lines.append(
                f"{nid} split {node.feature} {node.threshold!r} "
                f"{ids[id(node.left)]} {ids[id(node.right)]}"
            )
            emit(node.left)
            emit(node.right)

    emit(root)
    return len(ids)


def model_to_text(model: RandomForestModel) -> str:
    """Versioned plain-text serialization sufficient for bit-exact reload."""
    params = model.params
    meta = {
        "label_names": list(model.label_names),
        "feature_names": list(model.feature_names),
        "seed": model.seed,
        "params": {
            "n_trees": params.n_trees,
            "max_depth": params.max_depth,
            "min_samples_split": params.min_samples_split,
            "features_per_split": params.features_per_split,
            "bootstrap": params.bootstrap,
        },
        "importances": (None if model.importances is None
                        else list(model.importances)),
    }
    lines = [MODEL_FORMAT_HEADER, f"kind {model.kind}",
             "meta " + json.dumps(meta), f"trees {len(model.trees)}"]
    for i, root in enumerate(model.trees):
        body: list = []
        n_nodes = _write_nodes(root, body)
        lines.append(f"tree {i} {n_nodes}")
        lines.extend(body)
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> RandomForestModel:
    lines = text.splitlines()
    if not lines or lines[0] != MODEL_FORMAT_HEADER:
        raise ValueError("not a radiofp model file")
    kind = lines[1].split(" ", 1)[1]
    meta = json.loads(lines[2].split(" ", 1)[1])
    n_trees = int(lines[3].split(" ", 1)[1])
    n_classes = len(meta["label_names"])

    pos = 4
    trees = []
    for _ in range(n_trees):
        head = lines[pos].split()
        if head[0] != "tree":
            raise ValueError(f"expected tree header at line {pos + 1}")
        n_nodes = int(head[2])
        pos += 1
        raw = {}
        for _ in range(n_nodes):
            parts = lines[pos].split()
            raw[int(parts[0])] = parts[1:]
            pos += 1

        def build(nid):
            parts = raw[nid]
            if parts[0] == "leaf":
                counts = np.array([int(v) for v in parts[1:]], dtype=int)
                if counts.size != n_classes:
                    raise ValueError("leaf count width mismatch")
                return TreeNode(counts=counts)
            _, feature, threshold, left_id, right_id = parts
            left = build(int(left_id))
            right = build(int(right_id))
            return TreeNode(
                counts=left.counts + right.counts,
                feature=int(feature),
                threshold=float(threshold),
                left=left,
                right=right,
            )

        trees.append(build(0))

    p = meta["params"]
    params = ForestParams(
        n_trees=p["n_trees"],
        max_depth=p["max_depth"],
        min_samples_split=p["min_samples_split"],
        features_per_split=p["features_per_split"],
        bootstrap=p["bootstrap"],
    )
    importances = (None if meta["importances"] is None
                   else np.array(meta["importances"]))
    return RandomForestModel(
        trees=trees,
        label_names=tuple(meta["label_names"]),
        feature_names=tuple(meta["feature_names"]),
        params=params,
        seed=meta["seed"],
        importances=importances,
        kind=kind,
    )


def save_model(model: RandomForestModel, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(model_to_text(model))


def load_model(path) -> RandomForestModel:
    with open(path, "r", encoding="ascii") as fh:
        return model_from_text(fh.read())
