"""Row-level classifiers and image-level vote aggregation.

Three classifiers share one prediction contract: a label plus a normalized
per-class score vector per row. Feature rows are standardized (train-set
mean/std) for the distance- and margin-based models; the forest consumes
raw rows. Every model is reproducible bit-exactly from its config and seed.
"""

from __future__ import annotations

import heapq
import json
import struct
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .pairing import JointFeatureMap

KD_TREE_MAX_DIM = 32  # beyond this, exact brute force is the better index

MODEL_MAGIC = b"PFCM"
MODEL_VERSION = 1


class ClassifierError(ValueError):
    """Invalid classifier input (empty set, single class, wrong dim)."""


@dataclass(frozen=True)
class KnnConfig:
    k: int = 21
    weighting: str = "inverse_distance"
    index: str = "kd_tree"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.weighting != "inverse_distance":
            raise ValueError(f"unsupported weighting {self.weighting!r}")
        if self.index != "kd_tree":
            raise ValueError(f"unsupported index {self.index!r}")


@dataclass(frozen=True)
class LinearSvmConfig:
    regularization: float = 1.0
    tolerance: float = 0.001
    max_epochs: int = 200
    scheme: str = "one_vs_rest"

    def __post_init__(self):
        if self.regularization <= 0:
            raise ValueError("regularization must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")
        if self.scheme != "one_vs_rest":
            raise ValueError(f"unsupported scheme {self.scheme!r}")


@dataclass(frozen=True)
class ForestConfig:
    trees: int = 200
    max_depth: int = 21
    features_per_split: Optional[int] = None  # None: floor(sqrt(D))
    seed: int = 0

    def __post_init__(self):
        if self.trees < 1:
            raise ValueError("trees must be at least 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")


@dataclass(frozen=True)
class Scaler:
    """Per-dimension standardization fitted on training rows."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Scaler":
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        std = np.where(std < 1e-12, 1.0, std)
        return cls(mean, std)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std


def _as_rows(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ClassifierError("rows must form a 2-D array")
    return arr


# --- exact kd-tree -----------------------------------------------------------

class _KdNode:
    __slots__ = ("index", "left", "right")

    def __init__(self, index, left, right):
        self.index = index
        self.left = left
        self.right = right


class KdTree:
    """Exact k-nearest-neighbor index; ties resolved by (distance, index)."""

    def __init__(self, points: np.ndarray):
        self.points = np.ascontiguousarray(points, dtype=np.float64)
        self.dim = self.points.shape[1]
        self.root = self._build(list(range(self.points.shape[0])), 0)

    def _build(self, indices, depth):
        if not indices:
            return None
        axis = depth % self.dim
        indices.sort(key=lambda i: (self.points[i, axis], i))
        mid = len(indices) // 2
        return _KdNode(
            indices[mid],
            self._build(indices[:mid], depth + 1),
            self._build(indices[mid + 1 :], depth + 1),
        )

    def query(self, q: np.ndarray, k: int) -> list[tuple[float, int]]:
        """k nearest as (squared distance, index), sorted ascending."""
        q = np.asarray(q, dtype=np.float64)
        heap: list[tuple[float, int]] = []  # (-d2, -idx): root holds the worst

        def visit(node, depth):
            if node is None:
                return
            diff2 = float(((q - self.points[node.index]) ** 2).sum())
            entry = (-diff2, -node.index)
            if len(heap) < k:
                heapq.heappush(heap, entry)
            elif entry > heap[0]:
                heapq.heapreplace(heap, entry)
            axis = depth % self.dim
            delta = q[axis] - self.points[node.index, axis]
            near, far = (node.left, node.right) if delta < 0 else (node.right, node.left)
            visit(near, depth + 1)
            if len(heap) < k or delta * delta <= -heap[0][0]:
                visit(far, depth + 1)

        visit(self.root, 0)
        return sorted((-d2, -i) for d2, i in heap)


def _brute_neighbors(train: np.ndarray, queries: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact neighbor search; same (distance, index) tie order as the tree.

    Distances come from explicit differences (never the expanded dot
    product) so identical rows land at exactly zero.
    """
    nq = queries.shape[0]
    d2 = np.empty((nq, train.shape[0]))
    for i in range(nq):
        diff = queries[i] - train
        d2[i] = np.einsum("td,td->t", diff, diff)
    order = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return np.take_along_axis(d2, order, axis=1), order


# --- k-nearest neighbors ------------------------------------------------------

@dataclass
class KnnModel:
    x: np.ndarray  # standardized training rows
    y: np.ndarray
    n_classes: int
    cfg: KnnConfig
    scaler: Scaler
    tree: Optional[KdTree] = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def _neighbors(self, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        k = min(self.cfg.k, self.x.shape[0])
        if self.tree is None:
            return _brute_neighbors(self.x, queries, k)
        d2 = np.empty((queries.shape[0], k))
        idx = np.empty((queries.shape[0], k), dtype=np.intp)
        for row, q in enumerate(queries):
            hits = self.tree.query(q, k)
            d2[row] = [h[0] for h in hits]
            idx[row] = [h[1] for h in hits]
        return d2, idx

    def _predict(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        queries = self.scaler.transform(x)
        if queries.shape[0] == 0:
            return np.zeros(0, dtype=np.intp), np.zeros((0, self.n_classes))
        d2, idx = self._neighbors(queries)
        labels = self.y[idx]
        zero = d2 == 0.0
        weights = np.where(zero, 0.0, 1.0 / np.sqrt(np.where(zero, 1.0, d2)))
        has_exact = zero.any(axis=1)
        weights[has_exact] = zero[has_exact].astype(np.float64)  # exact matches dominate
        scores = np.zeros((queries.shape[0], self.n_classes))
        for c in range(self.n_classes):
            scores[:, c] = (weights * (labels == c)).sum(axis=1)
        totals = scores.sum(axis=1, keepdims=True)
        totals[totals == 0.0] = 1.0
        scores /= totals
        return scores.argmax(axis=1), scores


def train_knn(x, y, n_classes: int, cfg: KnnConfig = KnnConfig()) -> KnnModel:
    """Build the neighbor index over all rows; the model is immutable.

    The kd-tree degrades in high dimension, so above KD_TREE_MAX_DIM the
    index is exact brute force with identical results.
    """
    x = _as_rows(x)
    y = np.asarray(y, dtype=np.intp)
    if x.shape[0] == 0:
        raise ClassifierError("empty training set")
    scaler = Scaler.fit(x)
    xs = scaler.transform(x)
    tree = KdTree(xs) if x.shape[1] <= KD_TREE_MAX_DIM else None
    return KnnModel(xs, y, n_classes, cfg, scaler, tree)


# --- linear SVM (one-vs-rest, epochwise subgradient descent) ------------------

@dataclass
class LinearSvmModel:
    weights: np.ndarray  # (K, D)
    bias: np.ndarray  # (K,)
    n_classes: int
    cfg: LinearSvmConfig
    scaler: Scaler
    objective_history: list[float] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def _predict(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        xs = self.scaler.transform(x)
        raw = xs @ self.weights.T + self.bias
        raw -= raw.max(axis=1, keepdims=True) if raw.size else 0.0
        expd = np.exp(raw)
        scores = expd / expd.sum(axis=1, keepdims=True) if raw.size else expd
        return raw.argmax(axis=1) if raw.size else np.zeros(0, dtype=np.intp), scores


def _svm_objective(w, aug, ysign, lam) -> float:
    margins = ysign * (w @ aug.T)
    hinge = np.maximum(0.0, 1.0 - margins).mean(axis=1)
    reg = 0.5 * lam * (w * w).sum(axis=1)
    return float((hinge + reg).mean())


def train_linear_svm(
    x,
    y,
    n_classes: int,
    cfg: LinearSvmConfig = LinearSvmConfig(),
    shuffle_seed: int = 0,
) -> LinearSvmModel:
    """One-vs-rest hinge-loss heads trained by per-sample subgradient steps.

    Step size is 1/(lambda * t) with lambda = 1/(C * n) and t the global
    step counter; samples are visited in a seeded shuffle per epoch. The
    bias rides along as an extra always-one feature so the 1/t shrinkage
    keeps it bounded. Training stops when the epoch-over-epoch objective
    decrease falls below the tolerance, or at max_epochs.
    """
    x = _as_rows(x)
    y = np.asarray(y, dtype=np.intp)
    if np.unique(y).shape[0] < 2:
        raise ClassifierError("linear SVM needs at least two classes in the training rows")
    scaler = Scaler.fit(x)
    xs = scaler.transform(x)
    n, d = xs.shape
    lam = 1.0 / (cfg.regularization * n)
    ysign = np.where(y[None, :] == np.arange(n_classes)[:, None], 1.0, -1.0)
    aug = np.hstack([xs, np.ones((n, 1))])

    w = np.zeros((n_classes, d + 1))
    rng = np.random.default_rng(shuffle_seed)
    t = 0
    history: list[float] = []
    for _epoch in range(cfg.max_epochs):
        before = w.copy()
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            margins = ysign[:, i] * (w @ aug[i])
            violated = margins < 1.0
            w *= 1.0 - eta * lam
            if violated.any():
                w[violated] += (eta * ysign[violated, i])[:, None] * aug[i]
        obj = _svm_objective(w, aug, ysign, lam)
        if history and history[-1] - obj < cfg.tolerance:
            if obj > history[-1]:
                w = before  # final epoch wobbled upward: keep the better state
            else:
                history.append(obj)
            break
        history.append(obj)
    return LinearSvmModel(w[:, :d].copy(), w[:, d].copy(), n_classes, cfg, scaler, history)


# --- random forest ------------------------------------------------------------

@dataclass
class _Tree:
    feature: np.ndarray  # (nodes,) int32, -1 at leaves
    threshold: np.ndarray  # (nodes,) float64
    left: np.ndarray  # (nodes,) int32
    right: np.ndarray  # (nodes,) int32
    scores: np.ndarray  # (nodes, K) leaf class distributions

    def predict_scores(self, x: np.ndarray) -> np.ndarray:
        node = np.zeros(x.shape[0], dtype=np.intp)
        while True:
            pending = np.nonzero(self.feature[node] >= 0)[0]
            if pending.size == 0:
                break
            cur = node[pending]
            go_left = x[pending, self.feature[cur]] <= self.threshold[cur]
            node[pending] = np.where(go_left, self.left[cur], self.right[cur])
        return self.scores[node]


@dataclass
class ForestModel:
    trees: list[_Tree]
    n_classes: int
    dim: int
    cfg: ForestConfig
    oob_accuracy: Optional[float] = None

    def _predict(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if x.shape[0] == 0:
            return np.zeros(0, dtype=np.intp), np.zeros((0, self.n_classes))
        scores = np.zeros((x.shape[0], self.n_classes))
        for tree in self.trees:
            scores += tree.predict_scores(x)
        scores /= len(self.trees)
        return scores.argmax(axis=1), scores


def _canonical_row_order(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # sort by label, then lexicographically by vector, so bootstrap draws
    # are independent of the caller's row order
    keys = tuple(x[:, j] for j in range(x.shape[1] - 1, -1, -1)) + (y,)
    return np.lexsort(keys)


def _gini_split(x, onehot, sample_idx, feats, n_classes):
    # minimizing weighted Gini equals maximizing
    # sum(left_counts^2)/n_left + sum(right_counts^2)/n_right
    sub = x[np.ix_(sample_idx, feats)]
    s = sub.shape[0]
    order = np.argsort(sub, axis=0, kind="stable")
    svals = np.take_along_axis(sub, order, axis=0)
    oh = onehot[sample_idx]
    left = np.cumsum(oh[order], axis=0)[:-1]  # (s-1, m, K)
    total = oh.sum(axis=0)
    t2 = float(total @ total)
    lc2 = np.einsum("imk,imk->im", left, left)
    ltot = np.einsum("imk,k->im", left, total)
    rc2 = t2 - 2.0 * ltot + lc2
    ln = np.arange(1, s, dtype=np.float64)[:, None]
    merit = lc2 / ln + rc2 / (s - ln)
    merit[svals[:-1] >= svals[1:]] = -np.inf  # no boundary between equal values
    flat = int(np.argmax(merit))
    pos, fi = divmod(flat, merit.shape[1])
    if not np.isfinite(merit[pos, fi]):
        return None
    lo, hi = svals[pos, fi], svals[pos + 1, fi]
    thr = lo + 0.5 * (hi - lo)
    if thr >= hi:  # midpoint rounded up to the right value
        thr = lo
    return int(feats[fi]), float(thr)


def _grow_tree(x, y, onehot, sample_idx, n_classes, cfg, m_feats, rng):
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    scores: list[np.ndarray] = []

    def leaf(idx) -> int:
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts = np.bincount(y[idx], minlength=n_classes).astype(np.float64)
        scores.append(counts / counts.sum())
        return node

    def grow(idx, depth) -> int:
        labels = y[idx]
        if idx.size < 2 or depth >= cfg.max_depth or (labels == labels[0]).all():
            return leaf(idx)
        feats = rng.choice(x.shape[1], size=m_feats, replace=False)
        split = _gini_split(x, onehot, idx, feats, n_classes)
        if split is None:
            return leaf(idx)
        f, thr = split
        mask = x[idx, f] <= thr
        node = len(feature)
        feature.append(f)
        threshold.append(thr)
        left.append(-1)
        right.append(-1)
        scores.append(np.zeros(n_classes))
        left[node] = grow(idx[mask], depth + 1)
        right[node] = grow(idx[~mask], depth + 1)
        return node

    grow(sample_idx, 0)
    return _Tree(
        np.asarray(feature, dtype=np.int32),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int32),
        np.asarray(right, dtype=np.int32),
        np.stack(scores),
    )


def train_forest(x, y, n_classes: int, cfg: ForestConfig = ForestConfig()) -> ForestModel:
    """Bagged CART trees with Gini splits over random feature subsets.

    Rows are brought into a canonical order before any randomness is drawn,
    so the forest depends only on the row multiset and the seed. Out-of-bag
    accuracy is computed during training when coverage exists.
    """
    x = _as_rows(x)
    y = np.asarray(y, dtype=np.intp)
    if x.shape[0] == 0:
        raise ClassifierError("empty training set")
    order = _canonical_row_order(x, y)
    x = np.ascontiguousarray(x[order])
    y = y[order]
    n, d = x.shape
    m_feats = cfg.features_per_split or max(1, int(np.sqrt(d)))
    m_feats = min(m_feats, d)
    onehot = (y[:, None] == np.arange(n_classes)).astype(np.float64)

    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.trees)
    trees: list[_Tree] = []
    oob_scores = np.zeros((n, n_classes))
    oob_hits = np.zeros(n, dtype=bool)
    for seq in seeds:
        rng = np.random.default_rng(seq)
        boot = rng.integers(0, n, size=n)
        tree = _grow_tree(x, y, onehot, boot, n_classes, cfg, m_feats, rng)
        trees.append(tree)
        oob = np.ones(n, dtype=bool)
        oob[boot] = False
        if oob.any():
            oob_scores[oob] += tree.predict_scores(x[oob])
            oob_hits |= oob
    oob_accuracy = None
    if oob_hits.any():
        pred = oob_scores[oob_hits].argmax(axis=1)
        oob_accuracy = float((pred == y[oob_hits]).mean())
    return ForestModel(trees, n_classes, d, cfg, oob_accuracy)


# --- labeled data ---------------------------------------------------------------

@dataclass(frozen=True)
class ImageFeatures:
    """One image's detected points, original records, and per-mode joint maps."""

    image_id: str
    points: np.ndarray
    records: tuple
    maps: dict
    used_fallback: bool = False

    def map_for(self, mode: str) -> JointFeatureMap:
        try:
            return self.maps[mode]
        except KeyError:
            raise KeyError(f"image {self.image_id!r} has no {mode!r} joint map") from None


@dataclass
class LabeledDataset:
    """Per-image feature bundles with class labels in [0, class_count)."""

    items: list[tuple[ImageFeatures, int]]
    class_count: int
    class_names: Optional[list[str]] = None

    def __post_init__(self):
        if not self.items:
            raise ValueError("dataset has no images")
        dims: dict[str, int] = {}
        for feats, label in self.items:
            if not 0 <= label < self.class_count:
                raise ValueError(f"label {label} outside [0, {self.class_count})")
            for mode, jmap in feats.maps.items():
                if len(jmap) == 0:
                    raise ValueError(f"image {feats.image_id!r} has an empty joint map")
                if dims.setdefault(mode, jmap.dim) != jmap.dim:
                    raise ValueError(f"inconsistent {mode} dims across images")

    @property
    def labels(self) -> np.ndarray:
        return np.asarray([label for _, label in self.items], dtype=np.intp)


# --- shared prediction surface -------------------------------------------------

def predict_rows(model, rows) -> list[tuple[int, np.ndarray]]:
    """Label plus normalized per-class scores for each row; deterministic."""
    x = np.asarray(rows, dtype=np.float64)
    if x.ndim == 1 and x.size == 0:
        x = x.reshape(0, model.dim)
    x = _as_rows(x)
    if x.shape[0] and x.shape[1] != model.dim:
        raise ClassifierError(f"row dim {x.shape[1]} != model dim {model.dim}")
    labels, scores = model._predict(x)
    return [(int(l), scores[i]) for i, l in enumerate(labels)]


def predict_image(model, jmap: JointFeatureMap) -> tuple[int, float]:
    """Image label by majority vote over the map's row predictions.

    Ties go to the largest summed per-class score, then the lowest class
    index. Confidence is the winning vote fraction.
    """
    if len(jmap) == 0:
        raise ClassifierError(f"joint map for {jmap.image_id!r} has no rows")
    x = jmap.matrix()
    if x.shape[1] != model.dim:
        raise ClassifierError(f"map dim {x.shape[1]} != model dim {model.dim}")
    labels, scores = model._predict(x)
    votes = np.bincount(labels, minlength=model.n_classes)
    sums = scores.sum(axis=0)
    winner = min(range(model.n_classes), key=lambda c: (-votes[c], -sums[c], c))
    return winner, float(votes[winner] / len(jmap))


# --- model serialization --------------------------------------------------------

_KIND_OF_MODEL = {KnnModel: "knn", LinearSvmModel: "svm_linear", ForestModel: "forest"}


def _pack_arrays(arrays: dict[str, np.ndarray]) -> bytes:
    out = [struct.pack("<I", len(arrays))]
    for name, arr in arrays.items():
        data = np.ascontiguousarray(arr)
        for blob in (name.encode("utf-8"), data.dtype.str.encode("ascii")):
            out.append(struct.pack("<I", len(blob)))
            out.append(blob)
        out.append(struct.pack("<I", data.ndim))
        out.append(struct.pack(f"<{data.ndim}q", *data.shape))
        out.append(data.tobytes())
    return b"".join(out)


def _unpack_arrays(fh) -> dict[str, np.ndarray]:
    (count,) = struct.unpack("<I", fh.read(4))
    arrays = {}
    for _ in range(count):
        (n,) = struct.unpack("<I", fh.read(4))
        name = fh.read(n).decode("utf-8")
        (n,) = struct.unpack("<I", fh.read(4))
        dtype = np.dtype(fh.read(n).decode("ascii"))
        (ndim,) = struct.unpack("<I", fh.read(4))
        shape = struct.unpack(f"<{ndim}q", fh.read(8 * ndim))
        size = int(np.prod(shape)) if ndim else 1
        arrays[name] = np.frombuffer(fh.read(size * dtype.itemsize), dtype=dtype).reshape(shape).copy()
    return arrays


def save_model(model, path) -> None:
    """Versioned binary container: magic, kind, config echo, array payload."""
    kind = _KIND_OF_MODEL.get(type(model))
    if kind is None:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    if kind == "knn":
        meta = {"k": model.cfg.k, "n_classes": model.n_classes}
        arrays = {"x": model.x, "y": model.y.astype(np.int64),
                  "mean": model.scaler.mean, "std": model.scaler.std}
    elif kind == "svm_linear":
        meta = {
            "regularization": model.cfg.regularization,
            "tolerance": model.cfg.tolerance,
            "max_epochs": model.cfg.max_epochs,
            "n_classes": model.n_classes,
        }
        arrays = {"weights": model.weights, "bias": model.bias,
                  "mean": model.scaler.mean, "std": model.scaler.std}
    else:
        meta = {
            "trees": model.cfg.trees,
            "max_depth": model.cfg.max_depth,
            "seed": model.cfg.seed,
            "n_classes": model.n_classes,
            "dim": model.dim,
            "oob_accuracy": model.oob_accuracy,
        }
        offsets = np.cumsum([0] + [t.feature.shape[0] for t in model.trees]).astype(np.int64)
        arrays = {
            "offsets": offsets,
            "feature": np.concatenate([t.feature for t in model.trees]),
            "threshold": np.concatenate([t.threshold for t in model.trees]),
            "left": np.concatenate([t.left for t in model.trees]),
            "right": np.concatenate([t.right for t in model.trees]),
            "scores": np.concatenate([t.scores for t in model.trees]),
        }
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<HI", MODEL_VERSION, len(blob)))
        fh.write(blob)
        fh.write(kind.ljust(12).encode("ascii"))
        fh.write(_pack_arrays(arrays))


def load_model(path):
    with open(path, "rb") as fh:
        if fh.read(4) != MODEL_MAGIC:
            raise ValueError(f"{path}: not a model file")
        version, meta_len = struct.unpack("<HI", fh.read(6))
        if version != MODEL_VERSION:
            raise ValueError(f"{path}: unsupported model version {version}")
        meta = json.loads(fh.read(meta_len).decode("utf-8"))
        kind = fh.read(12).decode("ascii").strip()
        arrays = _unpack_arrays(fh)
    if kind == "knn":
        scaler = Scaler(arrays["mean"], arrays["std"])
        x = arrays["x"]
        tree = KdTree(x) if x.shape[1] <= KD_TREE_MAX_DIM else None
        return KnnModel(x, arrays["y"].astype(np.intp), meta["n_classes"],
                        KnnConfig(k=meta["k"]), scaler, tree)
    if kind == "svm_linear":
        cfg = LinearSvmConfig(meta["regularization"], meta["tolerance"], meta["max_epochs"])
        return LinearSvmModel(arrays["weights"], arrays["bias"], meta["n_classes"],
                              cfg, Scaler(arrays["mean"], arrays["std"]))
    if kind == "forest":
        offsets = arrays["offsets"]
        trees = []
        for i in range(offsets.shape[0] - 1):
            lo, hi = int(offsets[i]), int(offsets[i + 1])
            trees.append(_Tree(arrays["feature"][lo:hi], arrays["threshold"][lo:hi],
                               arrays["left"][lo:hi], arrays["right"][lo:hi],
                               arrays["scores"][lo:hi]))
        cfg = ForestConfig(meta["trees"], meta["max_depth"], None, meta["seed"])
        return ForestModel(trees, meta["n_classes"], meta["dim"], cfg, meta["oob_accuracy"])
    raise ValueError(f"{path}: unknown model kind {kind!r}")


def train_for_config(x, y, n_classes: int, cfg, seed: int = 0):
    """Dispatch a training run by config type; seed feeds the stochastic models."""
    if isinstance(cfg, KnnConfig):
        return train_knn(x, y, n_classes, cfg)
    if isinstance(cfg, LinearSvmConfig):
        return train_linear_svm(x, y, n_classes, cfg, shuffle_seed=seed)
    if isinstance(cfg, ForestConfig):
        return train_forest(x, y, n_classes, replace(cfg, seed=cfg.seed * 100003 + seed))
    raise TypeError(f"unknown classifier config {type(cfg).__name__}")


def config_kind(cfg) -> str:
    if isinstance(cfg, KnnConfig):
        return "knn"
    if isinstance(cfg, LinearSvmConfig):
        return "svm_linear"
    if isinstance(cfg, ForestConfig):
        return "forest"
    raise TypeError(f"unknown classifier config {type(cfg).__name__}")
