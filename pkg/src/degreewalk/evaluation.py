"""Downstream measurement: similarity, 2-D reduction, clustering,
node classification, and link prediction with edge operators.

Classification and link prediction share one in-house multinomial logistic
regression (L2 penalty, regularization picked by internal 5-fold
cross-validation over a fixed grid, full-batch gradient descent).  All
operations are pure given (inputs, seed).
"""

import csv
import io
import json
import logging
import warnings
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .graph import DegreewalkError, Graph, _from_edge_array, edge_array

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ("strategy", "nwpd_or_fixed", "walk_length", "total_walks",
                  "decrease_pct", "accuracy", "gain")

LR_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)

EDGE_OPERATORS = ("hadamard", "average", "l1", "l2")


def cosine_similarity(u, v):
    """u.v / (|u||v|); raises on zero vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError("vectors must have equal length")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("cosine similarity undefined for zero vectors")
    return float(np.dot(u, v) / (nu * nv))


def most_similar(emb, node):
    """Highest-cosine partner of a node; ties break to the lowest node id.

    ``node`` and the returned id are graph node ids present in the embedding.
    """
    row_of = {int(n): r for r, n in enumerate(emb.node_ids)}
    row = row_of[int(node)]
    X = emb.vectors.astype(np.float64)
    norms = np.linalg.norm(X, axis=1)
    if norms[row] == 0:
        raise ValueError("query vector is zero")
    safe = np.where(norms == 0, 1.0, norms)
    sims = (X @ X[row]) / (safe * norms[row])
    sims[norms == 0] = -np.inf
    sims[row] = -np.inf
    best = int(np.argmax(sims))
    return int(emb.node_ids[best]), float(sims[best])


def reduce_2d(points, seed=0):
    """Classical (Torgerson) MDS to 2-D coordinates.

    Double-centers the squared Euclidean distance matrix and extracts the top
    two eigenpairs by seeded power iteration with deflation; coordinates are
    eigenvector * sqrt(eigenvalue).  Exact (up to rigid transform) whenever
    the centered input has rank <= 2.  Accepts a raw point matrix or an
    EmbeddingMatrix.
    """
    X = np.asarray(getattr(points, "vectors", points), dtype=np.float64)
    n = X.shape[0]
    if n < 3:
        raise ValueError("need at least 3 points")
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.fill_diagonal(d2, 0.0)
    d2 = np.maximum(d2, 0.0)
    b = -0.5 * (d2 - d2.mean(axis=0)[None, :] - d2.mean(axis=1)[:, None] + d2.mean())
    scale = np.abs(b).max()
    if scale == 0.0:
        warnings.warn("all points identical; returning zero coordinates", stacklevel=2)
        return np.zeros((n, 2))
    rng = np.random.default_rng(seed)
    coords = np.zeros((n, 2))
    for comp in range(2):
        lam, vec = _power_iteration(b, rng)
        if lam <= 1e-12 * scale:
            break
        coords[:, comp] = vec * np.sqrt(lam)
        b = b - lam * np.outer(vec, vec)
    return coords


def _power_iteration(b, rng, max_iter=10000, tol=1e-14):
    v = rng.standard_normal(b.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = b @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0, v
        v_new = w / norm
        lam_new = float(v_new @ (b @ v_new))
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1.0):
            return lam_new, v_new
        v, lam = v_new, lam_new
    return lam, v


def kmeans(points, k, seed=0, max_iter=300):
    """Lloyd's algorithm with k-means++ seeding; returns cluster assignments.

    Iterates to an assignment fixpoint (or max_iter); inertia is checked to
    be non-increasing at every step.  Deterministic per seed.
    """
    X = np.asarray(points, dtype=np.float64)
    n = X.shape[0]
    if k > n:
        raise ValueError("k must not exceed the number of points")
    rng = np.random.default_rng(seed)
    centers = _kmeanspp(X, k, rng)
    prev_inertia = np.inf
    assign = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = np.argmin(d2, axis=1)
        inertia = float(d2[np.arange(n), new_assign].sum())
        assert inertia <= prev_inertia + 1e-9 * max(1.0, abs(prev_inertia)), \
            "k-means inertia increased"
        if np.array_equal(new_assign, assign) and prev_inertia < np.inf:
            break
        assign = new_assign
        prev_inertia = inertia
        for c in range(k):
            mask = assign == c
            if mask.any():
                centers[c] = X[mask].mean(axis=0)
            else:
                # re-seed an empty cluster at the farthest point
                far = int(np.argmax(d2[np.arange(n), assign]))
                centers[c] = X[far]
    return assign


def _kmeanspp(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total == 0:
            centers[c:] = X[rng.integers(n, size=k - c)]
            break
        probs = d2 / total
        centers[c] = X[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, ((X - centers[c]) ** 2).sum(axis=1))
    return centers


def best_permutation_match(assign, labels, k):
    """Best label-permutation agreement count between clusterings."""
    best = 0
    for perm in permutations(range(k)):
        mapped = np.array([perm[a] for a in assign])
        best = max(best, int(np.sum(mapped == labels)))
    return best


# ---------------------------------------------------------------------------
# multinomial logistic regression (full batch, L2, CV over a fixed grid)
# ---------------------------------------------------------------------------

def _softmax(Z):
    Z = Z - Z.max(axis=1, keepdims=True)
    e = np.exp(Z)
    return e / e.sum(axis=1, keepdims=True)


def _lr_loss_grad(Wb, X, Y, reg):
    """Mean cross-entropy + 0.5*reg*|W|^2 (bias unpenalized) and its gradient."""
    W, b = Wb[:-1], Wb[-1]
    P = _softmax(X @ W + b)
    n = X.shape[0]
    eps = 1e-300
    loss = -np.sum(Y * np.log(P + eps)) / n + 0.5 * reg * np.sum(W * W)
    G = (P - Y) / n
    gW = X.T @ G + reg * W
    gb = G.sum(axis=0)
    return loss, np.vstack([gW, gb])


def fit_logistic(X, y, n_classes, c_value, max_iter=2000, tol=1e-5):
    """Full-batch gradient descent on the softmax objective.

    Steps use the Barzilai-Borwein length with Armijo backtracking, stopping
    at gradient norm < tol.  Deterministic and invariant to sample order.
    """
    n, d = X.shape
    Y = np.zeros((n, n_classes))
    Y[np.arange(n), y] = 1.0
    reg = 1.0 / (c_value * n)
    Wb = np.zeros((d + 1, n_classes))
    loss, grad = _lr_loss_grad(Wb, X, Y, reg)
    step = 1.0
    for _ in range(max_iter):
        gnorm = np.linalg.norm(grad)
        if gnorm < tol:
            break
        # Armijo backtracking from the BB estimate
        for _ in range(60):
            Wb_new = Wb - step * grad
            loss_new, grad_new = _lr_loss_grad(Wb_new, X, Y, reg)
            if loss_new <= loss - 1e-4 * step * gnorm * gnorm:
                break
            step *= 0.5
        dW = Wb_new - Wb
        dG = grad_new - grad
        denom = float(np.sum(dW * dG))
        step = float(np.sum(dW * dW)) / denom if denom > 1e-30 else step * 2.0
        step = min(max(step, 1e-12), 1e12)
        Wb, loss, grad = Wb_new, loss_new, grad_new
    return Wb


def _predict(Wb, X):
    return np.argmax(X @ Wb[:-1] + Wb[-1], axis=1)


def _cv_fit(X, y, n_classes, seed, grid=LR_GRID):
    """Pick the grid C with the best mean 5-fold validation accuracy, then refit."""
    n = X.shape[0]
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, 0xcf01)))
    order = rng.permutation(n)
    folds = np.array_split(order, 5)
    best_c, best_acc = grid[0], -1.0
    for c_value in grid:
        accs = []
        for f in range(5):
            val = folds[f]
            tr = np.concatenate([folds[j] for j in range(5) if j != f])
            if len(val) == 0 or len(tr) == 0:
                continue
            Wb = fit_logistic(X[tr], y[tr], n_classes, c_value)
            accs.append(float(np.mean(_predict(Wb, X[val]) == y[val])))
        mean_acc = float(np.mean(accs)) if accs else -1.0
        if mean_acc > best_acc:
            best_acc, best_c = mean_acc, c_value
    return fit_logistic(X, y, n_classes, best_c), best_c


def _standardize(X_train, X_test):
    mu = X_train.mean(axis=0)
    sd = X_train.std(axis=0)
    sd[sd == 0] = 1.0
    return (X_train - mu) / sd, (X_test - mu) / sd


def stratified_split(y, train_fraction, rng):
    """Per-class shuffled split keeping at least one sample on each side."""
    train_idx, test_idx = [], []
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        if len(members) < 2:
            raise DegreewalkError(f"class {cls} has fewer than 2 labeled nodes")
        members = members[rng.permutation(len(members))]
        n_train = int(round(train_fraction * len(members)))
        n_train = min(max(n_train, 1), len(members) - 1)
        train_idx.extend(members[:n_train])
        test_idx.extend(members[n_train:])
    if not test_idx:
        raise DegreewalkError("empty test set")
    return np.sort(np.array(train_idx)), np.sort(np.array(test_idx))


def classify_nodes(emb, labels, split_ratio=0.8, seed=0):
    """Stratified train/test node classification accuracy, in percent."""
    row_of = emb.row_map(len(labels))
    usable = np.flatnonzero((labels >= 0) & (row_of >= 0))
    if len(usable) == 0:
        raise DegreewalkError("no labeled node has an embedding")
    X = emb.vectors[row_of[usable]].astype(np.float64)
    y = labels[usable].astype(np.int64)
    classes, y = np.unique(y, return_inverse=True)
    if len(classes) < 2:
        raise DegreewalkError("need at least 2 classes")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, 0x5147)))
    tr, te = stratified_split(y, split_ratio, rng)
    Xtr, Xte = _standardize(X[tr], X[te])
    Wb, best_c = _cv_fit(Xtr, y[tr], len(classes), seed)
    acc = float(np.mean(_predict(Wb, Xte) == y[te]))
    logger.info("classification: %.2f%% (C=%g, %d train / %d test)",
                100 * acc, best_c, len(tr), len(te))
    return 100.0 * acc


# ---------------------------------------------------------------------------
# link prediction
# ---------------------------------------------------------------------------

@dataclass
class LinkSplit:
    """Edge holdout: pruned training graph plus balanced test pairs."""

    train_graph: Graph
    test_pos: np.ndarray
    test_neg: np.ndarray
    seed: int


def make_link_split(g, test_fraction, seed):
    """Remove round(test_fraction*|E|) edges without isolating any node.

    Negatives are uniform non-edges of the original graph, as many as the
    removed positives.  Deterministic per seed.
    """
    if not (0 < test_fraction < 0.5):
        raise ValueError("test_fraction must be in (0, 0.5)")
    edges = edge_array(g)
    m = len(edges)
    target = int(round(test_fraction * m))
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, 0x1143)))
    order = rng.permutation(m)
    deg = g.degrees.copy()
    removed = np.zeros(m, dtype=bool)
    n_removed = 0
    for ei in order:
        if n_removed == target:
            break
        i, j = edges[ei]
        if deg[i] > 1 and deg[j] > 1:
            removed[ei] = True
            deg[i] -= 1
            deg[j] -= 1
            n_removed += 1
    if n_removed < target:
        raise DegreewalkError(
            f"cannot remove {target} edges without isolating nodes (got {n_removed})"
        )
    test_pos = edges[removed]
    train_edges = edges[~removed]
    train_graph = _from_edge_array(train_edges, list(g.tokens),
                                   labels=g.labels, label_names=g.label_names)
    test_neg = _sample_non_edges(g, target, rng, forbid=None)
    return LinkSplit(train_graph=train_graph, test_pos=test_pos,
                     test_neg=test_neg, seed=seed)


def _sample_non_edges(g, count, rng, forbid=None):
    """Uniformly sample distinct non-edges (i < j) of g."""
    n = g.num_nodes
    max_pairs = n * (n - 1) // 2
    if max_pairs - g.num_edges < count:
        raise DegreewalkError("graph too dense to sample the requested non-edges")
    forbid = forbid if forbid is not None else set()
    out = []
    seen = set()
    while len(out) < count:
        i = int(rng.integers(n))
        j = int(rng.integers(n))
        if i == j:
            continue
        key = (i, j) if i < j else (j, i)
        if key in seen or key in forbid:
            continue
        if g.has_edge(*key):
            continue
        seen.add(key)
        out.append(key)
    return np.array(out, dtype=np.int64)


def edge_features(op, u, v):
    """Combine two node vectors into one edge vector; symmetric in (u, v)."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise ValueError("vectors must have equal dimension")
    if op == "hadamard":
        return u * v
    if op == "average":
        return (u + v) / 2.0
    if op == "l1":
        return np.abs(u - v)
    if op == "l2":
        return (u - v) ** 2
    raise ValueError(f"unknown edge operator {op!r} (choose from {EDGE_OPERATORS})")


def _edge_feature_matrix(op, emb, pairs, row_of):
    U = emb.vectors[row_of[pairs[:, 0]]].astype(np.float64)
    V = emb.vectors[row_of[pairs[:, 1]]].astype(np.float64)
    return edge_features(op, U, V)


def predict_links_report(emb, split, op, seed=0):
    """Binary accuracy percent at threshold 0.5, plus ranking AUC.

    The classifier trains on the train-graph edges versus an equal number of
    sampled non-edges (disjoint from the test pairs), then scores the held-out
    positives and negatives.
    """
    g = split.train_graph
    row_of = emb.row_map(g.num_nodes)
    pairs = np.concatenate([split.test_pos, split.test_neg])
    needed = np.unique(np.concatenate([pairs.reshape(-1), edge_array(g).reshape(-1)]))
    if np.any(row_of[needed] < 0):
        raise DegreewalkError("embedding is missing vectors for some split nodes")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, 0xed6e)))
    train_pos = edge_array(g)
    forbid = {tuple(sorted(p)) for p in split.test_pos.tolist()}
    forbid |= {tuple(sorted(p)) for p in split.test_neg.tolist()}
    train_neg = _sample_non_edges(g, len(train_pos), rng, forbid=forbid)
    Xtr = np.concatenate([
        _edge_feature_matrix(op, emb, train_pos, row_of),
        _edge_feature_matrix(op, emb, train_neg, row_of),
    ])
    ytr = np.concatenate([np.ones(len(train_pos), dtype=np.int64),
                          np.zeros(len(train_neg), dtype=np.int64)])
    Xte = np.concatenate([
        _edge_feature_matrix(op, emb, split.test_pos, row_of),
        _edge_feature_matrix(op, emb, split.test_neg, row_of),
    ])
    yte = np.concatenate([np.ones(len(split.test_pos), dtype=np.int64),
                          np.zeros(len(split.test_neg), dtype=np.int64)])
    Xtr, Xte = _standardize(Xtr, Xte)
    Wb, best_c = _cv_fit(Xtr, ytr, 2, seed)
    scores = (Xte @ Wb[:-1] + Wb[-1])
    pred = np.argmax(scores, axis=1)
    acc = float(np.mean(pred == yte))
    margin = scores[:, 1] - scores[:, 0]
    auc = _rank_auc(margin, yte)
    logger.info("link prediction (%s): %.2f%% acc, %.4f AUC (C=%g)", op, 100 * acc, auc, best_c)
    return 100.0 * acc, 100.0 * auc


def predict_links(emb, split, op, seed=0):
    """Binary link-prediction accuracy percent at threshold 0.5."""
    return predict_links_report(emb, split, op, seed)[0]


def _rank_auc(scores, y):
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    ranks[order] = np.arange(1, len(scores) + 1)
    # average ranks over ties
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        if j > i:
            ranks[order[i:j + 1]] = 0.5 * (i + 1 + j + 1)
        i = j + 1
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes")
    return float((ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


# ---------------------------------------------------------------------------
# report rows
# ---------------------------------------------------------------------------

@dataclass
class EvalReport:
    """One row of the fixed-vs-degree comparison tables."""

    task: str
    strategy: str
    nwpd_or_fixed: int
    walk_length: int
    total_walks: int
    accuracy: float
    decrease_pct: float | None = None
    gain: float | None = None
    status: str = "ok"

    def against_baseline(self, baseline):
        """Fill decrease_pct and gain relative to the fixed-strategy row."""
        self.decrease_pct = 100.0 * (1.0 - self.total_walks / baseline.total_walks)
        self.gain = self.accuracy - baseline.accuracy


def write_report_csv(reports, fh, extra_status=False):
    cols = REPORT_COLUMNS + (("status",) if extra_status else ())
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(cols)
    for r in reports:
        row = [r.strategy, r.nwpd_or_fixed, r.walk_length, r.total_walks,
               "" if r.decrease_pct is None else f"{r.decrease_pct:.4f}",
               f"{r.accuracy:.4f}",
               "" if r.gain is None else f"{r.gain:.4f}"]
        if extra_status:
            row.append(r.status)
        w.writerow(row)


def report_csv_text(reports, extra_status=False):
    buf = io.StringIO()
    write_report_csv(reports, buf, extra_status=extra_status)
    return buf.getvalue()


def report_json_text(reports):
    return json.dumps([r.__dict__ for r in reports], indent=2)
