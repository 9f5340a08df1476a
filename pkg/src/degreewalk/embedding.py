"""Skip-gram with negative sampling over walk corpora.

Training follows the usual shallow-embedding recipe: input vectors start
uniform in [-0.5/d, 0.5/d], context vectors at zero, pairs come from a
per-position window whose effective size shrinks uniformly in {1..window}
(disable with shrink_window=False for deterministic pair counts), negatives
are drawn from the unigram^0.75 distribution, and the learning rate decays
linearly to lr_floor over all scheduled tokens.

The default single-threaded path is deterministic for a given seed.  An
opt-in hogwild mode (workers > 1) shards walks across threads with
unsynchronized updates; it is faster and nondeterministic.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .alias import make_alias
from .graph import DegreewalkError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    dimension: int = 128
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    lr_floor: float = 1e-4
    seed: int = 0
    shrink_window: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.dimension < 1 or self.window < 1 or self.negatives < 1 or self.epochs < 1:
            raise ValueError("dimension, window, negatives, epochs must be >= 1")
        if not (0 < self.lr_floor <= self.learning_rate):
            raise ValueError("need 0 < lr_floor <= learning_rate")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class Vocabulary:
    """Corpus occurrence counts and the negative-sampling table over them.

    Rows are the nodes that actually occur in the corpus, sorted by node id;
    ``row_of[node]`` maps a node id to its row (-1 if absent).
    """

    node_ids: np.ndarray
    counts: np.ndarray
    row_of: np.ndarray
    neg_prob: np.ndarray
    neg_alias: np.ndarray

    def __len__(self):
        return len(self.node_ids)


def build_vocab(corpus):
    if corpus.num_tokens == 0:
        raise DegreewalkError("empty corpus")
    counts_all = np.bincount(corpus.flat)
    node_ids = np.flatnonzero(counts_all).astype(np.int32)
    counts = counts_all[node_ids].astype(np.int64)
    row_of = np.full(len(counts_all), -1, dtype=np.int32)
    row_of[node_ids] = np.arange(len(node_ids), dtype=np.int32)
    neg_prob, neg_alias = make_alias(counts.astype(np.float64) ** 0.75)
    return Vocabulary(node_ids=node_ids, counts=counts, row_of=row_of,
                      neg_prob=neg_prob, neg_alias=neg_alias)


def generate_pairs(walk, window, rng, shrink=True):
    """(center, context) pairs for one walk, window-clipped at the ends."""
    if len(walk) < 2:
        raise ValueError("walk must have at least 2 nodes")
    pairs = []
    for pos, center in enumerate(walk):
        w = int(rng.integers(1, window + 1)) if shrink else window
        lo = max(0, pos - w)
        hi = min(len(walk) - 1, pos + w)
        for cpos in range(lo, hi + 1):
            if cpos != pos:
                pairs.append((int(center), int(walk[cpos])))
    return pairs


def sgns_step(center, context, negatives, vectors, context_vectors, lr):
    """One gradient update for a (center, context) pair with given negatives.

    Minimizes -log sigma(u_ctx . v_c) - sum_neg log sigma(-u_neg . v_c).
    Context/negative rows are updated against the pre-step center vector and
    the center row last, so all gradients are taken at the current point.
    Returns the loss before the update.
    """
    if lr <= 0:
        raise ValueError("lr must be positive")
    v = vectors[center]
    acc = np.zeros_like(v)
    loss = 0.0
    for tgt, label in [(context, 1.0)] + [(n, 0.0) for n in negatives]:
        u = context_vectors[tgt]
        s = float(np.dot(u, v))
        if s >= 0:
            sig = 1.0 / (1.0 + math.exp(-s))
        else:
            e = math.exp(s)
            sig = e / (1.0 + e)
        if label:
            loss += -math.log(sig) if sig > 0 else math.inf
        else:
            loss += -math.log1p(-sig) if sig < 1.0 else math.inf
        g = (label - sig) * lr
        acc = acc + g * u
        context_vectors[tgt] = u + g * v
    vectors[center] = v + acc
    return loss


@njit(cache=True, nogil=True, fastmath=True)
def _sgns_walk(tokens, window, shrink, vectors, ctxvecs, neg_prob, neg_alias,
               negatives, lr, u):
    """Train on one walk; returns (loss_sum, n_pairs).

    Uniform buffer layout per center position: one draw for the window size,
    then two per negative per emitted pair.  Negatives equal to the positive
    target are skipped (their uniforms are still consumed).
    """
    d = vectors.shape[1]
    K = neg_prob.shape[0]
    T = tokens.shape[0]
    work = np.empty(d, dtype=np.float32)
    loss = 0.0
    npairs = 0
    ui = 0
    for pos in range(T):
        if shrink:
            w = 1 + int(u[ui] * window)
            ui += 1
        else:
            w = window
        c = tokens[pos]
        lo = pos - w
        if lo < 0:
            lo = 0
        hi = pos + w
        if hi > T - 1:
            hi = T - 1
        for cpos in range(lo, hi + 1):
            if cpos == pos:
                continue
            ctx = tokens[cpos]
            for t in range(d):
                work[t] = np.float32(0.0)
            for n in range(negatives + 1):
                if n == 0:
                    tgt = ctx
                    label = np.float32(1.0)
                else:
                    slot = int(u[ui] * K)
                    ui += 1
                    coin = u[ui]
                    ui += 1
                    tgt = slot if coin < neg_prob[slot] else neg_alias[slot]
                    if tgt == ctx:
                        continue
                    label = np.float32(0.0)
                s = np.float32(0.0)
                for t in range(d):
                    s += vectors[c, t] * ctxvecs[tgt, t]
                sig = np.float32(1.0) / (np.float32(1.0) + np.float32(math.exp(-s)))
                if label > 0:
                    loss += -math.log(sig) if sig > 0 else 50.0
                else:
                    loss += -math.log(1.0 - sig) if sig < 1 else 50.0
                g = (label - sig) * lr
                for t in range(d):
                    work[t] += g * ctxvecs[tgt, t]
                    ctxvecs[tgt, t] += g * vectors[c, t]
            for t in range(d):
                vectors[c, t] += work[t]
            npairs += 1
    return loss, npairs


@dataclass
class EmbeddingMatrix:
    """Trained input vectors plus the context vectors used during training."""

    vectors: np.ndarray
    context: np.ndarray
    node_ids: np.ndarray
    epoch_losses: np.ndarray | None = None

    @property
    def dimension(self):
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.node_ids)

    def row_map(self, num_nodes):
        row_of = np.full(num_nodes, -1, dtype=np.int64)
        row_of[self.node_ids] = np.arange(len(self.node_ids))
        return row_of


def _buffer_len(n_tokens, cfg):
    return n_tokens * (1 + 4 * cfg.window * cfg.negatives)


def train(corpus, cfg):
    """Train SGNS embeddings on a walk corpus."""
    if corpus.num_tokens == 0:
        raise DegreewalkError("empty corpus")
    vocab = build_vocab(corpus)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(cfg.seed, 0x5e45)))
    V, d = len(vocab), cfg.dimension
    vectors = ((rng.random((V, d)) - 0.5) / d).astype(np.float32)
    ctxvecs = np.zeros((V, d), dtype=np.float32)
    tok_rows = vocab.row_of[corpus.flat]
    offsets = corpus.offsets
    n_walks = len(corpus)
    total_tokens = cfg.epochs * corpus.num_tokens
    lr0, floor = cfg.learning_rate, cfg.lr_floor
    done_tokens = 0
    epoch_losses = []
    if cfg.workers > 1:
        _train_hogwild(tok_rows, offsets, vocab, cfg, vectors, ctxvecs)
    else:
        for epoch in range(cfg.epochs):
            order = rng.permutation(n_walks)
            loss_sum = 0.0
            pair_sum = 0
            for wi in order:
                a, b = offsets[wi], offsets[wi + 1]
                walk = tok_rows[a:b]
                lr = max(floor, lr0 * (1.0 - done_tokens / total_tokens))
                u = rng.random(_buffer_len(b - a, cfg))
                loss, npairs = _sgns_walk(walk, cfg.window, cfg.shrink_window,
                                          vectors, ctxvecs, vocab.neg_prob,
                                          vocab.neg_alias, cfg.negatives,
                                          np.float32(lr), u)
                loss_sum += loss
                pair_sum += npairs
                done_tokens += b - a
            epoch_losses.append(loss_sum / max(pair_sum, 1))
            logger.info("epoch %d/%d: mean loss %.4f over %d pairs",
                        epoch + 1, cfg.epochs, epoch_losses[-1], pair_sum)
    if not np.all(np.isfinite(vectors)) or not np.all(np.isfinite(ctxvecs)):
        raise RuntimeError("training produced non-finite values")
    return EmbeddingMatrix(vectors=vectors, context=ctxvecs, node_ids=vocab.node_ids,
                           epoch_losses=np.array(epoch_losses))


def _train_hogwild(tok_rows, offsets, vocab, cfg, vectors, ctxvecs):
    """Racy sharded training: threads update shared matrices unsynchronized."""
    n_walks = len(offsets) - 1
    lr0, floor = cfg.learning_rate, cfg.lr_floor
    seeds = np.random.SeedSequence(entropy=(cfg.seed, 0x5e45)).spawn(cfg.workers)

    def shard(w):
        rng = np.random.default_rng(seeds[w])
        for epoch in range(cfg.epochs):
            order = rng.permutation(n_walks)
            for idx, wi in enumerate(order[w::cfg.workers]):
                a, b = offsets[wi], offsets[wi + 1]
                frac_done = (epoch * n_walks + idx * cfg.workers) / (cfg.epochs * n_walks)
                lr = max(floor, lr0 * (1.0 - frac_done))
                u = rng.random(_buffer_len(b - a, cfg))
                _sgns_walk(tok_rows[a:b], cfg.window, cfg.shrink_window, vectors,
                           ctxvecs, vocab.neg_prob, vocab.neg_alias,
                           cfg.negatives, np.float32(lr), u)

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        for f in [pool.submit(shard, w) for w in range(cfg.workers)]:
            f.result()


def save_word2vec(emb, tokens, path):
    """word2vec text format: header 'N d', then '<token> <d floats>' rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(emb)} {emb.dimension}\n")
        for row, node in enumerate(emb.node_ids):
            vals = " ".join(f"{x:.6g}" for x in emb.vectors[row])
            fh.write(f"{tokens[node]} {vals}\n")


def load_word2vec(path):
    """Reload a word2vec text file; returns (vectors, tokens)."""
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as e:
        raise DegreewalkError(f"cannot read embedding {path}: {e}") from e
    with fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise DegreewalkError(f"{path}: malformed word2vec header")
        n, d = int(header[0]), int(header[1])
        vectors = np.empty((n, d), dtype=np.float32)
        tokens = []
        for row in range(n):
            parts = fh.readline().split()
            if len(parts) != d + 1:
                raise DegreewalkError(f"{path}: row {row} has {len(parts) - 1} values, expected {d}")
            tokens.append(parts[0])
            vectors[row] = [float(x) for x in parts[1:]]
    return vectors, tokens
