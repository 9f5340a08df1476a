"""Second-order biased random walks under fixed or degree-proportional schedules.

The schedule is the point of the package: a ``Fixed`` strategy starts the same
number of walks from every non-isolated node, while ``DegreeBased`` starts
``walks_per_degree * degree`` walks per node, so the total walk budget is
``walks_per_degree * 2|E|`` and every directed edge is expected to open the
same number of walks.

Transitions follow the return/in-out bias: standing at v having arrived from
t, neighbor x gets unnormalized weight 1/p if x == t, 1 if x is adjacent to t,
1/q otherwise.  Exact alias samplers are prebuilt per directed edge; the first
step of each walk is uniform over the start node's neighbors.

Randomness is counter-based (Philox) with one stream per (node, repetition)
work item keyed by (seed, node, repetition), so serial and parallel corpus
generation are byte-identical.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .alias import build_alias
from .graph import DegreewalkError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Fixed:
    """Start the same number of walks from every node of degree >= 1."""

    walks_per_node: int

    def __post_init__(self):
        if self.walks_per_node < 1:
            raise ValueError("walks_per_node must be >= 1")

    def describe(self):
        return f"fixed:{self.walks_per_node}"


@dataclass(frozen=True)
class DegreeBased:
    """Start walks_per_degree * k_i walks from node i."""

    walks_per_degree: int

    def __post_init__(self):
        if self.walks_per_degree < 1:
            raise ValueError("walks_per_degree must be >= 1")

    def describe(self):
        return f"degree:{self.walks_per_degree}"


@dataclass(frozen=True)
class WalkConfig:
    strategy: object
    walk_length: int
    p: float = 1.0
    q: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.walk_length < 1:
            raise ValueError("walk_length must be >= 1")
        if not (self.p > 0 and self.q > 0):
            raise ValueError("p and q must be positive")


def walk_count(strategy, k):
    """Number of walks scheduled for a node of degree k."""
    if k < 0:
        raise ValueError("degree must be >= 0")
    if k == 0:
        return 0
    if isinstance(strategy, Fixed):
        return strategy.walks_per_node
    if isinstance(strategy, DegreeBased):
        return strategy.walks_per_degree * k
    raise TypeError(f"unknown strategy {strategy!r}")


def total_walk_count(strategy, g):
    """Total walks over the whole graph; NWPD * 2|E| for DegreeBased."""
    return int(sum(walk_count(strategy, int(k)) for k in g.degrees))


@njit(cache=True, nogil=True)
def _build_tables(indptr, indices, p, q, offsets, prob, alias):
    """Fill per-directed-edge alias tables for the second-order weights.

    Directed edge j goes from src(j) to indices[j]; its table covers the
    neighbor list of indices[j] and lives at offsets[j]:offsets[j+1].
    """
    n = indptr.shape[0] - 1
    for s in range(n):
        for j in range(indptr[s], indptr[s + 1]):
            v = indices[j]
            lo = indptr[v]
            hi = indptr[v + 1]
            k = hi - lo
            w = np.empty(k, dtype=np.float64)
            for t in range(k):
                x = indices[lo + t]
                if x == s:
                    w[t] = 1.0 / p
                else:
                    # binary search for x in the sorted neighbor list of s
                    a = indptr[s]
                    b = indptr[s + 1]
                    found = False
                    while a < b:
                        m = (a + b) // 2
                        if indices[m] < x:
                            a = m + 1
                        elif indices[m] > x:
                            b = m
                        else:
                            found = True
                            break
                    w[t] = 1.0 if found else 1.0 / q
            build_alias(w, prob[offsets[j]:offsets[j + 1]], alias[offsets[j]:offsets[j + 1]])


@njit(cache=True, nogil=True)
def _walk_kernel(indptr, indices, offsets, prob, alias, start, n_steps, u, out):
    """One walk of n_steps edges into out (length n_steps + 1).

    Consumes uniforms from u in order: one for the uniform first step, two
    per alias draw afterwards.  Returns the number of nodes written
    (truncation short of n_steps+1 happens only at a dead end, which a
    normalized undirected graph cannot produce).
    """
    out[0] = start
    if n_steps == 0:
        return 1
    k = indptr[start + 1] - indptr[start]
    if k == 0:
        return 1
    ui = 0
    edge = indptr[start] + int(u[ui] * k)
    ui += 1
    cur = indices[edge]
    out[1] = cur
    for step in range(2, n_steps + 1):
        k = indptr[cur + 1] - indptr[cur]
        if k == 0:
            return step
        off = offsets[edge]
        slot = int(u[ui] * k)
        ui += 1
        coin = u[ui]
        ui += 1
        if coin >= prob[off + slot]:
            slot = alias[off + slot]
        edge = indptr[cur] + slot
        cur = indices[edge]
        out[step] = cur
    return n_steps + 1


@njit(cache=True, nogil=True)
def _walk_batch(indptr, indices, offsets, prob, alias, starts, n_steps, u, out):
    for w in range(starts.shape[0]):
        _walk_kernel(indptr, indices, offsets, prob, alias, starts[w], n_steps, u[w], out[w])


class TransitionModel:
    """Prebuilt exact samplers for the second-order transition distributions."""

    def __init__(self, graph, p, q):
        if not (p > 0 and q > 0):
            raise ValueError("p and q must be positive")
        self.graph = graph
        self.p = float(p)
        self.q = float(q)
        indptr, indices = graph.indptr, graph.indices
        deg = graph.degrees
        sizes = deg[indices]
        self.offsets = np.zeros(len(indices) + 1, dtype=np.int64)
        np.cumsum(sizes, out=self.offsets[1:])
        self.prob = np.empty(self.offsets[-1], dtype=np.float64)
        self.alias = np.empty(self.offsets[-1], dtype=np.int64)
        _build_tables(indptr, indices, self.p, self.q,
                      self.offsets, self.prob, self.alias)

    def _edge_id(self, prev, cur):
        nbrs = self.graph.neighbors(prev)
        pos = np.searchsorted(nbrs, cur)
        if pos >= len(nbrs) or nbrs[pos] != cur:
            raise ValueError(f"({prev}, {cur}) is not an edge")
        return int(self.graph.indptr[prev] + pos)

    def transition_probs(self, prev, cur):
        """Normalized next-step weights over adj(cur), given arrival from prev."""
        g = self.graph
        nbrs = g.neighbors(cur)
        w = np.empty(len(nbrs), dtype=np.float64)
        for t, x in enumerate(nbrs):
            if x == prev:
                w[t] = 1.0 / self.p
            elif g.has_edge(prev, int(x)):
                w[t] = 1.0
            else:
                w[t] = 1.0 / self.q
        return w / w.sum()

    def sampler_probs(self, prev, cur):
        """Distribution the alias table actually encodes (exact inversion)."""
        j = self._edge_id(prev, cur)
        lo, hi = self.offsets[j], self.offsets[j + 1]
        prob = self.prob[lo:hi]
        alias = self.alias[lo:hi]
        out = prob.copy()
        np.add.at(out, alias, 1.0 - prob)
        return out / (hi - lo)

    def sample_next(self, prev, cur, size, rng):
        """Draw next nodes for the state (prev -> cur); returns node ids."""
        j = self._edge_id(prev, cur)
        lo, hi = self.offsets[j], self.offsets[j + 1]
        k = hi - lo
        slots = (rng.random(size) * k).astype(np.int64)
        coins = rng.random(size)
        take_alias = coins >= self.prob[lo + slots]
        slots[take_alias] = self.alias[lo + slots[take_alias]]
        return self.graph.indices[self.graph.indptr[cur] + slots]


def build_transition_model(g, p, q):
    return TransitionModel(g, p, q)


@dataclass
class WalkCorpus:
    """Walk sequences in compressed form plus the config that produced them."""

    flat: np.ndarray
    offsets: np.ndarray
    config: WalkConfig | None = None

    def __len__(self):
        return len(self.offsets) - 1

    def walk(self, i):
        return self.flat[self.offsets[i]:self.offsets[i + 1]]

    def sequences(self):
        for i in range(len(self)):
            yield self.walk(i)

    @property
    def num_tokens(self):
        return len(self.flat)

    @classmethod
    def from_matrix(cls, walks, config=None):
        n, m = walks.shape
        offsets = np.arange(0, (n + 1) * m, m, dtype=np.int64)
        return cls(flat=walks.reshape(-1).copy(), offsets=offsets, config=config)

    def save(self, path, tokens):
        """word2vec-style corpus: one walk per line, original node tokens."""
        with open(path, "w", encoding="utf-8") as fh:
            for seq in self.sequences():
                fh.write(" ".join(tokens[i] for i in seq))
                fh.write("\n")


def load_corpus(path):
    """Read a corpus file; returns (corpus, tokens) with ids in first-appearance order."""
    token_ids = {}
    tokens = []
    flat = []
    offsets = [0]
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as e:
        raise DegreewalkError(f"cannot read corpus {path}: {e}") from e
    with fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            for t in parts:
                i = token_ids.get(t)
                if i is None:
                    i = token_ids[t] = len(tokens)
                    tokens.append(t)
                flat.append(i)
            offsets.append(len(flat))
    if len(offsets) == 1:
        raise DegreewalkError(f"{path}: empty corpus")
    return (
        WalkCorpus(flat=np.array(flat, dtype=np.int32), offsets=np.array(offsets, dtype=np.int64)),
        tokens,
    )


def _walk_rng(seed, node, rep):
    """Philox stream keyed by (seed, node, repetition)."""
    if node >= 1 << 32 or rep >= 1 << 32:
        raise ValueError("node/repetition out of keyable range")
    key = [np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64((node << 32) | rep)]
    return np.random.Generator(np.random.Philox(key=key))


def generate_walk(model, start, walk_length, rng):
    """One walk of walk_length steps (walk_length + 1 nodes) from start."""
    g = model.graph
    if g.degrees[start] == 0:
        raise ValueError(f"node {start} is isolated; cannot start a walk")
    out = np.empty(walk_length + 1, dtype=np.int32)
    u = rng.random(max(2 * walk_length, 1))
    n = _walk_kernel(g.indptr, g.indices, model.offsets, model.prob, model.alias,
                     start, walk_length, u, out)
    return out[:n]


def schedule_starts(g, strategy):
    """Start node of every scheduled walk, node-major, repetition-minor."""
    counts = np.array([walk_count(strategy, int(k)) for k in g.degrees], dtype=np.int64)
    return np.repeat(np.arange(g.num_nodes, dtype=np.int64), counts), counts


def generate_corpus(g, cfg, workers=1, model=None):
    """The full scheduled corpus; deterministic in cfg.seed for any worker count."""
    if model is None:
        model = TransitionModel(g, cfg.p, cfg.q)
    starts, counts = schedule_starts(g, cfg.strategy)
    tnw = len(starts)
    if tnw == 0:
        raise DegreewalkError("graph has no non-isolated node; nothing to walk")
    wl = cfg.walk_length
    u = np.empty((tnw, 2 * wl), dtype=np.float64)
    w = 0
    for node in range(g.num_nodes):
        for rep in range(counts[node]):
            u[w] = _walk_rng(cfg.seed, node, rep).random(2 * wl)
            w += 1
    out = np.empty((tnw, wl + 1), dtype=np.int32)
    indptr, indices = g.indptr, g.indices
    if workers <= 1 or tnw < 2 * workers:
        _walk_batch(indptr, indices, model.offsets, model.prob, model.alias,
                    starts, wl, u, out)
    else:
        bounds = np.linspace(0, tnw, workers + 1, dtype=np.int64)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = [
                pool.submit(_walk_batch, indptr, indices, model.offsets, model.prob,
                            model.alias, starts[a:b], wl, u[a:b], out[a:b])
                for a, b in zip(bounds[:-1], bounds[1:])
                if b > a
            ]
            for f in futs:
                f.result()
    logger.info("generated %d walks of %d nodes (%s)", tnw, wl + 1, cfg.strategy.describe())
    return WalkCorpus.from_matrix(out, config=cfg)
