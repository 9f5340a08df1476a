"""Undirected graph loading and normalization.

Graphs are stored in CSR form (``indptr``/``indices``) with sorted neighbor
lists, dense integer node ids, and a retained map back to the original node
tokens.  Normalization removes duplicate edges and self-loops and symmetrizes
direction, so every loaded graph satisfies: j in adj(i) <=> i in adj(j),
no self-loops, degrees[i] == len(adj(i)).
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

logger = logging.getLogger(__name__)


class DegreewalkError(Exception):
    """Base for input/usage errors surfaced to the CLI as exit code 2."""


class GraphFormatError(DegreewalkError):
    """Malformed or unusable graph/label input."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected graph with dense node ids.

    ``indices[indptr[i]:indptr[i+1]]`` is the sorted neighbor list of node i.
    ``tokens[i]`` is the original label of node i; ``labels[i]`` is a class id
    or -1 when the node is unlabeled (``labels`` is None if no labels were
    attached).
    """

    indptr: np.ndarray
    indices: np.ndarray
    tokens: tuple
    labels: np.ndarray | None = None
    label_names: tuple | None = None
    token_ids: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def num_nodes(self):
        return len(self.indptr) - 1

    @property
    def num_edges(self):
        return len(self.indices) // 2

    @property
    def degrees(self):
        return np.diff(self.indptr)

    def neighbors(self, i):
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def has_edge(self, i, j):
        nbrs = self.neighbors(i)
        pos = np.searchsorted(nbrs, j)
        return pos < len(nbrs) and nbrs[pos] == j

    def num_classes(self):
        if self.labels is None:
            return 0
        return int(np.max(self.labels[self.labels >= 0]) + 1) if np.any(self.labels >= 0) else 0

    def validate(self):
        """Assert the structural invariants; raises AssertionError on breach."""
        n = self.num_nodes
        deg = self.degrees
        assert self.indptr[0] == 0 and self.indptr[-1] == len(self.indices)
        assert np.all(deg >= 0)
        assert len(self.tokens) == n
        for i in range(n):
            nbrs = self.neighbors(i)
            assert np.all(np.diff(nbrs) > 0), f"neighbors of {i} not strictly sorted"
            assert not np.any(nbrs == i), f"self-loop at {i}"
        # symmetry: the multiset of directed edges equals its transpose
        src = np.repeat(np.arange(n), deg)
        fwd = set(zip(src.tolist(), self.indices.tolist()))
        assert all((j, i) in fwd for i, j in fwd), "adjacency not symmetric"

    def summary(self):
        """Single-object summary used by the CLI's JSON output."""
        deg = self.degrees
        return {
            "nodes": int(self.num_nodes),
            "edges": int(self.num_edges),
            "classes": int(self.num_classes()),
            "min_degree": int(deg.min()) if len(deg) else 0,
            "max_degree": int(deg.max()) if len(deg) else 0,
            "mean_degree": float(deg.mean()) if len(deg) else 0.0,
        }


def _from_edge_array(pairs, tokens, labels=None, label_names=None):
    """Build a normalized Graph from an array of (i, j) dense-id edges."""
    n = len(tokens)
    if len(pairs):
        und = np.concatenate([pairs, pairs[:, ::-1]])
    else:
        und = np.empty((0, 2), dtype=np.int64)
    order = np.lexsort((und[:, 1], und[:, 0]))
    und = und[order]
    counts = np.bincount(und[:, 0], minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    g = Graph(
        indptr=indptr,
        indices=und[:, 1].astype(np.int32),
        tokens=tuple(tokens),
        labels=labels,
        label_names=label_names,
        token_ids={t: i for i, t in enumerate(tokens)},
    )
    return g


def load_edge_list(path, deduplicate=True, drop_self_loops=True):
    """Load a whitespace-separated edge list as a normalized undirected graph.

    Node tokens are assigned dense ids in first-appearance order.  Duplicate
    edges (in either direction) and self-loops are removed when the
    corresponding flag is set; otherwise they raise with the line number.
    """
    edges = []
    tokens = []
    token_ids = {}
    seen = set()
    n_dups = 0
    n_loops = 0
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as e:
        raise GraphFormatError(f"cannot read edge list {path}: {e}") from e
    with fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise GraphFormatError(
                    f"{path}:{lineno}: expected two node tokens, got {len(parts)}"
                )
            a, b = parts
            ia = token_ids.get(a)
            if ia is None:
                ia = token_ids[a] = len(tokens)
                tokens.append(a)
            ib = token_ids.get(b)
            if ib is None:
                ib = token_ids[b] = len(tokens)
                tokens.append(b)
            if ia == ib:
                if not drop_self_loops:
                    raise GraphFormatError(f"{path}:{lineno}: self-loop on {a!r}")
                n_loops += 1
                continue
            key = (ia, ib) if ia < ib else (ib, ia)
            if key in seen:
                if not deduplicate:
                    raise GraphFormatError(f"{path}:{lineno}: duplicate edge {a!r} {b!r}")
                n_dups += 1
                continue
            seen.add(key)
            edges.append(key)
    if not edges:
        raise GraphFormatError(f"{path}: empty graph (no usable edges)")
    g = _from_edge_array(np.array(edges, dtype=np.int64), tokens)
    logger.info(
        "loaded %s: %d nodes, %d edges (%d duplicates, %d self-loops removed)",
        path, g.num_nodes, g.num_edges, n_dups, n_loops,
    )
    return g


# Zachary's karate club: the canonical 34-node, 78-edge instance with the
# two-faction split observed after the club divided.
_KARATE_EDGES = [
    (0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6), (0, 7), (0, 8), (0, 10),
    (0, 11), (0, 12), (0, 13), (0, 17), (0, 19), (0, 21), (0, 31), (1, 2),
    (1, 3), (1, 7), (1, 13), (1, 17), (1, 19), (1, 21), (1, 30), (2, 3),
    (2, 7), (2, 8), (2, 9), (2, 13), (2, 27), (2, 28), (2, 32), (3, 7),
    (3, 12), (3, 13), (4, 6), (4, 10), (5, 6), (5, 10), (5, 16), (6, 16),
    (8, 30), (8, 32), (8, 33), (9, 33), (13, 33), (14, 32), (14, 33),
    (15, 32), (15, 33), (18, 32), (18, 33), (19, 33), (20, 32), (20, 33),
    (22, 32), (22, 33), (23, 25), (23, 27), (23, 29), (23, 32), (23, 33),
    (24, 25), (24, 27), (24, 31), (25, 31), (26, 29), (26, 33), (27, 33),
    (28, 31), (28, 33), (29, 32), (29, 33), (30, 32), (30, 33), (31, 32),
    (31, 33), (32, 33),
]

_KARATE_MR_HI = {0, 1, 2, 3, 4, 5, 6, 7, 8, 10, 11, 12, 13, 16, 17, 19, 21}


def karate_club():
    """The built-in karate club graph with its two-faction labels."""
    labels = np.array(
        [0 if i in _KARATE_MR_HI else 1 for i in range(34)], dtype=np.int32
    )
    return _from_edge_array(
        np.array(_KARATE_EDGES, dtype=np.int64),
        [str(i) for i in range(34)],
        labels=labels,
        label_names=("Mr. Hi", "Officer"),
    )


def largest_connected_component(g):
    """Induced subgraph on the largest component, with re-densified ids.

    Returns ``(subgraph, remap)`` where ``remap[old_id]`` is the new id or -1
    for dropped nodes.  Labels and tokens are carried over.  Size ties go to
    the component containing the lowest node id.
    """
    n = g.num_nodes
    comp = np.full(n, -1, dtype=np.int64)
    n_comp = 0
    best_root = -1
    best_size = 0
    for root in range(n):
        if comp[root] >= 0:
            continue
        stack = [root]
        comp[root] = n_comp
        size = 0
        while stack:
            u = stack.pop()
            size += 1
            for v in g.neighbors(u):
                if comp[v] < 0:
                    comp[v] = n_comp
                    stack.append(int(v))
        if size > best_size:
            best_size = size
            best_root = n_comp
        n_comp += 1
    keep = np.flatnonzero(comp == best_root)
    remap = np.full(n, -1, dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    src = np.repeat(np.arange(n), g.degrees)
    mask = (remap[src] >= 0) & (remap[g.indices] >= 0) & (src < g.indices)
    pairs = np.stack([remap[src[mask]], remap[g.indices[mask]]], axis=1)
    labels = g.labels[keep] if g.labels is not None else None
    sub = _from_edge_array(
        pairs, [g.tokens[i] for i in keep], labels=labels, label_names=g.label_names
    )
    logger.info(
        "largest component: %d/%d nodes, %d/%d edges",
        sub.num_nodes, n, sub.num_edges, g.num_edges,
    )
    return sub, remap


def load_labels(path, g):
    """Attach node class labels from a file; returns a new Graph.

    Each line is ``<node_token> ... <class_token>``: plain two-column files
    and wide per-node feature rows are both accepted by taking the first and
    last whitespace-separated fields.  Tokens absent from the graph are
    skipped (one warning with the total count).  Class ids are assigned in
    first-appearance order of the class tokens.
    """
    labels = np.full(g.num_nodes, -1, dtype=np.int32)
    class_ids = {}
    class_names = []
    n_unknown = 0
    n_matched = 0
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as e:
        raise GraphFormatError(f"cannot read label file {path}: {e}") from e
    with fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 2:
                raise GraphFormatError(f"{path}:{lineno}: expected node and class tokens")
            node_tok, class_tok = parts[0], parts[-1]
            node = g.token_ids.get(node_tok)
            if node is None:
                n_unknown += 1
                continue
            cid = class_ids.get(class_tok)
            if cid is None:
                cid = class_ids[class_tok] = len(class_names)
                class_names.append(class_tok)
            labels[node] = cid
            n_matched += 1
    if n_matched == 0:
        raise GraphFormatError(f"{path}: no label line matched a known node")
    if n_unknown:
        logger.warning("%s: skipped %d label lines for unknown nodes", path, n_unknown)
    logger.info("%s: %d labeled nodes, %d classes", path, n_matched, len(class_names))
    return replace(g, labels=labels, label_names=tuple(class_names))


def save_edge_list(g, path):
    """Write the graph as one ``token token`` line per undirected edge."""
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(g.num_nodes):
            for j in g.neighbors(i):
                if i < j:
                    fh.write(f"{g.tokens[i]} {g.tokens[j]}\n")


def edge_array(g):
    """All undirected edges as an (|E|, 2) array with i < j."""
    src = np.repeat(np.arange(g.num_nodes), g.degrees)
    mask = src < g.indices
    return np.stack([src[mask], g.indices[mask]], axis=1).astype(np.int64)
