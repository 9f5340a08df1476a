import os
from pathlib import Path

import numpy as np
import pytest

import degreewalk as dw


def dataset_file(name):
    """Locate a citation dataset file under $DEGREEWALK_DATA (or ./data).

    Searched as <root>/<name>, <root>/<stem>/<name> where stem is the part
    before the first dot (cora.cites -> cora/cora.cites).
    """
    root = Path(os.environ.get("DEGREEWALK_DATA", Path(__file__).parent.parent / "data"))
    stem = name.split(".")[0]
    for cand in (root / name, root / stem / name):
        if cand.is_file():
            return cand
    return None


def require_dataset(*names):
    paths = [dataset_file(n) for n in names]
    if any(p is None for p in paths):
        missing = [n for n, p in zip(names, paths) if p is None]
        pytest.skip(
            f"dataset files {missing} not found; set DEGREEWALK_DATA "
            "(see `degreewalk fetch-instructions`)"
        )
    return paths if len(paths) > 1 else paths[0]


@pytest.fixture(scope="session")
def karate():
    return dw.karate_club()


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


def make_graph(edges, n=None):
    """Small test graph from an edge list of dense int pairs."""
    from degreewalk.graph import _from_edge_array

    edges = np.array(edges, dtype=np.int64)
    n_nodes = n if n is not None else int(edges.max()) + 1
    return _from_edge_array(edges, [str(i) for i in range(n_nodes)])


def random_connected_graph(n, extra_edges, rng):
    """Random tree plus extra random edges; always connected, normalized."""
    edges = set()
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.add((u, v))
    target = min(n - 1 + extra_edges, n * (n - 1) // 2)
    while len(edges) < target:
        u, v = rng.integers(0, n, size=2)
        if u == v:
            continue
        edges.add((min(int(u), int(v)), max(int(u), int(v))))
    return make_graph(sorted(edges), n=n)
