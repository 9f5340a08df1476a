import numpy as np
import pytest

import degreewalk as dw
from degreewalk.walks import (DegreeBased, Fixed, TransitionModel, WalkConfig,
                              generate_corpus, generate_walk, load_corpus,
                              schedule_starts, total_walk_count, walk_count)

from conftest import make_graph, random_connected_graph


def brute_transition(g, prev, cur, p, q):
    """Normalized second-order weights computed directly from the graph."""
    w = []
    for x in g.neighbors(cur):
        if x == prev:
            w.append(1.0 / p)
        elif g.has_edge(int(prev), int(x)):
            w.append(1.0)
        else:
            w.append(1.0 / q)
    w = np.array(w)
    return w / w.sum()


class TestWalkCount:
    def test_degree_based_is_product(self):
        assert walk_count(DegreeBased(5), 3) == 15

    def test_isolated_node_gets_zero(self):
        assert walk_count(DegreeBased(1), 0) == 0
        assert walk_count(Fixed(20), 0) == 0

    @pytest.mark.parametrize("k", [1, 2, 17])
    def test_fixed_ignores_degree(self, k):
        assert walk_count(Fixed(20), k) == 20

    def test_totals_on_karate(self, karate):
        assert total_walk_count(DegreeBased(5), karate) == 780
        assert total_walk_count(Fixed(40), karate) == 1360

    def test_degree_based_total_is_nwpd_times_2e(self, karate):
        for nwpd in (1, 3, 7):
            assert total_walk_count(DegreeBased(nwpd), karate) == nwpd * 2 * karate.num_edges


class TestTransitionModel:
    def test_unit_p_q_is_uniform(self, karate):
        model = TransitionModel(karate, 1.0, 1.0)
        for prev, cur in [(0, 1), (33, 32), (5, 16)]:
            k = len(karate.neighbors(cur))
            np.testing.assert_allclose(model.sampler_probs(prev, cur), 1.0 / k)

    def test_triangle_hand_normalized(self):
        g = make_graph([(0, 1), (1, 2), (0, 2)])
        model = TransitionModel(g, 0.5, 2.0)
        # standing at 1 having come from 0: back to 0 has weight 1/p=2,
        # on to 2 (adjacent to 0) has weight 1
        probs = model.sampler_probs(0, 1)
        nbrs = g.neighbors(1).tolist()
        np.testing.assert_allclose(probs[nbrs.index(0)], 2 / 3)
        np.testing.assert_allclose(probs[nbrs.index(2)], 1 / 3)

    @pytest.mark.parametrize("p,q", [(0.5, 2.0), (4.0, 0.25), (1.0, 3.0)])
    def test_path_endpoints(self, p, q):
        g = make_graph([(0, 1), (1, 2)])
        model = TransitionModel(g, p, q)
        probs = model.sampler_probs(0, 1)
        nbrs = g.neighbors(1).tolist()
        denom = 1 / p + 1 / q
        np.testing.assert_allclose(probs[nbrs.index(0)], (1 / p) / denom)
        np.testing.assert_allclose(probs[nbrs.index(2)], (1 / q) / denom)

    def test_sampler_matches_brute_force_everywhere(self, rng):
        g = random_connected_graph(25, 30, rng)
        p, q = 0.7, 1.8
        model = TransitionModel(g, p, q)
        for cur in range(g.num_nodes):
            for prev in g.neighbors(cur):
                probs = model.sampler_probs(int(prev), cur)
                assert probs.shape[0] == len(g.neighbors(cur))
                assert np.all(probs > 0)
                np.testing.assert_allclose(probs.sum(), 1.0, atol=1e-12)
                np.testing.assert_allclose(
                    probs, brute_transition(g, int(prev), cur, p, q), atol=1e-12)

    def test_empirical_draws_match_analytic(self, rng):
        g = random_connected_graph(15, 15, rng)
        model = TransitionModel(g, 0.5, 2.0)
        cur = int(np.argmax(g.degrees))
        prev = int(g.neighbors(cur)[0])
        draws = model.sample_next(prev, cur, 100_000, rng)
        freq = np.bincount(draws, minlength=g.num_nodes)[g.neighbors(cur)] / 100_000
        tv = 0.5 * np.abs(freq - brute_transition(g, prev, cur, 0.5, 2.0)).sum()
        assert tv < 0.01

    def test_invalid_p_q(self, karate):
        with pytest.raises(ValueError):
            TransitionModel(karate, 0.0, 1.0)
        with pytest.raises(ValueError):
            WalkConfig(strategy=Fixed(1), walk_length=5, p=1.0, q=-2.0)


class TestGenerateWalk:
    def test_zero_steps_is_start_only(self, karate, rng):
        model = TransitionModel(karate, 1.0, 1.0)
        assert generate_walk(model, 3, 0, rng).tolist() == [3]

    def test_forced_bounce_on_single_edge(self, rng):
        g = make_graph([(0, 1)])
        model = TransitionModel(g, 1.0, 1.0)
        assert generate_walk(model, 0, 3, rng).tolist() == [0, 1, 0, 1]

    def test_consecutive_nodes_adjacent(self, karate, rng):
        model = TransitionModel(karate, 0.5, 2.0)
        for start in (0, 33, 11):
            walk = generate_walk(model, start, 12, rng)
            assert len(walk) == 13
            assert walk[0] == start
            for a, b in zip(walk[:-1], walk[1:]):
                assert karate.has_edge(int(a), int(b))

    def test_isolated_start_rejected(self, rng):
        g = make_graph([(0, 1)], n=3)  # node 2 isolated
        model = TransitionModel(g, 1.0, 1.0)
        with pytest.raises(ValueError, match="isolated"):
            generate_walk(model, 2, 4, rng)


class TestGenerateCorpus:
    def test_karate_shape(self, karate):
        cfg = WalkConfig(strategy=DegreeBased(5), walk_length=10, seed=7)
        corpus = generate_corpus(karate, cfg)
        assert len(corpus) == 780
        assert corpus.num_tokens == 780 * 11
        for i in range(len(corpus)):
            assert len(corpus.walk(i)) == 11

    def test_single_edge_fixed_two(self):
        g = make_graph([(0, 1)])
        cfg = WalkConfig(strategy=Fixed(2), walk_length=1, seed=0)
        corpus = generate_corpus(g, cfg)
        walks = [corpus.walk(i).tolist() for i in range(len(corpus))]
        assert walks == [[0, 1], [0, 1], [1, 0], [1, 0]]

    def test_per_node_start_counts_exact(self, karate):
        cfg = WalkConfig(strategy=DegreeBased(3), walk_length=5, seed=1)
        corpus = generate_corpus(karate, cfg)
        starts = np.array([corpus.walk(i)[0] for i in range(len(corpus))])
        counts = np.bincount(starts, minlength=34)
        np.testing.assert_array_equal(counts, 3 * karate.degrees)

    def test_every_step_is_an_edge(self, rng):
        g = random_connected_graph(20, 25, rng)
        cfg = WalkConfig(strategy=DegreeBased(2), walk_length=8, p=0.5, q=2.0, seed=3)
        corpus = generate_corpus(g, cfg)
        for i in range(len(corpus)):
            w = corpus.walk(i)
            for a, b in zip(w[:-1], w[1:]):
                assert g.has_edge(int(a), int(b))

    def test_isolated_nodes_start_nothing(self):
        g = make_graph([(0, 1), (1, 2)], n=5)  # nodes 3, 4 isolated
        cfg = WalkConfig(strategy=Fixed(4), walk_length=2, seed=0)
        corpus = generate_corpus(g, cfg)
        assert len(corpus) == 12
        starts = {int(corpus.walk(i)[0]) for i in range(len(corpus))}
        assert starts == {0, 1, 2}

    def test_deterministic_across_worker_counts(self, karate):
        cfg = WalkConfig(strategy=DegreeBased(4), walk_length=9, p=0.8, q=1.3, seed=42)
        flat1 = generate_corpus(karate, cfg, workers=1).flat
        flat4 = generate_corpus(karate, cfg, workers=4).flat
        flat7 = generate_corpus(karate, cfg, workers=7).flat
        np.testing.assert_array_equal(flat1, flat4)
        np.testing.assert_array_equal(flat1, flat7)

    def test_seed_changes_corpus(self, karate):
        base = WalkConfig(strategy=DegreeBased(2), walk_length=6, seed=0)
        other = WalkConfig(strategy=DegreeBased(2), walk_length=6, seed=1)
        assert not np.array_equal(generate_corpus(karate, base).flat,
                                  generate_corpus(karate, other).flat)

    def test_schedule_is_node_major(self, karate):
        starts, counts = schedule_starts(karate, DegreeBased(2))
        assert len(starts) == 2 * 156
        np.testing.assert_array_equal(np.sort(starts), starts)


class TestCorpusIO:
    def test_save_load_roundtrip(self, karate, tmp_path):
        cfg = WalkConfig(strategy=DegreeBased(1), walk_length=4, seed=5)
        corpus = generate_corpus(karate, cfg)
        path = tmp_path / "walks.txt"
        corpus.save(path, karate.tokens)
        loaded, tokens = load_corpus(path)
        assert len(loaded) == len(corpus)
        # token ids are first-appearance; compare via original names
        orig = [[karate.tokens[i] for i in corpus.walk(w)] for w in range(len(corpus))]
        back = [[tokens[i] for i in loaded.walk(w)] for w in range(len(loaded))]
        assert orig == back

    def test_one_walk_per_line(self, karate, tmp_path):
        cfg = WalkConfig(strategy=Fixed(2), walk_length=3, seed=0)
        corpus = generate_corpus(karate, cfg)
        path = tmp_path / "walks.txt"
        corpus.save(path, karate.tokens)
        lines = path.read_text().strip().split("\n")
        assert len(lines) == len(corpus) == 68
        assert all(len(line.split()) == 4 for line in lines)
