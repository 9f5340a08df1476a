import math

import numpy as np
import pytest

import degreewalk as dw
from degreewalk.alias import alias_probs
from degreewalk.embedding import (TrainConfig, _sgns_walk, build_vocab,
                                  generate_pairs, load_word2vec, save_word2vec,
                                  sgns_step, train)
from degreewalk.graph import DegreewalkError
from degreewalk.walks import DegreeBased, WalkConfig, WalkCorpus, generate_corpus

from conftest import make_graph


def corpus_from_lists(walks):
    flat = np.array([t for w in walks for t in w], dtype=np.int32)
    offsets = np.cumsum([0] + [len(w) for w in walks]).astype(np.int64)
    return WalkCorpus(flat=flat, offsets=offsets)


class TestVocabulary:
    def test_exact_counts(self):
        vocab = build_vocab(corpus_from_lists([[0, 1], [0, 1]]))
        assert vocab.counts.tolist() == [2, 2]

    def test_single_node_table(self):
        vocab = build_vocab(corpus_from_lists([[0, 0, 0]]))
        assert vocab.counts.tolist() == [3]
        np.testing.assert_allclose(alias_probs(vocab.neg_prob, vocab.neg_alias), [1.0])

    def test_karate_corpus_token_total(self, karate):
        cfg = WalkConfig(strategy=DegreeBased(5), walk_length=10, seed=1)
        vocab = build_vocab(generate_corpus(karate, cfg))
        assert vocab.counts.sum() == 780 * 11

    def test_negative_table_is_pow_075(self):
        vocab = build_vocab(corpus_from_lists([[0], [1]] * 8 + [[1]] * 8))
        # counts 8 and 16 -> weights 8^0.75, 16^0.75
        w = np.array([8.0, 16.0]) ** 0.75
        np.testing.assert_allclose(
            alias_probs(vocab.neg_prob, vocab.neg_alias), w / w.sum(), atol=1e-12)

    def test_empty_corpus_rejected(self):
        with pytest.raises(DegreewalkError):
            build_vocab(WalkCorpus(flat=np.array([], dtype=np.int32),
                                   offsets=np.array([0], dtype=np.int64)))


class TestGeneratePairs:
    def test_pair_of_two(self, rng):
        pairs = generate_pairs([7, 9], 1, rng)
        assert set(pairs) == {(7, 9), (9, 7)}

    def test_clipped_window_count(self, rng):
        # 5 positions, window 2, no shrink: 2+3+4+3+2 pairs
        pairs = generate_pairs([0, 1, 2, 3, 4], 2, rng, shrink=False)
        assert len(pairs) == 14

    def test_window_larger_than_walk(self, rng):
        pairs = generate_pairs([0, 1, 2], 5, rng, shrink=False)
        assert len(pairs) == 6
        for a in (0, 1, 2):
            partners = {c for ctr, c in pairs if ctr == a}
            assert partners == {0, 1, 2} - {a}

    def test_shrunk_windows_within_bound(self, rng):
        walk = list(range(12))
        for _ in range(50):
            for ctr, ctx in generate_pairs(walk, 3, rng, shrink=True):
                assert 1 <= abs(ctr - ctx) <= 3

    def test_too_short_walk(self, rng):
        with pytest.raises(ValueError):
            generate_pairs([1], 2, rng)


class TestSgnsStep:
    def test_zero_vectors_loss_is_log2_each(self):
        d = 8
        vecs = np.zeros((3, d))
        ctxs = np.zeros((3, d))
        loss = sgns_step(0, 1, [2, 2, 2], vecs, ctxs, lr=0.1)
        np.testing.assert_allclose(loss, 4 * math.log(2), atol=1e-12)

    def test_vanishing_lr_leaves_matrices(self, rng):
        vecs = rng.standard_normal((4, 8))
        ctxs = rng.standard_normal((4, 8))
        v0, c0 = vecs.copy(), ctxs.copy()
        sgns_step(0, 1, [2, 3], vecs, ctxs, lr=1e-14)
        np.testing.assert_allclose(vecs, v0, atol=1e-12)
        np.testing.assert_allclose(ctxs, c0, atol=1e-12)

    def test_gradient_matches_finite_differences(self, rng):
        """Central differences of the loss at eps=1e-5 across 100 random states."""
        d = 8
        for _ in range(100):
            vecs = rng.standard_normal((6, d)) * 0.5
            ctxs = rng.standard_normal((6, d)) * 0.5
            center, context = 0, 1
            negs = [2, 3, 4]

            def loss_at(vecs_, ctxs_):
                v = vecs_[center]
                total = 0.0
                for tgt, label in [(context, 1.0)] + [(n, 0.0) for n in negs]:
                    s = float(ctxs_[tgt] @ v)
                    sig = 1.0 / (1.0 + math.exp(-s))
                    total += -math.log(sig) if label else -math.log(1.0 - sig)
                return total

            lr = 1e-3
            v_before = vecs.copy()
            c_before = ctxs.copy()
            sgns_step(center, context, negs, vecs, ctxs, lr)
            # implied gradients from the update: delta = -lr * grad
            g_center = (v_before[center] - vecs[center]) / lr
            eps = 1e-5
            for t in range(d):
                vp = v_before.copy(); vp[center, t] += eps
                vm = v_before.copy(); vm[center, t] -= eps
                fd = (loss_at(vp, c_before) - loss_at(vm, c_before)) / (2 * eps)
                assert abs(g_center[t] - fd) <= 1e-4 * max(1.0, abs(fd))
            for row in [context] + negs:
                g_row = (c_before[row] - ctxs[row]) / lr
                for t in range(0, d, 3):
                    cp = c_before.copy(); cp[row, t] += eps
                    cm = c_before.copy(); cm[row, t] -= eps
                    fd = (loss_at(v_before, cp) - loss_at(v_before, cm)) / (2 * eps)
                    assert abs(g_row[t] - fd) <= 1e-4 * max(1.0, abs(fd))

    def test_kernel_matches_reference_updates(self, rng):
        """The jitted per-walk kernel applies the same math as sgns_step."""
        d = 8
        V = 6
        walk = np.array([0, 1, 2, 3, 4, 5, 1, 2], dtype=np.int32)
        window, negatives = 2, 3
        neg_prob = np.full(V, 1.0)
        neg_alias = np.arange(V, dtype=np.int64)  # identity table: slot = target
        u = rng.random(len(walk) * (1 + 4 * window * negatives))
        vec0 = (rng.random((V, d)) - 0.5).astype(np.float32)
        ctx0 = (rng.random((V, d)) - 0.5).astype(np.float32)

        kv, kc = vec0.copy(), ctx0.copy()
        kloss, kpairs = _sgns_walk(walk, window, False, kv, kc, neg_prob,
                                   neg_alias, negatives, np.float32(0.05), u)

        rv = vec0.astype(np.float64)
        rc = ctx0.astype(np.float64)
        ui = 0
        rloss, rpairs = 0.0, 0
        for pos in range(len(walk)):
            lo, hi = max(0, pos - window), min(len(walk) - 1, pos + window)
            for cpos in range(lo, hi + 1):
                if cpos == pos:
                    continue
                ctx = int(walk[cpos])
                negs = []
                for _ in range(negatives):
                    slot = int(u[ui] * V); ui += 1
                    coin = u[ui]; ui += 1
                    tgt = slot if coin < neg_prob[slot] else int(neg_alias[slot])
                    if tgt != ctx:
                        negs.append(tgt)
                rloss += sgns_step(int(walk[pos]), ctx, negs, rv, rc, 0.05)
                rpairs += 1
        assert kpairs == rpairs
        np.testing.assert_allclose(kloss, rloss, rtol=1e-3)
        np.testing.assert_allclose(kv, rv, rtol=2e-3, atol=2e-5)
        np.testing.assert_allclose(kc, rc, rtol=2e-3, atol=2e-5)


class TestTrain:
    def test_disconnected_cliques_separate(self):
        g = make_graph([(i, j) for i in range(6) for j in range(i + 1, 6)]
                       + [(i, j) for i in range(6, 12) for j in range(i + 1, 12)])
        cfg = WalkConfig(strategy=DegreeBased(8), walk_length=8, seed=4)
        emb = train(generate_corpus(g, cfg),
                    TrainConfig(dimension=16, window=3, epochs=5, seed=4))
        X = emb.vectors / np.linalg.norm(emb.vectors, axis=1, keepdims=True)
        sims = X @ X.T
        same = np.add.outer(np.arange(12) < 6, np.arange(12) < 6) != 1
        off_diag = ~np.eye(12, dtype=bool)
        intra = sims[same & off_diag].mean()
        inter = sims[~same].mean()
        assert intra > inter

    def test_single_epoch_tiny_corpus_finite(self):
        corpus = corpus_from_lists([[0, 1, 0], [1, 0, 1]])
        emb = train(corpus, TrainConfig(dimension=4, window=1, epochs=1, seed=0))
        assert np.all(np.isfinite(emb.vectors))
        assert np.isfinite(emb.epoch_losses).all()

    def test_loss_decreases_first_to_last_epoch(self, karate):
        cfg = WalkConfig(strategy=DegreeBased(2), walk_length=10, seed=9)
        emb = train(generate_corpus(karate, cfg),
                    TrainConfig(dimension=16, window=3, epochs=5, seed=9))
        assert emb.epoch_losses[-1] < emb.epoch_losses[0]

    def test_no_blowup(self, karate):
        cfg = WalkConfig(strategy=DegreeBased(3), walk_length=10, seed=2)
        emb = train(generate_corpus(karate, cfg), TrainConfig(dimension=32, seed=2))
        assert np.all(np.isfinite(emb.vectors)) and np.all(np.isfinite(emb.context))
        assert np.abs(emb.vectors).max() < 100
        assert np.abs(emb.context).max() < 100

    def test_deterministic_same_seed(self, karate):
        cfg = WalkConfig(strategy=DegreeBased(2), walk_length=8, seed=5)
        corpus = generate_corpus(karate, cfg)
        tc = TrainConfig(dimension=12, window=3, epochs=2, seed=11)
        e1 = train(corpus, tc)
        e2 = train(corpus, tc)
        assert e1.vectors.tobytes() == e2.vectors.tobytes()
        assert e1.context.tobytes() == e2.context.tobytes()

    def test_seed_matters(self, karate):
        cfg = WalkConfig(strategy=DegreeBased(2), walk_length=8, seed=5)
        corpus = generate_corpus(karate, cfg)
        e1 = train(corpus, TrainConfig(dimension=12, epochs=1, seed=1))
        e2 = train(corpus, TrainConfig(dimension=12, epochs=1, seed=2))
        assert e1.vectors.tobytes() != e2.vectors.tobytes()

    def test_init_ranges(self):
        corpus = corpus_from_lists([[0, 1]] * 4)
        emb = train(corpus, TrainConfig(dimension=64, epochs=1,
                                        learning_rate=1e-9, lr_floor=1e-10, seed=3))
        # with a vanishing lr the matrices stay at their initialization
        assert np.abs(emb.vectors).max() <= 0.5 / 64 + 1e-6
        assert np.abs(emb.context).max() <= 1e-6

    def test_hogwild_mode_runs(self, karate):
        cfg = WalkConfig(strategy=DegreeBased(2), walk_length=6, seed=5)
        corpus = generate_corpus(karate, cfg)
        emb = train(corpus, TrainConfig(dimension=8, epochs=2, seed=0, workers=3))
        assert np.all(np.isfinite(emb.vectors))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(dimension=0)
        with pytest.raises(ValueError):
            TrainConfig(epochs=0)
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.01, lr_floor=0.02)


class TestWord2vecIO:
    def test_roundtrip(self, karate, tmp_path):
        cfg = WalkConfig(strategy=DegreeBased(1), walk_length=5, seed=0)
        emb = train(generate_corpus(karate, cfg), TrainConfig(dimension=8, epochs=1, seed=0))
        path = tmp_path / "emb.txt"
        save_word2vec(emb, karate.tokens, path)
        vectors, tokens = load_word2vec(path)
        assert vectors.shape == (34, 8)
        assert tokens == [karate.tokens[i] for i in emb.node_ids]
        # 6 significant digits survive the roundtrip
        np.testing.assert_allclose(vectors, emb.vectors, rtol=1e-5, atol=1e-7)

    def test_header_line(self, karate, tmp_path):
        cfg = WalkConfig(strategy=DegreeBased(1), walk_length=5, seed=0)
        emb = train(generate_corpus(karate, cfg), TrainConfig(dimension=32, epochs=1, seed=0))
        path = tmp_path / "emb.txt"
        save_word2vec(emb, karate.tokens, path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "34 32"
        assert len(lines) == 35

    def test_malformed_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 3\na 1 2 3\nb 1 2\n", encoding="utf-8")
        with pytest.raises(DegreewalkError):
            load_word2vec(path)
