import math

import numpy as np
import pytest

from amlworkbench.entitygraph import RelationEdge
from amlworkbench.geometry import (
    DegeneratePairError,
    pairwise_distances,
    poincare_distance,
    random_init,
)
from amlworkbench.training import (
    EmbeddingSnapshot,
    GraphTooSmallError,
    TrainConfig,
    TrainingDiverged,
    build_adjacency,
    edge_loss,
    evaluate_reconstruction,
    node_universe,
    read_snapshot_jsonl,
    sample_negatives,
    train,
    write_snapshot_jsonl,
)


def star_adjacency():
    # K1,3: center 0, leaves 1..3
    edges = [RelationEdge("c", f"l{i}", 1) for i in (1, 2, 3)]
    ids = node_universe(edges)
    index = {n: i for i, n in enumerate(ids)}
    return ids, index, build_adjacency(edges, index)


class TestSampleNegatives:
    def test_star_leaf_samples_other_leaves(self):
        ids, index, adjacency = star_adjacency()
        rng = np.random.Generator(np.random.PCG64(1))
        anchor = index["l1"]
        others = {index["l2"], index["l3"]}
        for _ in range(50):
            out = sample_negatives(anchor, 1, adjacency, rng)
            assert int(out[0]) in others

    def test_k_zero_empty(self):
        _, index, adjacency = star_adjacency()
        rng = np.random.Generator(np.random.PCG64(1))
        assert sample_negatives(index["c"], 0, adjacency, rng).size == 0

    def test_uniformity_chi_square(self):
        # anchor adjacent to node 1 only; nodes 2..9 equally likely
        edges = [RelationEdge("a", "n1", 1)] + [
            RelationEdge(f"n{i}", f"n{i + 1}", 1) for i in range(1, 9)
        ]
        ids = node_universe(edges)
        index = {n: i for i, n in enumerate(ids)}
        adjacency = build_adjacency(edges, index)
        rng = np.random.Generator(np.random.PCG64(5))
        counts: dict[int, int] = {}
        draws = 100_000
        for _ in range(draws // 10):
            for c in sample_negatives(index["a"], 10, adjacency, rng):
                counts[int(c)] = counts.get(int(c), 0) + 1
        eligible = [i for i in range(len(ids)) if i != index["a"] and i != index["n1"]]
        assert set(counts) == set(eligible)
        expected = draws / len(eligible)
        sigma = math.sqrt(draws * (1 / len(eligible)) * (1 - 1 / len(eligible)))
        for c in eligible:
            assert abs(counts[c] - expected) <= 3 * sigma

    def test_no_non_neighbors_errors(self):
        edges = [RelationEdge("a", "b", 1)]
        ids = node_universe(edges)
        index = {n: i for i, n in enumerate(ids)}
        adjacency = build_adjacency(edges, index)
        rng = np.random.Generator(np.random.PCG64(1))
        with pytest.raises(GraphTooSmallError):
            sample_negatives(index["a"], 1, adjacency, rng)


class TestEdgeLoss:
    def test_weight_zero(self):
        u = np.array([0.1, 0.0, 0.0])
        v = np.array([0.0, 0.1, 0.0])
        negs = [np.array([0.0, 0.0, 0.2])]
        loss, gu, gv, gns = edge_loss(u, v, negs, 0.0)
        assert loss == 0.0
        assert not gu.any() and not gv.any() and not gns[0].any()

    def test_single_negative_at_equal_distance(self):
        # exp(-d) equal for positive and negative: loss = w * log 2
        u = np.zeros(3)
        v = np.array([0.3, 0.0, 0.0])
        neg = np.array([0.0, 0.3, 0.0])
        for w in (1.0, 2.5):
            loss, *_ = edge_loss(u, v, [neg], w)
            assert abs(loss - w * math.log(2)) < 1e-12

    def test_weight_doubling_doubles_loss_exactly(self):
        rng = np.random.Generator(np.random.PCG64(3))
        u, v, n1, n2 = (rng.normal(0, 0.2, 3) for _ in range(4))
        loss1, gu1, gv1, _ = edge_loss(u, v, [n1, n2], 1.25)
        loss2, gu2, gv2, _ = edge_loss(u, v, [n1, n2], 2.5)
        assert loss2 == 2.0 * loss1
        np.testing.assert_array_equal(gu2, 2.0 * gu1)
        np.testing.assert_array_equal(gv2, 2.0 * gv1)

    def test_gradients_match_finite_differences(self):
        rng = np.random.Generator(np.random.PCG64(7))
        h = 1e-6
        for _ in range(20):
            pts = rng.normal(0, 0.2, (4, 3))
            u, v, negs = pts[0], pts[1], [pts[2], pts[3]]
            w = float(rng.uniform(0.5, 2.0))
            loss, gu, gv, gns = edge_loss(u, v, negs, w)

            def f(u=u, v=v, negs=negs):
                return edge_loss(u, v, negs, w)[0]

            for i in range(3):
                e = np.zeros(3)
                e[i] = h
                fd = (f(u=u + e) - f(u=u - e)) / (2 * h)
                assert abs(fd - gu[i]) / max(abs(gu[i]), 1e-8) < 1e-4
                fd = (f(v=v + e) - f(v=v - e)) / (2 * h)
                assert abs(fd - gv[i]) / max(abs(gv[i]), 1e-8) < 1e-4
                fd = (f(negs=[negs[0] + e, negs[1]]) - f(negs=[negs[0] - e, negs[1]])) / (2 * h)
                assert abs(fd - gns[0][i]) / max(abs(gns[0][i]), 1e-8) < 1e-4

    def test_coincident_positive_raises(self):
        u = np.array([0.1, 0.0, 0.0])
        with pytest.raises(DegeneratePairError):
            edge_loss(u, u.copy(), [np.array([0.0, 0.1, 0.0])], 1.0)


class TestTrain:
    def test_linked_pair_contracts_from_spread_init(self):
        edges = [RelationEdge("a", "b", 12)]
        cfg = TrainConfig(epochs=50, snapshot_at=(50,), seed=1, negatives=1,
                          init_std=0.1)
        res = train(edges, cfg, node_ids=["a", "b", "c"])
        d0 = poincare_distance(res.initial_coords[0], res.initial_coords[1])
        d1 = poincare_distance(res.coords[0], res.coords[1])
        assert d1 < d0

    def test_isolated_node_pushed_away(self):
        edges = [RelationEdge("a", "b", 10)]
        cfg = TrainConfig(epochs=50, snapshot_at=(50,), seed=2, negatives=1)
        res = train(edges, cfg, node_ids=["a", "b", "c"])
        dab = poincare_distance(res.coords[0], res.coords[1])
        dac = poincare_distance(res.coords[0], res.coords[2])
        assert dab < dac

    def test_snapshot_schedule(self):
        edges = [RelationEdge("a", "b", 1), RelationEdge("b", "c", 2),
                 RelationEdge("c", "d", 3)]
        cfg = TrainConfig(epochs=80, snapshot_at=(30, 40, 60, 80), seed=3,
                          negatives=2)
        res = train(edges, cfg)
        assert [s.iteration for s in res.snapshots] == [30, 40, 60, 80]
        assert len(res.loss_curve) == 80

    def test_deterministic_across_runs(self):
        edges = [RelationEdge(f"n{i}", f"n{(i * 7 + 1) % 30}", i % 5 + 1)
                 for i in range(60)
                 if f"n{i}" != f"n{(i * 7 + 1) % 30}"]
        cfg = TrainConfig(epochs=12, snapshot_at=(12,), seed=9)
        r1 = train(edges, cfg)
        r2 = train(edges, cfg)
        np.testing.assert_array_equal(r1.coords, r2.coords)
        assert r1.loss_curve == r2.loss_curve

    def test_different_seed_differs(self):
        edges = [RelationEdge("a", "b", 1), RelationEdge("b", "c", 2),
                 RelationEdge("c", "d", 3)]
        cfg1 = TrainConfig(epochs=10, snapshot_at=(10,), seed=1, negatives=1)
        cfg2 = TrainConfig(epochs=10, snapshot_at=(10,), seed=2, negatives=1)
        assert not np.array_equal(train(edges, cfg1).coords,
                                  train(edges, cfg2).coords)

    def test_ball_containment_every_epoch(self):
        rng = np.random.Generator(np.random.PCG64(11))
        edges = []
        for i in range(1, 80):
            p = int(rng.integers(0, i))
            edges.append(RelationEdge(f"n{p}", f"n{i}", int(rng.integers(1, 600))))
        cfg = TrainConfig(epochs=40, snapshot_at=(40,), seed=4)
        res = train(edges, cfg)
        assert max(res.max_norm_curve) <= 1 - cfg.eps_ball
        assert np.linalg.norm(res.coords, axis=1).max() <= 1 - cfg.eps_ball

    def test_loss_decreases(self):
        rng = np.random.Generator(np.random.PCG64(13))
        edges = []
        for i in range(1, 60):
            p = int(rng.integers(0, i))
            edges.append(RelationEdge(f"n{p}", f"n{i}", int(rng.integers(1, 100))))
        res = train(edges, TrainConfig(epochs=40, snapshot_at=(40,), seed=5))
        assert res.loss_curve[-1] < res.loss_curve[0]

    def test_two_block_graph_separates(self):
        edges = []
        for blk, prefix in ((0, "L"), (1, "R")):
            for i in range(20):
                for j in range(i + 1, 20):
                    edges.append(RelationEdge(f"{prefix}{i}", f"{prefix}{j}", 10))
        edges.append(RelationEdge("L0", "R0", 10))
        wins = 0
        for seed in range(5):
            res = train(edges, TrainConfig(epochs=60, snapshot_at=(60,), seed=seed))
            D = pairwise_distances(res.coords)
            left = [i for i, n in enumerate(res.node_ids) if n.startswith("L")]
            right = [i for i, n in enumerate(res.node_ids) if n.startswith("R")]
            intra = np.concatenate([
                D[np.ix_(left, left)][np.triu_indices(len(left), 1)],
                D[np.ix_(right, right)][np.triu_indices(len(right), 1)],
            ]).mean()
            inter = D[np.ix_(left, right)].mean()
            wins += intra < inter
        assert wins >= 4

    def test_dimension_is_a_runtime_parameter(self):
        edges = [RelationEdge("a", "b", 1), RelationEdge("b", "c", 2),
                 RelationEdge("c", "d", 3), RelationEdge("d", "e", 4)]
        for dim in (2, 5):
            cfg = TrainConfig(dim=dim, epochs=10, snapshot_at=(10,), seed=1,
                              negatives=2)
            res = train(edges, cfg)
            assert res.coords.shape == (5, dim)
            assert np.linalg.norm(res.coords, axis=1).max() <= 1 - cfg.eps_ball
            assert res.loss_curve[-1] < res.loss_curve[0]

    def test_empty_edges_rejected(self):
        with pytest.raises(ValueError):
            train([], TrainConfig())

    def test_invalid_snapshot_schedule_rejected(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=10, snapshot_at=(30,)).validate()

    def test_divergence_reports_entity(self):
        # an absurd learning rate forces non-finite coordinates quickly
        names = [f"n{i}" for i in range(8)]
        edges = [RelationEdge(names[i], names[i + 1], 600) for i in range(7)]
        cfg = TrainConfig(epochs=200, snapshot_at=(200,), seed=1,
                          learning_rate=1e18, burn_in_epochs=0,
                          normalize_weights=False)
        try:
            res = train(edges, cfg)
        except TrainingDiverged as err:
            assert err.iteration >= 1
            assert err.entity_id in set(names)
        else:
            # projection may still have contained the iterates; then the
            # guard must at least have kept everything finite
            assert np.isfinite(res.coords).all()


class TestReconstruction:
    def test_perfect_star(self):
        # center near origin, leaves clustered tightly around it, far from
        # the "noise" nodes: every true link ranks first
        ids = ["c", "l1", "l2", "l3", "x1", "x2"]
        coords = np.array([
            [0.0, 0.0, 0.0],
            [0.05, 0.0, 0.0],
            [0.0, 0.05, 0.0],
            [0.0, 0.0, 0.05],
            [0.8, 0.0, 0.0],
            [0.0, 0.8, 0.0],
        ])
        edges = [RelationEdge("c", f"l{i}", 1) for i in (1, 2, 3)]
        mean_rank, mean_ap = evaluate_reconstruction(ids, coords, edges)
        assert mean_rank == 1.0
        assert mean_ap == 1.0

    def test_random_embedding_mean_rank_near_half(self):
        rng = np.random.Generator(np.random.PCG64(21))
        n = 400
        edges = []
        for i in range(1, n):
            p = int(rng.integers(0, i))
            edges.append(RelationEdge(f"n{p}", f"n{i}", 1))
        ids = node_universe(edges)
        coords = random_init(n, 3, 0.001, seed=77)
        mean_rank, _ = evaluate_reconstruction(ids, coords, edges)
        assert abs(mean_rank - n / 2) / (n / 2) < 0.2

    def test_trained_beats_random_by_5x(self):
        rng = np.random.Generator(np.random.PCG64(23))
        n = 300
        edges = []
        for i in range(1, n):
            p = int(rng.integers(0, i))
            edges.append(RelationEdge(f"n{p}", f"n{i}", int(rng.integers(1, 600))))
        res = train(edges, TrainConfig(epochs=80, snapshot_at=(80,), seed=3))
        mr, _ = evaluate_reconstruction(res.node_ids, res.coords, edges)
        mr0, _ = evaluate_reconstruction(
            res.node_ids, random_init(n, 3, 0.001, seed=99), edges
        )
        assert mr <= 0.2 * mr0


class TestSnapshotIO:
    def test_jsonl_roundtrip(self, tmp_path):
        snap = EmbeddingSnapshot(
            iteration=30,
            coords=np.array([[0.1, 0.2, 0.3], [0.0, 0.0, 0.0]]),
            loss=1.5,
        )
        path = tmp_path / "iter_00030.jsonl"
        write_snapshot_jsonl(path, snap, ["a", "3__b"], {"a": 2, "3__b": 5},
                             {"3__b": True})
        records = read_snapshot_jsonl(path)
        assert [r["id"] for r in records] == ["a", "3__b"]
        assert records[0]["vec"] == [0.1, 0.2, 0.3]
        assert records[0]["degree"] == 2 and records[0]["fincrime"] is False
        assert records[1]["fincrime"] is True
