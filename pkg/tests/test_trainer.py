import numpy as np
import pytest

from sparsedict import (
    InvalidInputError,
    TrainConfig,
    atom_recovery,
    gen_dictionary,
    gen_signals,
    merge_dictionaries,
    mod_update,
    omp_batch,
    omp_fixed_sparsity,
    split_dataset,
    split_indices,
    train_local,
    train_split_merge,
    train_standard,
)


class TestTrainConfig:
    def test_valid_standard(self):
        TrainConfig(K=20, s=3, iterations=5).validate()

    def test_valid_split_merge(self):
        TrainConfig(K=20, s=4, iterations=5, mode="split-merge",
                    L=4, K1=10, s1=2, s2=2).validate()

    @pytest.mark.parametrize("kwargs", [
        dict(K=0, s=3),
        dict(K=20, s=0),
        dict(K=20, s=3, iterations=0),
        dict(K=20, s=3, init="bogus"),
        dict(K=20, s=3, mode="bogus"),
        dict(K=20, s=4, mode="split-merge", L=2),
        dict(K=20, s=4, mode="split-merge", L=2, K1=10, s1=3, s2=2),
        dict(K=20, s=4, mode="split-merge", L=2, K1=30, s1=2, s2=2),
    ])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(InvalidInputError):
            TrainConfig(**kwargs).validate()

    def test_from_dict_rejects_unknown_fields(self):
        with pytest.raises(InvalidInputError):
            TrainConfig.from_dict({"K": 20, "s": 3, "bogus": 1})

    def test_dict_round_trip(self):
        cfg = TrainConfig(K=20, s=4, iterations=7, seed=3, mode="split-merge",
                          L=4, K1=10, s1=2, s2=2)
        back = TrainConfig.from_dict(cfg.to_dict())
        assert back == cfg


class TestTrainStandard:
    def test_fixed_point_on_exact_atoms(self, rng):
        # data = the K atoms themselves (repeated), init = those atoms:
        # one iteration must leave D unchanged up to sign and fit exactly
        K = 10
        D_true = gen_dictionary(8, K, seed=0)
        Y = np.tile(D_true, 5)
        cfg = TrainConfig(K=K, s=1, iterations=1, init=D_true, seed=0)
        D, X, rep = train_standard(Y, cfg)
        assert np.abs(np.abs(np.sum(D * D_true, axis=0)) - 1.0).max() < 1e-9
        assert rep.final_mse_db == -300.0

    def test_within_iteration_descent(self, rng):
        # each MOD step must not increase the residual for the codes it was
        # given (the full trace is not monotone: fresh greedy codes against
        # the updated dictionary can fit worse)
        Y = rng.standard_normal((8, 50))
        cfg = TrainConfig(K=10, s=3, iterations=1, seed=0)
        D = None
        from sparsedict import normalize_columns
        D, _ = normalize_columns(Y[:, :10])
        for _ in range(15):
            X = omp_batch(Y, D, s=3)
            before = np.linalg.norm(Y - D @ X.to_csc())
            D, diag = mod_update(Y, X, D)
            assert diag.residual_fro <= before + 1e-9

    def test_trace_decreases_overall(self, rng):
        Y = rng.standard_normal((8, 50))
        cfg = TrainConfig(K=10, s=3, iterations=30, seed=0)
        _, _, rep = train_standard(Y, cfg)
        r = rep.per_iteration_residuals
        assert len(r) == 30
        assert r[-1] < r[0]

    def test_recovery_on_easy_instance(self):
        # well-separated instance: plenty of data, mild sparsity
        D_true = gen_dictionary(16, 24, seed=3)
        Y, _ = gen_signals(D_true, 2000, 2, seed=4)
        cfg = TrainConfig(K=24, s=2, iterations=25, seed=5)
        D, _, rep = train_standard(Y, cfg)
        assert atom_recovery(D_true, D) >= 75.0
        assert rep.final_mse_db < -10.0

    def test_report_fields(self, rng):
        Y = rng.standard_normal((8, 40))
        cfg = TrainConfig(K=10, s=2, iterations=3)
        _, X, rep = train_standard(Y, cfg)
        assert rep.wall_time_s > 0
        assert len(rep.per_iteration_residuals) == 3
        assert X.N == 40

    def test_first_columns_needs_enough_data(self, rng):
        Y = rng.standard_normal((8, 9))
        with pytest.raises(InvalidInputError):
            train_standard(Y, TrainConfig(K=10, s=2, iterations=1))

    def test_rejects_wrong_mode(self, rng):
        Y = rng.standard_normal((8, 40))
        cfg = TrainConfig(K=10, s=2, iterations=1, mode="split-merge",
                          L=2, K1=5, s1=2, s2=1)
        with pytest.raises(InvalidInputError):
            train_standard(Y, cfg)

    def test_determinism(self, rng):
        Y = rng.standard_normal((8, 60))
        cfg = TrainConfig(K=12, s=2, iterations=5, seed=11)
        D1, X1, _ = train_standard(Y, cfg)
        D2, X2, _ = train_standard(Y, cfg)
        assert np.array_equal(D1, D2)
        assert X1 == X2


class TestSplitIndices:
    def test_partition_property(self):
        blocks = split_indices(100, 7, seed=0)
        assert len(blocks) == 7
        merged = np.sort(np.concatenate(blocks))
        assert np.array_equal(merged, np.arange(100))

    def test_remainder_rule(self):
        blocks = split_indices(10, 3, seed=0)
        assert [len(b) for b in blocks] == [4, 3, 3]
        merged = np.sort(np.concatenate(blocks))
        assert np.array_equal(merged, np.arange(10))

    def test_single_block_is_permutation(self):
        blocks = split_indices(20, 1, seed=5)
        assert len(blocks) == 1
        assert np.array_equal(np.sort(blocks[0]), np.arange(20))

    def test_seed_reproducibility(self):
        a = split_indices(50, 4, seed=9)
        b = split_indices(50, 4, seed=9)
        c = split_indices(50, 4, seed=10)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))
        assert not all(np.array_equal(x, y) for x, y in zip(a, c))

    def test_rejects_oversized_L(self):
        with pytest.raises(InvalidInputError):
            split_indices(5, 6, seed=0)

    def test_split_dataset_columns(self, rng):
        Y = rng.standard_normal((6, 23))
        shards = split_dataset(Y, 4, seed=1)
        idx = split_indices(23, 4, seed=1)
        for shard, ids in zip(shards, idx):
            assert np.array_equal(shard, Y[:, ids])


class TestTrainLocal:
    def test_delegates_to_standard(self, rng):
        Y = rng.standard_normal((8, 60))
        D_a, X_a = train_local(Y, K1=12, s1=2, iterations=4, seed=7)
        cfg = TrainConfig(K=12, s=2, iterations=4, seed=7)
        D_b, X_b, _ = train_standard(Y, cfg)
        assert np.array_equal(D_a, D_b)
        assert X_a == X_b


class TestMergeDictionaries:
    def test_single_local_recovered_in_global(self, rng):
        # L=1 with K=K1 and s2=1: every merge column is a scaled atom, so
        # sufficient training recovers (nearly) every local atom
        Y = rng.standard_normal((10, 200))
        D_loc, X_loc = train_local(Y, K1=20, s1=3, iterations=10, seed=0)
        D = merge_dictionaries([(D_loc, X_loc)], K=20, s2=1,
                               merge_iterations=30, seed=1)
        assert atom_recovery(D_loc, D) >= 99.0

    def test_zero_weight_local_dropped(self, rng):
        from sparsedict import SparseCodeMatrix

        Y = rng.standard_normal((10, 100))
        D_loc, X_loc = train_local(Y, K1=15, s1=2, iterations=5, seed=0)
        empty = SparseCodeMatrix(15, np.zeros(101, dtype=np.int64),
                                 np.empty(0, dtype=np.int64), np.empty(0))
        D = merge_dictionaries([(D_loc, X_loc), (D_loc, empty)], K=15, s2=1,
                               merge_iterations=5, seed=1)
        assert D.shape == (10, 15)

    def test_rejects_empty(self):
        with pytest.raises(InvalidInputError):
            merge_dictionaries([], K=5, s2=1, merge_iterations=1, seed=0)


class TestTrainSplitMerge:
    def test_degenerate_single_shard(self, rng):
        # L=1, K1=K, s1=s, s2=1 is two chained standard trainings
        Y = rng.standard_normal((8, 80))
        cfg = TrainConfig(K=12, s=2, iterations=5, seed=3, mode="split-merge",
                          L=1, K1=12, s1=2, s2=1)
        D, rep = train_split_merge(Y, cfg)
        assert D.shape == (8, 12)
        assert len(rep.local_wall_times_s) == 1
        assert np.isfinite(rep.final_mse_db)

    def test_seed_determinism(self, rng):
        Y = rng.standard_normal((10, 120))
        cfg = TrainConfig(K=16, s=2, iterations=4, seed=21,
                          mode="split-merge", L=3, K1=10, s1=2, s2=1)
        D1, _ = train_split_merge(Y, cfg)
        D2, _ = train_split_merge(Y, cfg)
        assert np.array_equal(D1, D2)

    def test_worker_count_invariance(self, rng):
        Y = rng.standard_normal((10, 120))
        base = dict(K=16, s=2, iterations=4, seed=21, mode="split-merge",
                    L=3, K1=10, s1=2, s2=1)
        D1, _ = train_split_merge(Y, TrainConfig(**base, threads=1))
        D4, _ = train_split_merge(Y, TrainConfig(**base, threads=4))
        assert np.array_equal(D1, D4)

    def test_seed_changes_result(self, rng):
        Y = rng.standard_normal((10, 120))
        base = dict(K=16, s=2, iterations=4, mode="split-merge",
                    L=3, K1=10, s1=2, s2=1)
        D1, _ = train_split_merge(Y, TrainConfig(**base, seed=1))
        D2, _ = train_split_merge(Y, TrainConfig(**base, seed=2))
        assert not np.array_equal(D1, D2)

    def test_report_phases(self, rng):
        Y = rng.standard_normal((8, 90))
        cfg = TrainConfig(K=12, s=2, iterations=3, seed=0,
                          mode="split-merge", L=3, K1=8, s1=2, s2=1)
        _, rep = train_split_merge(Y, cfg)
        assert len(rep.local_wall_times_s) == 3
        assert rep.merge_wall_time_s > 0
        assert rep.wall_time_s >= rep.merge_wall_time_s
        assert rep.critical_path_s == pytest.approx(
            rep.split_time_s + max(rep.local_wall_times_s)
            + rep.merge_wall_time_s)

    def test_sparsity_composition_property(self, rng):
        # coding a signal over the global dictionary with sparsity s2, then
        # expanding each used atom by its s1-sparse merge representation,
        # yields a composed code with at most s1*s2 nonzeros
        D_true = gen_dictionary(12, 18, seed=0)
        Y, _ = gen_signals(D_true, 240, 4, seed=1)
        cfg = TrainConfig(K=18, s=4, iterations=5, seed=2,
                          mode="split-merge", L=2, K1=12, s1=2, s2=2)
        D, _ = train_split_merge(Y, cfg)
        # merge codes Z: columns of D coded over an s1-sparse model built
        # from local atoms; here approximate Z by coding D over itself is
        # trivial, so instead verify the generic support algebra
        Z = np.zeros((18, 18))
        for j in range(18):
            x = omp_fixed_sparsity(D[:, j], D, 2)
            Z[x.indices, j] = x.values
        for i in range(20):
            x1 = omp_fixed_sparsity(Y[:, i], D, 2)
            composed = Z @ x1.to_dense()
            assert np.count_nonzero(composed) <= 2 * 2

    def test_rejects_wrong_mode(self, rng):
        Y = rng.standard_normal((8, 40))
        with pytest.raises(InvalidInputError):
            train_split_merge(Y, TrainConfig(K=10, s=2, iterations=1))
