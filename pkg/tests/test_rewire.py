import numpy as np
import pytest

from hgrw.errors import DataError
from hgrw.learner import LearnerConfig, SimilarityModel, model_similarity
from hgrw.metapath import MetaPath, compose_metapath, homophily_ratio
from hgrw.rewire import (
    RewireConfig,
    merge_into_graph,
    plan_tsv_lines,
    rewire_metapath,
    score_candidates,
)
from hgrw.synth import SynthConfig, synth_generate
from hgrw.targets import TargetsConfig, similarity_targets

from oracles import csr_pairs


def small_model(n=6, seed=0):
    g = synth_generate(
        SynthConfig(target_nodes=n, num_classes=2, feature_dim=3,
                    self_homophily=(0.5,), mean_degree=2.0, seed=seed)
    )
    path = MetaPath((0,))
    model = SimilarityModel(g, [path], LearnerConfig(hidden_dim=3, num_hops=1, seed=seed))
    return g, path, model


def dense_similarity(model, path, n):
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = model_similarity(model, path, i, j)
    return out


class TestScoreCandidates:
    def test_epsilon_above_cosine_bound_gives_nothing(self):
        _, path, model = small_model()
        cands = score_candidates(model, path, RewireConfig(edge_budget=4, epsilon=1.1))
        assert all(idx.size == 0 for idx in cands.indices)

    def test_zero_budget_gives_nothing(self):
        _, path, model = small_model()
        cands = score_candidates(model, path, RewireConfig(edge_budget=0, epsilon=-2.0))
        assert all(idx.size == 0 for idx in cands.indices)

    def test_matches_dense_argsort_oracle(self):
        g, path, model = small_model(n=6, seed=3)
        cfg = RewireConfig(edge_budget=2, epsilon=-0.5, block_size=2)
        cands = score_candidates(model, path, cfg)
        sims = dense_similarity(model, path, 6)
        for i in range(6):
            row = sims[i].copy()
            row[i] = -np.inf
            eligible = [j for j in range(6) if row[j] > cfg.epsilon]
            eligible.sort(key=lambda j: (-row[j], j))
            assert cands.indices[i].tolist() == eligible[:2]

    def test_budget_respected_and_blocks_consistent(self):
        g, path, model = small_model(n=23, seed=5)
        cfg_small = RewireConfig(edge_budget=3, epsilon=0.0, block_size=4)
        cfg_big = RewireConfig(edge_budget=3, epsilon=0.0, block_size=64)
        a = score_candidates(model, path, cfg_small)
        b = score_candidates(model, path, cfg_big)
        for i in range(23):
            assert a.indices[i].size <= 3
            assert np.array_equal(a.indices[i], b.indices[i])
            assert np.array_equal(a.scores[i], b.scores[i])

    def test_two_hop_restriction(self):
        g, path, model = small_model(n=12, seed=7)
        sub = compose_metapath(g, path)
        cfg = RewireConfig(edge_budget=12, epsilon=-2.0, restrict_two_hop=True)
        cands = score_candidates(model, path, cfg, sub=sub)
        # allowed partners: one- or two-hop neighbors in the subgraph
        dense = sub.adjacency.to_dense()
        reach = ((dense + dense @ dense) > 0)
        for i in range(12):
            for j in cands.indices[i]:
                assert reach[i, j]


class TestRewireMetapath:
    def test_noop_configuration_is_identity(self):
        g, path, model = small_model(n=10, seed=2)
        sub = compose_metapath(g, path)
        cfg = RewireConfig(edge_budget=0, epsilon=0.6, gamma=-1.0)
        rewired, plan = rewire_metapath(sub, score_candidates(model, path, cfg), model, cfg)
        assert plan.empty
        assert rewired.adjacency.same_structure(sub.adjacency)

    def test_gamma_above_bound_removes_everything(self):
        g, path, model = small_model(n=10, seed=2)
        sub = compose_metapath(g, path)
        cfg = RewireConfig(edge_budget=0, epsilon=0.6, gamma=1.01)
        rewired, plan = rewire_metapath(sub, score_candidates(model, path, cfg), model, cfg)
        assert rewired.adjacency.nnz == 0
        assert len(plan.removals) == sub.adjacency.nnz // 2

    def test_additions_are_new_symmetric_and_off_diagonal(self):
        g, path, model = small_model(n=15, seed=4)
        sub = compose_metapath(g, path)
        cfg = RewireConfig(edge_budget=3, epsilon=-2.0)
        rewired, plan = rewire_metapath(sub, score_candidates(model, path, cfg), model, cfg)
        before = csr_pairs(sub.adjacency)
        for i, j, score in plan.additions:
            assert i != j
            assert (i, j) not in before
            assert score > cfg.epsilon
        after = csr_pairs(rewired.adjacency)
        assert {(j, i) for i, j in after} == after
        assert all(i != j for i, j in after)

    def test_budget_bound_in_plan(self):
        g, path, model = small_model(n=15, seed=4)
        cfg = RewireConfig(edge_budget=2, epsilon=-2.0)
        sub = compose_metapath(g, path)
        _, plan = rewire_metapath(sub, score_candidates(model, path, cfg), model, cfg)
        sources = [i for i, _, _ in plan.additions]
        assert max(np.bincount(sources)) <= 2

    def test_planted_blocks_gain_homophily(self):
        # heterophilous planted instance: additions should concentrate inside
        # classes once the raw targets already separate them
        g = synth_generate(SynthConfig(target_nodes=60, num_classes=2, feature_dim=4,
                                       self_homophily=(0.2,), mean_degree=6.0,
                                       noise_scale=0.3, seed=11))
        path = MetaPath((0,))
        from hgrw.learner import train
        tcfg = TargetsConfig(num_hops=1, alpha=0.9)
        targets = [similarity_targets(compose_metapath(g, path), g, tcfg)[1]]
        cfg = LearnerConfig(hidden_dim=8, num_hops=1, epochs_attr=60, epochs_label=5, seed=11)
        model, _ = train(g, [path], targets, cfg)
        sub = compose_metapath(g, path)
        rcfg = RewireConfig(edge_budget=4, epsilon=0.5, gamma=0.0)
        rewired, plan = rewire_metapath(sub, score_candidates(model, path, rcfg), model, rcfg)
        hr_before = homophily_ratio(sub, g.labels)
        hr_after = homophily_ratio(rewired, g.labels)
        assert hr_after > hr_before
        add_same = [g.labels[i] == g.labels[j] for i, j, _ in plan.additions]
        assert np.mean(add_same) > 0.8
        del_cross = [g.labels[i] != g.labels[j] for i, j, _ in plan.removals]
        if plan.removals:
            assert np.mean(del_cross) > 0.5


class TestMerge:
    def test_empty_merge_is_identity(self):
        g, _, _ = small_model()
        merged = merge_into_graph(g, [])
        assert merged.schema == g.schema
        assert merged.adjacency == g.adjacency

    def test_merge_adds_named_relation(self):
        g, path, model = small_model(n=10, seed=2)
        sub = compose_metapath(g, path)
        merged = merge_into_graph(g, [sub])
        new_rel = merged.schema.relations[-1]
        assert new_rel.name == "rw:NN"
        assert new_rel.src_type == new_rel.dst_type == g.target_type
        assert merged.adjacency[-1].same_structure(sub.adjacency)
        # original untouched
        for a, b in zip(g.adjacency, merged.adjacency):
            assert a.same_structure(b)

    def test_name_collision_raises(self):
        g, path, _ = small_model(n=10, seed=2)
        sub = compose_metapath(g, path)
        with pytest.raises(DataError):
            merge_into_graph(g, [sub, sub])

    def test_merged_graph_round_trips(self, tmp_path):
        from hgrw.dataio import load_graph, save_graph
        g, path, _ = small_model(n=10, seed=2)
        merged = merge_into_graph(g, [compose_metapath(g, path)])
        save_graph(merged, str(tmp_path / "ds"))
        loaded = load_graph(str(tmp_path / "ds"))
        assert loaded.schema == merged.schema
        for a, b in zip(loaded.adjacency, merged.adjacency):
            assert a.same_structure(b)


def test_plan_tsv_format():
    g, path, model = small_model(n=8, seed=1)
    cfg = RewireConfig(edge_budget=2, epsilon=-2.0, gamma=0.9)
    sub = compose_metapath(g, path)
    _, plan = rewire_metapath(sub, score_candidates(model, path, cfg), model, cfg)
    lines = plan_tsv_lines([plan], g.schema)
    assert lines[0] == "metapath\top\ti\tj\tscore"
    for line in lines[1:]:
        label, op, i, j, score = line.split("\t")
        assert op in ("add", "del")
        int(i), int(j), float(score)
