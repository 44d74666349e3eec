from collections import Counter

import numpy as np
import pytest

from itemfair import dataset
from itemfair.grounding import oracle_matrix
from itemfair.pipeline import evaluate_set, make_scheme, simulate
from itemfair.simulator import SimConfig, generate_embeddings, generate_log, generate_oracles

SMALL = dict(n_items=300, n_users=300, n_events=15_000, n_genres=6, embed_dim=8)


def test_uniform_popularity_within_three_standard_errors():
    cfg = SimConfig(n_items=20, n_users=100, n_events=100_000, n_genres=3, popularity_exponent=0.0, seed=1)
    counts = Counter(e.item_id for e in generate_log(cfg).events)
    p = 1 / cfg.n_items
    se = (cfg.n_events * p * (1 - p)) ** 0.5
    assert len(counts) == cfg.n_items
    assert all(abs(c - cfg.n_events * p) <= 3 * se for c in counts.values())


def test_skewed_popularity_is_skewed():
    cfg = SimConfig(**SMALL, popularity_exponent=1.0)
    counts = sorted(Counter(e.item_id for e in generate_log(cfg).events).values(), reverse=True)
    assert counts[0] > 10 * counts[len(counts) // 2]


def test_log_is_deterministic_and_well_formed():
    cfg = SimConfig(**SMALL, seed=5)
    a, b = generate_log(cfg), generate_log(cfg)
    assert a == b
    assert len(a.events) == cfg.n_events and len(a.items) == cfg.n_items
    assert all(1 <= len(it.genres) <= 2 for it in a.items.values())
    last = {}
    for e in a.events:
        assert e.timestamp >= last.get(e.user_id, -1)
        last[e.user_id] = e.timestamp
    assert generate_log(SimConfig(**SMALL, seed=6)) != a


def test_single_genre():
    log = generate_log(SimConfig(**dict(SMALL, n_genres=1)))
    assert {g for it in log.items.values() for g in it.genres} == {"g0"}


def test_embeddings_cluster_by_genre():
    cfg = SimConfig(**SMALL, noise_sigma=0.0)
    log = generate_log(cfg)
    t = generate_embeddings(log, cfg)
    assert t.dim == cfg.embed_dim and len(t) == cfg.n_items
    by_genre = {}
    for item, info in log.items.items():
        if len(info.genres) == 1:
            by_genre.setdefault(next(iter(info.genres)), []).append(t.matrix[t.index_of(item)])
    for vecs in by_genre.values():
        assert all(np.array_equal(v, vecs[0]) for v in vecs)
        assert np.linalg.norm(vecs[0]) == pytest.approx(1.0)


def test_embeddings_depend_on_seed():
    a_cfg, b_cfg = SimConfig(**SMALL, seed=1), SimConfig(**SMALL, seed=2)
    a = generate_embeddings(generate_log(a_cfg), a_cfg)
    b = generate_embeddings(generate_log(b_cfg), b_cfg)
    assert not np.array_equal(a.matrix, b.matrix)
    again = generate_embeddings(generate_log(a_cfg), a_cfg)
    assert np.array_equal(a.matrix, again.matrix)


@pytest.mark.parametrize("bad", [dict(n_items=0), dict(oracle_bias=1.5), dict(noise_sigma=-1.0)])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        SimConfig(**bad)


def _pipeline(beta, seed=0, **extra):
    cfg = SimConfig(**dict(SMALL, **extra), oracle_bias=beta, seed=seed)
    log = generate_log(cfg)
    split = dataset.split_periods(log)
    seqs = dataset.build_sequences(split)
    test = dataset.by_split(seqs, "test")
    table = generate_embeddings(log, cfg)
    oracles = oracle_matrix(table, generate_oracles(test, table, cfg, log.item_counts(split.train), 1))
    scheme = make_scheme(log, "popularity")
    return evaluate_set(table, oracles, test, scheme, (1, 5))


def test_unbiased_exact_oracle_hits_every_target():
    reports = _pipeline(0.0, oracle_sigma=0.0)
    assert reports[1].hr == 1.0 and reports[1].ndcg == 1.0


def test_full_bias_over_recommends_popular_group():
    r = _pipeline(1.0)[1]
    assert r.gu["4"] > 0 and r.gu["0"] < 0


def test_bias_dial_increases_unfairness():
    top = [_pipeline(beta)[1].gu["4"] for beta in (0.0, 0.5, 1.0)]
    assert top[0] < top[1] < top[2]
    assert abs(top[0]) < 0.05


def test_oracles_missing_target_embedding():
    cfg = SimConfig(**SMALL)
    log = generate_log(cfg)
    table = generate_embeddings(log, cfg)
    seq = dataset.Sequence("u#1", "u", ("i000",), "nope", "test")
    with pytest.raises(KeyError, match="nope"):
        generate_oracles([seq], table, cfg)


def test_simulate_end_to_end_small():
    run = simulate(SimConfig(**SMALL, seed=3), alphas=(0.0, 0.05, 0.1), sample_size=1000)
    assert set(run.uncalibrated) == {1, 5, 10, 20}
    assert run.sweep.alphas == [0.0, 0.05, 0.1]
    assert run.sweep.reports[0][20].mgu == pytest.approx(
        evaluate_set(run.table, run.oracles["validation"], run.split_sequences("validation"), run.scheme,
                     (20,))[20].mgu, abs=1e-15)
    assert run.test_sweep.reports[0][20] == run.uncalibrated[20]
    assert len(run.weights.sample_weights) == 1000
