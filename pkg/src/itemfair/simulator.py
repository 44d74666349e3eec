"""Synthetic logs, genre-clustered item embeddings and popularity-biased oracles.

Stands in for a fine-tuned generative recommender: an oracle either points at
the true next item or, with probability ``oracle_bias``, at an item drawn with
probability proportional to ``popularity ** oracle_popularity_power``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence as Seq

import numpy as np

from .dataset import Event, InteractionLog, Item, Sequence
from .grounding import EmbeddingTable, OracleEmbedding

TIME_SPAN = 100_000_000


@dataclass(frozen=True)
class SimConfig:
    n_items: int = 5000
    n_users: int = 5000
    n_events: int = 250_000
    n_genres: int = 18
    embed_dim: int = 32
    popularity_exponent: float = 1.0
    oracle_bias: float = 0.8
    noise_sigma: float = 0.1
    oracle_sigma: float = 0.02
    oracle_popularity_power: float = 2.0
    seed: int = 0

    def __post_init__(self):
        for name in ("n_items", "n_users", "n_events", "n_genres", "embed_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 <= self.oracle_bias <= 1.0:
            raise ValueError("oracle_bias must lie in [0, 1]")
        for name in ("popularity_exponent", "noise_sigma", "oracle_sigma", "oracle_popularity_power"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and >= 0")

    def to_json(self) -> dict:
        return asdict(self)


def _rng(config: SimConfig, stream: int) -> np.random.Generator:
    return np.random.default_rng([config.seed, stream])


def item_ids(config: SimConfig) -> list[str]:
    width = len(str(config.n_items - 1))
    return [f"i{j:0{width}d}" for j in range(config.n_items)]


def genre_labels(config: SimConfig) -> list[str]:
    width = len(str(config.n_genres - 1))
    return [f"g{j:0{width}d}" for j in range(config.n_genres)]


def popularity_weights(config: SimConfig) -> np.ndarray:
    """Normalized rank ** -exponent weights, ranks assigned by a seeded permutation."""
    rank = _rng(config, 0).permutation(config.n_items)
    w = (rank + 1.0) ** -config.popularity_exponent
    return w / w.sum()


def generate_log(config: SimConfig) -> InteractionLog:
    """Items with one or two genres, Zipf-like item draws, per-user increasing timestamps."""
    rng = _rng(config, 1)
    ids = item_ids(config)
    labels = genre_labels(config)
    genre_p = rng.dirichlet(np.full(config.n_genres, 2.0))
    items = {}
    for j, item in enumerate(ids):
        n = min(1 + int(rng.random() < 0.5), config.n_genres)
        gs = rng.choice(config.n_genres, size=n, replace=False, p=genre_p)
        items[item] = Item(f"Item {j}", frozenset(labels[g] for g in gs))

    weights = popularity_weights(config)
    per_user = rng.multinomial(config.n_events, np.full(config.n_users, 1.0 / config.n_users))
    users = np.repeat(np.arange(config.n_users), per_user)
    picks = rng.choice(config.n_items, size=config.n_events, p=weights)
    stamps = rng.integers(0, TIME_SPAN, size=config.n_events)
    order = np.lexsort((stamps, users))
    stamps = stamps[order]
    uwidth = len(str(config.n_users - 1))
    events = tuple(
        Event(f"u{u:0{uwidth}d}", ids[i], int(t)) for u, i, t in zip(users.tolist(), picks.tolist(), stamps.tolist())
    )
    return InteractionLog(events, items)


def generate_embeddings(log: InteractionLog, config: SimConfig) -> EmbeddingTable:
    """Mean of the item's genre centroids (random unit vectors) plus Gaussian noise."""
    rng = _rng(config, 2)
    genres = log.genres()
    centroids = rng.standard_normal((len(genres), config.embed_dim))
    centroids /= np.linalg.norm(centroids, axis=1, keepdims=True)
    col = {g: j for j, g in enumerate(genres)}
    ids = sorted(log.items)
    base = np.zeros((len(ids), config.embed_dim))
    for r, item in enumerate(ids):
        gs = sorted(log.items[item].genres)
        if gs:
            base[r] = centroids[[col[g] for g in gs]].mean(axis=0)
    noise = rng.standard_normal(base.shape) * config.noise_sigma
    return EmbeddingTable(tuple(ids), base + noise)


def generate_oracles(sequences: Seq[Sequence], table: EmbeddingTable, config: SimConfig,
                     popularity: Mapping[str, float] | None = None, stream: int = 0) -> list[OracleEmbedding]:
    """One oracle per sequence, in input order.

    ``popularity`` defaults to item counts over the given sequences' histories
    and targets. ``stream`` selects an independent random stream for the same
    seed (one per evaluation split).
    """
    if popularity is None:
        counts: dict[str, float] = {}
        for s in sequences:
            for item in (*s.history, s.target):
                counts[item] = counts.get(item, 0) + 1
        popularity = counts
    missing = [s.target for s in sequences if s.target not in table._index]
    if missing:
        raise KeyError(f"no embedding for target item {missing[0]!r}")
    pop = np.array([float(popularity.get(i, 0.0)) for i in table.item_ids]) ** config.oracle_popularity_power
    if pop.sum() <= 0:
        pop = np.ones(len(table))
    pop /= pop.sum()

    rng = np.random.default_rng([config.seed, 3, stream])
    m = len(sequences)
    target_rows = table.indices([s.target for s in sequences])
    biased = rng.random(m) < config.oracle_bias
    popular_rows = rng.choice(len(table), size=m, p=pop)
    rows = np.where(biased, popular_rows, target_rows)
    vecs = table.matrix[rows] + rng.standard_normal((m, table.dim)) * config.oracle_sigma
    return [OracleEmbedding(s.ref, vecs[n]) for n, s in enumerate(sequences)]
