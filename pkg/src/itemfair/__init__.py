"""Item-side fairness evaluation and calibration for embedding-grounded generative recommenders."""

from .dataset import (
    InteractionLog,
    PeriodSplit,
    SampleDraw,
    Sequence,
    build_sequences,
    draw_training_sample,
    filter_rare_genres,
    ingest,
    ingest_movielens,
    split_periods,
)
from .grounding import EmbeddingTable, OracleEmbedding, distances, ground, ground_batch
from .grouping import GroupScheme, custom_scheme, genre_scheme, membership, popularity_scheme
from .metrics import FairnessReport, Slate, accuracy, dgu, evaluate, gh, gp, group_unfairness, mgu
from .reranking import (
    PunishmentTable,
    RerankConfig,
    build_punishment,
    punishment_items,
    punishment_normalize,
    punishment_raw,
    rerank,
    sweep_alpha,
)
from .reweight import WeightTable, build_weight_table, group_weights, sample_weights, split_tr_ta, weighted_loss
from .pipeline import SimulationRun, simulate
from .simulator import SimConfig, generate_embeddings, generate_log, generate_oracles

__version__ = "0.1.0"
