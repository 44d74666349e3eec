"""Post-hoc reranking of grounding distances with a group punishment term."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dataset import id_key
from .grouping import GroupScheme
from .grounding import EmbeddingTable, ground_indices
from .metrics import FairnessReport, Slate, evaluate_indices, gh_counts

DEFAULT_K_SET = (1, 5, 10, 20)
DEFAULT_ALPHAS = tuple(round(0.01 * i, 2) for i in range(11))


@dataclass(frozen=True)
class RerankConfig:
    k_set: tuple = DEFAULT_K_SET
    alpha: float = 0.0
    epsilon: float = 1e-6

    def __post_init__(self):
        ks = tuple(int(k) for k in self.k_set)
        object.__setattr__(self, "k_set", ks)
        if not ks or ks[0] < 1 or any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValueError(f"k_set must be nonempty, >= 1 and strictly increasing: {ks}")
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha}")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")

    @property
    def gammas(self) -> dict[int, float]:
        total = sum(self.k_set)
        return {k: k / total for k in self.k_set}


@dataclass(frozen=True)
class PunishmentTable:
    raw: dict
    normalized: dict
    per_item: dict
    k_set: tuple = DEFAULT_K_SET
    source: str = "validation"

    def to_json(self) -> dict:
        return {"raw": self.raw, "normalized": self.normalized, "per_item": self.per_item,
                "k_set": list(self.k_set), "source": self.source}

    @classmethod
    def from_json(cls, obj: dict) -> "PunishmentTable":
        return cls({k: float(v) for k, v in obj["raw"].items()},
                   {k: float(v) for k, v in obj["normalized"].items()},
                   {k: float(v) for k, v in obj["per_item"].items()},
                   tuple(obj.get("k_set", DEFAULT_K_SET)), obj.get("source", "validation"))

    def item_vector(self, item_ids: Sequence[str]) -> np.ndarray:
        return np.array([self.per_item.get(i, 0.0) for i in item_ids])


def save_punishment(table: PunishmentTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(table.to_json(), fh, indent=1)
        fh.write("\n")


def load_punishment(path) -> PunishmentTable:
    with open(path, encoding="utf-8") as fh:
        return PunishmentTable.from_json(json.load(fh))


def punishment_raw(validation_gu_at_k: Mapping[int, Mapping[str, float]], config: RerankConfig) -> dict[str, float]:
    """K-weighted sum of per-group unfairness, with weights K / sum(K_set)."""
    missing = [k for k in config.k_set if k not in validation_gu_at_k]
    if missing:
        raise KeyError(f"no validation GU for K={missing[0]}")
    extra = set(validation_gu_at_k) - set(config.k_set)
    if extra:
        raise KeyError(f"validation GU given for K outside k_set: {sorted(extra)}")
    gam = config.gammas
    groups = list(validation_gu_at_k[config.k_set[0]])
    return {g: math.fsum(gam[k] * validation_gu_at_k[k][g] for k in config.k_set) for g in groups}


def punishment_normalize(raw: Mapping[str, float]) -> dict[str, float]:
    if not raw:
        raise ValueError("empty punishment map")
    peak = max(abs(v) for v in raw.values())
    if peak == 0:
        return {g: 0.0 for g in raw}
    return {g: v / peak for g, v in raw.items()}


def punishment_items(normalized: Mapping[str, float], scheme: GroupScheme) -> dict[str, float]:
    out = {}
    for item, groups in scheme.membership.items():
        out[item] = math.fsum(normalized[g] for g in groups) / len(groups) if groups else 0.0
    return out


def build_punishment(validation_gu_at_k: Mapping[int, Mapping[str, float]], scheme: GroupScheme,
                     config: RerankConfig) -> PunishmentTable:
    raw = punishment_raw(validation_gu_at_k, config)
    norm = punishment_normalize(raw)
    return PunishmentTable(raw, norm, punishment_items(norm, scheme), config.k_set, "validation")


def divisor(punishment: np.ndarray, alpha: float, epsilon: float = 1e-6) -> np.ndarray:
    """Per-item ``(1 - min(U_i, 1 - eps)) ** alpha``; reranked distance is D / divisor."""
    return (1.0 - np.minimum(punishment, 1.0 - epsilon)) ** alpha


def rerank(distances: Mapping[str, float], table: PunishmentTable, config: RerankConfig, k: int,
           ref: str = "") -> Slate:
    ids = sorted(distances, key=id_key)
    d = np.array([distances[i] for i in ids], dtype=np.float64)
    if np.any(d < 0):
        raise ValueError("distances must be non-negative")
    scores = d / divisor(table.item_vector(ids), config.alpha, config.epsilon)
    order = np.argsort(scores, kind="stable")[:k]
    return Slate(ref, tuple(ids[r] for r in order))


def reranked_distances(distances: Mapping[str, float], table: PunishmentTable,
                       config: RerankConfig) -> dict[str, float]:
    ids = list(distances)
    d = np.array([distances[i] for i in ids], dtype=np.float64)
    scores = d / divisor(table.item_vector(ids), config.alpha, config.epsilon)
    return dict(zip(ids, scores.tolist()))


@dataclass
class SweepResult:
    alphas: list
    reports: list  # per alpha: {K: FairnessReport}
    selected_alpha: float
    punishment: PunishmentTable
    extra: dict = field(default_factory=dict)

    def rows(self) -> list[dict]:
        out = []
        for a, by_k in zip(self.alphas, self.reports):
            row = {"alpha": a}
            for k, r in by_k.items():
                row[f"mgu@{k}"] = r.mgu
            for k, r in by_k.items():
                row[f"dgu@{k}"] = r.dgu
            for k, r in by_k.items():
                row[f"ndcg@{k}"] = r.ndcg
                row[f"hr@{k}"] = r.hr
            row["selected"] = int(a == self.selected_alpha)
            out.append(row)
        return out


def select_alpha(alphas: Sequence[float], reports: Sequence[Mapping[int, FairnessReport]],
                 k_fair: int, k_acc: int = 5, max_drop: float = 0.05) -> float:
    """Alpha with the lowest MGU@k_fair whose NDCG@k_acc is within ``max_drop`` of alpha=0.

    The reference is the alpha=0 entry when present, else the first alpha.
    """
    ref_i = next((i for i, a in enumerate(alphas) if a == 0), 0)
    base = reports[ref_i][k_acc].ndcg
    best = None
    for a, by_k in zip(alphas, reports):
        if by_k[k_acc].ndcg < base * (1 - max_drop):
            continue
        key = (by_k[k_fair].mgu, a)
        if best is None or key < best[0]:
            best = (key, a)
    return alphas[ref_i] if best is None else best[1]


def sweep_alpha(item_table: EmbeddingTable, oracles: np.ndarray, histories: Sequence[Sequence[str]],
                targets: Sequence[str], scheme: GroupScheme, alphas: Sequence[float],
                config: RerankConfig = RerankConfig(), report_ks: Sequence[int] | None = None,
                punishment: PunishmentTable | None = None) -> SweepResult:
    """Rerank one evaluation set at every alpha and report fairness and accuracy.

    The punishment table is built once from the unreranked slates of this same
    set (the validation set) unless ``punishment`` is given, in which case the
    set is only evaluated (e.g. the test set under a validation-built table).
    """
    if not alphas:
        raise ValueError("alphas must be nonempty")
    ks = sorted(set(config.k_set) | set(report_ks or ()) | {5})
    k_max = max(ks)
    ids = item_table.item_ids
    member = scheme.matrix(ids)
    h_counts = gh_counts(histories, scheme)
    t_idx = item_table.indices(targets)

    if punishment is None:
        base = ground_indices(item_table, oracles, k_max)[0]
        gu_at_k = {k: evaluate_indices(h_counts, base, t_idx, member, scheme, k).gu for k in config.k_set}
        punishment = build_punishment(gu_at_k, scheme, config)

    u = punishment.item_vector(ids)
    divs = [divisor(u, a, config.epsilon) for a in alphas]
    slates = ground_indices(item_table, oracles, k_max, divisors=divs)
    reports = [{k: evaluate_indices(h_counts, s, t_idx, member, scheme, k) for k in ks} for s in slates]
    chosen = select_alpha(list(alphas), reports, max(config.k_set))
    return SweepResult(list(alphas), reports, chosen, punishment)


def save_sweep_csv(result: SweepResult, path, extra_cols: Mapping[str, str] | None = None) -> None:
    rows = result.rows()
    cols = list(extra_cols or {}) + list(rows[0])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            vals = dict(extra_cols or {}, **row)
            w.writerow([repr(v) if isinstance(v, float) else v for v in (vals[c] for c in cols)])
