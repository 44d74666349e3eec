"""Item-side group fairness (GH, GP, GU, MGU, DGU) and accuracy (NDCG@K, HR@K)."""

from __future__ import annotations

import csv
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .grouping import GroupScheme

log = logging.getLogger(__name__)


class NoGroupedItemsError(ValueError):
    pass


@dataclass(frozen=True)
class Slate:
    ref: str
    items: tuple

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if len(set(self.items)) != len(self.items):
            raise ValueError(f"slate {self.ref} contains duplicate items")

    def to_json(self) -> dict:
        return {"ref": self.ref, "items": list(self.items)}

    @classmethod
    def from_json(cls, obj: dict) -> "Slate":
        return cls(str(obj["ref"]), tuple(map(str, obj["items"])))


def _group_shares(item_lists: Iterable[Sequence[str]], scheme: GroupScheme, what: str) -> dict[str, float]:
    counts: Counter = Counter()
    for items in item_lists:
        for item in items:
            for g in scheme.groups_of(item):
                counts[g] += 1
    total = sum(counts.values())
    if total == 0:
        raise NoGroupedItemsError(f"no grouped {what}")
    return {g: counts[g] / total for g in scheme.groups}


def gh(histories: Iterable[Sequence[str]], scheme: GroupScheme) -> dict[str, float]:
    """Share of each group among all group memberships of history items.

    A multi-group item contributes once per group to both numerator and
    denominator; ungrouped items contribute nothing.
    """
    return _group_shares(histories, scheme, "interactions")


def gp(slates: Iterable[Slate | Sequence[str]], scheme: GroupScheme, k: int) -> dict[str, float]:
    """Recommendation share of each group over the top-``k`` prefix of every slate.

    Slates shorter than ``k`` contribute their whole length.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    prefixes = ((s.items if isinstance(s, Slate) else s)[:k] for s in slates)
    return _group_shares(prefixes, scheme, "recommendations")


def group_unfairness(gh: Mapping[str, float], gp: Mapping[str, float]) -> dict[str, float]:
    if set(gh) != set(gp):
        raise ValueError(f"group sets differ: {sorted(set(gh) ^ set(gp))}")
    return {g: gp[g] - gh[g] for g in gh}


def mgu(gu: Mapping[str, float]) -> float:
    if not gu:
        raise ValueError("empty GU map")
    return math.fsum(abs(v) for v in gu.values()) / len(gu)


def dgu(gu: Mapping[str, float]) -> float:
    if not gu:
        raise ValueError("empty GU map")
    return max(gu.values()) - min(gu.values())


def accuracy(slates: Sequence[Slate | Sequence[str]], targets: Sequence[str], k: int) -> tuple[float, float]:
    """Mean NDCG@k and HR@k with the target as the single relevant item."""
    if len(slates) != len(targets):
        raise ValueError(f"{len(slates)} slates but {len(targets)} targets")
    if not slates:
        return 0.0, 0.0
    ndcg = hits = 0.0
    for s, t in zip(slates, targets):
        top = (s.items if isinstance(s, Slate) else s)[:k]
        if t in top:
            hits += 1
            ndcg += 1.0 / math.log2(top.index(t) + 2)
    return ndcg / len(slates), hits / len(slates)


@dataclass(frozen=True)
class FairnessReport:
    scheme: str
    k: int
    gh: dict
    gp: dict
    gu: dict
    mgu: float
    dgu: float
    ndcg: float
    hr: float
    short_slates: int = 0
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "scheme": self.scheme, "k": self.k, "gh": self.gh, "gp": self.gp, "gu": self.gu,
            "mgu": self.mgu, "dgu": self.dgu, "ndcg": self.ndcg, "hr": self.hr,
            "short_slates": self.short_slates, **self.extra,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FairnessReport":
        known = {"scheme", "k", "gh", "gp", "gu", "mgu", "dgu", "ndcg", "hr", "short_slates"}
        return cls(obj["scheme"], int(obj["k"]), dict(obj["gh"]), dict(obj["gp"]), dict(obj["gu"]),
                   float(obj["mgu"]), float(obj["dgu"]), float(obj["ndcg"]), float(obj["hr"]),
                   int(obj.get("short_slates", 0)), {k: v for k, v in obj.items() if k not in known})


def evaluate(histories: Sequence[Sequence[str]], slates: Sequence[Slate], targets: Sequence[str],
             scheme: GroupScheme, k: int) -> FairnessReport:
    """Full metric suite at one cutoff."""
    short = sum(1 for s in slates if len(s.items) < k)
    if short:
        log.warning("%d slates shorter than k=%d; using available prefixes", short, k)
    h = gh(histories, scheme)
    p = gp(slates, scheme, k)
    gu = group_unfairness(h, p)
    ndcg, hr = accuracy(slates, targets, k)
    return FairnessReport(scheme.name, k, h, p, gu, mgu(gu), dgu(gu), ndcg, hr, short)


# Vectorized path over index matrices produced by grounding: rows are slates,
# entries are row indices into an item table, ``membership`` is the
# (n_items, n_groups) indicator matrix from ``GroupScheme.matrix``.

def gh_counts(histories: Iterable[Sequence[str]], scheme: GroupScheme) -> np.ndarray:
    counts: Counter = Counter()
    for h in histories:
        counts.update(h)
    out = np.zeros(len(scheme.groups))
    col = {g: j for j, g in enumerate(scheme.groups)}
    for item, n in counts.items():
        for g in scheme.groups_of(item):
            out[col[g]] += n
    return out


def evaluate_indices(history_counts: np.ndarray, slate_idx: np.ndarray, target_idx: np.ndarray,
                     membership: np.ndarray, scheme: GroupScheme, k: int) -> FairnessReport:
    """Same result as :func:`evaluate` for full-length slates given as index rows.

    ``target_idx`` holds -1 for targets missing from the item table.
    """
    if k > slate_idx.shape[1]:
        raise ValueError(f"k={k} exceeds slate length {slate_idx.shape[1]}")
    if history_counts.sum() == 0:
        raise NoGroupedItemsError("no grouped interactions")
    top = slate_idx[:, :k]
    rec_counts = np.bincount(top.ravel(), minlength=membership.shape[0]) @ membership
    if rec_counts.sum() == 0:
        raise NoGroupedItemsError("no grouped recommendations")
    h_share = history_counts / history_counts.sum()
    p_share = rec_counts / rec_counts.sum()
    h = {g: float(v) for g, v in zip(scheme.groups, h_share)}
    p = {g: float(v) for g, v in zip(scheme.groups, p_share)}
    gu = group_unfairness(h, p)
    hit = top == target_idx[:, None]
    rows, pos = np.nonzero(hit)
    n = max(len(target_idx), 1)
    ndcg = math.fsum(1.0 / np.log2(pos + 2.0)) / n
    hr = len(rows) / n
    return FairnessReport(scheme.name, k, h, p, gu, mgu(gu), dgu(gu), ndcg, hr, 0)


def save_reports_json(reports: Sequence[FairnessReport], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([r.to_json() for r in reports], fh, indent=1)
        fh.write("\n")


def load_reports_json(path) -> list[FairnessReport]:
    with open(path, encoding="utf-8") as fh:
        return [FairnessReport.from_json(o) for o in json.load(fh)]


def save_reports_csv(reports: Sequence[FairnessReport], path) -> None:
    """One row per (k, group) with GH/GP/GU, then one summary row per k."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scheme", "k", "row", "group", "gh", "gp", "gu", "mgu", "dgu", "ndcg", "hr"])
        for r in reports:
            for g in r.gh:
                w.writerow([r.scheme, r.k, "group", g, _f(r.gh[g]), _f(r.gp[g]), _f(r.gu[g]), "", "", "", ""])
        for r in reports:
            w.writerow([r.scheme, r.k, "summary", "", "", "", "", _f(r.mgu), _f(r.dgu), _f(r.ndcg), _f(r.hr)])


def _f(x: float) -> str:
    return repr(float(x))
