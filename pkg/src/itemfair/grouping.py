"""Item group divisions: popularity quintiles, genres, or a user-supplied JSON scheme."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .dataset import InteractionLog, id_key, split_periods


@dataclass(frozen=True)
class GroupScheme:
    """Named assignment of items to zero or more group labels.

    ``membership`` maps item id to a frozenset of labels, every one of which
    appears in ``groups``. Items absent from the map belong to no group.
    """

    name: str
    groups: tuple
    membership: Mapping[str, frozenset]

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        if len(set(self.groups)) != len(self.groups):
            raise ValueError("duplicate group labels")
        known = set(self.groups)
        for item, labels in self.membership.items():
            stray = set(labels) - known
            if stray:
                raise ValueError(f"item {item} has labels outside the scheme: {sorted(stray)}")

    def groups_of(self, item: str) -> frozenset:
        return self.membership.get(item, frozenset())

    def members(self, group: str) -> list[str]:
        return sorted((i for i, g in self.membership.items() if group in g), key=id_key)

    def matrix(self, item_ids) -> np.ndarray:
        """0/1 indicator matrix of shape (len(item_ids), len(groups))."""
        col = {g: j for j, g in enumerate(self.groups)}
        out = np.zeros((len(item_ids), len(self.groups)))
        for r, item in enumerate(item_ids):
            for g in self.groups_of(item):
                out[r, col[g]] = 1.0
        return out

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "groups": list(self.groups),
            "members": {g: self.members(g) for g in self.groups},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GroupScheme":
        members = obj.get("members")
        if members is None:
            members = {k: v for k, v in obj.items() if k not in ("name", "groups")}
        groups = obj.get("groups") or list(members)
        membership: dict[str, set] = {}
        for g, items in members.items():
            for item in items:
                membership.setdefault(str(item), set()).add(str(g))
        return cls(obj.get("name", "custom"), tuple(map(str, groups)),
                   {k: frozenset(v) for k, v in membership.items()})


def save_scheme(scheme: GroupScheme, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scheme.to_json(), fh, indent=1, ensure_ascii=False)
        fh.write("\n")


def load_scheme(path) -> GroupScheme:
    with open(path, encoding="utf-8") as fh:
        return GroupScheme.from_json(json.load(fh))


def popularity_scheme(log: InteractionLog, train_events_only: bool = True, n_groups: int = 5) -> GroupScheme:
    """Equal-size popularity buckets, labels "0" (least popular) to "n_groups-1".

    Items are ranked by interaction count ascending, ties by item id. The
    remainder goes one item each to the lowest buckets. Zero-interaction items
    are ranked first and still take slots.
    """
    if n_groups < 1:
        raise ValueError("n_groups must be >= 1")
    if not log.items:
        raise ValueError("log has no items")
    if len(log.items) < n_groups:
        raise ValueError(f"{len(log.items)} items cannot fill {n_groups} popularity groups")
    events = split_periods(log).train if train_events_only else log.events
    counts = log.item_counts(events)
    ranked = sorted(log.items, key=lambda i: (counts.get(i, 0), id_key(i)))
    base, extra = divmod(len(ranked), n_groups)
    membership, start = {}, 0
    for g in range(n_groups):
        size = base + (1 if g < extra else 0)
        for item in ranked[start:start + size]:
            membership[item] = frozenset({str(g)})
        start += size
    return GroupScheme("popularity", tuple(str(g) for g in range(n_groups)), membership)


def genre_scheme(log: InteractionLog) -> GroupScheme:
    if not log.items:
        raise ValueError("log has no items")
    membership = {i: frozenset(it.genres) for i, it in log.items.items() if it.genres}
    return GroupScheme("genre", tuple(log.genres()), membership)


def custom_scheme(name: str, groups: Iterable[str], assignment: Mapping[str, Iterable[str]]) -> GroupScheme:
    return GroupScheme(name, tuple(groups), {i: frozenset(g) for i, g in assignment.items()})


def membership(scheme: GroupScheme, item: str, group: str) -> int:
    """Indicator of ``item`` belonging to ``group``; unknown items give 0."""
    if group not in scheme.groups:
        raise KeyError(f"group {group!r} is not in scheme {scheme.name!r}")
    return int(group in scheme.groups_of(item))
