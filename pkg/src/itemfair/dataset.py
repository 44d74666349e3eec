"""Interaction-log ingestion, temporal period split and sequence construction."""

from __future__ import annotations

import csv
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence as Seq

import numpy as np

N_PERIODS = 10
TRAIN_PERIODS = 8
SPLITS = ("train", "validation", "test")
DEFAULT_SAMPLE_SIZE = 65_536
DEFAULT_MAX_LEN = 10


class DataFormatError(ValueError):
    """A malformed row in an input file."""

    def __init__(self, path, line: int, field_name: str, message: str):
        self.path = str(path)
        self.line = line
        self.field = field_name
        super().__init__(f"{self.path}:{line}: field '{field_name}': {message}")


class UnknownItemError(ValueError):
    def __init__(self, item_ids: Iterable[str]):
        self.item_ids = sorted(set(item_ids), key=id_key)
        super().__init__("events reference unknown item_ids: " + ", ".join(self.item_ids))


class InsufficientEventsError(ValueError):
    pass


def id_key(value: str):
    """Sort key for opaque ids: all-digit ids numerically, before any other id."""
    if value.isdigit():
        return (0, int(value), "")
    return (1, 0, value)


class Event(NamedTuple):
    user_id: str
    item_id: str
    timestamp: int


class Item(NamedTuple):
    title: str
    genres: frozenset


def event_order(event: Event):
    return (event.timestamp, id_key(event.user_id), id_key(event.item_id))


@dataclass(frozen=True)
class InteractionLog:
    events: tuple
    items: Mapping[str, Item]

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        unknown = {e.item_id for e in self.events if e.item_id not in self.items}
        if unknown:
            raise UnknownItemError(unknown)
        for e in self.events:
            ts = e.timestamp
            if isinstance(ts, bool) or not isinstance(ts, (int, np.integer)) or ts < 0:
                raise ValueError(f"invalid timestamp {ts!r} for event {e}")

    def __len__(self):
        return len(self.events)

    def item_counts(self, events: Iterable[Event] | None = None) -> Counter:
        return Counter(e.item_id for e in (self.events if events is None else events))

    def genres(self) -> list[str]:
        return sorted({g for it in self.items.values() for g in it.genres})


@dataclass(frozen=True)
class PeriodSplit:
    periods: tuple
    items: Mapping[str, Item] = field(repr=False)

    @property
    def train(self) -> tuple:
        return tuple(e for p in self.periods[:TRAIN_PERIODS] for e in p)

    @property
    def validation(self) -> tuple:
        return tuple(self.periods[TRAIN_PERIODS])

    @property
    def test(self) -> tuple:
        return tuple(self.periods[TRAIN_PERIODS + 1])

    def split_of(self, period_index: int) -> str:
        if period_index < TRAIN_PERIODS:
            return "train"
        return "validation" if period_index == TRAIN_PERIODS else "test"

    def events(self) -> tuple:
        return tuple(e for p in self.periods for e in p)


@dataclass(frozen=True)
class Sequence:
    ref: str
    user_id: str
    history: tuple
    target: str
    split: str

    def to_json(self) -> dict:
        return {
            "ref": self.ref,
            "user_id": self.user_id,
            "history": list(self.history),
            "target": self.target,
            "split": self.split,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Sequence":
        ref = obj.get("ref") or f"{obj['user_id']}#{obj['target']}"
        return cls(ref, str(obj["user_id"]), tuple(map(str, obj["history"])), str(obj["target"]), obj["split"])


@dataclass(frozen=True)
class SampleDraw:
    sequences: tuple
    seed: int
    size: int = DEFAULT_SAMPLE_SIZE


def _read_tsv(path: Path, header: Seq[str]):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        try:
            first = next(reader)
        except StopIteration:
            raise DataFormatError(path, 1, header[0], "missing header") from None
        if [c.strip() for c in first] != list(header):
            raise DataFormatError(path, 1, "header", f"expected {'/'.join(header)}, got {'/'.join(first)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or row == [""]:
                continue
            if len(row) != len(header):
                raise DataFormatError(path, lineno, header[min(len(row), len(header) - 1)],
                                      f"expected {len(header)} columns, got {len(row)}")
            yield lineno, row


def read_items(path) -> dict[str, Item]:
    path = Path(path)
    items: dict[str, Item] = {}
    for lineno, (item_id, title, genres) in _read_tsv(path, ("item_id", "title", "genres")):
        if not item_id:
            raise DataFormatError(path, lineno, "item_id", "empty id")
        if item_id in items:
            raise DataFormatError(path, lineno, "item_id", f"duplicate id {item_id}")
        labels = frozenset(g for g in genres.split("|") if g)
        items[item_id] = Item(title, labels)
    return items


def read_events(path) -> list[Event]:
    path = Path(path)
    events = []
    for lineno, (user_id, item_id, ts) in _read_tsv(path, ("user_id", "item_id", "timestamp")):
        if not user_id:
            raise DataFormatError(path, lineno, "user_id", "empty id")
        if not item_id:
            raise DataFormatError(path, lineno, "item_id", "empty id")
        try:
            stamp = int(ts)
        except ValueError:
            raise DataFormatError(path, lineno, "timestamp", f"not an integer: {ts!r}") from None
        if stamp < 0:
            raise DataFormatError(path, lineno, "timestamp", f"negative: {stamp}")
        events.append(Event(user_id, item_id, stamp))
    return events


def ingest(interactions_file, items_file) -> InteractionLog:
    """Load and validate an interactions TSV and an items TSV.

    Events keep file order; sorting happens in :func:`split_periods`.
    """
    items = read_items(items_file)
    events = read_events(interactions_file)
    return InteractionLog(tuple(events), items)


def ingest_movielens(ratings_dat, movies_dat) -> InteractionLog:
    """Load the original MovieLens-1M ``::``-separated files (latin-1)."""
    items: dict[str, Item] = {}
    with open(movies_dat, encoding="latin-1") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            parts = line.split("::")
            if len(parts) != 3:
                raise DataFormatError(movies_dat, lineno, "genres", "expected MovieID::Title::Genres")
            items[parts[0]] = Item(parts[1], frozenset(g for g in parts[2].split("|") if g))
    events = []
    with open(ratings_dat, encoding="latin-1") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            parts = line.split("::")
            if len(parts) != 4:
                raise DataFormatError(ratings_dat, lineno, "timestamp", "expected UserID::MovieID::Rating::Timestamp")
            try:
                stamp = int(parts[3])
            except ValueError:
                raise DataFormatError(ratings_dat, lineno, "timestamp", f"not an integer: {parts[3]!r}") from None
            events.append(Event(parts[0], parts[1], stamp))
    return InteractionLog(tuple(events), items)


def write_log(log: InteractionLog, interactions_file, items_file) -> None:
    with open(items_file, "w", encoding="utf-8", newline="") as fh:
        fh.write("item_id\ttitle\tgenres\n")
        for item_id in sorted(log.items, key=id_key):
            it = log.items[item_id]
            fh.write(f"{item_id}\t{it.title}\t{'|'.join(sorted(it.genres))}\n")
    with open(interactions_file, "w", encoding="utf-8", newline="") as fh:
        fh.write("user_id\titem_id\ttimestamp\n")
        for e in log.events:
            fh.write(f"{e.user_id}\t{e.item_id}\t{e.timestamp}\n")


def filter_rare_genres(log: InteractionLog, min_interactions: int) -> InteractionLog:
    """Drop items none of whose genres reach ``min_interactions`` events overall."""
    if min_interactions < 0:
        raise ValueError("min_interactions must be >= 0")
    if min_interactions == 0:
        return log
    item_counts = log.item_counts()
    genre_counts: Counter = Counter()
    for item_id, n in item_counts.items():
        for g in log.items[item_id].genres:
            genre_counts[g] += n
    keep = {
        item_id: it
        for item_id, it in log.items.items()
        if any(genre_counts[g] >= min_interactions for g in it.genres)
    }
    return InteractionLog(tuple(e for e in log.events if e.item_id in keep), keep)


def split_periods(log: InteractionLog, n_periods: int = N_PERIODS) -> PeriodSplit:
    """Sort events by (timestamp, user, item) and cut them into equal-count periods.

    Earlier periods receive the remainder, so bucket sizes differ by at most one.
    The first eight periods are training data, then one validation and one test period.
    """
    if len(log.events) < n_periods:
        raise InsufficientEventsError("insufficient events for period split")
    ordered = sorted(log.events, key=event_order)
    base, extra = divmod(len(ordered), n_periods)
    periods, start = [], 0
    for p in range(n_periods):
        size = base + (1 if p < extra else 0)
        periods.append(tuple(ordered[start:start + size]))
        start += size
    return PeriodSplit(tuple(periods), log.items)


def build_sequences(split: PeriodSplit, max_len: int = DEFAULT_MAX_LEN) -> list[Sequence]:
    """One sequence per event that has at least one earlier event by the same user.

    Histories may reach back into earlier periods; the target's period fixes the
    sequence's split. ``ref`` is ``"<user_id>#<position in user timeline>"``.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    history: dict[str, list[str]] = defaultdict(list)
    out = []
    for p, period in enumerate(split.periods):
        label = split.split_of(p)
        for e in period:
            past = history[e.user_id]
            if past:
                out.append(Sequence(f"{e.user_id}#{len(past)}", e.user_id,
                                    tuple(past[-max_len:]), e.item_id, label))
            past.append(e.item_id)
    return out


def draw_training_sample(sequences: Seq[Sequence], size: int = DEFAULT_SAMPLE_SIZE, seed: int = 0) -> SampleDraw:
    """Uniform draw without replacement; the drawn sequences keep their input order."""
    if size < 1:
        raise ValueError("size must be >= 1")
    if len(sequences) <= size:
        return SampleDraw(tuple(sequences), seed, size)
    rng = np.random.default_rng(seed)
    picked = np.sort(rng.choice(len(sequences), size=size, replace=False))
    return SampleDraw(tuple(sequences[i] for i in picked), seed, size)


def by_split(sequences: Iterable[Sequence], split: str) -> list[Sequence]:
    return [s for s in sequences if s.split == split]


def write_sequences(sequences: Iterable[Sequence], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in sequences:
            fh.write(json.dumps(s.to_json(), ensure_ascii=False) + "\n")


def read_sequences(path) -> list[Sequence]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(Sequence.from_json(json.loads(line)))
            except (KeyError, json.JSONDecodeError) as exc:
                raise DataFormatError(path, lineno, str(exc), "malformed sequence record") from None
    return out


def summary(log: InteractionLog, sequences: Seq[Sequence] | None = None) -> dict:
    out = {"n_items": len(log.items), "n_events": len(log.events),
           "n_users": len({e.user_id for e in log.events})}
    if sequences is not None:
        out["n_sequences"] = len(sequences)
        out.update({f"n_{k}": v for k, v in Counter(s.split for s in sequences).items()})
    return out
