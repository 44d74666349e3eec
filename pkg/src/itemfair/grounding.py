"""Exact L2 nearest-item grounding of oracle embeddings.

Table rows are kept in item-id order, so ordering by (distance, row) is the
same as ordering by (distance, item_id).
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .dataset import DataFormatError, id_key
from .metrics import Slate

MAGIC = b"IFEMB1"
# Upper bound on oracle-by-item cells materialized per chunk.
CHUNK_CELLS = 4_000_000


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    item_ids: tuple
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[1] < 1:
            raise ValueError("embedding matrix must be 2-D with dim >= 1")
        if m.shape[0] != len(self.item_ids):
            raise ValueError(f"{len(self.item_ids)} ids for {m.shape[0]} vectors")
        if not np.all(np.isfinite(m)):
            raise ValueError("embeddings contain non-finite values")
        order = sorted(range(len(self.item_ids)), key=lambda r: id_key(self.item_ids[r]))
        ids = tuple(self.item_ids[r] for r in order)
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate item ids in embedding table")
        m = np.ascontiguousarray(m[order])
        m.setflags(write=False)
        object.__setattr__(self, "item_ids", ids)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "_index", {i: r for r, i in enumerate(ids)})

    @classmethod
    def from_mapping(cls, vectors: Mapping[str, Sequence[float]]) -> "EmbeddingTable":
        ids = tuple(vectors)
        if not ids:
            raise ValueError("empty embedding table")
        return cls(ids, np.array([np.asarray(vectors[i], dtype=np.float64) for i in ids]))

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self):
        return len(self.item_ids)

    def index_of(self, item_id: str) -> int:
        return self._index[item_id]

    def indices(self, item_ids: Sequence[str], missing: int = -1) -> np.ndarray:
        return np.array([self._index.get(i, missing) for i in item_ids], dtype=np.int64)

    @property
    def vectors(self) -> dict[str, np.ndarray]:
        return {i: self.matrix[r] for r, i in enumerate(self.item_ids)}


@dataclass(frozen=True, eq=False)
class OracleEmbedding:
    ref: str
    vector: np.ndarray


def _check_dim(table: EmbeddingTable, vector: np.ndarray, where: str = "oracle") -> None:
    if vector.ndim != 1 or vector.shape[0] != table.dim:
        raise ValueError(f"{where} has dim {vector.shape[-1] if vector.ndim else 0}, table has dim {table.dim}")


def distance_matrix(table: EmbeddingTable, oracles: np.ndarray) -> np.ndarray:
    """True L2 distances, shape (n_oracles, n_items)."""
    oracles = np.atleast_2d(np.asarray(oracles, dtype=np.float64))
    if oracles.shape[1] != table.dim:
        raise ValueError(f"oracle dim {oracles.shape[1]} does not match table dim {table.dim}")
    return np.sqrt(cdist(oracles, table.matrix, "sqeuclidean"))


def distances(table: EmbeddingTable, oracle: OracleEmbedding) -> dict[str, float]:
    vec = np.asarray(oracle.vector, dtype=np.float64)
    _check_dim(table, vec)
    d = distance_matrix(table, vec[None, :])[0]
    return {i: float(v) for i, v in zip(table.item_ids, d)}


def top_k(scores: np.ndarray, k: int) -> np.ndarray:
    """Row-wise indices of the ``k`` smallest scores, ties broken by column index."""
    scores = np.atleast_2d(scores)
    n = scores.shape[1]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    if k == n:
        return np.argsort(scores, axis=1, kind="stable")
    part = np.argpartition(scores, k - 1, axis=1)[:, :k]
    vals = np.take_along_axis(scores, part, axis=1)
    kth = vals.max(axis=1)
    # The partition is exact unless a tie straddles the k-th position.
    tied = (scores <= kth[:, None]).sum(axis=1) > k
    order = np.lexsort((part, vals), axis=1)
    out = np.take_along_axis(part, order, axis=1)
    for r in np.nonzero(tied)[0]:
        out[r] = np.argsort(scores[r], kind="stable")[:k]
    return out


def _chunks(n_rows: int, n_cols: int):
    step = max(1, CHUNK_CELLS // max(n_cols, 1))
    for start in range(0, n_rows, step):
        yield start, min(start + step, n_rows)


def ground_indices(table: EmbeddingTable, oracles: np.ndarray, k: int,
                   divisors: Sequence[np.ndarray] | None = None, workers: int = 1) -> list[np.ndarray]:
    """Top-``k`` row indices for every oracle, once per divisor vector.

    Scores are ``D / divisor`` per item; ``divisors=None`` means plain
    grounding. Returns one (n_oracles, k) array per divisor.
    """
    oracles = np.atleast_2d(np.asarray(oracles, dtype=np.float64))
    if not 1 <= k <= len(table):
        raise ValueError(f"k={k} outside [1, {len(table)}]")
    divs = [None] if divisors is None else list(divisors)
    out = [np.empty((oracles.shape[0], k), dtype=np.int64) for _ in divs]

    def work(span):
        lo, hi = span
        d = distance_matrix(table, oracles[lo:hi])
        for j, div in enumerate(divs):
            out[j][lo:hi] = top_k(d if div is None else d / div, k)

    spans = list(_chunks(oracles.shape[0], len(table)))
    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(work, spans))
    else:
        for span in spans:
            work(span)
    return out


def ground(table: EmbeddingTable, oracle: OracleEmbedding, k: int) -> Slate:
    """The ``k`` nearest items to the oracle, by (distance, item_id)."""
    vec = np.asarray(oracle.vector, dtype=np.float64)
    _check_dim(table, vec)
    if k > len(table):
        raise ValueError(f"k={k} exceeds table size {len(table)}")
    idx = ground_indices(table, vec[None, :], k)[0][0]
    return Slate(oracle.ref, tuple(table.item_ids[r] for r in idx))


def oracle_matrix(table: EmbeddingTable, oracles: Sequence[OracleEmbedding]) -> np.ndarray:
    rows = []
    for n, o in enumerate(oracles):
        vec = np.asarray(o.vector, dtype=np.float64)
        try:
            _check_dim(table, vec)
        except ValueError as exc:
            raise ValueError(f"oracle #{n} ({o.ref}): {exc}") from None
        rows.append(vec)
    return np.array(rows).reshape(len(rows), table.dim)


def ground_batch(table: EmbeddingTable, oracles: Sequence[OracleEmbedding], k: int,
                 workers: int = 1) -> list[Slate]:
    if not oracles:
        return []
    if k > len(table):
        raise ValueError(f"k={k} exceeds table size {len(table)}")
    idx = ground_indices(table, oracle_matrix(table, oracles), k, workers=workers)[0]
    ids = table.item_ids
    return [Slate(o.ref, tuple(ids[r] for r in row)) for o, row in zip(oracles, idx)]


def write_embeddings(path, ids: Sequence[str], matrix: np.ndarray) -> None:
    """Binary format: magic, u32 count, u32 dim, then (u32 len, utf-8 id, dim x f32 LE) records."""
    matrix = np.asarray(matrix, dtype="<f4")
    n, d = matrix.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<II", n, d))
        for item_id, row in zip(ids, matrix):
            raw = item_id.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)) + raw + row.tobytes())


def write_embeddings_tsv(path, ids: Sequence[str], matrix: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item_id, row in zip(ids, np.asarray(matrix, dtype=np.float64)):
            fh.write(item_id + "\t" + "\t".join(repr(float(v)) for v in row) + "\n")


def read_embeddings(path) -> tuple[list[str], np.ndarray]:
    """Read either the binary format or the ``id\\tv0\\tv1...`` TSV form."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    if head == MAGIC:
        return _read_binary(path)
    ids, rows = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\r\n").split("\t")
            if len(parts) < 2:
                if line.strip():
                    raise DataFormatError(path, lineno, "vector", "expected id and at least one component")
                continue
            try:
                rows.append([float(v) for v in parts[1:]])
            except ValueError:
                raise DataFormatError(path, lineno, "vector", "non-numeric component") from None
            if len(rows[-1]) != len(rows[0]):
                raise DataFormatError(path, lineno, "vector", f"dim {len(rows[-1])} != {len(rows[0])}")
            ids.append(parts[0])
    return ids, np.array(rows, dtype=np.float64)


def _read_binary(path: Path) -> tuple[list[str], np.ndarray]:
    data = path.read_bytes()
    off = len(MAGIC)
    try:
        n, d = struct.unpack_from("<II", data, off)
        off += 8
        ids, out = [], np.empty((n, d), dtype=np.float64)
        for r in range(n):
            (length,) = struct.unpack_from("<I", data, off)
            off += 4
            ids.append(data[off:off + length].decode("utf-8"))
            off += length
            out[r] = np.frombuffer(data, dtype="<f4", count=d, offset=off)
            off += 4 * d
    except (struct.error, ValueError) as exc:
        raise DataFormatError(path, 0, "record", f"truncated or corrupt binary embeddings: {exc}") from None
    if off != len(data):
        raise DataFormatError(path, 0, "record", f"{len(data) - off} trailing bytes")
    return ids, out


def load_table(path) -> EmbeddingTable:
    ids, m = read_embeddings(path)
    return EmbeddingTable(tuple(ids), m)


def load_oracles(path) -> list[OracleEmbedding]:
    ids, m = read_embeddings(path)
    return [OracleEmbedding(i, m[r]) for r, i in enumerate(ids)]
