"""Rating-file parsing, the sparse HDI matrix, and train/validation/test splits.

Partitions are drawn with numpy's ``PCG64`` bit generator
(``numpy.random.default_rng(seed).permutation(n)``), so a seed fully pins
the split on any platform running numpy >= 1.17.
"""
from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy import sparse

from .errors import ConfigError, DataError, DuplicateEntryError, ParseError


class RatingTuple(NamedTuple):
    user_raw: str
    item_raw: str
    rating: float


@dataclass(frozen=True)
class RatingFormat:
    """Delimiter plus 0-based columns of user, item and rating.

    ``delimiter=None`` splits on runs of whitespace.
    """

    delimiter: str | None
    user_col: int = 0
    item_col: int = 1
    rating_col: int = 2
    skip_header: bool = False


FORMATS = {
    "ml1m": RatingFormat("::"),
    "tsv": RatingFormat("\t"),
    "csv": RatingFormat(","),
    "ws": RatingFormat(None),
    # recbole-style atomic files: tab separated with a typed header row
    "inter": RatingFormat("\t", skip_header=True),
}


def get_format(name: str | RatingFormat) -> RatingFormat:
    if isinstance(name, RatingFormat):
        return name
    try:
        return FORMATS[name]
    except KeyError:
        raise ConfigError(f"unknown rating format {name!r}; expected one of {sorted(FORMATS)}") from None


def parse_ratings(source, fmt: str | RatingFormat = "ml1m") -> list[RatingTuple]:
    """Parse a line-oriented byte (or text) stream into rating tuples.

    Extra columns such as timestamps are ignored; blank lines are skipped.
    """
    fmt = get_format(fmt)
    needed = max(fmt.user_col, fmt.item_col, fmt.rating_col) + 1
    out = []
    for line_no, line in enumerate(source, start=1):
        if isinstance(line, bytes):
            try:
                line = line.decode("utf-8")
            except UnicodeDecodeError:
                line = line.decode("latin-1")
        line = line.strip("\r\n")
        if line_no == 1 and fmt.skip_header:
            continue
        if not line.strip():
            continue
        fields = line.split(fmt.delimiter) if fmt.delimiter is not None else line.split()
        if len(fields) < needed:
            raise ParseError(line_no, f"expected at least {needed} fields, got {len(fields)}")
        user = fields[fmt.user_col].strip()
        item = fields[fmt.item_col].strip()
        if not user or not item:
            raise ParseError(line_no, "empty user or item id")
        try:
            rating = float(fields[fmt.rating_col])
        except ValueError:
            raise ParseError(line_no, f"non-numeric rating {fields[fmt.rating_col]!r}") from None
        if not math.isfinite(rating):
            raise ParseError(line_no, f"non-finite rating {fields[fmt.rating_col]!r}")
        out.append(RatingTuple(user, item, rating))
    return out


def load_ratings(path: str | os.PathLike, fmt: str | RatingFormat = "ml1m") -> list[RatingTuple]:
    with open(path, "rb") as fh:
        return parse_ratings(fh, fmt)


def _adjacency(keys: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """CSR-style (indptr, entry indices) grouping entries by ``keys``.

    Entry indices inside each group stay in ascending entry order.
    """
    order = np.argsort(keys, kind="stable")
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(keys, minlength=n), out=indptr[1:])
    return indptr, order


@dataclass(frozen=True, eq=False)
class HdiMatrix:
    """Known entries ``K`` of a high-dimensional incomplete rating matrix.

    Entries are stored as parallel arrays in a fixed order; that order is the
    one every per-entry sequence (errors, PID state, jvp outputs) aligns with.
    Treat instances as immutable.
    """

    num_users: int
    num_items: int
    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    user_ids: tuple = ()
    item_ids: tuple = ()

    def __post_init__(self):
        if not (len(self.users) == len(self.items) == len(self.ratings)):
            raise DataError("users, items and ratings must have equal length")
        if len(self.users):
            if self.users.min() < 0 or self.users.max() >= self.num_users:
                raise DataError("user index out of range")
            if self.items.min() < 0 or self.items.max() >= self.num_items:
                raise DataError("item index out of range")

    @classmethod
    def from_arrays(cls, users, items, ratings, num_users=None, num_items=None,
                    user_ids=(), item_ids=(), check_duplicates=True) -> "HdiMatrix":
        users = np.ascontiguousarray(users, dtype=np.int64)
        items = np.ascontiguousarray(items, dtype=np.int64)
        ratings = np.ascontiguousarray(ratings, dtype=np.float64)
        if num_users is None:
            num_users = int(users.max()) + 1 if len(users) else 0
        if num_items is None:
            num_items = int(items.max()) + 1 if len(items) else 0
        m = cls(int(num_users), int(num_items), users, items, ratings,
                tuple(user_ids), tuple(item_ids))
        if check_duplicates:
            m._check_duplicates()
        return m

    def _check_duplicates(self):
        keys = self.users * self.num_items + self.items
        order = np.argsort(keys, kind="stable")
        dup = np.flatnonzero(np.diff(keys[order]) == 0)
        if len(dup):
            # report the earliest repeated entry in entry order
            e = int(order[dup + 1].min())
            u, i = int(self.users[e]), int(self.items[e])
            raise DuplicateEntryError(self.user_ids[u] if self.user_ids else u,
                                      self.item_ids[i] if self.item_ids else i)

    def __len__(self):
        return len(self.ratings)

    @property
    def num_entries(self) -> int:
        return len(self.ratings)

    @cached_property
    def user_map(self) -> dict:
        return {raw: k for k, raw in enumerate(self.user_ids)}

    @cached_property
    def item_map(self) -> dict:
        return {raw: k for k, raw in enumerate(self.item_ids)}

    @cached_property
    def _user_csr(self):
        return _adjacency(self.users, self.num_users)

    @cached_property
    def _item_csr(self):
        return _adjacency(self.items, self.num_items)

    @cached_property
    def user_adj(self) -> list[np.ndarray]:
        """``user_adj[u]`` is the array of entry indices ``K_u``."""
        indptr, order = self._user_csr
        return np.split(order, indptr[1:-1])

    @cached_property
    def item_adj(self) -> list[np.ndarray]:
        indptr, order = self._item_csr
        return np.split(order, indptr[1:-1])

    @cached_property
    def user_counts(self) -> np.ndarray:
        """``|K_u|`` for every user, as float64."""
        return np.bincount(self.users, minlength=self.num_users).astype(np.float64)

    @cached_property
    def item_counts(self) -> np.ndarray:
        return np.bincount(self.items, minlength=self.num_items).astype(np.float64)

    @cached_property
    def user_incidence(self) -> sparse.csr_matrix:
        """|U| x |K| 0/1 matrix; row u has ones at the entries of ``K_u``."""
        indptr, order = self._user_csr
        return sparse.csr_matrix((np.ones(len(order)), order, indptr),
                                 shape=(self.num_users, self.num_entries))

    @cached_property
    def item_incidence(self) -> sparse.csr_matrix:
        indptr, order = self._item_csr
        return sparse.csr_matrix((np.ones(len(order)), order, indptr),
                                 shape=(self.num_items, self.num_entries))

    def subset(self, index: Sequence[int]) -> "HdiMatrix":
        """Entries at ``index`` (in that order) over the same user/item space."""
        index = np.asarray(index, dtype=np.int64)
        return HdiMatrix(self.num_users, self.num_items, self.users[index],
                         self.items[index], self.ratings[index],
                         self.user_ids, self.item_ids)

    def entries(self) -> Iterable[tuple[int, int, float]]:
        return zip(self.users.tolist(), self.items.tolist(), self.ratings.tolist())


ID_SPACES = ("appearance", "raw")


def build_hdi(tuples: Sequence[RatingTuple], id_space: str = "appearance") -> HdiMatrix:
    """Build the HDI matrix from rating tuples.

    ``id_space="appearance"`` assigns dense ids in first-appearance order.
    ``id_space="raw"`` requires positive integer ids and uses ``id - 1``, so
    the dimensions span ``1..max id`` including never-rated ids (this is how
    MovieLens item counts are usually quoted).
    """
    if len(tuples) == 0:
        raise DataError("no ratings to build a matrix from")
    if id_space not in ID_SPACES:
        raise ConfigError(f"id_space must be one of {ID_SPACES}, got {id_space!r}")
    users = np.empty(len(tuples), dtype=np.int64)
    items = np.empty(len(tuples), dtype=np.int64)
    ratings = np.empty(len(tuples), dtype=np.float64)
    if id_space == "raw":
        for k, (u, i, r) in enumerate(tuples):
            try:
                users[k] = int(u) - 1
                items[k] = int(i) - 1
            except ValueError:
                raise DataError(f"entry {k}: raw id space needs integer ids, got ({u!r}, {i!r})") from None
            ratings[k] = r
        if users.min() < 0 or items.min() < 0:
            raise DataError("raw id space needs ids >= 1")
        nu, ni = int(users.max()) + 1, int(items.max()) + 1
        return HdiMatrix.from_arrays(users, items, ratings, nu, ni,
                                     user_ids=tuple(str(k + 1) for k in range(nu)),
                                     item_ids=tuple(str(k + 1) for k in range(ni)))
    user_map: dict[str, int] = {}
    item_map: dict[str, int] = {}
    for k, (u, i, r) in enumerate(tuples):
        users[k] = user_map.setdefault(u, len(user_map))
        items[k] = item_map.setdefault(i, len(item_map))
        ratings[k] = r
    return HdiMatrix.from_arrays(users, items, ratings, len(user_map), len(item_map),
                                 user_ids=tuple(user_map), item_ids=tuple(item_map))


def density(matrix: HdiMatrix) -> float:
    if matrix.num_users <= 0 or matrix.num_items <= 0:
        raise DataError("density undefined for an empty user or item set")
    return matrix.num_entries / (matrix.num_users * matrix.num_items)


@dataclass(frozen=True, eq=False)
class Partition:
    train: HdiMatrix
    validation: HdiMatrix
    test: HdiMatrix
    train_idx: np.ndarray
    valid_idx: np.ndarray
    test_idx: np.ndarray
    seed: int | None = None

    @property
    def sizes(self) -> tuple[int, int, int]:
        return len(self.train_idx), len(self.valid_idx), len(self.test_idx)


def _floor(x: float) -> int:
    # 0.29 * 100 == 28.999999999999996; snap values within round-off of an integer
    r = round(x)
    return int(r) if abs(x - r) < 1e-9 else math.floor(x)


def _check_ratios(ratios):
    if len(ratios) != 3:
        raise ConfigError("ratios must be a (train, validation, test) triple")
    if any(not r > 0 for r in ratios):
        raise ConfigError(f"all ratios must be positive, got {tuple(ratios)}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"ratios must sum to 1, got {sum(ratios)}")


def _cuts(n: int, ratios: Sequence[float]) -> tuple[int, int]:
    # validation then test are cut from the front of the permutation at
    # floor(cumulative ratio * n); train takes the remainder. Every subset is
    # then within one entry of its exact share.
    _check_ratios(ratios)
    c1 = _floor(ratios[1] * n)
    c2 = _floor((ratios[1] + ratios[2]) * n)
    return c1, c2


def split_sizes(n: int, ratios: Sequence[float]) -> tuple[int, int, int]:
    c1, c2 = _cuts(n, ratios)
    return n - c2, c1, c2 - c1


def partition_from_indices(matrix: HdiMatrix, train_idx, valid_idx, test_idx,
                           seed=None) -> Partition:
    train_idx, valid_idx, test_idx = (np.asarray(a, dtype=np.int64)
                                      for a in (train_idx, valid_idx, test_idx))
    allidx = np.concatenate([train_idx, valid_idx, test_idx])
    if len(allidx) != matrix.num_entries or not np.array_equal(
            np.sort(allidx), np.arange(matrix.num_entries)):
        raise DataError("partition indices must cover every entry exactly once")
    return Partition(matrix.subset(train_idx), matrix.subset(valid_idx),
                     matrix.subset(test_idx), train_idx, valid_idx, test_idx, seed)


def partition(matrix: HdiMatrix, ratios=(0.6, 0.2, 0.2), seed: int = 0) -> Partition:
    """Global uniform random split of the known entries."""
    c1, c2 = _cuts(matrix.num_entries, ratios)
    perm = np.random.default_rng(seed).permutation(matrix.num_entries)
    return partition_from_indices(matrix, perm[c2:], perm[:c1], perm[c1:c2], seed)


MANIFEST_FILES = ("train.idx", "valid.idx", "test.idx")


def write_manifest(part: Partition, directory: str | os.PathLike) -> None:
    """One entry index per line, one file per subset."""
    os.makedirs(directory, exist_ok=True)
    for name, idx in zip(MANIFEST_FILES, (part.train_idx, part.valid_idx, part.test_idx)):
        buf = io.StringIO()
        np.savetxt(buf, idx, fmt="%d")
        with open(os.path.join(directory, name), "w") as fh:
            fh.write(buf.getvalue())


def read_manifest(matrix: HdiMatrix, directory: str | os.PathLike, seed=None) -> Partition:
    idx = []
    for name in MANIFEST_FILES:
        with open(os.path.join(directory, name)) as fh:
            idx.append(np.array([int(x) for x in fh.read().split()], dtype=np.int64))
    return partition_from_indices(matrix, *idx, seed=seed)
