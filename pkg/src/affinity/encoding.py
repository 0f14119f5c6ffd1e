"""Category dictionary, drop-first one-hot encoding and the dataset file.

Every compacted constraint renders to a canonical text label and that label
is the category.  Each attribute owns one block of columns: its observed
labels plus the reserved ``<none>`` category (present whenever some row does
not constrain the attribute), sorted, with the first category dropped.  An
attribute with a single category contributes no columns at all.  Columns 0
and 1 always carry the task's cpu and mem requests.

The dataset file is a self-describing text container: a magic/version line
with a checksum over the rest, one JSON line for the dictionary, one for
provenance metadata, then sparse CSV rows ``count,group,cpu,mem,idx:val;...``
with the suitable-node count in the first column.  Rows are encoded and
decoded streaming; the dense matrix is never materialized.
"""

from __future__ import annotations

import contextlib
import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from sklearn.base import BaseEstimator, TransformerMixin

from .constraints import CompactedConstraintSet
from .errors import (
    ChecksumMismatch,
    EmptyDataset,
    FormatVersionMismatch,
    IOFailure,
    MalformedLine,
    UnknownCategory,
)
from .matcher import classify_group
from .values import TaskSpec

NONE_LABEL = "<none>"
DATASET_MAGIC = "#affinity-dataset"
DATASET_VERSION = "v1"
ROWS_HEADER = "job_id,task_index,count,group,cpu,mem,labels"
DATASET_HEADER = "count,group,cpu,mem,features"


def attribute_of(label: str) -> str:
    return label.split("|", 1)[0]


@dataclass(frozen=True)
class DataRow:
    """One labelled task configuration before encoding."""

    job_id: int
    task_index: int
    count: int
    group: str
    cpu: float
    mem: float
    labels: tuple[str, ...]  # canonical constraint labels, sorted by attribute

    def config_key(self) -> tuple:
        return (self.labels, self.cpu, self.mem, self.count)


def rows_from_snapshot(
    snapshot: Iterable[tuple[TaskSpec, CompactedConstraintSet, int, str]]
) -> list[DataRow]:
    """Convert matcher snapshot tuples into data rows."""
    return [
        DataRow(spec.job_id, spec.task_index, count, group, spec.cpu, spec.mem,
                cset.labels())
        for spec, cset, count, group in snapshot
    ]


def compress(rows: Iterable[DataRow]) -> list[DataRow]:
    """Collapse duplicate gang-scheduled configurations within each job.

    Rows of one job with identical (labels, cpu, mem, count) reduce to one
    representative; distinct configuration groups inside a job all survive.
    Output is ordered by job id, then by first occurrence.
    """
    by_job: dict[int, dict[tuple, DataRow]] = {}
    for row in rows:
        configs = by_job.setdefault(row.job_id, {})
        configs.setdefault(row.config_key(), row)
    out: list[DataRow] = []
    for job_id in sorted(by_job):
        out.extend(by_job[job_id].values())
    return out


# --- dictionary -------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureDictionary:
    """Per-attribute category lists and the resulting column layout."""

    categories: dict[str, tuple[str, ...]]  # attr -> sorted category labels
    column_of: dict[str, dict[str, int | None]] = field(repr=False)
    width: int = 0

    @staticmethod
    def from_categories(categories: dict[str, tuple[str, ...]]) -> "FeatureDictionary":
        column_of: dict[str, dict[str, int | None]] = {}
        col = 2  # columns 0 and 1 are cpu and mem
        for attr in sorted(categories):
            cats = categories[attr]
            block: dict[str, int | None] = {cats[0]: None}  # drop-first
            for label in cats[1:]:
                block[label] = col
                col += 1
            column_of[attr] = block
        ordered = {attr: tuple(categories[attr]) for attr in sorted(categories)}
        assert col == 2 + sum(max(0, len(c) - 1) for c in ordered.values())
        return FeatureDictionary(ordered, column_of, col)

    def to_json(self) -> str:
        return json.dumps({"attributes": {a: list(c) for a, c in self.categories.items()}},
                          sort_keys=True, separators=(",", ":"))

    @staticmethod
    def from_json(text: str) -> "FeatureDictionary":
        data = json.loads(text)
        cats = {a: tuple(c) for a, c in data["attributes"].items()}
        return FeatureDictionary.from_categories(cats)


def build_dictionary(rows: Sequence[DataRow]) -> FeatureDictionary:
    """Collect observed categories per attribute; deterministic under row order."""
    if not rows:
        raise EmptyDataset("cannot build a dictionary from zero rows")
    seen: dict[str, set[str]] = {}
    rows_with_attr: dict[str, int] = {}
    for row in rows:
        for label in row.labels:
            attr = attribute_of(label)
            seen.setdefault(attr, set()).add(label)
            rows_with_attr[attr] = rows_with_attr.get(attr, 0) + 1
    categories: dict[str, tuple[str, ...]] = {}
    for attr, labels in seen.items():
        cats = set(labels)
        if rows_with_attr[attr] < len(rows):
            cats.add(NONE_LABEL)
        categories[attr] = tuple(sorted(cats))
    return FeatureDictionary.from_categories(categories)


# --- rows <-> vectors -----------------------------------------------------------


@dataclass(frozen=True)
class EncodedRow:
    """A label plus a sparse one-hot vector (cpu, mem at columns 0 and 1)."""

    count: int
    group: str
    cpu: float
    mem: float
    onehot: tuple[int, ...]  # ascending column indices carrying a 1


def encode(row: DataRow, fd: FeatureDictionary) -> EncodedRow:
    """Encode one row; unseen labels signal dictionary/data skew."""
    by_attr: dict[str, str] = {}
    for label in row.labels:
        by_attr[attribute_of(label)] = label
    cols: list[int] = []
    for attr, block in fd.column_of.items():
        label = by_attr.pop(attr, NONE_LABEL)
        if label not in block:
            raise UnknownCategory(f"label {label!r} not in the dictionary")
        col = block[label]
        if col is not None:
            cols.append(col)
    if by_attr:
        attr = next(iter(by_attr))
        raise UnknownCategory(f"attribute {attr!r} not in the dictionary")
    cols.sort()
    return EncodedRow(row.count, row.group, row.cpu, row.mem, tuple(cols))


def decode(erow: EncodedRow, fd: FeatureDictionary) -> tuple[float, float, tuple[str, ...]]:
    """Recover (cpu, mem, labels) from an encoded row and its dictionary."""
    hot = set(erow.onehot)
    labels: list[str] = []
    for attr, block in fd.column_of.items():
        found = None
        for label, col in block.items():
            if col is not None and col in hot:
                if found is not None:
                    raise UnknownCategory(f"two categories set in block {attr!r}")
                found = label
                hot.discard(col)
        if found is None:
            found = fd.categories[attr][0]  # the dropped-first category
        if found != NONE_LABEL:
            labels.append(found)
    if hot:
        raise UnknownCategory(f"columns outside any block: {sorted(hot)}")
    return erow.cpu, erow.mem, tuple(labels)


# --- dataset ------------------------------------------------------------------------


@dataclass
class Dataset:
    dictionary: FeatureDictionary
    rows: list[EncodedRow]
    metadata: dict = field(default_factory=dict)

    @property
    def width(self) -> int:
        return self.dictionary.width

    def to_matrix(self) -> tuple[sparse.csr_matrix, np.ndarray, np.ndarray]:
        """Sparse feature matrix, group labels and suitable-node counts."""
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        groups: list[str] = []
        counts: list[int] = []
        for r in self.rows:
            cols = []
            vals = []
            if r.cpu != 0.0:
                cols.append(0)
                vals.append(r.cpu)
            if r.mem != 0.0:
                cols.append(1)
                vals.append(r.mem)
            cols.extend(r.onehot)
            vals.extend([1.0] * len(r.onehot))
            indices.extend(cols)
            data.extend(vals)
            indptr.append(len(indices))
            groups.append(r.group)
            counts.append(r.count)
        X = sparse.csr_matrix(
            (np.asarray(data), np.asarray(indices, dtype=np.int32), np.asarray(indptr)),
            shape=(len(self.rows), self.dictionary.width),
        )
        return X, np.asarray(groups), np.asarray(counts, dtype=np.int64)


def encode_rows(rows: Sequence[DataRow], fd: FeatureDictionary,
                metadata: dict | None = None) -> Dataset:
    return Dataset(fd, [encode(r, fd) for r in rows], dict(metadata or {}))


class ConstraintOneHotEncoder(BaseEstimator, TransformerMixin):
    """Estimator-style wrapper: fit builds the dictionary, transform encodes.

    ``transform`` returns a scipy CSR matrix so the encoding composes with
    the wider scikit-learn ecosystem.
    """

    def fit(self, X: Sequence[DataRow], y=None):
        self.dictionary_ = build_dictionary(X)
        return self

    def transform(self, X: Sequence[DataRow]) -> sparse.csr_matrix:
        ds = encode_rows(X, self.dictionary_)
        return ds.to_matrix()[0]


# --- files -------------------------------------------------------------------------


@contextlib.contextmanager
def _io_guard(path, mode: str):
    """Open a text file, turning OS errors into IOFailure."""
    kwargs = {"encoding": "utf-8"}
    if mode == "w":
        kwargs["newline"] = "\n"
    try:
        fh = open(path, mode, **kwargs)
    except OSError as exc:
        raise IOFailure(f"cannot open {path}: {exc}") from exc
    try:
        yield fh
    except OSError as exc:
        raise IOFailure(f"i/o error on {path}: {exc}") from exc
    finally:
        fh.close()


def _float(s: str, what: str) -> float:
    try:
        x = float(s)
    except ValueError:
        raise MalformedLine(f"bad {what} {s!r}") from None
    if not 0.0 <= x <= 1.0:
        raise MalformedLine(f"{what} must lie in [0,1]: {s}")
    return x


def format_row_line(row: DataRow) -> str:
    labels = ";".join(row.labels)
    return (f"{row.job_id},{row.task_index},{row.count},{row.group},"
            f"{row.cpu!r},{row.mem!r},{labels}")


def parse_row_line(line: str) -> DataRow:
    fields = line.split(",", 6)
    if len(fields) != 7:
        raise MalformedLine(f"expected 7 fields, got {len(fields)}")
    # the labels field reuses commas inside not-equal arrays, so it is split
    # back apart on ';' only
    labels = tuple(fields[6].split(";")) if fields[6] else ()
    attrs = [attribute_of(label) for label in labels]
    if len(attrs) != len(set(attrs)):
        raise MalformedLine(f"two labels on one attribute in {line!r}")
    try:
        job_id = int(fields[0])
        task_index = int(fields[1])
        count = int(fields[2])
    except ValueError:
        raise MalformedLine(f"bad integer field in {line!r}") from None
    group = fields[3]
    if group != classify_group(count):
        raise MalformedLine(f"group {group!r} does not match count {count}")
    return DataRow(job_id, task_index, count, group,
                   _float(fields[4], "cpu"), _float(fields[5], "mem"), labels)


def write_rows(path, rows: Iterable[DataRow], comments: Sequence[str] = ()) -> None:
    with _io_guard(path, "w") as fh:
        for comment in comments:
            fh.write(f"# {comment}\n")
        fh.write(ROWS_HEADER + "\n")
        for row in rows:
            fh.write(format_row_line(row) + "\n")


def read_rows(path) -> list[DataRow]:
    rows = []
    with _io_guard(path, "r") as fh:
        header_seen = False
        for raw in fh:
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                if line != ROWS_HEADER:
                    raise MalformedLine(f"bad rows header {line!r}")
                header_seen = True
                continue
            rows.append(parse_row_line(line))
    if not header_seen:
        raise MalformedLine("rows file lacks a header")
    return rows


def _dataset_body(ds: Dataset) -> str:
    lines = [
        "#dictionary " + ds.dictionary.to_json(),
        "#metadata " + json.dumps(ds.metadata, sort_keys=True, separators=(",", ":")),
        DATASET_HEADER,
    ]
    for r in ds.rows:
        feats = ";".join(f"{i}:1" for i in r.onehot)
        lines.append(f"{r.count},{r.group},{r.cpu!r},{r.mem!r},{feats}")
    return "\n".join(lines) + "\n"


def write_dataset(ds: Dataset, path) -> None:
    body = _dataset_body(ds)
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    with _io_guard(path, "w") as fh:
        fh.write(f"{DATASET_MAGIC} {DATASET_VERSION} {digest}\n")
        fh.write(body)


def read_dataset(path) -> Dataset:
    with _io_guard(path, "r") as fh:
        content = fh.read()
    head, sep, body = content.partition("\n")
    parts = head.split(" ")
    if len(parts) != 3 or parts[0] != DATASET_MAGIC or not sep:
        raise FormatVersionMismatch(f"not a dataset file: {head!r}")
    if parts[1] != DATASET_VERSION:
        raise FormatVersionMismatch(f"unsupported dataset version {parts[1]!r}")
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    if digest != parts[2]:
        raise ChecksumMismatch("dataset checksum does not match its content")
    lines = body.split("\n")
    if len(lines) < 3 or not lines[0].startswith("#dictionary ") \
            or not lines[1].startswith("#metadata "):
        raise FormatVersionMismatch("dataset misses its dictionary/metadata block")
    fd = FeatureDictionary.from_json(lines[0][len("#dictionary "):])
    metadata = json.loads(lines[1][len("#metadata "):])
    if lines[2] != DATASET_HEADER:
        raise FormatVersionMismatch(f"bad dataset header {lines[2]!r}")
    rows: list[EncodedRow] = []
    for line in lines[3:]:
        if not line:
            continue
        fields = line.split(",", 4)
        if len(fields) != 5:
            raise MalformedLine(f"expected 5 fields, got {len(fields)}")
        count = int(fields[0])
        group = fields[1]
        if group != classify_group(count):
            raise MalformedLine(f"group {group!r} does not match count {count}")
        onehot: list[int] = []
        if fields[4]:
            prev = 1
            for pair in fields[4].split(";"):
                idx_s, sep2, val_s = pair.partition(":")
                if not sep2 or val_s != "1":
                    raise MalformedLine(f"bad one-hot pair {pair!r}")
                idx = int(idx_s)
                if idx <= prev or idx >= fd.width:
                    raise MalformedLine(f"one-hot index {idx} out of order or range")
                prev = idx
                onehot.append(idx)
        rows.append(EncodedRow(count, group, _float(fields[2], "cpu"),
                               _float(fields[3], "mem"), tuple(onehot)))
    return Dataset(fd, rows, metadata)
