"""Feature pipeline: dictionary, drop-first encoding, compression, files."""

import numpy as np
import pytest

from affinity.encoding import (
    ConstraintOneHotEncoder,
    DataRow,
    NONE_LABEL,
    build_dictionary,
    compress,
    decode,
    encode,
    encode_rows,
    format_row_line,
    parse_row_line,
    read_dataset,
    read_rows,
    write_dataset,
    write_rows,
)
from affinity.errors import (
    ChecksumMismatch,
    EmptyDataset,
    FormatVersionMismatch,
    UnknownCategory,
)


def row(job, idx=0, count=1, cpu=0.1, mem=0.2, labels=()):
    from affinity.matcher import classify_group
    return DataRow(job, idx, count, classify_group(count), cpu, mem, tuple(labels))


class TestDictionary:
    def test_width_formula(self):
        rows = [
            row(1, labels=("W|BW|0:3",)),
            row(2, labels=("W|BW|4:14",)),
            row(3, labels=()),
        ]
        fd = build_dictionary(rows)
        # W has categories {<none>, two ranges}: 2 columns; plus cpu, mem
        assert fd.categories["W"] == (NONE_LABEL, "W|BW|0:3", "W|BW|4:14")
        assert fd.width == 2 + 2

    def test_single_category_attribute_is_eliminated(self):
        rows = [row(1, labels=("Q|EQ|i:1",)), row(2, labels=("Q|EQ|i:1",))]
        fd = build_dictionary(rows)
        assert fd.categories["Q"] == ("Q|EQ|i:1",)
        assert fd.width == 2  # only cpu and mem

    def test_none_category_only_when_some_row_lacks_the_attribute(self):
        rows = [row(1, labels=("Q|EQ|i:1",)), row(2, labels=("Q|EQ|i:2",))]
        fd = build_dictionary(rows)
        assert NONE_LABEL not in fd.categories["Q"]
        rows.append(row(3, labels=()))
        fd = build_dictionary(rows)
        assert fd.categories["Q"][0] == NONE_LABEL

    def test_deterministic_under_permutation(self, rng):
        rows = [row(i, labels=(f"Q|EQ|i:{i % 5}", f"R|GE|i:{i % 3}")) for i in range(30)]
        fd = build_dictionary(rows)
        for _ in range(5):
            perm = [rows[i] for i in rng.permutation(len(rows))]
            assert build_dictionary(perm) == fd

    def test_empty_rows_rejected(self):
        with pytest.raises(EmptyDataset):
            build_dictionary([])


class TestEncode:
    def setup_method(self):
        self.rows = [
            row(1, count=1, labels=("Q|EQ|i:1", "R|GE|i:0")),
            row(2, count=2, labels=("Q|EQ|i:2",)),
            row(3, count=600, labels=()),
        ]
        self.fd = build_dictionary(self.rows)

    def test_drop_first_encodes_to_zeros(self):
        # row 3 carries <none> for both attributes: the dropped-first category
        erow = encode(self.rows[2], self.fd)
        assert erow.onehot == ()

    def test_one_hot_positions(self):
        erow = encode(self.rows[0], self.fd)
        assert len(erow.onehot) == 2
        assert all(2 <= i < self.fd.width for i in erow.onehot)

    def test_unknown_label_raises(self):
        with pytest.raises(UnknownCategory):
            encode(row(9, labels=("Q|EQ|i:9",)), self.fd)
        with pytest.raises(UnknownCategory):
            encode(row(9, labels=("ZZ|EQ|i:1",)), self.fd)

    def test_decode_round_trip(self):
        for r in self.rows:
            erow = encode(r, self.fd)
            cpu, mem, labels = decode(erow, self.fd)
            assert (cpu, mem) == (r.cpu, r.mem)
            assert labels == r.labels

    def test_round_trip_randomized(self, rng):
        labels_pool = [f"Q|EQ|i:{i}" for i in range(6)] + [f"R|GE|i:{i}" for i in range(4)]
        rows = []
        for i in range(200):
            chosen = {}
            for label in rng.choice(labels_pool, size=rng.integers(0, 3), replace=False):
                chosen[label.split("|")[0]] = str(label)
            rows.append(row(i, count=int(rng.integers(1, 2000)),
                            labels=tuple(sorted(chosen.values()))))
        fd = build_dictionary(rows)
        assert fd.width == 2 + sum(
            max(0, len(c) - 1) for c in fd.categories.values())
        for r in rows:
            erow = encode(r, fd)
            assert decode(erow, fd)[2] == r.labels

    def test_estimator_wrapper(self):
        enc = ConstraintOneHotEncoder().fit(self.rows)
        X = enc.transform(self.rows)
        assert X.shape == (3, enc.dictionary_.width)
        assert X[0, 0] == self.rows[0].cpu
        # one-hot block values are exactly 0/1
        assert set(np.unique(X.toarray()[:, 2:])) <= {0.0, 1.0}


class TestCompress:
    def test_identical_gang_tasks_collapse(self):
        rows = [row(1, idx=i, count=5, labels=("Q|EQ|i:1",)) for i in range(100)]
        assert len(compress(rows)) == 1

    def test_distinct_configs_survive(self):
        rows = [row(1, idx=i, cpu=0.1, count=5) for i in range(50)]
        rows += [row(1, idx=50 + i, cpu=0.3, count=5) for i in range(50)]
        out = compress(rows)
        assert len(out) == 2
        assert {r.cpu for r in out} == {0.1, 0.3}

    def test_multiplicities_reduce_exactly(self, rng):
        rows = []
        expected = 0
        for job in range(40):
            n_configs = int(rng.integers(1, 4))
            expected += n_configs
            for c in range(n_configs):
                for i in range(int(rng.integers(1, 6))):
                    rows.append(row(job, idx=c * 10 + i, cpu=0.05 * (c + 1),
                                    count=7, labels=("Q|EQ|i:1",)))
        out = compress(rows)
        assert len(out) == expected

    def test_idempotent_and_orderly(self):
        rows = [row(2, idx=1, count=5), row(1, idx=0, count=3),
                row(2, idx=2, count=5), row(1, idx=1, count=3)]
        once = compress(rows)
        assert compress(once) == once
        assert [r.job_id for r in once] == [1, 2]
        assert len(once) <= len(rows)

    def test_labels_and_counts_unchanged(self):
        rows = [row(1, idx=i, count=77, labels=("Q|EQ|i:1",)) for i in range(3)]
        out = compress(rows)
        assert out[0].count == 77 and out[0].labels == ("Q|EQ|i:1",)


class TestRowsFile(object):
    def test_row_line_round_trip(self, tmp_path):
        rows = [
            row(1, count=1, labels=("Q|EQ|i:1", "R|NEQ|s:a,s:b")),
            row(2, count=600, labels=()),
        ]
        path = tmp_path / "rows.csv"
        write_rows(path, rows, comments=["seed=4"])
        assert read_rows(path) == rows

    def test_parse_round_trip_with_commas_in_labels(self):
        r = row(3, count=2, labels=("R|NEQ|i:0,s:a,s:b",))
        assert parse_row_line(format_row_line(r)) == r


class TestDatasetFile:
    def _dataset(self):
        rows = [
            row(1, count=1, labels=("Q|EQ|i:1",)),
            row(2, count=2, labels=("Q|EQ|i:2",)),
            row(3, count=600, labels=()),
        ]
        fd = build_dictionary(rows)
        return encode_rows(rows, fd, {"seed": 9, "source": "test"})

    def test_write_read_round_trip(self, tmp_path):
        ds = self._dataset()
        path = tmp_path / "data.ds"
        write_dataset(ds, path)
        back = read_dataset(path)
        assert back.dictionary == ds.dictionary
        assert back.rows == ds.rows
        assert back.metadata == ds.metadata

    def test_empty_row_list_round_trips(self, tmp_path):
        ds = self._dataset()
        ds.rows = []
        path = tmp_path / "data.ds"
        write_dataset(ds, path)
        assert read_dataset(path).rows == []

    def test_truncation_never_yields_partial_dataset(self, tmp_path):
        ds = self._dataset()
        path = tmp_path / "data.ds"
        write_dataset(ds, path)
        blob = path.read_bytes()
        for cut in (len(blob) - 1, len(blob) // 2, 30):
            path.write_bytes(blob[:cut])
            with pytest.raises((ChecksumMismatch, FormatVersionMismatch)):
                read_dataset(path)

    def test_corruption_detected(self, tmp_path):
        ds = self._dataset()
        path = tmp_path / "data.ds"
        write_dataset(ds, path)
        blob = path.read_bytes().replace(b"600", b"601", 1)
        path.write_bytes(blob)
        with pytest.raises(ChecksumMismatch):
            read_dataset(path)

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "data.ds"
        path.write_text("#something-else v1 00\nbody\n")
        with pytest.raises(FormatVersionMismatch):
            read_dataset(path)

    def test_matrix_shape_and_values(self):
        ds = self._dataset()
        X, y, counts = ds.to_matrix()
        assert X.shape == (3, ds.width)
        assert list(y) == ["A", "B", "C"]
        assert list(counts) == [1, 2, 600]
        dense = X.toarray()
        assert dense[0, 0] == 0.1 and dense[0, 1] == 0.2
