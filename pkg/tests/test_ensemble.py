"""Split protocol, voting, metrics, confusion rendering, aggregation."""

import numpy as np
import pytest

from affinity.encoding import Dataset, EncodedRow, FeatureDictionary
from affinity.ensemble import (
    SplitSpec,
    evaluate,
    render_confusion_matrix,
    run_protocol,
    train_ensemble,
    train_test_split,
)
from affinity.errors import LengthMismatch, TooFewRows
from affinity.models import VotingEnsembleClassifier


def toy_dataset(n_rows=40, n_groups=3, seed=0):
    """Rows whose single one-hot column determines the group exactly."""
    rng = np.random.default_rng(seed)
    counts_by_group = {"A": 1, "C": 800, "D": 1400, "E": 1900, "F": 2400}
    groups = list(counts_by_group)[:n_groups]
    cats = [f"T|EQ|i:{i}" for i in range(n_groups)]
    fd = FeatureDictionary.from_categories({"T": tuple(sorted(cats + ["<none>"]))})
    rows = []
    for i in range(n_rows):
        g = groups[i % n_groups]
        label = f"T|EQ|i:{groups.index(g)}"
        col = fd.column_of["T"][label]
        onehot = (col,) if col is not None else ()
        rows.append(EncodedRow(counts_by_group[g], g,
                               round(float(rng.integers(1, 9)) / 10, 2), 0.5,
                               onehot))
    return Dataset(fd, rows, {"seed": seed})


class TestSplit:
    def test_reference_sizes(self):
        ds = toy_dataset(27_700)
        train, test = train_test_split(ds, SplitSpec(0.75, 1))
        assert (len(train.rows), len(test.rows)) == (20_775, 6_925)

    def test_four_rows(self):
        ds = toy_dataset(4)
        train, test = train_test_split(ds, SplitSpec(0.75, 0))
        assert (len(train.rows), len(test.rows)) == (3, 1)

    def test_same_seed_same_partition(self):
        ds = toy_dataset(101)
        a = train_test_split(ds, SplitSpec(0.75, 7))
        b = train_test_split(ds, SplitSpec(0.75, 7))
        assert a[0].rows == b[0].rows and a[1].rows == b[1].rows
        c = train_test_split(ds, SplitSpec(0.75, 8))
        assert a[0].rows != c[0].rows

    def test_too_few_rows(self):
        with pytest.raises(TooFewRows):
            train_test_split(toy_dataset(1), SplitSpec())

    def test_partitions_cover_all_rows(self):
        ds = toy_dataset(53)
        train, test = train_test_split(ds, SplitSpec(0.6, 3))
        key = lambda r: (r.count, r.cpu, r.onehot)
        assert sorted(map(key, train.rows + test.rows)) == sorted(map(key, ds.rows))


class TestVoting:
    def test_majority_and_tie_rules(self):
        votes = {"m1": ["A", "A", "Z"], "m2": ["A", "C", "Z"], "m3": ["Z", "Z", "Z"]}

        class Fixed:
            def __init__(self, out):
                self.out = np.asarray(out)
                self.classes_ = np.unique(self.out)

            def predict(self, X):
                return self.out

        ens = VotingEnsembleClassifier(members=[(k, Fixed(v)) for k, v in votes.items()])
        ens.members_ = ens.members
        ens.classes_ = np.array(["A", "C", "Z"])
        ens.n_features_in_ = 1
        out = ens.predict(np.zeros((3, 1)))
        # column votes: (A,A,Z)->A, (A,C,Z)->tie->A, (Z,Z,Z)->Z
        assert list(out) == ["A", "A", "Z"]

    def test_unanimous_members_pass_through(self, rng):
        ds = toy_dataset(60)
        X, y, _ = ds.to_matrix()
        ens = train_ensemble(ds, seed=0)
        member_preds = [m.predict(X) for _, m in ens.members_]
        ens_pred = ens.predict(X)
        agree = np.logical_and(member_preds[0] == member_preds[1],
                               member_preds[1] == member_preds[2])
        assert (ens_pred[agree] == member_preds[0][agree]).all()

    def test_equal_seeds_equal_ensembles(self):
        ds = toy_dataset(60)
        X, y, _ = ds.to_matrix()
        a = train_ensemble(ds, seed=4).predict(X)
        b = train_ensemble(ds, seed=4).predict(X)
        assert (a == b).all()


class TestEvaluate:
    def test_perfect_predictions(self):
        rep = evaluate(["A", "Z"], ["A", "Z"])
        assert rep.accuracy == 1.0
        assert rep.f1 == {"A": 1.0, "Z": 1.0}
        assert np.array_equal(rep.confusion, np.eye(2, dtype=int))

    def test_hand_computed_mixed_case(self):
        rep = evaluate(["A", "A", "Z", "Z"], ["A", "Z", "Z", "Z"])
        assert rep.accuracy == 0.75
        assert rep.f1["A"] == pytest.approx(2 / 3)
        assert rep.f1["Z"] == pytest.approx(0.8)
        assert rep.a_to_z_rate == 0.5
        assert rep.a_misrouted_rate == 0.5
        assert np.array_equal(rep.confusion, np.array([[1, 1], [0, 2]]))

    def test_never_predicted_class_scores_zero(self):
        rep = evaluate(["A", "B", "B"], ["B", "B", "B"])
        assert rep.precision["A"] == 0.0
        assert rep.f1["A"] == 0.0

    def test_label_in_predictions_only_gets_a_zero_row(self):
        rep = evaluate(["A", "A"], ["A", "Q"])
        assert rep.labels == ("A", "Q")
        assert rep.confusion[1].sum() == 0

    def test_metric_identities(self, rng):
        letters = np.array(list("ABCZ"))
        for _ in range(30):
            y_true = letters[rng.integers(0, 4, 60)]
            y_pred = letters[rng.integers(0, 4, 60)]
            rep = evaluate(y_true, y_pred)
            cm = rep.confusion
            assert rep.accuracy == pytest.approx(np.trace(cm) / cm.sum())
            for i, label in enumerate(rep.labels):
                assert cm[i].sum() == (y_true == label).sum()
                p, r = rep.precision[label], rep.recall[label]
                want = 2 * p * r / (p + r) if p + r else 0.0
                assert rep.f1[label] == pytest.approx(want)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            evaluate(["A"], ["A", "B"])
        with pytest.raises(LengthMismatch):
            evaluate([], [])


class TestRenderConfusion:
    def test_diagonal_table(self):
        text = render_confusion_matrix(evaluate(["A", "Z"], ["A", "Z"]))
        lines = text.splitlines()
        assert "pred:A" in lines[0] and "pred:Z" in lines[0]
        assert lines[1].startswith("true:A")
        assert lines[2].startswith("true:Z")

    def test_union_includes_prediction_only_labels(self):
        text = render_confusion_matrix(evaluate(["A", "A"], ["A", "Q"]))
        assert "pred:Q" in text.splitlines()[0]
        assert any(line.startswith("true:Q") for line in text.splitlines())

    def test_derived_two_by_two(self):
        rep = evaluate(["A", "A", "Z", "Z"], ["A", "Z", "Z", "Z"])
        rows = render_confusion_matrix(rep).splitlines()
        assert rows[1].split()[1:] == ["1", "1"]
        assert rows[2].split()[1:] == ["0", "2"]


class TestRunProtocol:
    def test_single_run_equals_its_report(self):
        ds = toy_dataset(80)
        agg = run_protocol(ds, runs=1, base_seed=3)
        assert agg.mean_accuracy == agg.runs[0].accuracy
        for label in agg.f1_min:
            assert agg.f1_min[label] == agg.f1_max[label]

    def test_aggregate_bounds_and_determinism(self):
        ds = toy_dataset(120)
        agg = run_protocol(ds, runs=3, base_seed=0)
        for label in agg.f1_min:
            values = [r.f1[label] for r in agg.runs if label in r.f1]
            assert agg.f1_min[label] <= float(np.mean(values)) <= agg.f1_max[label]
        again = run_protocol(ds, runs=3, base_seed=0)
        assert agg.metric_rows() == again.metric_rows()
        assert [r.seed for r in agg.runs] == [0, 1, 2]

    def test_timings_are_recorded_separately(self):
        ds = toy_dataset(60)
        agg = run_protocol(ds, runs=1, base_seed=0)
        assert agg.runs[0].train_time_s > 0
        names = [name for name, _, _ in agg.metric_rows()]
        assert not any("time" in n for n in names)
        assert all(v is not None for _, _, v in agg.timing_rows())
