import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from turnmove.evaluation import (
    ConfusionMatrix,
    EvaluationError,
    UnknownPolicy,
    accuracy,
    align_labels,
    balanced_accuracy,
    build_confusion,
    f1_scores,
    load_labels,
    macro_f1,
    metrics_report,
    recalls,
    relabel,
    report_json,
    report_table,
)

EXAMPLE = [[8, 1, 1], [0, 9, 1], [0, 0, 10]]
CLASSES = ("Left", "Through", "Right")


def pairs_from_matrix(counts, classes=CLASSES):
    truth, pred = {}, {}
    k = 0
    for i, a in enumerate(classes):
        for j, p in enumerate(classes):
            for _ in range(counts[i][j]):
                truth[f"v{k}"], pred[f"v{k}"] = a, p
                k += 1
    return truth, pred


def oracle_metrics(truth, pred, policy="count-as-error"):
    """Scalar re-derivation straight from (truth, prediction) pairs."""
    ids = [v for v in pred if policy == "count-as-error" or pred[v] != "Unknown"]
    classes = sorted({truth[v] for v in ids} | {pred[v] for v in ids} - {"Unknown"})
    acc = sum(truth[v] == pred[v] for v in ids) / len(ids)
    rec, f1 = [], []
    for c in classes:
        actual = sum(truth[v] == c for v in ids)
        predicted = sum(pred[v] == c for v in ids)
        tp = sum(truth[v] == c and pred[v] == c for v in ids)
        if actual:
            rec.append(tp / actual)
        if actual == 0 or predicted == 0:
            f1.append(0.0)
            continue
        p, r = tp / predicted, tp / actual
        f1.append(0.0 if p + r == 0 else 2 * p * r / (p + r))
    return acc, sum(rec) / len(rec), sum(f1) / len(f1)


class TestExample:
    def test_hand_values(self):
        cm = ConfusionMatrix.from_counts(CLASSES, EXAMPLE)
        assert accuracy(cm) == pytest.approx(27 / 30, abs=1e-12)
        assert recalls(cm) == pytest.approx({"Left": 0.8, "Through": 0.9, "Right": 1.0}, abs=1e-12)
        assert balanced_accuracy(cm) == pytest.approx(0.9, abs=1e-12)
        assert f1_scores(cm) == pytest.approx({"Left": 16 / 18, "Through": 0.9, "Right": 20 / 22}, abs=1e-12)
        assert macro_f1(cm) == pytest.approx((16 / 18 + 0.9 + 20 / 22) / 3, abs=1e-12)
        # 0.8993266..., quoted truncated to five places
        assert int(macro_f1(cm) * 1e5) / 1e5 == 0.89932

    def test_built_from_pairs(self):
        truth, pred = pairs_from_matrix(EXAMPLE)
        cm = build_confusion(truth, pred)
        assert cm.classes == CLASSES
        assert cm.counts.tolist() == EXAMPLE
        assert (accuracy(cm), balanced_accuracy(cm), macro_f1(cm)) == pytest.approx(
            oracle_metrics(truth, pred), abs=1e-12)


class TestBuild:
    def test_perfect_is_diagonal(self):
        truth = {"a": "Left", "b": "Through", "c": "Right"}
        cm = build_confusion(truth, dict(truth))
        assert np.array_equal(cm.counts, np.eye(3, dtype=int))
        assert accuracy(cm) == balanced_accuracy(cm) == macro_f1(cm) == 1.0

    def test_single_error(self):
        truth = {"a": "Left", "b": "Through", "c": "Right"}
        cm = build_confusion(truth, {"a": "Through", "b": "Through", "c": "Right"})
        assert cm.counts[0, 1] == 1

    def test_unknown_policies(self):
        truth = {"a": "Left", "b": "Left", "c": "Through"}
        pred = {"a": "Left", "b": "Unknown", "c": "Through"}
        err = build_confusion(truth, pred, "count-as-error")
        exc = build_confusion(truth, pred, UnknownPolicy.EXCLUDE)
        assert err.unknown_count == exc.unknown_count == 1
        assert err.total == 3 and exc.total == 2
        assert accuracy(err) == pytest.approx(2 / 3)
        assert accuracy(exc) == 1.0
        assert recalls(err)["Left"] == 0.5

    def test_missing_truth(self):
        with pytest.raises(EvaluationError):
            build_confusion({"a": "Left"}, {"a": "Left", "b": "Right"})

    def test_unknown_truth_rejected(self):
        with pytest.raises(EvaluationError):
            build_confusion({"a": "Unknown"}, {"a": "Left"})

    def test_empty(self):
        with pytest.raises(EvaluationError):
            accuracy(build_confusion({}, {}))

    def test_extra_predicted_class(self):
        truth = {"a": "Left", "b": "Through"}
        cm = build_confusion(truth, {"a": "cluster-2", "b": "Through"})
        assert cm.classes == ("Left", "Through", "cluster-2")
        assert f1_scores(cm)["cluster-2"] == 0.0
        assert "cluster-2" not in recalls(cm)

    def test_all_wrong(self):
        cm = ConfusionMatrix.from_counts(CLASSES, [[0, 3, 0], [0, 0, 2], [4, 0, 0]])
        assert accuracy(cm) == 0.0
        assert macro_f1(cm) == 0.0

    def test_one_class_missed(self):
        cm = ConfusionMatrix.from_counts(CLASSES, [[0, 5, 0], [0, 5, 0], [0, 0, 5]])
        assert balanced_accuracy(cm) == pytest.approx(2 / 3)

    def test_never_predicted_class_has_zero_f1(self):
        cm = ConfusionMatrix.from_counts(CLASSES, [[0, 2, 0], [0, 3, 0], [0, 0, 0]])
        f1 = f1_scores(cm)
        assert f1["Left"] == 0.0 and f1["Right"] == 0.0

    @pytest.mark.parametrize("counts", [[[1, 2], [3, 4]], [[-1, 0, 0], [0, 0, 0], [0, 0, 0]]])
    def test_bad_counts(self, counts):
        with pytest.raises(EvaluationError):
            ConfusionMatrix.from_counts(CLASSES, counts)


labels = st.sampled_from(["Left", "Through", "Right"])


@st.composite
def label_sets(draw, unknown=True):
    n = draw(st.integers(1, 60))
    truth = draw(st.lists(labels, min_size=n, max_size=n))
    pool = st.sampled_from(["Left", "Through", "Right", "Unknown"]) if unknown else labels
    pred = draw(st.lists(pool, min_size=n, max_size=n))
    return ({f"v{i}": t for i, t in enumerate(truth)}, {f"v{i}": p for i, p in enumerate(pred)})


class TestProperties:
    @given(label_sets(), st.sampled_from(["count-as-error", "exclude"]))
    def test_matches_pair_oracle(self, sets, policy):
        truth, pred = sets
        cm = build_confusion(truth, pred, policy)
        if cm.total == 0:
            return
        got = (accuracy(cm), balanced_accuracy(cm), macro_f1(cm))
        assert got == pytest.approx(oracle_metrics(truth, pred, policy), abs=1e-12)
        assert all(0.0 <= v <= 1.0 for v in got)

    @given(st.lists(st.integers(0, 50), min_size=1, max_size=5))
    def test_diagonal_is_perfect(self, diag):
        if sum(diag) == 0:
            return
        classes = [f"c{i}" for i in range(len(diag))]
        cm = ConfusionMatrix.from_counts(classes, np.diag(diag))
        assert accuracy(cm) == 1.0 and balanced_accuracy(cm) == 1.0
        # classes with no instances count as F1 = 0
        assert macro_f1(cm) == pytest.approx(sum(d > 0 for d in diag) / len(diag))

    @given(st.lists(st.integers(0, 9), min_size=9, max_size=9), st.integers(0, 2), st.integers(2, 7))
    def test_balanced_accuracy_row_scaling(self, vals, row, factor):
        counts = np.array(vals).reshape(3, 3)
        if np.any(counts.sum(axis=1) == 0):
            return
        scaled = counts.copy()
        scaled[row] *= factor
        a = balanced_accuracy(ConfusionMatrix.from_counts(CLASSES, counts))
        b = balanced_accuracy(ConfusionMatrix.from_counts(CLASSES, scaled))
        assert a == pytest.approx(b, abs=1e-12)

    @given(st.lists(st.integers(0, 9), min_size=6, max_size=6))
    def test_equal_rows_accuracy_equals_balanced(self, vals):
        # rows [a, b, c] with a fixed total: each row is a permutation-free split of 10
        rows = []
        for i in range(3):
            a, b = sorted(vals[2 * i: 2 * i + 2])
            rows.append([a, b - a, 9 - b])
        cm = ConfusionMatrix.from_counts(CLASSES, rows)
        assert accuracy(cm) == pytest.approx(balanced_accuracy(cm), abs=1e-12)

    def test_random_label_sets(self):
        rng = np.random.default_rng(7)
        names = np.array(["Left", "Through", "Right", "Unknown"])
        for _ in range(100):
            n = int(rng.integers(5, 80))
            truth = {f"v{i}": str(names[rng.integers(0, 3)]) for i in range(n)}
            pred = {f"v{i}": str(names[rng.integers(0, 4)]) for i in range(n)}
            cm = build_confusion(truth, pred)
            got = (accuracy(cm), balanced_accuracy(cm), macro_f1(cm))
            assert got == pytest.approx(oracle_metrics(truth, pred), abs=1e-12)


class TestAlignment:
    def test_recovers_permutation(self):
        truth = {"a": "Left", "b": "Left", "c": "Through", "d": "Right"}
        pred = {"a": "cluster-1", "b": "cluster-1", "c": "cluster-0", "d": "Unknown"}
        mapping = align_labels(truth, pred)
        assert mapping["cluster-1"] == "Left" and mapping["cluster-0"] == "Through"
        assert relabel(pred, mapping) == {"a": "Left", "b": "Left", "c": "Through", "d": "Unknown"}

    def test_matches_brute_force_permutations(self):
        from itertools import permutations
        rng = np.random.default_rng(3)
        true_names = ["Left", "Through", "Right"]
        for _ in range(30):
            truth = {f"v{i}": true_names[rng.integers(0, 3)] for i in range(40)}
            pred = {f"v{i}": f"c{rng.integers(0, 3)}" for i in range(40)}
            pred_names = sorted(set(pred.values()))
            best = max(sum(truth[v] == dict(zip(pred_names, perm))[p] for v, p in pred.items())
                       for perm in permutations(true_names, len(pred_names)))
            aligned = relabel(pred, align_labels(truth, pred))
            assert sum(truth[v] == p for v, p in aligned.items()) == best


class TestReporting:
    def test_json_and_table(self):
        cm = ConfusionMatrix.from_counts(CLASSES, EXAMPLE)
        report = metrics_report(cm)
        doc = json.loads(report_json(report))
        assert doc["accuracy"] == 0.9 and doc["macro_f1"] == 0.899327
        assert doc["confusion"] == EXAMPLE
        table = report_table(report)
        assert "balanced accuracy  0.9" in table
        assert table.splitlines()[0].split()[-2:] == ["recall", "F1"]

    def test_load_labels(self, tmp_path):
        p = tmp_path / "l.csv"
        p.write_text("vehicle_id,label,similarity\na,Left,1\nb,Unknown,\n", encoding="utf-8")
        assert load_labels(p) == {"a": "Left", "b": "Unknown"}
        p.write_text("vehicle_id,label\na,Left\na,Right\n", encoding="utf-8")
        with pytest.raises(EvaluationError, match="duplicate"):
            load_labels(p)
        p.write_text("id,label\n", encoding="utf-8")
        with pytest.raises(EvaluationError):
            load_labels(p)
