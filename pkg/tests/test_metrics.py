import warnings

import numpy as np
import pytest

from qagnn.metrics import ConfusionMatrix, confusion, evaluate, format_table, report

GCN_ROW = ConfusionMatrix(tp=3, fp=0, tn=19, fn=2)


class TestConfusion:
    def test_perfect(self):
        assert confusion([1, 1, 0], [1, 1, 0]) == ConfusionMatrix(2, 0, 1, 0)

    def test_all_missed(self):
        assert confusion([1, 1, 1], [0, 0, 0]).fn == 3

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            confusion([], [])
        with pytest.raises(ValueError):
            confusion([1, 0], [1])
        with pytest.raises(ValueError):
            confusion([2], [1])


class TestReport:
    def test_reference_row(self):
        r = report(GCN_ROW)
        expected = [0.9167, 0.9524, 0.8000, 0.8500, 0.0, 0.4000, 1.0]
        np.testing.assert_allclose(np.round(r.row(), 4), expected, atol=1e-12)

    def test_macro_f1_is_mean_of_class_f1(self):
        r = report(GCN_ROW)
        assert r.per_class["normal"]["f1"] == pytest.approx(0.95)
        assert r.per_class["attack"]["f1"] == pytest.approx(0.75)
        assert r.f1 == pytest.approx(0.85)
        # the harmonic mean of macro precision and recall would be wrong here
        alt = 2 * r.precision * r.recall / (r.precision + r.recall)
        assert round(alt, 4) == 0.8696 and abs(r.f1 - alt) > 0.01

    def test_perfect(self):
        r = evaluate([0, 1, 1, 0], [0, 1, 1, 0])
        assert r.row() == [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0]
        assert r.warnings == []

    def test_all_negative_balanced(self):
        with pytest.warns(RuntimeWarning):
            r = report(ConfusionMatrix(tp=0, fp=0, tn=5, fn=5))
        assert r.accuracy == 0.5 and r.recall == 0.5 and r.fnr == 1.0

    def test_single_class_truth_warns_without_error(self):
        with pytest.warns(RuntimeWarning, match="0/0"):
            r = evaluate([0, 0, 0], [0, 1, 0])
        assert r.fnr == 0.0 and any("FNR" in w for w in r.warnings)
        for v in r.row():
            assert 0.0 <= v <= 1.0

    def test_rates_in_unit_interval(self, rng):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for _ in range(200):
                n = int(rng.integers(1, 30))
                r = evaluate(rng.integers(0, 2, n), rng.integers(0, 2, n))
                assert all(0.0 <= v <= 1.0 for v in r.row())

    def test_json_and_table(self):
        r = report(GCN_ROW)
        js = r.to_json()
        assert js["confusion"] == {"tp": 3, "fp": 0, "tn": 19, "fn": 2}
        text = format_table({"GCN": r})
        header, line = text.splitlines()
        assert header.split() == ["Model", "Acc", "Prec", "Rec", "F1", "FPR", "FNR", "Spec"]
        assert line.split()[1:] == ["0.9167", "0.9524", "0.8000", "0.8500", "0.0000", "0.4000", "1.0000"]
