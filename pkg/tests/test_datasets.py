import json

import numpy as np
import pytest

from qvarlab.datasets import (Dataset, DatasetError, SynthFsSpec, SynthOdSpec, gen_fs, gen_od,
                              load_csv, load_labels, load_results, make_result, save_csv,
                              save_labels, save_results)


class TestDataset:
    def test_default_names(self):
        assert Dataset(np.zeros((2, 3))).feature_names == ["f0", "f1", "f2"]

    def test_vector_becomes_column(self):
        assert Dataset(np.arange(3.0)).shape == (3, 1)

    def test_rejects_bad_input(self):
        with pytest.raises(DatasetError):
            Dataset(np.zeros((1, 2)))
        with pytest.raises(DatasetError, match="row 1, column 0"):
            Dataset(np.array([[0.0], [np.nan]]))
        with pytest.raises(DatasetError):
            Dataset(np.zeros((2, 2)), ["a"])


class TestGenFs:
    def test_shape_and_names(self):
        d = gen_fs(SynthFsSpec())
        assert d.shape == (32, 10)
        assert d.feature_names[:2] == ["inf0", "inf1"] and d.feature_names[-1] == "uninf2"

    @pytest.mark.parametrize("seed", range(5))
    def test_column_variances(self, seed):
        d = gen_fs(SynthFsSpec(seed=seed))
        var = d.records.var(axis=0)
        assert np.all(np.abs(var[:7] - 1 / 3) <= 0.15)
        assert np.all(var[7:] < 0.01)
        assert np.all(np.abs(d.records[:, :7]) <= 1)

    def test_synth_2_noise(self):
        var = gen_fs(SynthFsSpec(noise_sigma=0.5, seed=0)).records[:, 7:].var(axis=0)
        assert np.all((var > 0.05) & (var < 0.6))

    def test_deterministic(self):
        np.testing.assert_array_equal(gen_fs(SynthFsSpec(seed=3)).records,
                                      gen_fs(SynthFsSpec(seed=3)).records)
        assert not np.array_equal(gen_fs(SynthFsSpec(seed=3)).records,
                                  gen_fs(SynthFsSpec(seed=4)).records)

    def test_columns_do_not_depend_on_count(self):
        a = gen_fs(SynthFsSpec(informative=3, uninformative=0, seed=1)).records
        b = gen_fs(SynthFsSpec(informative=7, uninformative=3, seed=1)).records
        np.testing.assert_array_equal(a, b[:, :3])

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SynthFsSpec(noise_sigma=0)


class TestGenOd:
    def test_label_count(self):
        d, labels = gen_od(SynthOdSpec())
        assert d.shape == (500, 20)
        assert len(labels) == 10 and labels == sorted(set(labels))

    @pytest.mark.parametrize("c,M,expected", [(0.1, 500, 50), (0.2, 5, 1), (0.3, 7, 3)])
    def test_ceil_count(self, c, M, expected):
        assert len(gen_od(SynthOdSpec(M, 2, c, 0))[1]) == expected

    def test_outliers_in_box_and_far(self):
        d, labels = gen_od(SynthOdSpec(50, 3, 0.1, 2, min_outlier_distance=3.0))
        X = d.records
        inl = np.delete(X, labels, axis=0)
        for i in labels:
            assert np.all(np.abs(X[i]) <= 6)
            assert np.linalg.norm(inl - X[i], axis=1).min() >= 3.0

    def test_unplaceable_outlier(self):
        with pytest.raises(ValueError):
            gen_od(SynthOdSpec(5, 1, 0.2, 0, min_outlier_distance=100.0))

    def test_deterministic(self):
        a, la = gen_od(SynthOdSpec(40, 3, 0.1, 7))
        b, lb = gen_od(SynthOdSpec(40, 3, 0.1, 7))
        np.testing.assert_array_equal(a.records, b.records)
        assert la == lb

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SynthOdSpec(contamination=0.0)


class TestCsv:
    def test_round_trip(self, tmp_path):
        d = gen_fs(SynthFsSpec(records=4, seed=0))
        save_csv(tmp_path / "a.csv", d)
        back = load_csv(tmp_path / "a.csv")
        np.testing.assert_array_equal(back.records, d.records)
        assert back.feature_names == d.feature_names

    def test_headerless(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("1,2\n3,4\n")
        d = load_csv(p)
        assert d.shape == (2, 2) and d.feature_names == ["f0", "f1"]

    @pytest.mark.parametrize("text,match", [
        ("a,b\n1,2\n3\n", "line 3 has 1 fields"),
        ("a,b\n1,2\n3,x\n", "line 3, column 2"),
        ("1,2\n3,inf\n", "line 2, column 2: non-finite"),
        ("a,b\n", "no data rows"),
        ("", "no data"),
    ])
    def test_errors(self, tmp_path, text, match):
        p = tmp_path / "bad.csv"
        p.write_text(text)
        with pytest.raises(DatasetError, match=match):
            load_csv(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError):
            load_csv(tmp_path / "nope.csv")

    def test_labels(self, tmp_path):
        save_labels(tmp_path / "l.txt", [3, 9])
        assert load_labels(tmp_path / "l.txt") == [3, 9]


class TestResults:
    def test_round_trip(self, tmp_path):
        doc = make_result("hqfs", {"method": "exact"}, [{"a_hat": np.float64(0.1)}],
                          [np.int64(2), 0, 1], {"acc": 1.0}, seed=0, kept=np.array([0, 1]))
        save_results(tmp_path / "r.json", doc)
        back = load_results(tmp_path / "r.json")
        assert back == json.loads(json.dumps(doc))
        assert back["ranking"] == [2, 0, 1] and back["kept"] == [0, 1]

    def test_rejects_missing_keys(self, tmp_path):
        p = tmp_path / "r.json"
        p.write_text('{"task": "qvar"}')
        with pytest.raises(DatasetError):
            load_results(p)

    def test_unknown_task(self):
        with pytest.raises(ValueError):
            make_result("cluster", {}, [], [])
