import numpy as np
import pytest

from hpclust.bench import MetricRecord, summarize
from hpclust.dataio import (RECORD_FIELDS, SUMMARY_FIELDS, DataFormatError, load_dataset,
                            load_results, save_dataset, save_labels, save_results, summary_path)


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_examples(tmp_path):
    X = load_dataset(write(tmp_path, "1,2\n3,4\n"))
    assert X.tolist() == [[1.0, 2.0], [3.0, 4.0]] and X.dtype == np.float64
    X = load_dataset(write(tmp_path, "a;b\n1;2\n\n3;4.5e1\n"), delimiter=";", has_header=True)
    assert X.tolist() == [[1.0, 2.0], [3.0, 45.0]]


def test_ragged_row_named(tmp_path):
    with pytest.raises(DataFormatError, match="row 3"):
        load_dataset(write(tmp_path, "1,2\n3,4\n5\n"))


def test_unparsable_field_named(tmp_path):
    with pytest.raises(DataFormatError, match=r"row 2, column 2.*'abc'"):
        load_dataset(write(tmp_path, "1,2\n3,abc\n"))


@pytest.mark.parametrize("text", ["", "x,y\n", "1,nan\n", "inf,1\n"])
def test_rejected_files(tmp_path, text):
    with pytest.raises(DataFormatError):
        load_dataset(write(tmp_path, text), has_header=text.startswith("x"))


def test_dataset_round_trip(tmp_path):
    X = np.random.default_rng(0).normal(size=(20, 3)) * 1e-7
    p = tmp_path / "x.csv"
    save_dataset(X, p)
    assert np.array_equal(load_dataset(p), X)


def test_labels_file(tmp_path):
    p = tmp_path / "l.txt"
    save_labels(np.array([2, 0, 1]), p)
    assert p.read_text() == "2\n0\n1\n"


def _series(values, alg="forgy"):
    recs = [MetricRecord("d", alg, 2, i, objective=v, epsilon=0.0, t=0.25, n_d=10, f_star=1.0)
            for i, v in enumerate(values)]
    return summarize(recs)


def test_empty_results(tmp_path):
    p = tmp_path / "r.csv"
    spath = save_results([], p)
    assert p.read_text() == ",".join(RECORD_FIELDS) + "\n"
    assert spath == summary_path(p) == tmp_path / "r_summary.csv"
    assert spath.read_text() == ",".join(SUMMARY_FIELDS) + "\n"


def test_single_record(tmp_path):
    p = tmp_path / "r.csv"
    spath = save_results([_series([3.5])], p)
    lines = p.read_text().splitlines()
    assert len(lines) == 2
    summary = spath.read_text().splitlines()
    assert len(summary) == 2
    row = dict(zip(SUMMARY_FIELDS, summary[1].split(",")))
    assert row["objective_med"] == "3.5" and row["objective_std"] == ""
    assert row["t_bar_med"] == "" and row["succ"] == "0"


def test_results_round_trip(tmp_path):
    s = _series([1.0, 2.0 / 3.0, 1e30])
    s.records[1].t_bar = 0.125
    p = tmp_path / "r.tsv"
    save_results([s], p, delimiter="\t")
    back = load_results(p, delimiter="\t")
    assert back == s.records
    assert summary_path(p).name == "r_summary.tsv"


def test_results_header_checked(tmp_path):
    with pytest.raises(DataFormatError):
        load_results(write(tmp_path, "a,b\n1,2\n"))
