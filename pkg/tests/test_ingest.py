import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from icfrank.errors import MalformedInputError, ValidationError
from icfrank.ingest import Cohort, TimeSeries, read_manifest, read_rr, write_manifest, write_rr


def _write(path, text):
    path.write_bytes(text.encode("utf-8"))
    return path


def test_read_rr_plain(tmp_path):
    s = read_rr(_write(tmp_path / "a.txt", "0.8\n0.9\n1.1\n"))
    assert s.values.tolist() == [0.8, 0.9, 1.1]
    assert s.dropped == 0
    assert s.id == "a"


def test_read_rr_drops_nonpositive(tmp_path):
    s = read_rr(_write(tmp_path / "a.txt", "0.8\n-1.0\n0.9\n"))
    assert s.values.tolist() == [0.8, 0.9]
    assert s.dropped == 1


def test_read_rr_few_non_numeric_tolerated(tmp_path):
    s = read_rr(_write(tmp_path / "a.txt", "0.8\n" * 19 + "n/a\n"))
    assert len(s) == 19
    assert s.dropped == 1


def test_read_rr_threshold_configurable(tmp_path):
    path = _write(tmp_path / "a.txt", "0.8\nabc\n0.9\n0.7\n")
    with pytest.raises(MalformedInputError):
        read_rr(path)
    assert read_rr(path, max_drop_fraction=0.5).dropped == 1


def test_read_rr_mostly_garbage(tmp_path):
    with pytest.raises(MalformedInputError):
        read_rr(_write(tmp_path / "a.txt", "0.8\nabc\n0.9\nxyz\n"))


def test_read_rr_blank_lines_and_crlf(tmp_path):
    s = read_rr(_write(tmp_path / "a.txt", "0.8\r\n\r\n0.9\r\n\n"))
    assert s.values.tolist() == [0.8, 0.9]
    assert s.dropped == 0


def test_read_rr_missing_file(tmp_path):
    with pytest.raises(OSError):
        read_rr(tmp_path / "nope.txt")


def _cohort_dir(tmp_path, manifest):
    (tmp_path / "rr").mkdir()
    _write(tmp_path / "rr" / "a.txt", "0.8\n0.9\n")
    _write(tmp_path / "rr" / "b.txt", "0.7\n0.6\n")
    return _write(tmp_path / "m.csv", manifest)


def test_read_manifest(tmp_path):
    m = _cohort_dir(tmp_path, "id,path,label\ns1,rr/a.txt,healthy\ns2,rr/b.txt,chf\n")
    cohort = read_manifest(m)
    assert cohort.ids == ["s1", "s2"]
    assert cohort.labels == [0, 1]
    assert cohort.subjects[1].values.tolist() == [0.7, 0.6]


def test_read_manifest_duplicate_id(tmp_path):
    m = _cohort_dir(tmp_path, "id,path,label\ns1,rr/a.txt,healthy\ns1,rr/b.txt,chf\n")
    with pytest.raises(ValidationError):
        read_manifest(m)


def test_read_manifest_empty_label(tmp_path):
    m = _cohort_dir(tmp_path, "id,path,label\ns1,rr/a.txt,\n")
    assert read_manifest(m).subjects[0].label is None


def test_read_manifest_missing_file_names_row(tmp_path):
    m = _cohort_dir(tmp_path, "id,path,label\ns1,rr/a.txt,healthy\nzz,rr/none.txt,chf\n")
    with pytest.raises(FileNotFoundError, match="zz"):
        read_manifest(m)


def test_read_manifest_bad_header(tmp_path):
    m = _cohort_dir(tmp_path, "subject,file,label\ns1,rr/a.txt,healthy\n")
    with pytest.raises(ValidationError):
        read_manifest(m)


def test_cohort_label_checks():
    c = Cohort([TimeSeries("a", [1.0, 1.0], 0), TimeSeries("b", [1.0, 1.0], 0)])
    with pytest.raises(ValidationError):
        c.require_labels()
    with pytest.raises(ValidationError):
        TimeSeries("x", [1.0, 0.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(min_value=1e-3, max_value=1e3, allow_nan=False), min_size=1, max_size=50))
def test_roundtrip_12_digits(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("rt") / "s.txt"
    write_rr(path, TimeSeries("s", values))
    back = read_rr(path)
    np.testing.assert_allclose(back.values, values, rtol=1e-11)
    # identical bytes -> identical series
    assert read_rr(path).values.tolist() == back.values.tolist()


def test_write_manifest_roundtrip(tmp_path):
    write_rr(tmp_path / "rr" / "a.txt", TimeSeries("a", [0.5, 0.6]))
    write_manifest(tmp_path / "m.csv", [("a", "rr/a.txt", 1)])
    c = read_manifest(tmp_path / "m.csv")
    assert c.labels == [1]
