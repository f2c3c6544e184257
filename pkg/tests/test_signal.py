import numpy as np
import pytest

from havokts.errors import BoundsError, DataError, DegenerateSignalError, ParseError, SchemaError
from havokts.signal import (
    CsvSchema, Dataset, ExperimentParams, Sequence, export_dataset, load_dataset, split, standardize,
)


def seq(values, dt=0.1, sid="s"):
    return Sequence(np.asarray(values, dtype=float), dt, ExperimentParams(sid))


def test_wide_csv_with_time_column(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("t,a,b\n0,1,5\n0.1,2,6\n0.2,3,7\n0.3,4,8\n")
    ds = load_dataset(p)
    assert len(ds) == 2
    assert [len(s) for s in ds] == [4, 4]
    assert ds.dt == pytest.approx(0.1)
    assert ds["b"].values.tolist() == [5, 6, 7, 8]


def test_long_csv_single_id(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("id,t,value\nx,0,1\nx,0.5,2\nx,1.0,3\n")
    ds = load_dataset(p)
    assert len(ds) == 1 and ds.dt == 0.5 and ds[0].id == "x"


def test_long_csv_groups_in_first_seen_order(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("id,t,value\nb,0,1\na,0,9\nb,1,2\na,1,8\n")
    ds = load_dataset(p)
    assert ds.ids == ["b", "a"]
    assert ds["a"].values.tolist() == [9, 8]


def test_nan_error_names_sequence_and_row(tmp_path):
    rows = ["t,p1,p2,p3"] + [f"{i},1,2,{'nan' if i == 7 else 3}" for i in range(1, 10)]
    p = tmp_path / "d.csv"
    p.write_text("\n".join(rows) + "\n")
    with pytest.raises(DataError, match=r"p3.*row 7"):
        load_dataset(p)


def test_parse_error_location(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b\n1,2\n3,oops\n")
    with pytest.raises(ParseError, match=r"row 2.*'b'"):
        load_dataset(p, CsvSchema(dt=1.0))


def test_nonuniform_time_rejected(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("t,a\n0,1\n0.1,2\n0.3,3\n")
    with pytest.raises(SchemaError, match="non-uniform"):
        load_dataset(p)


def test_missing_dt_rejected(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a\n1\n2\n")
    with pytest.raises(SchemaError):
        load_dataset(p)
    assert len(load_dataset(p, CsvSchema(dt=0.2))[0]) == 2


def test_ragged_wide_columns(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("t,a,b\n0,1,1\n1,2,2\n2,3,\n")
    ds = load_dataset(p)
    assert [len(s) for s in ds] == [3, 2]


def test_roundtrip_is_bit_exact(tmp_path, rng):
    vals = [rng.standard_normal(50) * 10.0 ** rng.integers(-300, 300, 50), rng.standard_normal(37)]
    ds = Dataset((seq(vals[0], 0.013, "a"), seq(vals[1], 0.013, "b")))
    for layout in ("wide", "long"):
        p = tmp_path / f"{layout}.csv"
        export_dataset(ds, p, layout=layout)
        back = load_dataset(p, CsvSchema(layout=layout))
        for s in ds:
            assert np.array_equal(back[s.id].values, s.values)


def test_dataset_rejects_duplicates_and_mixed_dt():
    with pytest.raises(SchemaError):
        Dataset((seq([1, 2], sid="a"), seq([1, 2], sid="a")))
    with pytest.raises(SchemaError):
        Dataset((seq([1, 2], 0.1, "a"), seq([1, 2], 0.2, "b")))


def test_standardize_examples():
    assert standardize(seq([1, 3])).values.tolist() == [-1.0, 1.0]
    s = standardize(seq(np.sin(np.arange(100.0))))
    assert np.max(np.abs(standardize(s).values - s.values)) < 1e-12
    with pytest.raises(DegenerateSignalError):
        standardize(seq([5, 5, 5]))


def test_split_examples():
    tr, te = split(seq(np.arange(2000.0)), 1500)
    assert (len(tr), len(te)) == (1500, 500)
    tr, te = split(seq(np.arange(10.0)), 9)
    assert (len(tr), len(te)) == (9, 1)
    assert np.array_equal(np.concatenate([tr.values, te.values]), np.arange(10.0))
    for bad in (0, 10):
        with pytest.raises(BoundsError):
            split(seq(np.arange(10.0)), bad)


def test_sequence_is_read_only():
    s = seq([1, 2, 3])
    with pytest.raises(ValueError):
        s.values[0] = 5
