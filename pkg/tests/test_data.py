from __future__ import annotations

import numpy as np
import pytest

from tabmem.data import (
    Column,
    TableSchema,
    duplicate_row_groups,
    encode,
    encode_dataset,
    fit_encoding,
    load_dataset,
    load_schema,
    save_schema,
    write_dataset,
)
from tabmem.errors import InputDataError

from conftest import make_dataset, random_mixed_dataset


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


AGE_SCHEMA = TableSchema(
    columns=(Column("age", "numerical"), Column("job", "categorical"), Column("income", "categorical")),
    label_column="income",
)


class TestSchema:
    def test_duplicate_names_rejected(self):
        with pytest.raises(InputDataError):
            TableSchema(
                columns=(Column("a", "numerical"), Column("a", "categorical")), label_column="a"
            )

    def test_label_must_be_categorical(self):
        with pytest.raises(InputDataError):
            TableSchema(
                columns=(Column("a", "numerical"), Column("b", "categorical")), label_column="a"
            )

    def test_label_must_exist(self):
        with pytest.raises(InputDataError):
            TableSchema(columns=(Column("a", "numerical"), Column("b", "categorical")), label_column="z")

    def test_json_round_trip(self, tmp_path):
        path = tmp_path / "schema.json"
        save_schema(AGE_SCHEMA, path)
        assert load_schema(path) == AGE_SCHEMA

    def test_unknown_keys_rejected(self, tmp_path):
        path = _write(tmp_path, "s.json", '{"version": 1, "label": "b", "columns": [], "bogus": 2}')
        with pytest.raises(InputDataError):
            load_schema(path)


class TestLoadDataset:
    def test_three_row_ingestion(self, tmp_path):
        path = _write(tmp_path, "d.csv", "age,job,income\n30,eng,hi\n40,doc,hi\n50,eng,lo\n")
        ds = load_dataset(path, AGE_SCHEMA)
        assert ds.n_rows == 3
        assert list(ds.row_ids) == [0, 1, 2]
        assert ds.columns["age"].tolist() == [30.0, 40.0, 50.0]

    def test_header_order_free(self, tmp_path):
        path = _write(tmp_path, "d.csv", "income,age,job\nhi,30,eng\n")
        ds = load_dataset(path, AGE_SCHEMA)
        assert ds.columns["age"][0] == 30.0
        assert ds.columns["income"][0] == "hi"

    def test_missing_column(self, tmp_path):
        path = _write(tmp_path, "d.csv", "age,job\n30,eng\n")
        with pytest.raises(InputDataError, match="missing column"):
            load_dataset(path, AGE_SCHEMA)

    def test_nan_numeric_rejected(self, tmp_path):
        path = _write(tmp_path, "d.csv", "age,job,income\nNaN,eng,hi\n")
        with pytest.raises(InputDataError, match="non-finite numeric"):
            load_dataset(path, AGE_SCHEMA)

    def test_unparsable_numeric_rejected(self, tmp_path):
        path = _write(tmp_path, "d.csv", "age,job,income\nold,eng,hi\n")
        with pytest.raises(InputDataError, match="non-finite numeric"):
            load_dataset(path, AGE_SCHEMA)

    def test_empty_file(self, tmp_path):
        path = _write(tmp_path, "d.csv", "")
        with pytest.raises(InputDataError, match="empty file"):
            load_dataset(path, AGE_SCHEMA)

    def test_header_only_file(self, tmp_path):
        path = _write(tmp_path, "d.csv", "age,job,income\n")
        with pytest.raises(InputDataError, match="empty file"):
            load_dataset(path, AGE_SCHEMA)

    def test_missing_cell_rejected(self, tmp_path):
        path = _write(tmp_path, "d.csv", "age,job,income\n30,,hi\n")
        with pytest.raises(InputDataError, match="missing cell"):
            load_dataset(path, AGE_SCHEMA)

    def test_unexpected_column_rejected(self, tmp_path):
        path = _write(tmp_path, "d.csv", "age,job,income,extra\n30,eng,hi,1\n")
        with pytest.raises(InputDataError, match="unexpected column"):
            load_dataset(path, AGE_SCHEMA)

    def test_write_load_write_is_fixed_point(self, tmp_path, rng):
        ds = random_mixed_dataset(rng, 25)
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        write_dataset(ds, first)
        write_dataset(load_dataset(first, ds.schema), second)
        assert first.read_bytes() == second.read_bytes()


class TestEncoding:
    def test_two_point_statistics(self):
        ds = make_dataset(numeric={"n0": [0.0, 2.0]}, labels=["a", "a"])
        stats = fit_encoding(ds)
        assert stats.means["n0"] == 1.0
        assert stats.stds["n0"] == 1.0  # population std

    def test_constant_column_floor(self):
        ds = make_dataset(numeric={"n0": [5.0, 5.0, 5.0]}, labels=["a", "a", "a"])
        stats = fit_encoding(ds)
        assert stats.stds["n0"] == 1e-8

    def test_vocabulary_first_appearance(self):
        ds = make_dataset(categorical={"c0": ["b", "a", "b"]}, labels=["x", "x", "x"])
        stats = fit_encoding(ds)
        assert stats.vocabularies["c0"] == ("b", "a")
        assert stats.frequencies["c0"] == {"b": 2, "a": 1}

    def test_empty_dataset_rejected(self):
        ds = make_dataset(numeric={"n0": []}, labels=[])
        with pytest.raises(InputDataError, match="empty dataset"):
            fit_encoding(ds)

    def test_encode_arithmetic(self):
        ds = make_dataset(numeric={"n0": [0.0, 2.0]}, labels=["a", "a"])
        stats = fit_encoding(ds)
        row = encode({"n0": 3.0, "label": "a"}, stats)
        assert row.numeric[0] == 2.0

    def test_encode_vocab_index_and_unseen(self):
        ds = make_dataset(categorical={"c0": ["b", "a", "b"]}, labels=["x", "x", "x"])
        stats = fit_encoding(ds)
        assert encode({"c0": "a", "label": "x"}, stats).categorical[0] == 1
        assert encode({"c0": "z", "label": "x"}, stats).categorical[0] == 2  # reserved index

    def test_encode_deterministic(self):
        ds = make_dataset(numeric={"n0": [0.0, 1.0, 4.0]}, labels=["a", "b", "a"])
        stats = fit_encoding(ds)
        a = encode({"n0": 2.5, "label": "b"}, stats)
        b = encode({"n0": 2.5, "label": "b"}, stats)
        assert np.array_equal(a.numeric, b.numeric)
        assert np.array_equal(a.categorical, b.categorical)

    def test_self_encoding_is_standardized(self, rng):
        ds = random_mixed_dataset(rng, 200)
        stats = fit_encoding(ds)
        enc = encode_dataset(ds, stats)
        means = enc.numeric.mean(axis=0)
        stds = enc.numeric.std(axis=0)
        assert np.all(np.abs(means) < 1e-9 * ds.n_rows)
        assert np.allclose(stds, 1.0, atol=1e-9)

    def test_encode_dataset_matches_single_rows(self, rng):
        ds = random_mixed_dataset(rng, 30)
        stats = fit_encoding(ds)
        enc = encode_dataset(ds, stats)
        for pos in (0, 7, 29):
            single = encode(ds.row_mapping(pos), stats)
            assert np.array_equal(single.numeric, enc.numeric[pos])
            assert np.array_equal(single.categorical, enc.categorical[pos])


class TestDataset:
    def test_row_ids_preserved_by_drop(self):
        ds = make_dataset(numeric={"n0": [1.0, 2.0, 3.0]}, labels=["a", "a", "a"])
        kept = ds.drop_ids([1])
        assert list(kept.row_ids) == [0, 2]
        assert kept.columns["n0"].tolist() == [1.0, 3.0]

    def test_drop_unknown_id_rejected(self):
        ds = make_dataset(numeric={"n0": [1.0]}, labels=["a"])
        with pytest.raises(InputDataError, match="tag/id mismatch"):
            ds.drop_ids([5])

    def test_non_finite_rejected(self):
        with pytest.raises(InputDataError, match="non-finite"):
            make_dataset(numeric={"n0": [np.nan]}, labels=["a"])

    def test_duplicate_groups(self):
        ds = make_dataset(
            numeric={"n0": [1.0, 2.0, 1.0, 1.0]}, labels=["a", "a", "a", "b"]
        )
        assert duplicate_row_groups(ds) == [[0, 2]]
