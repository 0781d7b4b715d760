import numpy as np

from sipkit.output import (
    base_metadata,
    format_cell,
    metadata_block,
    read_csv,
    write_csv,
    write_json,
)


def test_format_cell_values():
    assert format_cell(None) == ""
    assert format_cell(1.5) == "1.5"
    assert format_cell(np.float64(0.1)) == "0.1"
    assert format_cell(np.int64(3)) == "3"
    assert format_cell(True) == "True"
    assert format_cell("x") == "x"


def test_csv_roundtrip(tmp_path):
    path = tmp_path / "r.csv"
    write_csv(path, ["a", "b"], [[1, 2.5], ["x", None]], {"seed": 7})
    meta, header, rows = read_csv(path)
    assert meta["seed"] == "7"
    assert header == ["a", "b"]
    assert rows == [["1", "2.5"], ["x", ""]]


def test_metadata_block_deterministic():
    meta = base_metadata(seed=3, extra="v")
    assert metadata_block(meta) == metadata_block(meta)
    assert any("decisions" in line for line in metadata_block(meta))


def test_write_json_numpy_safe(tmp_path):
    path = tmp_path / "r.json"
    write_json(path, {"v": np.float64(1.5), "a": np.arange(3)}, {"seed": 1})
    text1 = path.read_bytes()
    write_json(path, {"v": np.float64(1.5), "a": np.arange(3)}, {"seed": 1})
    assert path.read_bytes() == text1
