"""Tests for artifact envelopes and CSV output."""

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from tracelab import __version__
from tracelab.artifacts import canonical_json, config_hash, to_jsonable, write_csv, write_json
from tracelab.geometry import Point2


class Color(str, Enum):
    RED = "red"


@dataclass
class Record:
    name: str
    values: np.ndarray
    _cache: int = 0


class TestToJsonable:
    """Conversion of result objects to plain JSON."""

    def test_numpy_and_points(self):
        data = to_jsonable({"a": np.array([1.0, 2.0]), "b": np.float64(0.5), "c": Point2(1.0, 2.0)})
        assert data == {"a": [1.0, 2.0], "b": 0.5, "c": [1.0, 2.0]}

    def test_non_finite_becomes_null(self):
        assert to_jsonable([math.inf, math.nan, 1.0]) == [None, None, 1.0]

    def test_dataclass_skips_private_fields(self):
        assert to_jsonable(Record("x", np.arange(2))) == {"name": "x", "values": [0, 1]}

    def test_enum_and_bool(self):
        assert to_jsonable([Color.RED, np.bool_(True)]) == ["red", True]


class TestConfigHash:
    """Hashes of run configurations."""

    def test_key_order_does_not_matter(self):
        assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})

    def test_values_matter(self):
        assert config_hash({"a": 1}) != config_hash({"a": 2})

    def test_canonical_form(self):
        assert canonical_json({"b": 1, "a": np.int64(2)}) == '{"a":2,"b":1}'


class TestWriteJson:
    """The artifact envelope."""

    def test_envelope(self, tmp_path):
        path = write_json(tmp_path / "out" / "x.json", "eval-seminorm", {"p": 2}, 7, {"value": 0.5})
        data = json.loads(path.read_text())
        assert data["command"] == "eval-seminorm"
        assert data["seed"] == 7
        assert data["version"] == __version__
        assert data["config_hash"] == config_hash({"p": 2})
        assert data["payload"] == {"value": 0.5}

    def test_repeat_runs_agree_apart_from_timestamp(self, tmp_path):
        first = json.loads(write_json(tmp_path / "a.json", "c", {"k": 1}, 1, [1.0, 2.0]).read_text())
        second = json.loads(write_json(tmp_path / "b.json", "c", {"k": 1}, 1, [1.0, 2.0]).read_text())
        first.pop("created_at")
        second.pop("created_at")
        assert first == second


class TestWriteCsv:
    """Plain CSV tables."""

    def test_header_and_rows(self, tmp_path):
        path = write_csv(tmp_path / "t.csv", ["x", "y"], [[1, 2], [3, 4]])
        assert path.read_text().splitlines() == ["x,y", "1,2", "3,4"]
