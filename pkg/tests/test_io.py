import json

import numpy as np
import pytest

from symspectra import presets
from symspectra.errors import ParseError
from symspectra.fileio import (dump_pair, dump_system, load_input_function,
                               load_pair, load_system)
from symspectra.system import weighted_norm


def test_system_roundtrip(tmp_path, deg1):
    path = tmp_path / "deg1.json"
    path.write_text(json.dumps(dump_system(deg1)))
    loaded = load_system(str(path))
    assert loaded.dims == deg1.dims
    assert loaded.interval == deg1.interval
    ts = np.linspace(0, 2, 17)
    assert np.max(np.abs(loaded.coeff_delta(ts) - deg1.coeff_delta(ts))) == 0.0
    assert loaded.label == "DEG1"


def test_system_with_middle_block_roundtrip(smoke3):
    loaded = load_system(dump_system(smoke3))
    assert loaded.dims.dim_hhat == 1


def test_unknown_field_rejected(free1):
    data = dump_system(free1)
    data["extra"] = 1
    with pytest.raises(ParseError, match="unknown field"):
        load_system(data)


def test_missing_field_rejected(free1):
    data = dump_system(free1)
    del data["weight"]
    with pytest.raises(ParseError, match="missing field"):
        load_system(data)


def test_malformed_matrix_reports_path(free1):
    data = dump_system(free1)
    data["potential"]["pieces"][0][0]["re"] = [[0.0, "x"], [0.0, 0.0]]
    with pytest.raises(ParseError, match="system.potential.pieces"):
        load_system(data)


def test_pair_roundtrip():
    tau = presets.pair_mixed(2)
    loaded = load_pair(dump_pair(tau))
    assert loaded.kind == "constant-selfadjoint"
    assert np.array_equal(loaded.c0, tau.c0)
    assert np.array_equal(loaded.c1, tau.c1)


def test_pair_complex_roundtrip():
    from symspectra.boundary import BoundaryPair
    tau = BoundaryPair.constant(np.eye(2), 1j * np.eye(2))
    loaded = load_pair(dump_pair(tau))
    assert loaded.kind == "general"
    assert np.array_equal(loaded.c1, tau.c1)


def test_pair_kind_mismatch():
    data = {"kind": "constant",
            "c0": [{"re": [[1, 0], [0, 1]]}, {"re": [[0, 0], [0, 0]]}],
            "c1": [{"re": [[0, 0], [0, 0]]}]}
    with pytest.raises(ParseError, match="constant pairs"):
        load_pair(data)


def test_pair_bad_kind():
    with pytest.raises(ParseError, match="kind"):
        load_pair({"kind": "weird", "c0": [{"re": [[1]]}], "c1": [{"re": [[0]]}]})


def test_input_function(free1):
    data = {"breakpoints": [0.0, float(np.pi)],
            "pieces": [[{"re": [1.0, 0.0]}, {"re": [0.0, 1.0]}]],
            "label": "linear"}
    f = load_input_function(data, free1)
    ts = np.array([0.0, 1.0, 2.0])
    assert np.max(np.abs(f.eval(ts) - np.stack([np.ones(3), ts], axis=1))) < 1e-14
    assert weighted_norm(free1, f) > 0


def test_input_function_piecewise_breakpoints(deg1):
    data = {"breakpoints": [0.0, 1.0, 2.0],
            "pieces": [[{"re": [0.0, 1.0]}], [{"re": [0.0, 0.0]}]]}
    f = load_input_function(data, deg1)
    assert f.breakpoints == (1.0,)
    assert np.max(np.abs(f.eval([1.5, 1.9]))) == 0.0


def test_input_function_dimension_mismatch(free1):
    data = {"breakpoints": [0.0, float(np.pi)],
            "pieces": [[{"re": [1.0, 0.0, 0.0]}]]}
    with pytest.raises(ParseError, match="dimension"):
        load_input_function(data, free1)


def test_input_function_coverage(free1):
    data = {"breakpoints": [0.0, 1.0], "pieces": [[{"re": [1.0, 0.0]}]]}
    with pytest.raises(ParseError, match="cover"):
        load_input_function(data, free1)


def test_unreadable_file():
    with pytest.raises(ParseError, match="cannot read"):
        load_system("/nonexistent/system.json")


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ParseError, match="invalid JSON"):
        load_system(str(path))
