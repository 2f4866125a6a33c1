import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from poincare.errors import InputError
from poincare.results import COLUMNS, ResultRow, dumps, format_params, parse_params, read_results, write_results

keys = st.text("abcdefghijklmnopqrstuvwxyz_", min_size=1, max_size=8)
values = st.one_of(st.integers(-10**6, 10**6), st.floats(allow_nan=False, allow_infinity=False),
                   st.text("abcxyz_.-", min_size=1, max_size=6).filter(lambda s: not _numeric(s)))


def _numeric(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


@given(st.dictionaries(keys, values, max_size=5))
def test_params_round_trip(params):
    assert parse_params(format_params(params)) == params


def test_numpy_scalars_are_plain():
    text = format_params({"x": np.float64(0.1), "k": np.int64(3), "flag": True})
    assert text == "x=0.1;k=3;flag=1"


def test_reserved_characters():
    with pytest.raises(InputError):
        format_params({"a": "x;y"})


@given(st.lists(st.tuples(st.floats(allow_nan=True), st.one_of(st.none(), st.floats(0, 10))), max_size=5))
@settings(max_examples=30)
def test_file_round_trip(items):
    rows = [ResultRow("estimate", "exact", 10 + i, {"lambda": 0.1 * i}, est, i, wall, "ok", "a, \"quoted\" note")
            for i, (est, wall) in enumerate(items)]
    header, back = read_results(dumps(rows, {"tool": "poincare", "seed": 3}, timestamp="T"))
    assert header == {"tool": "poincare", "seed": "3", "timestamp": "T"}
    assert len(back) == len(rows)
    for a, b in zip(rows, back):
        assert (a.experiment, a.method, a.n, a.params, a.rep, a.wall_time, a.status, a.note) == \
               (b.experiment, b.method, b.n, b.params, b.rep, b.wall_time, b.status, b.note)
        assert a.estimate == b.estimate or (math.isnan(a.estimate) and math.isnan(b.estimate))


def test_layout():
    buf = io.StringIO()
    write_results([ResultRow("oracle", "hermite_oracle", 0, {"kappa": 1e-3}, 0.5)], {"seed": 0}, buf, "T")
    lines = buf.getvalue().splitlines()
    assert lines[:2] == ["# seed: 0", "# timestamp: T"]
    assert lines[2] == ",".join(COLUMNS)
    assert lines[3] == "oracle,hermite_oracle,0,kappa=0.001,0.5,0,,ok,"


def test_read_from_path(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text(dumps([ResultRow("e", "m", 1, {}, float("inf"))], {}, "T"))
    _, rows = read_results(p)
    assert rows[0].estimate == float("inf") and rows[0].params == {}
