import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from chdg import io
from chdg.diagnostics import CSV_COLUMNS, make_record
from chdg.grid_ops import Grid
from chdg.model import ModelParams


def test_header_layout():
    data = io.encode_snapshot(np.arange(6.0).reshape(2, 3), 1.5, (1.0, 2.0))
    assert data[:4] == b"CHDG"
    assert struct.unpack_from("<IIII", data, 4) == (1, 2, 2, 3)
    assert struct.unpack_from("<d", data, 20) == (1.5,)
    assert len(data) == 20 + 8 + 16 + 48


@given(arrays(np.float64, st.sampled_from([(5,), (3, 4)]), elements=st.floats(allow_nan=False)),
       st.floats(0, 1e6))
def test_roundtrip_bit_exact(u, t):
    length = (1.0,) * u.ndim
    v, t2, L = io.decode_snapshot(io.encode_snapshot(u, t, length))
    assert v.tobytes() == u.tobytes() and t2 == t and L == length


def test_corrupt_rejected():
    good = io.encode_snapshot(np.zeros(4), 0.0, (1.0,))
    with pytest.raises(io.FormatError):
        io.decode_snapshot(b"XXXX" + good[4:])
    with pytest.raises(io.FormatError):
        io.decode_snapshot(good[:-1])
    bad = bytearray(good)
    bad[4] = 2
    with pytest.raises(io.FormatError):
        io.decode_snapshot(bytes(bad))


def test_file_roundtrip(tmp_path):
    u = np.random.default_rng(0).standard_normal((4, 5))
    io.write_snapshot(tmp_path / "s.chdg", u, 0.3, (2.0, 1.0))
    v, t, L = io.read_snapshot(tmp_path / "s.chdg")
    assert np.array_equal(u, v) and t == 0.3 and L == (2.0, 1.0)


def test_csv_roundtrip(tmp_path):
    g = Grid.interval(16, 1.0)
    x = g.coords()[0]
    recs = [make_record(g, t, 0.1 * np.cos(np.pi * x) * (1 + t), ModelParams()) for t in (0.0, 0.1)]
    io.write_diagnostics_csv(tmp_path / "d.csv", recs)
    text = (tmp_path / "d.csv").read_text()
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    table = io.read_diagnostics_csv(tmp_path / "d.csv")
    assert np.array_equal(table, np.array([r.row() for r in recs], dtype=float))
