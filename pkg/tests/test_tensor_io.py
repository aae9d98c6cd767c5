import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from knnood.errors import (
    BadMagic,
    EmptyStack,
    InconsistentExampleCount,
    NonFiniteValue,
    NonNumericCell,
    RaggedRows,
    TruncatedPayload,
    UnsupportedVersion,
)
from knnood.tensor_io import (
    EmbeddingMatrix,
    load_layer_stack,
    parse_csv_matrix,
    parse_emb,
    save_matrix,
    write_csv_matrix,
    write_emb,
)


def header(n, d, code=1, version=1, magic=b"EMB1"):
    return struct.pack("<4sIBQQ", magic, version, code, n, d)


def test_smallest_file():
    m = parse_emb(header(1, 1) + struct.pack("<d", 0.0))
    assert m.n == 1 and m.d == 1
    assert m.values[0, 0] == 0.0


def test_f32_widening_is_exact():
    vals = np.array([0.1, -2.5, 3.0, 1e-3, 7.25, -0.0], dtype="<f4")
    m = parse_emb(header(2, 3, code=0) + vals.tobytes())
    assert m.values.dtype == np.float64
    assert m.values.shape == (2, 3)
    np.testing.assert_array_equal(m.values.ravel(), vals.astype(np.float64))


def test_short_payload_rejected():
    with pytest.raises(TruncatedPayload, match="byte offset"):
        parse_emb(header(2, 3) + np.zeros(5).tobytes())


def test_long_payload_rejected():
    with pytest.raises(TruncatedPayload):
        parse_emb(header(1, 1) + np.zeros(2).tobytes())


def test_header_errors():
    with pytest.raises(BadMagic, match="byte offset 0"):
        parse_emb(header(1, 1, magic=b"EMB2") + bytes(8))
    with pytest.raises(UnsupportedVersion, match="byte offset 4"):
        parse_emb(header(1, 1, version=2) + bytes(8))
    with pytest.raises(TruncatedPayload):
        parse_emb(b"EMB1\x01\x00")


def test_nonfinite_offset_reported():
    payload = np.array([1.0, np.nan], dtype="<f8").tobytes()
    with pytest.raises(NonFiniteValue, match="byte offset 33"):
        parse_emb(header(1, 2) + payload)


def test_header_size_and_smallest_stream():
    # 4 magic + 4 version + 1 dtype + 8 n + 8 d, then one f64
    blob = write_emb(EmbeddingMatrix([[0.0]]), "f64")
    assert len(blob) == 33


def test_f32_roundtrip_rounds_to_nearest():
    x = 0.1  # not representable in f32
    back = parse_emb(write_emb(EmbeddingMatrix([[x]]), "f32"))
    assert back.values[0, 0] == float(np.float32(x))
    assert back.values[0, 0] != x


def test_random_roundtrip():
    rng = np.random.default_rng(3)
    m = EmbeddingMatrix(rng.standard_normal((5, 4)))
    assert parse_emb(write_emb(m)) == m


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 5)), elements=finite))
def test_roundtrip_bytes_stable(values):
    m = EmbeddingMatrix(values)
    blob = write_emb(m)
    back = parse_emb(blob)
    assert back == m
    assert write_emb(back) == blob
    # the CSV route yields identical values too
    assert parse_csv_matrix(write_csv_matrix(m)) == m


@pytest.mark.parametrize(
    "text, shape",
    [("0,1\n3,4\n", (2, 2)), ("x,y\n0,1\n", (1, 2)), ("0,1\r\n3,4\r\n", (2, 2)), ("1.5e3\n-2\n", (2, 1))],
)
def test_csv_shapes(text, shape):
    assert parse_csv_matrix(text).values.shape == shape


def test_csv_errors():
    with pytest.raises(RaggedRows, match="row 2"):
        parse_csv_matrix("0,1\n3\n")
    with pytest.raises(NonNumericCell, match="row 2, column 2"):
        parse_csv_matrix("0,1\n3,abc\n")
    with pytest.raises(NonFiniteValue):
        parse_csv_matrix("0,1\nnan,1\n")


def test_matrix_rejects_infinity():
    with pytest.raises(NonFiniteValue):
        EmbeddingMatrix([[1.0, np.inf]])


def test_layer_stack(tmp_path):
    rng = np.random.default_rng(0)
    a, b, c = tmp_path / "a.csv", tmp_path / "b.emb", tmp_path / "c.emb"
    save_matrix(EmbeddingMatrix(rng.random((10, 4))), a)
    save_matrix(EmbeddingMatrix(rng.random((10, 8))), b)
    save_matrix(EmbeddingMatrix(rng.random((9, 8))), c)

    stack = load_layer_stack([a, b])
    assert len(stack) == 2 and stack.example_count == 10
    assert [layer.d for layer in stack] == [4, 8]
    assert stack[0].layer_tag == "a"

    with pytest.raises(InconsistentExampleCount, match="c.emb has 9"):
        load_layer_stack([a, c])
    with pytest.raises(EmptyStack):
        load_layer_stack([])


def test_csv_and_emb_load_equal(tmp_path):
    m = EmbeddingMatrix(np.random.default_rng(1).standard_normal((7, 3)))
    save_matrix(m, tmp_path / "m.csv")
    save_matrix(m, tmp_path / "m.emb")
    s = load_layer_stack([tmp_path / "m.csv", tmp_path / "m.emb"])
    np.testing.assert_array_equal(s[0].values, s[1].values)
