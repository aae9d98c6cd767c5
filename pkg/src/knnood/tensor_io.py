"""Embedding matrices on disk: the EMB1 binary format and plain CSV.

EMB1 layout (little-endian)::

    offset  size  field
    0       4     magic b"EMB1"
    4       4     version, u32 (= 1)
    8       1     dtype, u8 (0 = f32, 1 = f64)
    9       8     n, u64
    17      8     d, u64
    25      n*d   payload, row-major

Values are always held as float64 in memory; f32 files are widened on load,
which is exact.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field
from os import PathLike
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    BadMagic,
    EmptyStack,
    FormatError,
    InconsistentExampleCount,
    NonFiniteValue,
    NonNumericCell,
    RaggedRows,
    TruncatedPayload,
    UnsupportedVersion,
)

MAGIC = b"EMB1"
VERSION = 1
HEADER = struct.Struct("<4sIBQQ")
HEADER_SIZE = HEADER.size  # 25

_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_PRECISION_CODES = {"f32": 0, "f64": 1}


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """One layer's activations for ``n`` examples, shape ``(n, d)``."""

    values: np.ndarray
    layer_tag: str | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, order="C", copy=True)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if values.ndim != 2:
            raise FormatError(f"expected a 2-D matrix, got shape {values.shape}")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise FormatError(f"matrix must have n >= 1 and d >= 1, got shape {values.shape}")
        bad = np.flatnonzero(~np.isfinite(values.ravel()))
        if bad.size:
            row, col = divmod(int(bad[0]), values.shape[1])
            raise NonFiniteValue(f"non-finite value at row {row}, column {col}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def __eq__(self, other):
        if not isinstance(other, EmbeddingMatrix):
            return NotImplemented
        return (
            self.layer_tag == other.layer_tag
            and self.values.shape == other.values.shape
            and bool(np.array_equal(self.values, other.values))
        )

    def __repr__(self):
        tag = f", layer_tag={self.layer_tag!r}" if self.layer_tag is not None else ""
        return f"EmbeddingMatrix(n={self.n}, d={self.d}{tag})"


@dataclass(frozen=True)
class LayerStack:
    """Ordered layers for the same examples; row ``i`` is example ``i`` everywhere."""

    layers: tuple[EmbeddingMatrix, ...] = field(default_factory=tuple)

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise EmptyStack("a layer stack needs at least one layer")
        n0 = layers[0].n
        for i, layer in enumerate(layers):
            if layer.n != n0:
                raise InconsistentExampleCount(
                    f"layer {i} has {layer.n} examples, layer 0 has {n0}"
                )
        object.__setattr__(self, "layers", layers)

    @property
    def example_count(self) -> int:
        return self.layers[0].n

    def __len__(self):
        return len(self.layers)

    def __iter__(self):
        return iter(self.layers)

    def __getitem__(self, i):
        return self.layers[i]


def parse_emb(data: bytes, layer_tag: str | None = None) -> EmbeddingMatrix:
    """Decode an EMB1 byte string. Every error message names a byte offset."""
    data = bytes(data)
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagic(f"byte offset 0: expected magic {MAGIC!r}, got {data[:4]!r}")
    if len(data) < HEADER_SIZE:
        raise TruncatedPayload(
            f"byte offset {len(data)}: header needs {HEADER_SIZE} bytes, stream has {len(data)}"
        )
    _, version, code, n, d = HEADER.unpack_from(data, 0)
    if version != VERSION:
        raise UnsupportedVersion(f"byte offset 4: version {version} is not supported")
    if code not in _DTYPES:
        raise FormatError(f"byte offset 8: unknown dtype code {code}")
    if n < 1 or d < 1:
        raise FormatError(f"byte offset 9: n={n}, d={d}; both must be >= 1")
    dtype = _DTYPES[code]
    expected = n * d * dtype.itemsize
    payload = data[HEADER_SIZE:]
    if len(payload) != expected:
        # shorter is truncation; longer means the header lies about n*d
        raise TruncatedPayload(
            f"byte offset {HEADER_SIZE + min(len(payload), expected)}: header declares "
            f"{n}x{d} {dtype.name} ({expected} bytes), payload has {len(payload)} bytes"
        )
    raw = np.frombuffer(payload, dtype=dtype)
    bad = np.flatnonzero(~np.isfinite(raw))
    if bad.size:
        offset = HEADER_SIZE + int(bad[0]) * dtype.itemsize
        raise NonFiniteValue(f"byte offset {offset}: non-finite value")
    return EmbeddingMatrix(raw.astype(np.float64).reshape(n, d), layer_tag=layer_tag)


def write_emb(m: EmbeddingMatrix, precision: str = "f64") -> bytes:
    if precision not in _PRECISION_CODES:
        raise ValueError(f"precision must be 'f32' or 'f64', got {precision!r}")
    code = _PRECISION_CODES[precision]
    header = HEADER.pack(MAGIC, VERSION, code, m.n, m.d)
    return header + m.values.astype(_DTYPES[code]).tobytes(order="C")


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def parse_csv_matrix(text: str, layer_tag: str | None = None) -> EmbeddingMatrix:
    """Parse comma-separated numeric rows; a non-numeric first row is a header."""
    rows = [row for row in csv.reader(io.StringIO(text, newline="")) if row]
    if rows and not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
        first_line = 2
    else:
        first_line = 1
    if not rows:
        raise FormatError("CSV contains no data rows")
    width = len(rows[0])
    values = np.empty((len(rows), width), dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise RaggedRows(
                f"data row {i + first_line} has {len(row)} columns, expected {width}"
            )
        for j, cell in enumerate(row):
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise NonNumericCell(
                    f"row {i + first_line}, column {j + 1}: {cell!r} is not a number"
                ) from None
    return EmbeddingMatrix(values, layer_tag=layer_tag)


def format_float(x: float) -> str:
    """17 significant digits: enough to round-trip any float64."""
    return "%.17g" % x


def write_csv_matrix(m: EmbeddingMatrix) -> str:
    return "".join(",".join(format_float(v) for v in row) + "\n" for row in m.values)


def load_matrix(path: str | PathLike) -> EmbeddingMatrix:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".emb":
        return parse_emb(path.read_bytes(), layer_tag=path.stem)
    if suffix in (".csv", ".txt"):
        return parse_csv_matrix(path.read_text(), layer_tag=path.stem)
    raise FormatError(f"{path}: unknown extension {suffix!r} (expected .emb or .csv)")


def save_matrix(m: EmbeddingMatrix, path: str | PathLike, precision: str = "f64") -> None:
    path = Path(path)
    if path.suffix.lower() == ".emb":
        path.write_bytes(write_emb(m, precision))
    else:
        path.write_text(write_csv_matrix(m))


def load_layer_stack(paths: Sequence[str | PathLike]) -> LayerStack:
    if not paths:
        raise EmptyStack("no layer files given")
    layers = [load_matrix(p) for p in paths]
    n0 = layers[0].n
    for p, layer in zip(paths, layers):
        if layer.n != n0:
            raise InconsistentExampleCount(
                f"{p} has {layer.n} examples but {paths[0]} has {n0}"
            )
    return LayerStack(tuple(layers))
