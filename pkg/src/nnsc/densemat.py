"""Dense real matrices for the factorization routines.

A :class:`Matrix` is an immutable wrapper around a read-only float64 numpy
array. Every operation returns a fresh matrix and never touches its inputs.
"""

from __future__ import annotations

import csv
import io
import os
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Matrix",
    "MatrixError",
    "ShapeError",
    "ZeroColumnError",
    "matmul",
    "elementwise",
    "add_scalar",
    "transpose",
    "frobenius_sq",
    "column_norms",
    "normalize_columns",
    "clamp_nonneg",
    "read_csv",
    "write_csv",
    "format_csv",
]


class MatrixError(ValueError):
    """Base class for matrix errors."""


class ShapeError(MatrixError):
    """Operand shapes are incompatible."""


class ZeroColumnError(MatrixError):
    """A column has zero norm where a positive norm is required."""

    def __init__(self, column: int):
        super().__init__(f"column {column} has zero norm and cannot be normalized")
        self.column = column


class Matrix:
    """Immutable dense matrix of 64-bit floats stored row-major.

    Parameters
    ----------
    data : array_like
        Two-dimensional array of finite real numbers. It is copied.
    """

    __slots__ = ("_values",)

    def __init__(self, data):
        values = np.array(data, dtype=np.float64, order="C", copy=True)
        if values.ndim != 2:
            raise ShapeError(f"matrix data must be 2-D, got {values.ndim}-D")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise ShapeError(f"matrix dimensions must be positive, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise MatrixError("matrix contains non-finite values")
        values.setflags(write=False)
        self._values = values

    @classmethod
    def _wrap(cls, values: np.ndarray) -> "Matrix":
        # Internal constructor for arrays produced by our own operations.
        if not np.all(np.isfinite(values)):
            raise MatrixError("operation produced non-finite values")
        m = cls.__new__(cls)
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.base is not None:
            values = values.copy()
        values.setflags(write=False)
        m._values = values
        return m

    @classmethod
    def from_flat(cls, rows: int, cols: int, data: Sequence[float]) -> "Matrix":
        """Build a matrix from a row-major sequence of ``rows * cols`` values."""
        if len(data) != rows * cols:
            raise ShapeError(f"expected {rows * cols} values for {rows}x{cols}, got {len(data)}")
        return cls(np.asarray(data, dtype=np.float64).reshape(rows, cols))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "Matrix":
        return cls(np.zeros((rows, cols)))

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls(np.eye(n))

    @property
    def rows(self) -> int:
        return self._values.shape[0]

    @property
    def cols(self) -> int:
        return self._values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._values.shape

    @property
    def values(self) -> np.ndarray:
        """Read-only view of the underlying array."""
        return self._values

    @property
    def data(self) -> list[float]:
        """Row-major flat list of entries."""
        return self._values.ravel().tolist()

    def __getitem__(self, idx):
        return self._values[idx]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._values
        return self._values.astype(dtype)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._values, other._values))

    __hash__ = None

    def __matmul__(self, other: "Matrix") -> "Matrix":
        return matmul(self, other)

    @property
    def T(self) -> "Matrix":
        return transpose(self)

    def __repr__(self) -> str:
        return f"Matrix({self._values.tolist()!r})"


def _check_same_shape(a: Matrix, b: Matrix, what: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{what}: shape mismatch {a.shape} vs {b.shape}")


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Matrix product ``a @ b``."""
    if a.cols != b.rows:
        raise ShapeError(f"matmul: cannot multiply {a.rows}x{a.cols} by {b.rows}x{b.cols}")
    return Matrix._wrap(a.values @ b.values)


_ELEMENTWISE = {
    "multiply": np.multiply,
    "divide": np.divide,
    "add": np.add,
    "subtract": np.subtract,
}


def elementwise(a: Matrix, b, op: str) -> Matrix:
    """Apply ``op`` (multiply, divide, add or subtract) entry by entry.

    ``b`` may be a matrix of the same shape or a real scalar, which is
    broadcast to every entry.
    """
    try:
        fn = _ELEMENTWISE[op]
    except KeyError:
        raise ValueError(f"unknown elementwise op {op!r}; expected one of {sorted(_ELEMENTWISE)}") from None
    if isinstance(b, Matrix):
        _check_same_shape(a, b, op)
        other = b.values
    else:
        other = float(b)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = fn(a.values, other)
    if not np.all(np.isfinite(out)):
        raise MatrixError(f"{op}: result contains non-finite values")
    return Matrix._wrap(out)


def add_scalar(a: Matrix, c: float) -> Matrix:
    return Matrix._wrap(a.values + float(c))


def transpose(a: Matrix) -> Matrix:
    return Matrix._wrap(a.values.T.copy())


def frobenius_sq(a: Matrix) -> float:
    """Sum of squared entries."""
    v = a.values
    return float(np.sum(v * v))


def column_norms(a: Matrix) -> list[float]:
    return np.sqrt(np.sum(a.values * a.values, axis=0)).tolist()


def normalize_columns(a: Matrix) -> Matrix:
    """Rescale every column to unit Euclidean norm.

    Raises
    ------
    ZeroColumnError
        If some column is identically zero.
    """
    norms = np.sqrt(np.sum(a.values * a.values, axis=0))
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ZeroColumnError(int(zero[0]))
    return Matrix._wrap(a.values / norms)


def clamp_nonneg(a: Matrix) -> Matrix:
    """Replace negative entries by zero."""
    return Matrix._wrap(np.maximum(a.values, 0.0))


# CSV: one matrix row per line, no header, 17 significant digits.

def format_csv(a: Matrix) -> str:
    buf = io.StringIO()
    for row in a.values:
        buf.write(",".join(f"{v:.16e}" for v in row))
        buf.write("\n")
    return buf.getvalue()


def write_csv(a: Matrix, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_csv(a))


def _parse_rows(lines: Iterable[list[str]], source: str) -> Matrix:
    rows = []
    for lineno, fields in enumerate(lines, start=1):
        if not fields or all(not f.strip() for f in fields):
            continue
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise MatrixError(f"{source}:{lineno}: {exc}") from None
    if not rows:
        raise MatrixError(f"{source}: no data rows")
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise ShapeError(f"{source}: row {i} has {len(r)} values, expected {width}")
    return Matrix(rows)


def read_csv(path: str | os.PathLike) -> Matrix:
    """Read a headerless numeric CSV file into a matrix."""
    with open(path, newline="") as fh:
        return _parse_rows(csv.reader(fh), str(path))
