"""Matrix serialization: SOPF binary format and CSV export.

The binary format is a 16-byte header (magic ``SOPF``, u32 rows, u32 cols,
u32 dtype tag, 1 = float64) followed by the matrix entries in column-major
order, little-endian.  CSV files carry a ``c0,c1,...`` header row, '.' as the
decimal separator and '\\n' line ends; values are written with 17 significant
digits so they round-trip exactly.
"""

import struct
from pathlib import Path

import numpy as np

from ._validation import as_matrix

__all__ = ["save_matrix", "load_matrix", "save_csv", "load_csv"]

MAGIC = b"SOPF"
DTYPE_F64 = 1
_HEADER = struct.Struct("<4sIII")


def save_matrix(path, A) -> None:
    """Write a matrix to ``path`` in the SOPF binary format."""
    A = as_matrix(A, "A")
    rows, cols = A.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, rows, cols, DTYPE_F64))
        fh.write(np.asfortranarray(A).astype("<f8").tobytes(order="F"))


def load_matrix(path) -> np.ndarray:
    """Read a matrix written by :func:`save_matrix`."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, rows, cols, dtype = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if dtype != DTYPE_F64:
        raise ValueError(f"{path}: unsupported dtype tag {dtype}")
    expected = _HEADER.size + 8 * rows * cols
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, got {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    return np.array(data.reshape((rows, cols), order="F"), dtype=np.float64)


def save_csv(path, A) -> None:
    """Write a matrix to CSV with a ``c0,c1,...`` header row."""
    A = as_matrix(A, "A")
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(f"c{j}" for j in range(A.shape[1])) + "\n")
        for row in A:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def load_csv(path) -> np.ndarray:
    """Read a matrix written by :func:`save_csv`."""
    with open(path, "r", newline="\n") as fh:
        header = fh.readline()
        ncols = len(header.strip().split(","))
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size and data.shape[1] != ncols:
        raise ValueError(f"{path}: row width does not match header")
    return data
