"""Matrix Market coordinate reader/writer for the sparse core.

Supports ``matrix coordinate real general`` and ``matrix coordinate complex
general`` with 1-based indices on disk.  Duplicate entries are summed on
load and everything is canonicalized to the internal 0-based CSC layout.
Values are written with 17 significant digits so a write/read round trip is
exact.
"""

import numpy as np

from .errors import SingPencilError
from .sparse import SparseMatrix


class MatrixMarketError(SingPencilError):
    """Malformed or unsupported Matrix Market content."""


def read_matrix_market(path):
    """Load a coordinate-format file into a :class:`SparseMatrix`."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline()
        if not header.startswith("%%MatrixMarket"):
            raise MatrixMarketError(f"{path}: missing MatrixMarket banner")
        tokens = header.strip().split()
        if len(tokens) != 5:
            raise MatrixMarketError(f"{path}: malformed banner {header!r}")
        _, obj, fmt, field, symmetry = (t.lower() for t in tokens)
        if obj != "matrix" or fmt != "coordinate":
            raise MatrixMarketError(f"{path}: only 'matrix coordinate' is supported")
        if field not in ("real", "complex", "integer"):
            raise MatrixMarketError(f"{path}: unsupported field {field!r}")
        if symmetry != "general":
            raise MatrixMarketError(f"{path}: only 'general' symmetry is supported")

        line = fh.readline()
        while line and (line.startswith("%") or not line.strip()):
            line = fh.readline()
        if not line:
            raise MatrixMarketError(f"{path}: missing size line")
        parts = line.split()
        if len(parts) != 3:
            raise MatrixMarketError(f"{path}: malformed size line {line!r}")
        nrows, ncols, nnz = (int(p) for p in parts)

        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.complex128)
        want = 4 if field == "complex" else 3
        k = 0
        for line in fh:
            if line.startswith("%") or not line.strip():
                continue
            parts = line.split()
            if len(parts) != want:
                raise MatrixMarketError(f"{path}: malformed entry line {line!r}")
            if k >= nnz:
                raise MatrixMarketError(f"{path}: more entries than declared")
            rows[k] = int(parts[0]) - 1
            cols[k] = int(parts[1]) - 1
            if field == "complex":
                vals[k] = complex(float(parts[2]), float(parts[3]))
            else:
                vals[k] = float(parts[2])
            k += 1
        if k != nnz:
            raise MatrixMarketError(f"{path}: expected {nnz} entries, found {k}")
    return SparseMatrix.from_coo(nrows, ncols, rows, cols, vals)


def write_matrix_market(path, M, field=None, comment=None):
    """Write ``M`` in coordinate format.

    ``field`` may be ``"real"`` or ``"complex"``; by default complex is used
    whenever the matrix has a nonzero imaginary part.
    """
    if field is None:
        field = "complex" if M.nnz and np.any(M.values.imag != 0.0) else "real"
    if field not in ("real", "complex"):
        raise MatrixMarketError(f"unsupported field {field!r}")
    if field == "real" and M.nnz and np.any(M.values.imag != 0.0):
        raise MatrixMarketError("matrix has imaginary entries; cannot write field 'real'")
    rows, cols, vals = M.coo()
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate {field} general\n")
        if comment:
            for ln in str(comment).splitlines():
                fh.write(f"% {ln}\n")
        fh.write(f"{M.nrows} {M.ncols} {M.nnz}\n")
        if field == "complex":
            for r, c, v in zip(rows.tolist(), cols.tolist(), vals.tolist()):
                fh.write(f"{r + 1} {c + 1} {v.real:.17g} {v.imag:.17g}\n")
        else:
            for r, c, v in zip(rows.tolist(), cols.tolist(), vals.tolist()):
                fh.write(f"{r + 1} {c + 1} {v.real:.17g}\n")
