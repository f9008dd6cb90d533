"""Sparse complex matrices, Matrix Market ingestion, and pencil construction.

Matrices are stored in compressed-row form with complex values regardless of
the input field: the solver always works with complex shifts, so promoting at
load time avoids a dual real/complex code path.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, ParseError, UnsupportedFormat

__all__ = [
    "SparseMatrix",
    "Pencil",
    "ProbeVector",
    "read_matrix_market",
    "make_pencil",
    "random_probe",
]


class SparseMatrix:
    """Sparse complex matrix in compressed-row (CSR) storage.

    Entries are canonical after construction: row offsets non-decreasing,
    column indices strictly increasing within each row, duplicates summed.
    Instances are treated as immutable and are safe to share across threads.
    """

    def __init__(self, matrix):
        """Wrap a scipy sparse matrix or dense array, promoting to complex."""
        csr = sp.csr_matrix(matrix, dtype=np.complex128)
        csr.sum_duplicates()
        csr.sort_indices()
        self._csr = csr

    @classmethod
    def from_triples(cls, nrows, ncols, rows, cols, values):
        """Assemble from coordinate triples; duplicate positions are summed."""
        coo = sp.coo_matrix(
            (np.asarray(values, dtype=np.complex128), (rows, cols)),
            shape=(nrows, ncols),
        )
        return cls(coo)

    @property
    def nrows(self):
        return self._csr.shape[0]

    @property
    def ncols(self):
        return self._csr.shape[1]

    @property
    def nnz(self):
        return self._csr.nnz

    @property
    def row_offsets(self):
        return self._csr.indptr

    @property
    def col_indices(self):
        return self._csr.indices

    @property
    def values(self):
        return self._csr.data

    @property
    def csr(self):
        """Underlying scipy CSR matrix (do not mutate)."""
        return self._csr

    def entries(self):
        """Return the stored entries as (rows, cols, values) arrays, row-major."""
        coo = self._csr.tocoo()
        return coo.row.copy(), coo.col.copy(), coo.data.copy()

    def matvec(self, x):
        """Multiply by a dense vector: returns ``self @ x``."""
        x = np.asarray(x)
        if x.shape != (self.ncols,):
            raise DimensionError(
                f"matvec expects a vector of length {self.ncols}, got shape {x.shape}"
            )
        return self._csr @ x.astype(np.complex128, copy=False)

    def __repr__(self):
        return f"SparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz})"


@dataclass(frozen=True)
class Pencil:
    """Matrix pencil (A, B) for the generalized problem A x = lambda B x.

    B may be singular, in which case part of the spectrum lies at infinity.
    """

    a: SparseMatrix
    b: SparseMatrix

    @property
    def n(self):
        return self.a.nrows


@dataclass(eq=False)
class ProbeVector:
    """Unit-norm random probe vector together with the seed that produced it."""

    values: np.ndarray
    seed: int

    def __post_init__(self):
        nrm = np.linalg.norm(self.values)
        if not np.isfinite(nrm) or abs(nrm - 1.0) > 1e-12:
            raise DimensionError(f"probe vector must have unit norm, got {nrm}")


_SUPPORTED_FIELDS = {"real", "complex", "integer"}
_SUPPORTED_SYMMETRIES = {"general", "symmetric"}


def _open_lines(source):
    """Yield decoded text lines from a path, file object, or bytes."""
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            data = fh.read()
    elif isinstance(source, bytes):
        data = source
    elif hasattr(source, "read"):
        data = source.read()
        if isinstance(data, str):
            data = data.encode("latin-1")
    else:
        raise ParseError(f"unsupported source type {type(source)!r}")
    return io.BytesIO(data).read().decode("latin-1").splitlines()


def read_matrix_market(source) -> SparseMatrix:
    """Read a Matrix Market coordinate file into a :class:`SparseMatrix`.

    Parameters
    ----------
    source:
        Path, bytes, or readable file object containing the exchange-format
        text. The banner must declare ``matrix coordinate`` with field
        ``real``, ``complex`` or ``integer`` and symmetry ``general`` or
        ``symmetric``. Symmetric input is expanded to general storage and
        duplicate entries are summed, per the exchange-format convention.

    Raises
    ------
    ParseError
        Malformed banner, size line, entry lines, or out-of-range indices.
    UnsupportedFormat
        ``array`` format, ``pattern`` field, or an unsupported symmetry.
    """
    lines = _open_lines(source)
    if not lines:
        raise ParseError("empty input")

    banner = lines[0].split()
    if len(banner) != 5 or banner[0].lower() != "%%matrixmarket":
        raise ParseError(f"malformed banner: {lines[0]!r}")
    obj, fmt, field, symmetry = (tok.lower() for tok in banner[1:])
    if obj != "matrix":
        raise ParseError(f"unsupported object {obj!r}")
    if fmt == "array":
        raise UnsupportedFormat("dense 'array' format is not supported")
    if fmt != "coordinate":
        raise ParseError(f"unknown format {fmt!r}")
    if field == "pattern":
        raise UnsupportedFormat("'pattern' field carries no values")
    if field not in _SUPPORTED_FIELDS:
        raise ParseError(f"unknown field {field!r}")
    if symmetry not in _SUPPORTED_SYMMETRIES:
        if symmetry in ("hermitian", "skew-symmetric"):
            raise UnsupportedFormat(f"symmetry {symmetry!r} is not supported")
        raise ParseError(f"unknown symmetry {symmetry!r}")

    # locate the size line, skipping comments and blanks
    pos = 1
    while pos < len(lines) and (not lines[pos].strip() or lines[pos].lstrip().startswith("%")):
        pos += 1
    if pos >= len(lines):
        raise ParseError("missing size line")
    size_tokens = lines[pos].split()
    if len(size_tokens) != 3:
        raise ParseError(f"malformed size line: {lines[pos]!r}")
    try:
        nrows, ncols, nnz = (int(tok) for tok in size_tokens)
    except ValueError as exc:
        raise ParseError(f"malformed size line: {lines[pos]!r}") from exc
    if nrows < 0 or ncols < 0 or nnz < 0:
        raise ParseError("negative dimensions in size line")
    pos += 1

    want_values = 2 if field == "complex" else 1
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.complex128)
    got = 0
    while got < nnz:
        if pos >= len(lines):
            raise ParseError(f"expected {nnz} entries, found {got}")
        line = lines[pos]
        pos += 1
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        tokens = stripped.split()
        if len(tokens) != 2 + want_values:
            raise ParseError(f"malformed entry line: {line!r}")
        try:
            i = int(tokens[0])
            j = int(tokens[1])
            if field == "complex":
                v = complex(float(tokens[2]), float(tokens[3]))
            else:
                v = complex(float(tokens[2]))
        except ValueError as exc:
            raise ParseError(f"malformed entry line: {line!r}") from exc
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise ParseError(f"entry ({i}, {j}) outside declared {nrows}x{ncols} bounds")
        rows[got] = i - 1
        cols[got] = j - 1
        vals[got] = v
        got += 1

    for line in lines[pos:]:
        stripped = line.strip()
        if stripped and not stripped.startswith("%"):
            raise ParseError(f"trailing data after {nnz} entries: {line!r}")

    if symmetry == "symmetric":
        off = rows != cols
        rows, cols = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
        )
        vals = np.concatenate([vals, vals[off]])

    return SparseMatrix.from_triples(nrows, ncols, rows, cols, vals)


def make_pencil(a: SparseMatrix, b: SparseMatrix | None = None) -> Pencil:
    """Build a pencil from A and B; B defaults to the identity.

    Raises :class:`DimensionError` if A is not square or B's dimension
    differs from A's.
    """
    if a.nrows != a.ncols:
        raise DimensionError(f"A must be square, got {a.nrows}x{a.ncols}")
    if b is None:
        b = SparseMatrix(sp.identity(a.nrows, dtype=np.complex128, format="csr"))
    if b.nrows != b.ncols:
        raise DimensionError(f"B must be square, got {b.nrows}x{b.ncols}")
    if a.nrows != b.nrows:
        raise DimensionError(f"dimension mismatch: A is {a.nrows}, B is {b.nrows}")
    return Pencil(a=a, b=b)


def random_probe(n: int, seed: int) -> ProbeVector:
    """Draw a deterministic unit-norm complex Gaussian probe vector.

    The same ``(n, seed)`` pair always yields bitwise-identical output.
    """
    if n < 1:
        raise DimensionError(f"probe dimension must be positive, got {n}")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    return ProbeVector(values=v, seed=seed)
