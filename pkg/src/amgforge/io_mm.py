"""Matrix Market coordinate I/O (real, general and symmetric).

Indices are 1-based on disk and 0-based in memory.  Symmetric files store the
lower triangle only.  Dense vectors use the array format.
"""

import numpy as np

from . import sparse


class MatrixMarketError(ValueError):
    """Malformed Matrix Market content; carries the offending line number."""

    def __init__(self, message, line_no):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def write_matrix_market(path, a, comment=None):
    """Write a SparseMatrix; symmetric matrices keep only i >= j entries."""
    coo = a.mat.tocoo()
    symmetric = a.symmetry == sparse.SYMMETRIC
    if symmetric:
        keep = coo.row >= coo.col
        rows, cols, vals = coo.row[keep], coo.col[keep], coo.data[keep]
    else:
        rows, cols, vals = coo.row, coo.col, coo.data
    order = np.lexsort((rows, cols))
    with open(path, "w") as f:
        kind = "symmetric" if symmetric else "general"
        f.write(f"%%MatrixMarket matrix coordinate real {kind}\n")
        if comment:
            f.write(f"%{comment}\n")
        f.write(f"{a.n_rows} {a.n_cols} {len(vals)}\n")
        for k in order:
            f.write(f"{rows[k] + 1} {cols[k] + 1} {vals[k]:.17g}\n")


def write_vector(path, x, comment=None):
    x = np.asarray(x, dtype=float)
    with open(path, "w") as f:
        f.write("%%MatrixMarket matrix array real general\n")
        if comment:
            f.write(f"%{comment}\n")
        f.write(f"{x.size} 1\n")
        for v in x:
            f.write(f"{v:.17g}\n")


def _parse_header(line, line_no):
    fields = line.strip().split()
    if len(fields) != 5 or fields[0] != "%%MatrixMarket" or fields[1].lower() != "matrix":
        raise MatrixMarketError("expected '%%MatrixMarket matrix <format> <field> <symmetry>'", line_no)
    fmt, field, symmetry = (f.lower() for f in fields[2:])
    if fmt not in ("coordinate", "array"):
        raise MatrixMarketError(f"unsupported format {fmt!r}", line_no)
    if field != "real":
        raise MatrixMarketError(f"unsupported field {field!r} (only real)", line_no)
    if symmetry not in ("general", "symmetric"):
        raise MatrixMarketError(f"unsupported symmetry {symmetry!r}", line_no)
    return fmt, symmetry


def read_matrix_market(path):
    """Read a matrix; returns SparseMatrix (coordinate) or ndarray (array)."""
    with open(path) as f:
        lines = f.readlines()
    if not lines:
        raise MatrixMarketError("empty file", 1)
    fmt, symmetry = _parse_header(lines[0], 1)
    body = [(no, ln.strip()) for no, ln in enumerate(lines[1:], start=2)
            if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise MatrixMarketError("missing size line", len(lines))
    size_no, size_line = body[0]
    sizes = size_line.split()
    if fmt == "coordinate":
        if len(sizes) != 3:
            raise MatrixMarketError("size line must be 'rows cols nnz'", size_no)
        try:
            n_rows, n_cols, nnz = (int(s) for s in sizes)
        except ValueError:
            raise MatrixMarketError("non-integer size entry", size_no) from None
        entries = body[1:]
        if len(entries) != nnz:
            raise MatrixMarketError(f"expected {nnz} entries, found {len(entries)}", size_no)
        triplets = []
        for no, ln in entries:
            fields = ln.split()
            if len(fields) != 3:
                raise MatrixMarketError("entry must be 'i j value'", no)
            try:
                i, j, v = int(fields[0]), int(fields[1]), float(fields[2])
            except ValueError:
                raise MatrixMarketError("malformed entry", no) from None
            if not (1 <= i <= n_rows and 1 <= j <= n_cols):
                raise MatrixMarketError("index out of range", no)
            triplets.append((i - 1, j - 1, v))
            if symmetry == "symmetric" and i != j:
                if j > i:
                    raise MatrixMarketError("symmetric file stores the lower triangle only", no)
                triplets.append((j - 1, i - 1, v))
        tag = sparse.SYMMETRIC if symmetry == "symmetric" else sparse.GENERAL
        return sparse.csr_from_triplets(n_rows, n_cols, triplets, symmetry=tag)
    # array format: dense column-major listing, used here for vectors
    if len(sizes) != 2:
        raise MatrixMarketError("size line must be 'rows cols'", size_no)
    try:
        n_rows, n_cols = (int(s) for s in sizes)
    except ValueError:
        raise MatrixMarketError("non-integer size entry", size_no) from None
    values = []
    for no, ln in body[1:]:
        try:
            values.append(float(ln.split()[0]))
        except ValueError:
            raise MatrixMarketError("malformed array value", no) from None
    if len(values) != n_rows * n_cols:
        raise MatrixMarketError(f"expected {n_rows * n_cols} values, found {len(values)}", size_no)
    return np.array(values).reshape((n_cols, n_rows)).T.squeeze()
