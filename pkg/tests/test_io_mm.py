import numpy as np
import pytest

from amgforge import io_mm, problems, sparse


def test_roundtrip_symmetric(tmp_path):
    a = problems.fd_poisson_5pt(3)
    path = tmp_path / "a.mtx"
    io_mm.write_matrix_market(path, a)
    back = io_mm.read_matrix_market(path)
    assert back.symmetry == sparse.SYMMETRIC
    assert np.array_equal(back.toarray(), a.toarray())


def test_symmetric_file_stores_lower_triangle(tmp_path):
    a = problems.laplace_1d(3)
    path = tmp_path / "t.mtx"
    io_mm.write_matrix_market(path, a)
    lines = path.read_text().splitlines()
    assert lines[0].endswith("symmetric")
    entries = [tuple(int(t) for t in ln.split()[:2]) for ln in lines[2:]]
    assert all(i >= j for i, j in entries)
    assert len(entries) == 5  # 3 diagonal + 2 sub-diagonal


def test_roundtrip_general(tmp_path):
    a = sparse.csr_from_triplets(2, 3, [(0, 2, 1.5), (1, 0, -2.0)])
    path = tmp_path / "g.mtx"
    io_mm.write_matrix_market(path, a)
    back = io_mm.read_matrix_market(path)
    assert np.array_equal(back.toarray(), a.toarray())


def test_vector_roundtrip(tmp_path):
    x = np.array([1.0, -2.5, 3.25])
    path = tmp_path / "v.mtx"
    io_mm.write_vector(path, x)
    assert np.array_equal(io_mm.read_matrix_market(path), x)


def test_bad_header_names_line(tmp_path):
    path = tmp_path / "bad.mtx"
    path.write_text("%%NotMatrixMarket\n1 1 1\n1 1 2.0\n")
    with pytest.raises(io_mm.MatrixMarketError) as err:
        io_mm.read_matrix_market(path)
    assert err.value.line_no == 1


def test_bad_entry_names_line(tmp_path):
    path = tmp_path / "bad2.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n"
                    "2 2 2\n1 1 1.0\n1 two 1.0\n")
    with pytest.raises(io_mm.MatrixMarketError) as err:
        io_mm.read_matrix_market(path)
    assert err.value.line_no == 4


def test_upper_triangle_in_symmetric_file_rejected(tmp_path):
    path = tmp_path / "bad3.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real symmetric\n"
                    "2 2 1\n1 2 1.0\n")
    with pytest.raises(io_mm.MatrixMarketError):
        io_mm.read_matrix_market(path)


def test_deterministic_bytes(tmp_path):
    a = problems.fe_anisotropic(3, 0.5)
    p1, p2 = tmp_path / "x1.mtx", tmp_path / "x2.mtx"
    io_mm.write_matrix_market(p1, a)
    io_mm.write_matrix_market(p2, a)
    assert p1.read_bytes() == p2.read_bytes()
