import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from weylscope.errors import BasisDeficiency, MissedEigenvalueSuspicion
from weylscope.mps import MpsOptions, _check_corridor, mps_spectrum
from weylscope.spectra import Spectrum, disk_spectrum, rellich_check
from weylscope.weyl import WeylContext


def test_disk_window_matches_bessel(unit_circle):
    spec, data = mps_spectrum(unit_circle, (2.0, 4.0), "dirichlet")
    oracle = disk_spectrum(1.0, 4.0, "dirichlet")
    assert spec.total_count == oracle.total_count
    assert np.max(np.abs(spec.lambdas - oracle.lambdas)) < 1e-8
    assert np.array_equal(spec.multiplicities, oracle.multiplicities)
    assert spec.certificate == "weyl_corridor_checked"
    # boundary data produced one trace per eigenfunction
    assert len(data.traces) == oracle.total_count


def test_disk_neumann_window(unit_circle):
    spec, data = mps_spectrum(unit_circle, (1.5, 2.0), "neumann")
    assert spec.lambdas == pytest.approx([1.8411837813406595], abs=1e-8)
    assert list(spec.multiplicities) == [2]
    res = rellich_check(unit_circle, data)
    assert res.max() < 1e-8


def fd_ground_state(a, b, h):
    """Five-point finite-difference Dirichlet ground state of an ellipse."""
    x = np.arange(-a + h, a, h)
    y = np.arange(-b + h, b, h)
    X, Y = np.meshgrid(x, y, indexing="ij")
    inside = (X / a) ** 2 + (Y / b) ** 2 < 1.0
    idx = -np.ones(inside.shape, dtype=int)
    idx[inside] = np.arange(inside.sum())
    n = inside.sum()
    rows, cols, vals = [], [], []
    for i in range(x.size):
        for j in range(y.size):
            if not inside[i, j]:
                continue
            r = idx[i, j]
            rows.append(r)
            cols.append(r)
            vals.append(4.0)
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ii, jj = i + di, j + dj
                if 0 <= ii < x.size and 0 <= jj < y.size and inside[ii, jj]:
                    rows.append(r)
                    cols.append(idx[ii, jj])
                    vals.append(-1.0)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(n, n)) / h ** 2
    w = spla.eigsh(A, k=1, sigma=0.0, which="LM",
                   return_eigenvectors=False)
    return float(np.sqrt(w[0]))


def test_ellipse_ground_state_oracles(ellipse_small):
    spec, _ = mps_spectrum(ellipse_small, (2.5, 3.0), "dirichlet",
                           MpsOptions(boundary_data=False))
    lam1 = spec.lambdas[0]
    # basis-size self-consistency: doubling the column count
    spec2, _ = mps_spectrum(ellipse_small, (2.5, 3.0), "dirichlet",
                            MpsOptions(boundary_data=False, basis_margin=35))
    assert abs(spec2.lambdas[0] - lam1) < 1e-7
    # coarse five-point finite-difference oracle
    fd = fd_ground_state(1.0, 0.8, h=0.005)
    assert lam1 == pytest.approx(fd, abs=1e-2)


def test_ellipse_rellich_and_monotonicity(ellipse_small):
    spec, data = mps_spectrum(ellipse_small, (2.0, 8.4), "dirichlet")
    res = rellich_check(ellipse_small, data)
    assert res.max() < 1e-3
    # domain monotonicity against the circumscribed unit disk
    disk = disk_spectrum(1.0, 8.4, "dirichlet")
    ell_flat = np.repeat(spec.lambdas, spec.multiplicities)
    disk_flat = np.repeat(disk.lambdas, disk.multiplicities)
    k = min(10, ell_flat.size)
    assert np.all(ell_flat[:k] >= disk_flat[:k] - 1e-9)


def test_corridor_flags_a_missing_eigenvalue(unit_circle):
    true = disk_spectrum(1.0, 12.0, "dirichlet")
    ctx = WeylContext.from_curve(unit_circle, "dirichlet")
    ok, drift, _ = _check_corridor(true, ctx, 2.0, 12.0, 0.6)
    assert ok
    # drop one interior eigenvalue; the count deficit must be noticed
    keep = np.ones(true.lambdas.size, dtype=bool)
    keep[true.lambdas.size // 2] = False
    broken = Spectrum(true.lambdas[keep], true.multiplicities[keep],
                      bc="dirichlet", generator="broken", lambda_max=12.0,
                      certificate="unchecked")
    ok2, drift2, _ = _check_corridor(broken, ctx, 2.0, 12.0, 0.6)
    assert not ok2
    assert drift2 < -0.6


def test_basis_deficiency_raised(unit_circle):
    with pytest.raises(BasisDeficiency):
        mps_spectrum(unit_circle, (7.0, 7.2), "dirichlet",
                     MpsOptions(basis_margin=-8, boundary_data=False))
