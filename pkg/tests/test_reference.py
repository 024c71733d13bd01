import numpy as np
import pytest

from etdg.errors import DomainError, UnsupportedDegreeError
from etdg.reference import (
    MAX_DEGREE,
    build_reference_element,
    eval_modal_basis,
    lagrange_nodes,
    lgl_nodes_weights,
    n_dofs,
)
from oracle import collapsed_gauss

REF_TRI = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
DEGREES = range(1, MAX_DEGREE + 1)


@pytest.fixture(scope="module", params=list(DEGREES))
def ref(request):
    return build_reference_element(request.param)


def test_constant_mode_is_sqrt2():
    val = eval_modal_basis(0, np.array([[0.2, 0.3], [0.7, 0.1]]))
    assert np.allclose(val, np.sqrt(2))


def test_p1_second_mode_vanishes_at_centroid():
    # phi_2 = 6 x1 - 2 from Gram-Schmidt of {1, x1, x2}
    v = eval_modal_basis(1, np.array([[1 / 3, 1 / 3], [1.0, 0.0], [0.0, 0.0]]))
    assert v[0, 1] == pytest.approx(0.0, abs=1e-14)
    assert v[1, 1] == pytest.approx(4.0)
    assert v[2, 1] == pytest.approx(-2.0)


@pytest.mark.parametrize("k", DEGREES)
def test_modal_basis_orthonormal(k):
    x, w = collapsed_gauss(REF_TRI, k + 3)
    phi = eval_modal_basis(k, x)
    assert np.abs((phi.T * w) @ phi - np.eye(n_dofs(k))).max() < 1e-12


def test_p1_nodes_are_vertices():
    assert np.allclose(lagrange_nodes(1), REF_TRI)


def test_p3_has_centroid_and_ten_nodes():
    nodes = lagrange_nodes(3)
    assert len(nodes) == 10
    assert np.any(np.all(np.abs(nodes - 1 / 3) < 1e-14, axis=1))


@pytest.mark.parametrize("k", DEGREES)
def test_edge_nodes_are_lgl(k):
    r = build_reference_element(k)
    x, _ = lgl_nodes_weights(k + 1)
    for m in range(3):
        a, b = REF_TRI[(m + 1) % 3], REF_TRI[(m + 2) % 3]
        assert np.allclose(r.nodes[r.edge_nodes[m]], a + np.outer(x, b - a), atol=1e-14)


def test_lgl_small_rules():
    x, w = lgl_nodes_weights(2)
    assert np.allclose(x, [0, 1]) and np.allclose(w, [0.5, 0.5])
    x, w = lgl_nodes_weights(3)
    assert np.allclose(x, [0, 0.5, 1]) and np.allclose(w, [1 / 6, 2 / 3, 1 / 6])
    assert w @ x ** 2 == pytest.approx(1 / 3, abs=1e-15)


@pytest.mark.parametrize("n", range(2, 8))
def test_lgl_exactness(n):
    x, w = lgl_nodes_weights(n)
    assert np.all(w > 0) and w.sum() == pytest.approx(1.0)
    for p in range(2 * n - 2):
        assert w @ x ** p == pytest.approx(1 / (p + 1), abs=1e-14)


def test_bad_degrees():
    with pytest.raises(UnsupportedDegreeError):
        build_reference_element(MAX_DEGREE + 1)
    with pytest.raises(UnsupportedDegreeError):
        build_reference_element(0)
    with pytest.raises(DomainError):
        lgl_nodes_weights(1)


def test_p1_mass_matrix():
    r = build_reference_element(1)
    assert np.allclose(r.mass, np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]]) / 24)


def test_vandermonde_and_mass(ref):
    V = ref.vandermonde
    assert np.abs(V @ ref.inv_vandermonde - np.eye(ref.n_dofs)).max() < 1e-12
    assert np.allclose(ref.mass, ref.mass.T)
    assert np.all(np.linalg.eigvalsh(ref.mass) > 0)
    assert ref.mass.sum() == pytest.approx(0.5)


def test_differentiation(ref):
    ones = np.ones(ref.n_dofs)
    assert np.abs(ref.Dr @ ones).max() < 1e-11
    assert np.abs(ref.Ds @ ones).max() < 1e-11
    assert np.allclose(ref.Dr @ ref.nodes[:, 0], 1.0)
    assert np.allclose(ref.Ds @ ref.nodes[:, 1], 1.0)
    for key in ((1, 0), (0, 1)):
        assert np.abs(ref.stiffness[key] @ ones).max() < 1e-11


def test_edge_mass_sparsity_and_lgl_block(ref):
    e = ref.edge_nodes
    for m in range(3):
        Bm = ref.edge_mass[m]
        off = np.setdiff1d(np.arange(ref.n_dofs), e[m])
        assert np.all(Bm[off] == 0) and np.all(Bm[:, off] == 0)
        assert np.count_nonzero(Bm) <= (ref.degree + 1) ** 2
        # stored per unit edge parameter, so every edge block is the 1D LGL mass
        assert np.allclose(Bm[np.ix_(e[m], e[m])], ref.lgl_mass)


def test_edge_derivative_matrices_exact(ref):
    # B_m^(1,0)_ij = int_edge l_i d l_j / d x1 (unit-length parameter)
    g, w = np.polynomial.legendre.leggauss(ref.degree + 2)
    s, w = 0.5 * (g + 1), 0.5 * w
    for m in range(3):
        a, b = REF_TRI[(m + 1) % 3], REF_TRI[(m + 2) % 3]
        pts = a + np.outer(s, b - a)
        lv = ref.lagrange_basis(pts)
        dx = lv @ ref.Dr
        dy = lv @ ref.Ds
        assert np.allclose(ref.edge_mass_dx[m], (lv.T * w) @ dx, atol=1e-12)
        assert np.allclose(ref.edge_mass_dy[m], (lv.T * w) @ dy, atol=1e-12)
