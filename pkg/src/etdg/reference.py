"""Reference simplex: modal basis, Lagrange nodes and local matrices.

The reference triangle is ``{x1 >= 0, x2 >= 0, x1 + x2 <= 1}`` with vertices
``v1 = (1, 0)``, ``v2 = (0, 1)``, ``v3 = (0, 0)``.  Edge ``e_m`` is opposite
``v_m`` and is parametrised by ``s -> (1 - s) v_{m+1} + s v_{m+2}`` (indices
mod 3), so that

    e1 : (0, 1 - s)        from v2 to v3
    e2 : (s, 0)            from v3 to v1
    e3 : (1 - s, s)        from v1 to v2

Node ordering (fixed, every routine depends on it): the three vertices
``v1, v2, v3``, then the interior LGL points of ``e1``, ``e2``, ``e3`` in
increasing ``s``, then the interior nodes as tabulated in ``_INTERIOR_NODES``.

All local matrices are computed in extended precision (mpmath) and rounded
to float64 once, so they are accurate to machine precision for every
supported degree.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial

import mpmath
import numpy as np
from numpy.polynomial import legendre as npleg

from .errors import DomainError, EtdgError, UnsupportedDegreeError

MAX_DEGREE = 5

# Interior Lagrange nodes (minimal Lebesgue constant family), degrees 3..5.
_INTERIOR_NODES = {
    1: [],
    2: [],
    3: [(0.333333333333333, 0.333333333333333)],
    4: [
        (0.551583507555306, 0.224208246222347),
        (0.224208246222347, 0.551583507555306),
        (0.224208246222347, 0.224208246222347),
    ],
    5: [
        (0.684472514501909, 0.157763742749046),
        (0.414377261333963, 0.414377261333963),
        (0.157763742749046, 0.684472514501908),
        (0.414377261333963, 0.171245477332075),
        (0.171245477332074, 0.414377261333963),
        (0.157763742749046, 0.157763742749046),
    ],
}

VERTICES = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])

_DPS = 40


def n_dofs(k):
    return (k + 1) * (k + 2) // 2


def monomial_exponents(k):
    """Exponents ``(i, j)`` of ``x1**i * x2**j`` in graded lexicographic order."""
    return [(d - j, j) for d in range(k + 1) for j in range(d + 1)]


def _check_degree(k, kmin=1, kmax=MAX_DEGREE):
    if not isinstance(k, (int, np.integer)) or k < kmin or k > kmax:
        raise UnsupportedDegreeError(
            f"polynomial degree {k!r} not supported (need {kmin} <= k <= {kmax})")


# ---------------------------------------------------------------------------
# 1D Legendre-Gauss-Lobatto rule on [0, 1]

@lru_cache(maxsize=None)
def _lgl_mp(n):
    """LGL nodes and weights on [0, 1] in mpmath precision."""
    with mpmath.workdps(_DPS):
        if n == 2:
            x = [mpmath.mpf(-1), mpmath.mpf(1)]
        else:
            # roots of P'_{n-1}
            coeffs = [mpmath.mpf(c) for c in
                      npleg.leg2poly(npleg.legder([0] * (n - 1) + [1]))[::-1]]
            roots = mpmath.polyroots(coeffs, maxsteps=200, extraprec=200)
            x = [mpmath.mpf(-1)] + sorted(mpmath.re(r) for r in roots) + [mpmath.mpf(1)]
        w = [mpmath.mpf(2) / (n * (n - 1) * mpmath.legendre(n - 1, xi) ** 2) for xi in x]
        nodes = [(xi + 1) / 2 for xi in x]
        weights = [wi / 2 for wi in w]
        # enforce exact symmetry
        nodes = [(nodes[i] + 1 - nodes[n - 1 - i]) / 2 for i in range(n)]
    return nodes, weights


def lgl_nodes_weights(n):
    """Legendre-Gauss-Lobatto nodes and weights on the unit interval.

    Parameters
    ----------
    n : int
        Number of points, ``n >= 2``.

    Returns
    -------
    nodes, weights : ndarray
        Increasing nodes including both endpoints; positive weights summing
        to one. The rule integrates polynomials of degree ``2n - 3`` exactly.
    """
    if n < 2:
        raise DomainError(f"LGL rule needs at least 2 points, got {n}")
    nodes, weights = _lgl_mp(int(n))
    return (np.array([float(x) for x in nodes]),
            np.array([float(w) for w in weights]))


def _lagrange_1d_mass_mp(n):
    """Exact mass matrix of the 1D Lagrange basis at the n LGL nodes."""
    nodes, _ = _lgl_mp(n)
    with mpmath.workdps(_DPS):
        # Gauss-Legendre rule with n+1 points is exact for degree 2n-2
        gx, gw = _gauss_mp(n + 1)
        vals = [[_lagrange_1d_eval(nodes, i, x) for x in gx] for i in range(n)]
        mass = mpmath.matrix(n, n)
        for i in range(n):
            for j in range(n):
                mass[i, j] = mpmath.fsum(gw[q] * vals[i][q] * vals[j][q] for q in range(len(gx)))
    return mass


@lru_cache(maxsize=None)
def _gauss_mp(n):
    with mpmath.workdps(_DPS):
        coeffs = [mpmath.mpf(c) for c in npleg.leg2poly([0] * n + [1])[::-1]]
        roots = sorted(mpmath.re(r) for r in mpmath.polyroots(coeffs, maxsteps=200, extraprec=200))
        w = [2 / ((1 - r ** 2) * mpmath.diff(lambda t: mpmath.legendre(n, t), r) ** 2) for r in roots]
        return [(r + 1) / 2 for r in roots], [wi / 2 for wi in w]


def _lagrange_1d_eval(nodes, i, x):
    out = mpmath.mpf(1)
    for j, xj in enumerate(nodes):
        if j != i:
            out *= (x - xj) / (nodes[i] - xj)
    return out


# ---------------------------------------------------------------------------
# Orthonormal modal basis by Gram-Schmidt on monomials

def _triangle_moment(a, b):
    # \int_K x1^a x2^b = a! b! / (a + b + 2)!
    return Fraction(factorial(a) * factorial(b), factorial(a + b + 2))


@lru_cache(maxsize=None)
def _modal_coefficients_mp(k):
    """Upper-triangular ``C`` with ``phi_j = sum_i C[i, j] * monomial_i``.

    Gram-Schmidt in graded lexicographic order is equivalent to the Cholesky
    factorisation ``H = R^T R`` of the exact monomial Gram matrix, with
    ``C = R^{-1}``.  Positive Cholesky pivots give a positive leading
    coefficient for every basis function.
    """
    exps = monomial_exponents(k)
    n = len(exps)
    with mpmath.workdps(_DPS):
        gram = mpmath.matrix(n, n)
        for i, (a1, b1) in enumerate(exps):
            for j, (a2, b2) in enumerate(exps):
                q = _triangle_moment(a1 + a2, b1 + b2)
                gram[i, j] = mpmath.mpf(q.numerator) / q.denominator
        lower = mpmath.cholesky(gram)
        coeffs = mpmath.inverse(lower.T)
    return coeffs


@lru_cache(maxsize=None)
def _modal_coefficients(k):
    c = _modal_coefficients_mp(k)
    return np.array(c.tolist(), dtype=float)


def _monomials(k, pts, deriv=(0, 0)):
    x = pts[:, 0]
    y = pts[:, 1]
    dx, dy = deriv
    cols = []
    for i, j in monomial_exponents(k):
        if i < dx or j < dy:
            cols.append(np.zeros_like(x))
            continue
        ci = factorial(i) // factorial(i - dx)
        cj = factorial(j) // factorial(j - dy)
        cols.append(ci * cj * x ** (i - dx) * y ** (j - dy))
    return np.stack(cols, axis=-1)


def _in_reference(pts, tol=1e-12):
    x = pts[:, 0]
    y = pts[:, 1]
    return (x >= -tol) & (y >= -tol) & (x + y <= 1 + tol)


def eval_modal_basis(k, points, deriv=(0, 0), check=True):
    """Values (or derivatives) of the orthonormal modal basis.

    Parameters
    ----------
    k : int
        Polynomial degree (``k = 0`` is allowed here).
    points : array_like, shape (2,) or (npts, 2)
        Reference coordinates.
    deriv : tuple of int
        Derivative order ``(d/dx1, d/dx2)``.

    Returns
    -------
    ndarray, shape (N_k,) or (npts, N_k)
    """
    _check_degree(k, kmin=0, kmax=2 * MAX_DEGREE + 2)
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if check and not np.all(_in_reference(pts)):
        raise DomainError("point outside the reference triangle")
    vals = _monomials(k, pts, deriv) @ _modal_coefficients(k)
    return vals[0] if single else vals


# ---------------------------------------------------------------------------
# Lagrange nodes

@lru_cache(maxsize=None)
def _nodes_mp(k):
    lgl, _ = _lgl_mp(k + 1)
    interior = lgl[1:-1]
    one = mpmath.mpf(1)
    zero = mpmath.mpf(0)
    verts = [(one, zero), (zero, one), (zero, zero)]
    pts = list(verts)
    for m in range(3):
        a = verts[(m + 1) % 3]
        b = verts[(m + 2) % 3]
        for s in interior:
            pts.append(((1 - s) * a[0] + s * b[0], (1 - s) * a[1] + s * b[1]))
    for x, y in _INTERIOR_NODES[k]:
        pts.append((mpmath.mpf(repr(x)), mpmath.mpf(repr(y))))
    return pts


def lagrange_nodes(k):
    """Lagrange nodes of P^k on the reference triangle, shape (N_k, 2).

    Ordering: vertices, then edge-interior LGL points of e1, e2, e3 in
    parameter order, then interior nodes.
    """
    _check_degree(k)
    return np.array([[float(x), float(y)] for x, y in _nodes_mp(k)])


def edge_node_indices(k):
    """Indices of the ``k+1`` nodes on each edge, in increasing parameter.

    Row ``m`` lists the nodes of edge ``e_{m+1}`` from ``v_{m+2}`` to
    ``v_{m+3}``.
    """
    out = np.empty((3, k + 1), dtype=int)
    ni = k - 1
    for m in range(3):
        out[m, 0] = (m + 1) % 3
        out[m, k] = (m + 2) % 3
        out[m, 1:k] = 3 + m * ni + np.arange(ni)
    return out


# ---------------------------------------------------------------------------
# Reference element

@dataclass(frozen=True)
class ReferenceElement:
    """Everything defined on the reference triangle for degree ``k``.

    Boundary matrices are stored as stacked arrays indexed by zero-based edge
    numbers: ``edge_mass[m]`` is B_m, ``pair_mass[m, n]`` is B_{m,n}, and the
    ``_dx``/``_dy`` variants carry the x1/x2 derivative of the trial function.
    """

    degree: int
    n_dofs: int
    nodes: np.ndarray
    vandermonde: np.ndarray
    inv_vandermonde: np.ndarray
    grad_vandermonde: tuple
    diff_matrices: tuple
    mass: np.ndarray
    stiffness: dict
    edge_nodes: np.ndarray
    edge_mass: np.ndarray
    edge_mass_dx: np.ndarray
    edge_mass_dy: np.ndarray
    pair_mass: np.ndarray
    pair_mass_dx: np.ndarray
    pair_mass_dy: np.ndarray
    lgl_nodes: np.ndarray
    lgl_weights: np.ndarray
    lgl_mass: np.ndarray
    cell_weights: np.ndarray = field(repr=False)

    @property
    def Dr(self):
        return self.diff_matrices[0]

    @property
    def Ds(self):
        return self.diff_matrices[1]

    def lagrange_basis(self, points):
        """Values of the nodal basis at reference points, shape (npts, N_k)."""
        return eval_modal_basis(self.degree, points, check=False) @ self.inv_vandermonde

    def interpolate(self, values, points):
        """Evaluate nodal data ``values`` (..., N_k) at reference ``points``."""
        return np.asarray(values) @ self.lagrange_basis(points).T


def _to_np(mat):
    return np.array(mat.tolist(), dtype=float)


@lru_cache(maxsize=None)
def build_reference_element(k):
    """Construct the :class:`ReferenceElement` of degree ``k`` (1 <= k <= 5)."""
    _check_degree(k)
    nk = n_dofs(k)
    nodes = _nodes_mp(k)
    with mpmath.workdps(_DPS):
        coeffs = _modal_coefficients_mp(k)
        exps = monomial_exponents(k)

        def vmat(deriv):
            dx, dy = deriv
            mono = mpmath.matrix(nk, nk)
            for r, (x, y) in enumerate(nodes):
                for c, (i, j) in enumerate(exps):
                    if i < dx or j < dy:
                        continue
                    ci = factorial(i) // factorial(i - dx)
                    cj = factorial(j) // factorial(j - dy)
                    mono[r, c] = ci * cj * x ** (i - dx) * y ** (j - dy)
            return mono * coeffs

        V = vmat((0, 0))
        Vr = vmat((1, 0))
        Vs = vmat((0, 1))
        try:
            Vinv = mpmath.inverse(V)
        except ZeroDivisionError as exc:  # pragma: no cover - cannot happen for k <= 5
            raise EtdgError(f"singular Vandermonde matrix for k={k}") from exc
        Dr = Vr * Vinv
        Ds = Vs * Vinv
        M = Vinv.T * Vinv
        S10 = M * Dr
        S01 = M * Ds
        S20 = M * Dr * Dr
        S02 = M * Ds * Ds
        S11 = M * Dr * Ds
        mass_1d = _lagrange_1d_mass_mp(k + 1)
        cell_w = [mpmath.fsum(M[i, j] for j in range(nk)) for i in range(nk)]

    Dr_np, Ds_np = _to_np(Dr), _to_np(Ds)
    lgl_x, lgl_w = lgl_nodes_weights(k + 1)
    MI = _to_np(mass_1d)
    en = edge_node_indices(k)

    edge_mass = np.zeros((3, nk, nk))
    edge_dx = np.zeros((3, nk, nk))
    edge_dy = np.zeros((3, nk, nk))
    pair_mass = np.zeros((3, 3, nk, nk))
    pair_dx = np.zeros((3, 3, nk, nk))
    pair_dy = np.zeros((3, 3, nk, nk))
    for m in range(3):
        rows = en[m]
        edge_mass[m][np.ix_(rows, rows)] = MI
        # LGL quadrature is exact for l_i * dl_j (degree 2k - 1)
        edge_dx[m][rows, :] = lgl_w[:, None] * Dr_np[rows, :]
        edge_dy[m][rows, :] = lgl_w[:, None] * Ds_np[rows, :]
        for n in range(3):
            # point gamma_m(s) of this element is gamma_n(1 - s) of the neighbour
            cols = en[n][::-1]
            pair_mass[m, n][np.ix_(rows, cols)] = MI
            pair_dx[m, n][rows, :] = lgl_w[:, None] * Dr_np[cols, :]
            pair_dy[m, n][rows, :] = lgl_w[:, None] * Ds_np[cols, :]

    return ReferenceElement(
        degree=k,
        n_dofs=nk,
        nodes=np.array([[float(x), float(y)] for x, y in nodes]),
        vandermonde=_to_np(V),
        inv_vandermonde=_to_np(Vinv),
        grad_vandermonde=(_to_np(Vr), _to_np(Vs)),
        diff_matrices=(Dr_np, Ds_np),
        mass=_to_np(M),
        stiffness={(1, 0): _to_np(S10), (0, 1): _to_np(S01), (2, 0): _to_np(S20),
                   (0, 2): _to_np(S02), (1, 1): _to_np(S11)},
        edge_nodes=en,
        edge_mass=edge_mass,
        edge_mass_dx=edge_dx,
        edge_mass_dy=edge_dy,
        pair_mass=pair_mass,
        pair_mass_dx=pair_dx,
        pair_mass_dy=pair_dy,
        lgl_nodes=lgl_x,
        lgl_weights=lgl_w,
        lgl_mass=MI,
        cell_weights=np.array([float(w) for w in cell_w]),
    )


# ---------------------------------------------------------------------------
# Quadrature

@lru_cache(maxsize=None)
def triangle_quadrature(order):
    """Collapsed (Duffy) tensor Gauss rule exact to polynomial degree ``order``.

    Returns reference points (npts, 2) and weights summing to 1/2.
    """
    n = order // 2 + 2
    g, w = npleg.leggauss(n)
    g = (g + 1) / 2
    w = w / 2
    a, b = np.meshgrid(g, g, indexing="ij")
    wa, wb = np.meshgrid(w, w, indexing="ij")
    x1 = a.ravel()
    x2 = (b * (1 - a)).ravel()
    weights = (wa * wb * (1 - a)).ravel()
    return np.column_stack([x1, x2]), weights


def gauss_interval(n):
    """Gauss-Legendre points and weights on [0, 1]."""
    g, w = npleg.leggauss(n)
    return (g + 1) / 2, w / 2
