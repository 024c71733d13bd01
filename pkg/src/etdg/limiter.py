"""TVB minmod limiters for nodal DG data on intervals and triangles.

Both limiters work on the split ``u = mean + deviation``. A cell whose
deviations are changed by the modified minmod is replaced by a limited
linear polynomial with the same mean; other cells pass through untouched,
high-order content included.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .reference import lgl_nodes_weights, triangle_quadrature

DEFAULT_M = 20.0
DEFAULT_NU = 1.5


@dataclass(frozen=True)
class LimiterConfig:
    M: float = DEFAULT_M
    enabled: bool = True

    def __post_init__(self):
        if self.M < 0:
            raise ConfigError(f"TVB constant M must be >= 0, got {self.M}")


def minmod(*args):
    """Elementwise minmod: the smallest magnitude if all signs agree, else 0."""
    a = np.stack(np.broadcast_arrays(*args))
    s = np.sign(a[0])
    same = np.all(np.sign(a) == s, axis=0)
    return np.where(same, s * np.abs(a).min(axis=0), 0.0)


def tvb_minmod(a1, *rest, threshold):
    """Modified minmod: ``a1`` where ``|a1| <= threshold``, else ``minmod(a1, *rest)``."""
    return np.where(np.abs(a1) <= threshold, a1, minmod(a1, *rest))


# ---------------------------------------------------------------------------
# 1D

def _degree(ref):
    return int(getattr(ref, "degree", ref))


def tvb_limit_1d(u, mesh, ref, M=DEFAULT_M):
    """Limit nodal LGL data ``u`` of shape ``(n_cells * (k+1),)`` on a :class:`Mesh1D`.

    ``ref`` is the polynomial degree or any object with a ``degree``
    attribute. Non-periodic meshes use the cell's own mean as ghost value.
    """
    k = _degree(ref)
    x, w = lgl_nodes_weights(k + 1)
    U = np.asarray(u, dtype=float).reshape(mesh.n_cells, k + 1)
    mean = U @ w
    # right deviation of the L2 projection onto linears: 3 int (2x-1) u on [0, 1]
    gx, gw = np.polynomial.legendre.leggauss(k + 1)
    gx = 0.5 * (gx + 1)
    gw = 0.5 * gw
    basis = _lagrange_eval(x, gx)
    c1 = 3.0 * (U @ basis.T) @ (gw * (2 * gx - 1))

    if mesh.periodic:
        right, left = np.roll(mean, -1), np.roll(mean, 1)
    else:
        right = np.append(mean[1:], mean[-1])
        left = np.insert(mean[:-1], 0, mean[0])
    dp, dm = right - mean, mean - left
    thr = M * mesh.h ** 2
    ur = U[:, -1] - mean
    ul = mean - U[:, 0]
    ur_mod = tvb_minmod(ur, dp, dm, threshold=thr)
    ul_mod = tvb_minmod(ul, dp, dm, threshold=thr)
    troubled = (ur_mod != ur) | (ul_mod != ul)
    out = U.copy()
    if troubled.any():
        d = minmod(c1, dp, dm)[troubled]
        out[troubled] = mean[troubled, None] + d[:, None] * (2 * x - 1)
    return out.ravel()


def _lagrange_eval(x, pts):
    out = np.ones((len(pts), len(x)))
    for j in range(len(x)):
        for i in range(len(x)):
            if i != j:
                out[:, j] *= (pts - x[i]) / (x[j] - x[i])
    return out


# ---------------------------------------------------------------------------
# triangles

class TriangleLimiter:
    """Edge-midpoint TVB limiter on a triangulation (precomputed geometry).

    For edge ``i`` of element ``K`` the midpoint offset ``m_i - b_0`` is
    written as ``a1 (b_i - b_0) + a2 (b_j - b_0)`` with neighbour centroids
    ``b_i, b_j``; the predicted deviation is the same combination of mean
    differences. Boundary edges use a mirrored ghost centroid carrying the
    element's own mean.
    """

    def __init__(self, mesh, ref, M=DEFAULT_M, nu=DEFAULT_NU, positivity=False):
        if M < 0:
            raise ConfigError(f"TVB constant M must be >= 0, got {M}")
        self.mesh, self.ref, self.M, self.nu = mesh, ref, float(M), float(nu)
        self.positivity = bool(positivity)
        nodes = ref.nodes
        lam = np.column_stack([nodes[:, 0], nodes[:, 1], 1 - nodes.sum(axis=1)])
        # Crouzeix-Raviart basis: psi_i = 1 at midpoint of edge i, 0 at the others
        self.psi = 1.0 - 2.0 * lam  # (nk, 3)
        qp, qw = triangle_quadrature(2 * ref.degree + 2)
        lq = np.column_stack([qp[:, 0], qp[:, 1], 1 - qp.sum(axis=1)])
        psi_q = 1.0 - 2.0 * lq
        phi_q = ref.lagrange_basis(qp)
        m1 = (psi_q.T * qw) @ psi_q
        b = (psi_q.T * qw) @ phi_q
        self.to_mid = np.linalg.solve(m1, b)  # nodal -> midpoint values of the P1 projection
        self.mean_w = ref.cell_weights / ref.cell_weights.sum()
        self._geometry()

    def _geometry(self):
        mesh = self.mesh
        b0 = mesh.centroids
        nb = mesh.neighbors
        mids = mesh.edge_midpoints
        nrm = mesh.normals
        ghost = b0[:, None, :] + 2 * np.einsum("kmd,kmd->km", mids - b0[:, None, :], nrm)[..., None] * nrm
        nbc = np.where(nb[..., None] >= 0,
                       mesh.centroids[np.maximum(nb, 0)] + mesh.neighbor_shift, ghost)
        dirs = nbc - b0[:, None, :]  # (Ne, 3, 2)
        target = mids - b0[:, None, :]
        ne = mesh.n_elements
        coef = np.zeros((ne, 3, 2))
        partner = np.zeros((ne, 3), dtype=int)
        for i in range(3):
            best = np.full(ne, -np.inf)
            for j in ((i + 1) % 3, (i + 2) % 3):
                A = np.stack([dirs[:, i], dirs[:, j]], axis=-1)
                a = np.linalg.solve(A, target[:, i, :, None])[..., 0]
                score = a.min(axis=1)
                take = score > best
                coef[take, i] = a[take]
                partner[take, i] = j
                best = np.where(take, score, best)
        self.coef = coef
        self.partner = partner
        self.threshold = self.M * mesh.edge_length.max(axis=1) ** 2

    def means(self, u):
        U = np.asarray(u, dtype=float).reshape(self.mesh.n_elements, -1)
        return U @ self.mean_w

    def __call__(self, u):
        mesh = self.mesh
        U = np.asarray(u, dtype=float).reshape(mesh.n_elements, -1)
        mean = U @ self.mean_w
        nb = mesh.neighbors
        nbmean = np.where(nb >= 0, mean[np.maximum(nb, 0)], mean[:, None])
        diff = nbmean - mean[:, None]  # (Ne, 3)
        own = diff
        other = np.take_along_axis(diff, self.partner, axis=1)
        pred = self.coef[..., 0] * own + self.coef[..., 1] * other
        dev = U @ self.to_mid.T - mean[:, None]
        lim = tvb_minmod(dev, self.nu * pred, threshold=self.threshold[:, None])
        troubled = np.any(lim != dev, axis=1)
        if not troubled.any():
            return self._positive(U.copy(), mean).ravel()
        d = lim[troubled]
        pos = np.maximum(d, 0).sum(axis=1)
        neg = np.maximum(-d, 0).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            tp = np.where(pos > 0, np.minimum(1.0, neg / pos), 0.0)
            tn = np.where(neg > 0, np.minimum(1.0, pos / neg), 0.0)
        d = tp[:, None] * np.maximum(d, 0) - tn[:, None] * np.maximum(-d, 0)
        out = U.copy()
        out[troubled] = mean[troubled, None] + d @ self.psi.T
        return self._positive(out, mean).ravel()

    def _positive(self, U, mean):
        """Shrink deviations so no node drops below ``min(mean, 0)``."""
        if not self.positivity:
            return U
        floor = np.minimum(mean, 0.0)
        low = U.min(axis=1)
        bad = low < floor
        if bad.any():
            with np.errstate(divide="ignore", invalid="ignore"):
                theta = np.clip((mean[bad] - floor[bad]) / (mean[bad] - low[bad]), 0.0, 1.0)
            U[bad] = mean[bad, None] + theta[:, None] * (U[bad] - mean[bad, None])
        return U


def tvb_limit_tri(u, mesh, ref, M=DEFAULT_M, nu=DEFAULT_NU, positivity=False):
    """One-shot triangle limiting; build a :class:`TriangleLimiter` to reuse geometry."""
    return TriangleLimiter(mesh, ref, M, nu, positivity)(u)
