"""Global sparse DG operators.

The semi-discrete system is

    u_t = G g(u) + F1 f1(u) + F2 f2(u) + (beta + alpha/2) P u
          + (alpha/2) P_in u + b(t, u)

with element-major DoF ordering (element ``K`` owns rows
``K*nk : (K+1)*nk`` in local node order). ``P_in`` only carries the
Lax-Friedrichs jump on inflow edges, which have no diffusion penalty; it is
empty on meshes without inflow edges.

Boundary tags act on both parts of the operator:

=========  ===================================  =========================
tag        diffusion                            convection
=========  ===================================  =========================
dirichlet  Dirichlet, ``u = u_D``               exterior state ``u_D``
neumann    Neumann, ``d g / dn = g_N``          outflow
outflow    Neumann, ``d g / dn = g_N``          outflow
inflow     Neumann, ``d g / dn = g_N``          exterior state ``u_in``
=========  ===================================  =========================
"""

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .errors import AssemblyError, ConfigError, DomainError
from .mesh import BOUNDARY_TAGS, INTERIOR, PERIODIC
from .reference import lgl_nodes_weights, gauss_interval

DEFAULT_C_BETA = 2.0
ALPHA_SAFETY = 1.1


@dataclass
class BoundaryData:
    """Boundary data callables ``f(t, x, y) -> array``.

    ``neumann`` (the flux ``g_N``) defaults to zero; ``dirichlet`` and
    ``inflow`` must be given when edges with those tags exist.
    """

    dirichlet: object = None
    neumann: object = None
    inflow: object = None


@dataclass
class _Lift:
    elements: np.ndarray
    mats: dict


@dataclass
class GlobalOperators:
    G: sp.csr_matrix
    F1: sp.csr_matrix
    F2: sp.csr_matrix
    P: sp.csr_matrix
    P_in: sp.csr_matrix
    beta: float
    alpha: float
    weights: np.ndarray
    nodes: np.ndarray
    n_local: int
    lifts: dict = field(default_factory=dict, repr=False)
    bc: BoundaryData = field(default_factory=BoundaryData, repr=False)

    @property
    def n_dofs(self):
        return self.G.shape[0]

    @property
    def has_boundary_data(self):
        return bool(self.lifts)

    def with_alpha(self, alpha):
        return replace(self, alpha=float(alpha))

    def penalty(self):
        return self.beta + 0.5 * self.alpha


def default_beta(mesh, k, c_beta=DEFAULT_C_BETA):
    """``c_beta (k+1)^2 / h`` with ``h`` the smallest element altitude."""
    return c_beta * (k + 1) ** 2 / mesh.min_altitude


def diffusion_scaled_beta(mesh, k, dg, u, c_beta=DEFAULT_C_BETA):
    """:func:`default_beta` times ``max(1, max g'(u))``.

    The penalty acts on jumps of ``u`` while the consistency terms carry
    ``g'(u)``; when ``g'`` exceeds one, the unscaled penalty can leave the
    Jacobian ``G g'(u) + beta P`` with eigenvalues of positive real part.
    """
    gp = np.asarray(dg(np.asarray(u, dtype=float)), dtype=float)
    return default_beta(mesh, k, c_beta) * max(1.0, float(gp.max()))


def lax_friedrichs_alpha(mesh, u, df1, df2, n_local, safety=ALPHA_SAFETY):
    """``safety * max |f1'(u) n_x + f2'(u) n_y|`` over nodal values and normals.

    Each element's nodal values are paired with that element's own edge
    normals.
    """
    u = np.asarray(u).reshape(mesh.n_elements, n_local)
    a = np.asarray(df1(u), dtype=float) * np.ones_like(u)
    b = np.asarray(df2(u), dtype=float) * np.ones_like(u)
    nx = mesh.normals[..., 0]
    ny = mesh.normals[..., 1]
    speed = np.abs(a[:, :, None] * nx[:, None, :] + b[:, :, None] * ny[:, None, :])
    return safety * float(speed.max()) if speed.size else 0.0


# ---------------------------------------------------------------------------
# 2D assembly

def _edge_coefficients(tags):
    """Per-edge weights of the one-sided terms, shape (Ne, 3) each."""
    interior = (tags == INTERIOR) | (tags == PERIODIC)
    dirichlet = tags == "dirichlet"
    neumannish = np.isin(tags, ("neumann", "outflow", "inflow"))
    unknown = ~(interior | dirichlet | neumannish)
    if unknown.any():
        k, m = np.argwhere(unknown)[0]
        raise AssemblyError(f"unsupported boundary tag {tags[k, m]!r} on element {k}, edge {m}")
    grad = 0.5 * interior + 1.0 * dirichlet
    trace = 0.5 * interior + 1.0 * neumannish
    penalty = 1.0 * (interior | dirichlet)
    penalty_in = 1.0 * (tags == "inflow")
    flux = 0.5 * (interior | dirichlet | (tags == "inflow")) + 1.0 * np.isin(tags, ("neumann", "outflow"))
    return dict(grad=grad, trace=trace, penalty=penalty, penalty_in=penalty_in, flux=flux)


def _local_blocks(mesh, ref):
    """Dense per-element blocks (before applying ``M_K^{-1}``)."""
    ne, nk = mesh.n_elements, ref.n_dofs
    J = mesh.jacobian
    det = mesh.det_jacobian
    S = ref.stiffness
    coef = _edge_coefficients(mesh.edge_tags)

    a20 = J[:, 0, 0] ** 2 + J[:, 0, 1] ** 2
    a11 = 2 * (J[:, 0, 0] * J[:, 1, 0] + J[:, 0, 1] * J[:, 1, 1])
    a02 = J[:, 1, 0] ** 2 + J[:, 1, 1] ** 2
    lap = (a20[:, None, None] * S[(2, 0)] + a11[:, None, None] * S[(1, 1)]
           + a02[:, None, None] * S[(0, 2)]) / det[:, None, None]
    s10 = (J[:, 0, 0, None, None] * S[(1, 0)] + J[:, 1, 0, None, None] * S[(0, 1)]) / det[:, None, None]
    s01 = (J[:, 0, 1, None, None] * S[(1, 0)] + J[:, 1, 1, None, None] * S[(0, 1)]) / det[:, None, None]

    diag = {name: np.zeros((ne, nk, nk)) for name in ("G", "F1", "F2", "P", "P_in")}
    off = {name: np.zeros((ne, 3, nk, nk)) for name in ("G", "F1", "F2", "P")}
    diag["G"] += lap.transpose(0, 2, 1)
    diag["F1"] += s10.transpose(0, 2, 1)
    diag["F2"] += s01.transpose(0, 2, 1)
    edge_terms = []

    for m in range(3):
        n = mesh.normals[:, m]
        L = mesh.edge_length[:, m]
        cr = np.einsum("ki,ki->k", J[:, 0, :], n)
        cs = np.einsum("ki,ki->k", J[:, 1, :], n)
        bmass = L[:, None, None] * ref.edge_mass[m]
        bn = L[:, None, None] * (cr[:, None, None] * ref.edge_mass_dx[m]
                                 + cs[:, None, None] * ref.edge_mass_dy[m])
        diag["G"] += (coef["grad"][:, m, None, None] * bn
                      - coef["trace"][:, m, None, None] * bn.transpose(0, 2, 1))
        diag["F1"] -= (coef["flux"][:, m] * n[:, 0])[:, None, None] * bmass
        diag["F2"] -= (coef["flux"][:, m] * n[:, 1])[:, None, None] * bmass
        diag["P"] -= coef["penalty"][:, m, None, None] * bmass
        diag["P_in"] -= coef["penalty_in"][:, m, None, None] * bmass
        edge_terms.append((bmass, bn))

        nb = mesh.neighbors[:, m]
        ks = np.flatnonzero(nb >= 0)
        if ks.size == 0:
            continue
        e = mesh.edge_map[ks, m]
        kn = nb[ks]
        Ln = L[ks, None, None]
        nn = n[ks]
        Jn = J[kn]
        crn = np.einsum("ki,ki->k", Jn[:, 0, :], nn)
        csn = np.einsum("ki,ki->k", Jn[:, 1, :], nn)
        bpair = Ln * ref.pair_mass[m, e]
        bn_pair = Ln * (crn[:, None, None] * ref.pair_mass_dx[m, e]
                        + csn[:, None, None] * ref.pair_mass_dy[m, e])
        # [l^{K_m}_j, d l^K_i / dn^K] over the same edge seen from K_m
        bn_back = Ln * (cr[ks, None, None] * ref.pair_mass_dx[e, m]
                        + cs[ks, None, None] * ref.pair_mass_dy[e, m])
        off["G"][ks, m] = 0.5 * bn_pair - 0.5 * bn_back.transpose(0, 2, 1)
        off["F1"][ks, m] = -0.5 * nn[:, 0, None, None] * bpair
        off["F2"][ks, m] = -0.5 * nn[:, 1, None, None] * bpair
        off["P"][ks, m] = bpair
    return diag, off, edge_terms, coef


def _to_csr(diag, off, neighbors, nk):
    ne = diag.shape[0]
    loc_r, loc_c = np.meshgrid(np.arange(nk), np.arange(nk), indexing="ij")
    rows = [(np.arange(ne)[:, None, None] * nk + loc_r).ravel()]
    cols = [(np.arange(ne)[:, None, None] * nk + loc_c).ravel()]
    vals = [diag.ravel()]
    if off is not None:
        for m in range(3):
            ks = np.flatnonzero(neighbors[:, m] >= 0)
            rows.append((ks[:, None, None] * nk + loc_r).ravel())
            cols.append((neighbors[ks, m][:, None, None] * nk + loc_c).ravel())
            vals.append(off[ks, m].ravel())
    n = ne * nk
    mat = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(n, n)).tocsr()
    mat.sum_duplicates()
    return mat


def _build(mesh, ref, beta, alpha, bc):
    if beta is not None and beta <= 0:
        raise DomainError(f"penalty beta must be positive, got {beta}")
    if alpha < 0:
        raise DomainError(f"viscosity alpha must be non-negative, got {alpha}")
    nk = ref.n_dofs
    diag, off, edge_terms, coef = _local_blocks(mesh, ref)
    minv = np.linalg.inv(ref.mass)
    scale = mesh.det_jacobian[:, None, None] * minv  # M_K^{-1}
    mats = {}
    for name in ("G", "F1", "F2", "P", "P_in"):
        d = scale @ diag[name]
        o = None
        if name in off:
            o = np.einsum("kij,kmjl->kmil", scale, off[name])
        mats[name] = _to_csr(d, o, mesh.neighbors, nk)
    mats["P_in"].eliminate_zeros()

    lifts = {}
    tags = mesh.edge_tags
    for tag in BOUNDARY_TAGS:
        km = np.argwhere(tags == tag)
        if km.size == 0:
            continue
        ks, ms = km[:, 0], km[:, 1]
        bmass = np.stack([edge_terms[m][0][k] for k, m in km])
        bn = np.stack([edge_terms[m][1][k] for k, m in km])
        sc = scale[ks]
        n = mesh.normals[ks, ms]
        entry = {"mass": sc @ bmass}
        if tag == "dirichlet":
            entry["grad"] = -sc @ bn.transpose(0, 2, 1)
        if tag in ("dirichlet", "inflow"):
            entry["f1"] = -0.5 * n[:, 0, None, None] * entry["mass"]
            entry["f2"] = -0.5 * n[:, 1, None, None] * entry["mass"]
        lifts[tag] = _Lift(ks, entry)

    if beta is None:
        beta = default_beta(mesh, ref.degree)
    weights = (ref.cell_weights[None, :] / mesh.det_jacobian[:, None]).ravel()
    nodes = mesh.physical_points(ref.nodes)
    return GlobalOperators(mats["G"], mats["F1"], mats["F2"], mats["P"], mats["P_in"],
                           float(beta), float(alpha), weights, nodes, nk, lifts,
                           bc if bc is not None else BoundaryData())


def assemble_global(mesh, ref, beta=None, alpha=0.0, bc=None):
    """Assemble :class:`GlobalOperators` for ``mesh`` at degree ``ref.degree``.

    ``beta=None`` selects :func:`default_beta`. ``alpha`` may be updated later
    with :meth:`GlobalOperators.with_alpha` without reassembly.
    """
    return _build(mesh, ref, beta, alpha, bc)


def assemble_diffusion(mesh, ref, beta=None, bc=None):
    """Diffusion part: returns ``(G, P, lifts)``; ``beta * P`` is the penalty term."""
    ops = _build(mesh, ref, beta, 0.0, bc)
    lifts = {t: l for t, l in ops.lifts.items()}
    return ops.G, ops.P, lifts


def assemble_convection(mesh, ref, alpha=0.0, bc=None):
    """Convection part: returns ``(F1, F2, P, P_in, lifts)``."""
    ops = _build(mesh, ref, 1.0, alpha, bc)
    return ops.F1, ops.F2, ops.P, ops.P_in, ops.lifts


def boundary_correction(ops, t, u=None, functions=None):
    """Affine boundary vector ``b(t, u)``.

    ``functions`` supplies ``g``, ``f1`` and ``f2`` (any object with those
    callables) and is needed when Dirichlet or inflow edges are present.
    ``u`` is unused: with the current flux choices the boundary terms that
    depend on the solution are already in the matrices.
    """
    b = np.zeros(ops.n_dofs)
    if not ops.lifts:
        return b
    nk = ops.n_local
    bv = b.reshape(-1, nk)
    bc = ops.bc
    for tag, lift in ops.lifts.items():
        x = ops.nodes[lift.elements]
        mats = lift.mats
        if tag == "dirichlet" or tag == "inflow":
            data_fn = bc.dirichlet if tag == "dirichlet" else bc.inflow
            if data_fn is None:
                raise ConfigError(f"no {tag} data supplied for {tag}-tagged edges")
            if functions is None:
                raise ConfigError("problem functions are needed for Dirichlet/inflow data")
            ud = np.broadcast_to(np.asarray(data_fn(t, x[..., 0], x[..., 1]), dtype=float),
                                 x.shape[:2])
            coef = ops.penalty() if tag == "dirichlet" else 0.5 * ops.alpha
            contrib = coef * np.einsum("kij,kj->ki", mats["mass"], ud)
            contrib += np.einsum("kij,kj->ki", mats["f1"], functions.f1(ud) * np.ones_like(ud))
            contrib += np.einsum("kij,kj->ki", mats["f2"], functions.f2(ud) * np.ones_like(ud))
            if tag == "dirichlet":
                contrib += np.einsum("kij,kj->ki", mats["grad"], functions.g(ud))
            np.add.at(bv, lift.elements, contrib)
        if tag in ("neumann", "outflow", "inflow") and bc.neumann is not None:
            gn = np.broadcast_to(np.asarray(bc.neumann(t, x[..., 0], x[..., 1]), dtype=float),
                                 x.shape[:2])
            np.add.at(bv, lift.elements, np.einsum("kij,kj->ki", mats["mass"], gn))
    return b


# ---------------------------------------------------------------------------
# 1D periodic blocks

@dataclass(frozen=True)
class OneDBlocks:
    """Blocks ``D_{-1}, D_0, D_1`` of the 1D periodic diffusion operator.

    Each block is ``nonbeta + beta * betapart``; ``beta`` is dimensionless
    (the interface penalty is ``beta / h``).
    """

    k: int
    h: float
    beta: float
    nonbeta: dict
    betapart: dict

    def block(self, offset):
        return self.nonbeta[offset] + self.beta * self.betapart[offset]

    @property
    def D_minus(self):
        return self.block(-1)

    @property
    def D0(self):
        return self.block(0)

    @property
    def D_plus(self):
        return self.block(1)

    def symbol(self, xi):
        """``D(xi) = D_{-1} e^{-i xi} + D_0 + D_1 e^{i xi}``."""
        return (self.block(-1) * np.exp(-1j * xi) + self.block(0)
                + self.block(1) * np.exp(1j * xi))


def _lagrange_1d_derivative(x):
    """Nodal differentiation matrix on nodes ``x`` (barycentric form)."""
    n = len(x)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / diff.prod(axis=1)
    D = (w[None, :] / w[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def _lagrange_1d_eval(x, pts):
    """Values of the Lagrange basis on nodes ``x`` at ``pts``: (len(pts), len(x))."""
    out = np.ones((len(pts), len(x)))
    for j in range(len(x)):
        for i in range(len(x)):
            if i != j:
                out[:, j] *= (pts - x[i]) / (x[j] - x[i])
    return out


def assemble_1d(k, h, beta=0.0):
    """1D periodic diffusion blocks for ``u_t = u_xx`` in the LGL nodal basis.

    Same flux choices as the 2D diffusion operator: averaged trace and
    averaged gradient plus the jump penalty ``(beta/h) [u]``.
    """
    if k < 1:
        raise DomainError(f"degree must be >= 1, got {k}")
    if h <= 0:
        raise DomainError(f"cell width must be positive, got {h}")
    r, _ = lgl_nodes_weights(k + 1)
    D = _lagrange_1d_derivative(r) / h  # d/dx
    gq, gw = gauss_interval(k + 2)
    phi = _lagrange_1d_eval(r, gq)
    M = h * (phi.T * gw) @ phi
    S2 = M @ D @ D  # (S2)_ij = int l_i l_j''
    nk = k + 1
    e0 = np.zeros(nk)
    e0[0] = 1.0
    e1 = np.zeros(nk)
    e1[-1] = 1.0
    d0 = D[0]  # l_j'(left end)
    d1 = D[-1]  # l_j'(right end)

    A = {-1: np.zeros((nk, nk)), 0: S2.T.copy(), 1: np.zeros((nk, nk))}
    B = {o: np.zeros((nk, nk)) for o in (-1, 0, 1)}
    # right face, n = +1: interior node k of this cell, exterior node 0 of cell j+1
    A[0] += -0.5 * np.outer(d1, e1)          # -{g} v'(1): own trace
    A[1] += -0.5 * np.outer(d1, e0)          # neighbour trace
    A[0] += 0.5 * np.outer(e1, d1)           # {g'} v(1): own gradient
    A[1] += 0.5 * np.outer(e1, d0)           # neighbour gradient at its left end
    B[0] += -np.outer(e1, e1)
    B[1] += np.outer(e1, e0)
    # left face, n = -1: interior node 0, exterior node k of cell j-1
    A[0] += 0.5 * np.outer(d0, e0)
    A[-1] += 0.5 * np.outer(d0, e1)
    A[0] += -0.5 * np.outer(e0, d0)
    A[-1] += -0.5 * np.outer(e0, d1)
    B[0] += -np.outer(e0, e0)
    B[-1] += np.outer(e0, e1)

    minv = np.linalg.inv(M)
    nonbeta = {o: minv @ A[o] for o in A}
    betapart = {o: minv @ B[o] / h for o in B}
    return OneDBlocks(k, float(h), float(beta), nonbeta, betapart)


def compare_1d_with_table(k, rtol=1e-10):
    """Return ``(ok, max_rel_err)`` of :func:`assemble_1d` against the closed forms."""
    from .blocks1d_table import tabulated_blocks

    blocks = assemble_1d(k, 1.0, 0.0)
    table = tabulated_blocks(k)
    worst = 0.0
    ok = True
    for off in (-1, 0, 1):
        for got, want in ((blocks.nonbeta[off], table[off][0]),
                          (blocks.betapart[off], table[off][1])):
            scale = max(np.abs(want).max(), 1.0)
            err = np.abs(got - want).max() / scale
            worst = max(worst, err)
            ok &= bool(np.allclose(got, want, rtol=rtol, atol=rtol * scale))
    return ok, worst
