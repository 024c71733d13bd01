"""Semi-discrete right-hand side, diffusion Jacobian and the exponential split.

``rhs(u) = D(u) + A(u) + r(u) + b(t)`` with

    D(u) = G g(u) + (beta + alpha/2) P u
    A(u) = F1 f1(u) + F2 f2(u) + (alpha/2) P_in u

The frozen Jacobian of ``D`` at ``u_n`` is the stiff linear part used by the
exponential integrators; everything else is the explicit residual ``N``.
"""

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .assembly import boundary_correction, lax_friedrichs_alpha
from .errors import ConfigError, DivergenceError


def _zero(u):
    return np.zeros_like(u)


def _identity(u):
    return u


def _one(u):
    return np.ones_like(u)


@dataclass(frozen=True)
class ProblemFunctions:
    """Pointwise functions of the PDE ``u_t + div F(u) = lap g(u) + r(u)``.

    All callables act elementwise on numpy arrays. ``r`` is None when there
    is no reaction.
    """

    g: object = _identity
    dg: object = _one
    f1: object = _zero
    df1: object = _zero
    f2: object = _zero
    df2: object = _zero
    r: object = None
    name: str = "heat"

    @property
    def has_convection(self):
        return self.f1 is not _zero or self.f2 is not _zero


# -- catalog -----------------------------------------------------------------

def power_law(m, clamp=None):
    """``g(u) = u**m``, ``g'(u) = m u**(m-1)``.

    ``clamp`` evaluates both on ``max(u, 0)``; it defaults to on for
    non-integer ``m`` (where negative bases give NaN).
    """
    m = float(m)
    if m < 1:
        raise ConfigError(f"power-law exponent must be >= 1, got {m}")
    if clamp is None:
        clamp = not m.is_integer()
    if m == 1.0:
        return _identity, _one

    if clamp:
        def g(u):
            return np.maximum(u, 0.0) ** m

        def dg(u):
            return m * np.maximum(u, 0.0) ** (m - 1)
    else:
        def g(u):
            return u ** m

        def dg(u):
            return m * u ** (m - 1)
    return g, dg


def tabulated(xs, ys):
    """Piecewise-linear ``g`` through ``(xs, ys)`` (increasing); ``g'`` is the
    slope of the containing interval and zero outside."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or len(xs) < 2 or np.any(np.diff(xs) <= 0):
        raise ConfigError("tabulated abscissae must be strictly increasing with >= 2 points")
    slopes = np.diff(ys) / np.diff(xs)
    if np.any(slopes < 0):
        raise ConfigError("tabulated diffusion function must be non-decreasing")

    def g(u):
        return np.interp(u, xs, ys)

    def dg(u):
        idx = np.clip(np.searchsorted(xs, u, side="right") - 1, 0, len(slopes) - 1)
        out = slopes[idx]
        return np.where((u < xs[0]) | (u > xs[-1]), 0.0, out)

    return g, dg


def linear_flux(a):
    a = float(a)
    return (lambda u: a * u), (lambda u: a * np.ones_like(u))


def burgers_flux(a=1.0):
    a = float(a)
    return (lambda u: 0.5 * a * u * u), (lambda u: a * u)


def sqrt_reaction(u):
    """``(u^2 - 2)(2 - 1/u)``; singular at ``u = 0``."""
    if np.any(u <= 0):
        raise DivergenceError("reaction (u^2-2)(2-1/u) evaluated at non-positive u")
    return (u * u - 2.0) * (2.0 - 1.0 / u)


def make_functions(diffusion="linear", m=1.0, flux=(0.0, 0.0), flux_kind="linear",
                   reaction=None, clamp=None, table=None):
    """Build :class:`ProblemFunctions` from catalog names.

    diffusion : ``"linear"``, ``"power"`` or ``"tabulated"`` (with ``table=(xs, ys)``)
    flux_kind : ``"linear"`` (``f_i = a_i u``) or ``"burgers"`` (``f_i = a_i u^2/2``)
    reaction : None or ``"sqrt"``
    """
    if diffusion == "linear":
        g, dg = _identity, _one
    elif diffusion == "power":
        g, dg = power_law(m, clamp)
    elif diffusion == "tabulated":
        if table is None:
            raise ConfigError("tabulated diffusion needs table=(xs, ys)")
        g, dg = tabulated(*table)
    else:
        raise ConfigError(f"unknown diffusion {diffusion!r}")
    fx = {"linear": linear_flux, "burgers": burgers_flux}.get(flux_kind)
    if fx is None:
        raise ConfigError(f"unknown flux {flux_kind!r}")
    kw = {}
    for name, a in zip(("1", "2"), flux):
        if a == 0.0:
            kw["f" + name], kw["df" + name] = _zero, _zero
        else:
            kw["f" + name], kw["df" + name] = fx(a)
    if reaction is None:
        r = None
    elif reaction == "sqrt":
        r = sqrt_reaction
    else:
        raise ConfigError(f"unknown reaction {reaction!r}")
    return ProblemFunctions(g=g, dg=dg, r=r, name=diffusion, **kw)


# -- system ------------------------------------------------------------------

@dataclass(frozen=True)
class SemiDiscreteSystem:
    ops: object
    functions: ProblemFunctions
    mesh: object = None

    @property
    def n_dofs(self):
        return self.ops.n_dofs

    def with_alpha(self, alpha):
        return replace(self, ops=self.ops.with_alpha(alpha))

    def refresh_alpha(self, u):
        """Recompute the Lax-Friedrichs viscosity from the nodal values ``u``."""
        if self.mesh is None or not self.functions.has_convection:
            return self
        alpha = lax_friedrichs_alpha(self.mesh, u, self.functions.df1,
                                     self.functions.df2, self.ops.n_local)
        return self.with_alpha(alpha)

    def diffusion(self, u):
        return self.ops.G @ self.functions.g(u) + self.ops.penalty() * (self.ops.P @ u)

    def convection(self, u):
        ops, fn = self.ops, self.functions
        out = np.zeros_like(u)
        if fn.has_convection:
            out += ops.F1 @ fn.f1(u) + ops.F2 @ fn.f2(u)
        if ops.P_in.nnz and ops.alpha:
            out += 0.5 * ops.alpha * (ops.P_in @ u)
        return out


def _check_finite(u, step=None, t=None):
    if not np.all(np.isfinite(u)):
        raise DivergenceError(f"non-finite state at t={t}" + (f", step {step}" if step is not None else ""),
                              step=step, t=t)


def rhs(system, t, u, step=None):
    """``G g(u) + F1 f1(u) + F2 f2(u) + (beta+alpha/2) P u + r(u) + b(t)``."""
    _check_finite(u, step, t)
    out = system.diffusion(u) + system.convection(u)
    if system.functions.r is not None:
        out += system.functions.r(u)
    if system.ops.has_boundary_data:
        out += boundary_correction(system.ops, t, u, system.functions)
    return out


def lift_coefficient(system, gp):
    """Replace nodal ``g'`` by its nonnegative max over each element and its
    face neighbours (constant per element)."""
    mesh = system.mesh
    if mesh is None:
        raise ConfigError("the lifted Jacobian needs the mesh connectivity")
    ne = mesh.n_elements
    E = np.maximum(gp, 0.0).reshape(ne, -1).max(axis=1)
    nb = mesh.neighbors
    E = np.maximum(E, np.where(nb >= 0, E[np.maximum(nb, 0)], 0.0).max(axis=1))
    return np.repeat(E, gp.size // ne)


def jacobian_diffusion(system, u, lifted=False):
    """``L = G diag(g'(u)) + (beta + alpha/2) P`` in CSR form.

    With ``lifted`` the diagonal uses :func:`lift_coefficient`, which keeps
    some implicit diffusion in cells just ahead of a degenerate front.
    """
    _check_finite(u)
    gp = np.asarray(system.functions.dg(u), dtype=float) * np.ones_like(u)
    if lifted:
        gp = lift_coefficient(system, gp)
    L = system.ops.G @ sp.diags(gp) + system.ops.penalty() * system.ops.P
    return sp.csr_matrix(L)


def split_for_etd(system, u_n, lifted=False):
    """Return ``(L, N)`` with ``N(t, u) = rhs(t, u) - L u``."""
    L = jacobian_diffusion(system, u_n, lifted)

    def N(t, u, step=None):
        return rhs(system, t, u, step) - L @ u

    return L, N
