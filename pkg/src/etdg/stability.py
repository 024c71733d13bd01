"""Fourier stability of the split ETD-RK schemes for ``u_t = theta u_xx + (1-theta) u_xx``.

With time step one, the part ``theta X`` is integrated exactly and
``(1 - theta) X`` explicitly, where ``X`` is the Fourier symbol of the
second derivative: the scalar ``-xi^2`` for the semi-discrete schemes, or
the DG block symbol ``D(h, xi)`` for the fully discrete ones.
"""

import csv
import io

import numpy as np

from .assembly import assemble_1d
from .errors import ConfigError, DomainError
from .integrators import ETD_SCHEMES
from .phi import phi_dense, phi_scalar

XI_MAX = 200.0
XI_POINTS = 20001
SEMI_TOL = 1e-12
FULL_TOL = 1e-10
H_LIST = (2 * np.pi / 10, 2 * np.pi / 40, 2 * np.pi / 160)
SCAN_HEADER = ("scheme", "k", "theta", "h", "max_rho")


def _order(scheme):
    if scheme not in ETD_SCHEMES:
        raise ConfigError(f"stability analysis covers {', '.join(ETD_SCHEMES)}, got {scheme!r}")
    return ETD_SCHEMES.index(scheme) + 1


def _growth(order, theta, X, phi, mul, one):
    """Apply one ETD-RK step to the symbol ``X``.

    ``phi(j, c)`` returns ``phi_j(c theta X)``, ``mul`` multiplies an operator
    by a state and ``one`` is the initial state (1 or the identity).
    """
    nu = 1.0 - theta

    def F(v):
        return mul(X, v)

    def N(v):
        return nu * mul(X, v)

    u = one
    Fu, Nu = F(u), N(u)
    p1, p2, p3 = phi(1, 1.0), phi(2, 1.0), phi(3, 1.0)
    if order == 1:
        return u + mul(p1, Fu)
    if order == 2:
        a = u + mul(p1, Fu)
        return a + mul(p2, N(a) - Nu)
    h1 = 0.5 * phi(1, 0.5)
    if order == 3:
        a = u + mul(h1, Fu)
        b = u + mul(p1, theta * Fu + 2 * N(a) - Nu)
        Na, Nb = N(a), N(b)
        return (u + mul(p1, Fu) + mul(p2, -3 * Nu + 4 * Na - Nb)
                + mul(p3, 4 * Nu - 8 * Na + 4 * Nb))
    a = u + mul(h1, Fu)
    Na = N(a)
    b = u + mul(h1, theta * Fu + Na)
    Nb = N(b)
    c = a + mul(h1, theta * F(a) + 2 * Nb - Nu)
    Nc = N(c)
    return (u + mul(p1, Fu) + mul(p2, -3 * Nu + 2 * Na + 2 * Nb - Nc)
            + mul(p3, 4 * Nu - 4 * Na - 4 * Nb + 4 * Nc))


def semi_growth(scheme, theta, xi):
    """Growth factor ``G(theta, xi)`` of the semi-discrete scheme (vectorised in ``xi``)."""
    if theta <= 0:
        raise DomainError(f"theta must be positive, got {theta}")
    X = -np.asarray(xi, dtype=float) ** 2

    def phi(j, c):
        return phi_scalar(c * theta * X, j)

    return _growth(_order(scheme), theta, X, phi, np.multiply, 1.0)


def growth_limit(scheme, theta):
    """``lim_{xi -> inf} G(theta, xi)``."""
    q = (theta - 1.0) / theta
    return {1: q, 2: q * q, 3: q * q * (1.0 - 2.0 / theta),
            4: q * q * (theta ** 2 - 4 * theta + 2) / theta ** 2}[_order(scheme)]


def _bisect(stable, lo=0.05, hi=1.0, tol=5e-7):
    if not stable(hi):
        raise DomainError("scheme is unstable even at theta = 1")
    if stable(lo):
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if stable(mid):
            hi = mid
        else:
            lo = mid
    return hi


def theta_threshold(scheme, n_xi=XI_POINTS, xi_max=XI_MAX):
    """Smallest ``theta`` with ``sup_xi |G| <= 1`` (grid on ``[0, xi_max]`` plus the limit)."""
    _order(scheme)
    xi = np.linspace(0.0, xi_max, n_xi)

    def stable(theta):
        worst = max(np.abs(semi_growth(scheme, theta, xi)).max(), abs(growth_limit(scheme, theta)))
        return worst <= 1.0 + SEMI_TOL

    return _bisect(stable)


def default_beta_1d(k):
    """Dimensionless interface penalty ``2 (k + 1)^2`` for the 1D blocks."""
    return 2.0 * (k + 1) ** 2


def full_growth(scheme, theta, k, h, xi, beta=None):
    """Matrix growth factor of the fully discrete scheme and its spectral radius.

    Returns ``(G, rho)`` with ``G`` of shape ``(k+1, k+1)``.
    """
    if theta <= 0:
        raise DomainError(f"theta must be positive, got {theta}")
    blocks = assemble_1d(k, h, default_beta_1d(k) if beta is None else beta)
    return _full_growth(_order(scheme), theta, blocks, xi)


def _full_growth(order, theta, blocks, xi):
    D = blocks.symbol(xi)
    cache = {}

    def phi(j, c):
        if (j, c) not in cache:
            cache[(j, c)] = phi_dense(c * theta * D, j)
        return cache[(j, c)]

    G = _growth(order, theta, D, phi, np.matmul, np.eye(D.shape[0], dtype=complex))
    return G, float(np.abs(np.linalg.eigvals(G)).max())


def max_spectral_radius(scheme, theta, k, h, n_xi=1001, beta=None):
    """``max rho(G)`` over ``n_xi`` samples of ``xi`` in ``[-pi, pi]``."""
    order = _order(scheme)
    blocks = assemble_1d(k, h, default_beta_1d(k) if beta is None else beta)
    return max(_full_growth(order, theta, blocks, xi)[1]
               for xi in np.linspace(-np.pi, np.pi, n_xi))


def full_theta_threshold(scheme, k, h_list=H_LIST, n_xi=201):
    """Smallest ``theta`` with ``max rho <= 1`` for every ``h`` in ``h_list``."""
    def stable(theta):
        return all(max_spectral_radius(scheme, theta, k, h, n_xi) <= 1.0 + FULL_TOL for h in h_list)

    return _bisect(stable, tol=1e-4)


def scan_stability(scheme, k, thetas, h_list=H_LIST, n_xi=1001):
    """Rows ``(scheme, k, theta, h, max_rho)`` over the ``theta x h`` grid."""
    return [(scheme, int(k), float(theta), float(h), max_spectral_radius(scheme, theta, k, h, n_xi))
            for theta in thetas for h in h_list]


def scan_to_csv(rows, stream=None):
    """Write scan rows as CSV (``%.12e`` floats); returns the text when ``stream`` is None."""
    out = stream if stream is not None else io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(SCAN_HEADER)
    for scheme, k, theta, h, rho in rows:
        w.writerow([scheme, k, "%.12e" % theta, "%.12e" % h, "%.12e" % rho])
    return out.getvalue() if stream is None else None
