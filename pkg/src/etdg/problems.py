"""Built-in test problems with exact solutions, and error norms."""

from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .assembly import BoundaryData
from .errors import ConfigError, DomainError
from .reference import triangle_quadrature
from .system import ProblemFunctions, make_functions

TWO_PI = 2 * np.pi


@dataclass
class ProblemSpec:
    """A PDE with initial data and (optionally) its exact solution.

    ``initial(x, y)`` and ``exact(x, y, t)`` act on arrays. ``domain`` is
    ``("rect", ((x0, x1), (y0, y1)), periodic)`` or ``("disk", radius)``.
    """

    name: str
    functions: ProblemFunctions
    initial: object
    exact: object = None
    t0: float = 0.0
    t_end: float = 1.0
    domain: tuple = ("rect", ((0.0, TWO_PI), (0.0, TWO_PI)), True)
    bc: BoundaryData = field(default_factory=BoundaryData)
    params: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Barenblatt

def barenblatt_exponent(m, d):
    return 1.0 / (m - 1.0 + 2.0 / d)


def barenblatt_radius(t, m, d):
    """Front radius: ``|x|^2 = 2 d m t^{2p/d} / (p (m-1))``."""
    p = barenblatt_exponent(m, d)
    return np.sqrt(2 * d * m * t ** (2 * p / d) / (p * (m - 1)))


def barenblatt(x, t, m, d=2):
    """Barenblatt solution of ``u_t = lap u^m`` in ``d`` dimensions.

    ``x`` has trailing axis of length ``d`` (for ``d = 1`` a plain array of
    positions is also accepted).
    """
    if t <= 0:
        raise DomainError(f"Barenblatt solution needs t > 0, got {t}")
    if m <= 1:
        raise DomainError(f"Barenblatt solution needs m > 1, got {m}")
    if d not in (1, 2, 3):
        raise DomainError(f"dimension must be 1, 2 or 3, got {d}")
    x = np.asarray(x, dtype=float)
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        r2 = x ** 2
    else:
        if x.shape[-1] != d:
            raise DomainError(f"points must have trailing dimension {d}")
        r2 = (x ** 2).sum(axis=-1)
    p = barenblatt_exponent(m, d)
    core = 1.0 - p * (m - 1) * r2 / (2 * d * m * t ** (2 * p / d))
    return t ** (-p) * np.maximum(core, 0.0) ** (1.0 / (m - 1))


# ---------------------------------------------------------------------------
# Catalog

def example1_linear():
    """``u_t + u_x + u_y = lap u`` on the periodic square ``[0, 2 pi]^2``."""
    fn = make_functions("linear", flux=(1.0, 1.0))

    def exact(x, y, t):
        return np.exp(-2 * t) * np.sin(x - t) * np.sin(y - t)

    return ProblemSpec("example1_linear", fn, lambda x, y: exact(x, y, 0.0), exact,
                       t0=0.0, t_end=1.0)


def example1_nonlinear():
    """``u_t = lap u^2 + (u^2 - 2)(2 - 1/u)`` on the periodic square."""
    fn = make_functions("power", m=2, clamp=False, reaction="sqrt")

    def exact(x, y, t):
        return np.sqrt(np.exp(-2 * t) * np.sin(x) * np.sin(y) + 2)

    return ProblemSpec("example1_nonlinear", fn, lambda x, y: exact(x, y, 0.0), exact,
                       t0=0.0, t_end=1.0)


def heat():
    """``u_t = lap u`` with ``u = e^{-2t} sin x sin y`` on the periodic square."""
    fn = make_functions("linear")

    def exact(x, y, t):
        return np.exp(-2 * t) * np.sin(x) * np.sin(y)

    return ProblemSpec("heat", fn, lambda x, y: exact(x, y, 0.0), exact, t0=0.0, t_end=1.0)


def barenblatt2d(m=3, t0=1.0, t_end=2.0, radius=8.0):
    """Porous medium equation from the Barenblatt profile at ``t0`` on a disk,
    homogeneous Neumann boundary."""
    if m <= 1:
        raise ConfigError(f"PME exponent must exceed 1, got {m}")
    fn = make_functions("power", m=m)

    def exact(x, y, t):
        return barenblatt(np.stack([x, y], axis=-1), t, m, 2)

    return ProblemSpec(f"barenblatt_m{m:g}", fn, lambda x, y: exact(x, y, t0), exact,
                       t0=t0, t_end=t_end, domain=("disk", radius), params={"m": m})


def pme_periodic(m=2):
    """Porous medium equation on the periodic square from a positive bump
    (no exact solution; used for conservation checks)."""
    fn = make_functions("power", m=m)

    def init(x, y):
        return 1.0 + 0.5 * np.sin(x) * np.sin(y)

    return ProblemSpec(f"pme_periodic_m{m:g}", fn, init, None, t0=0.0, t_end=1.0,
                       params={"m": m})


PROBLEMS = {
    "example1_linear": example1_linear,
    "example1_nonlinear": example1_nonlinear,
    "heat": heat,
    "barenblatt2d": barenblatt2d,
    "pme_periodic": pme_periodic,
}


def get_problem(name, **params):
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise ConfigError(f"unknown problem {name!r}; choose from {', '.join(PROBLEMS)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for problem {name!r}: {exc}") from None


def disk_mesh_path():
    """Path of the packaged radius-8 polygonal disk mesh."""
    return resources.files("etdg") / "data" / "disk_r8.mesh"


# ---------------------------------------------------------------------------
# Discrete data and errors

def interpolate(fn, ops, t=None):
    """Nodal interpolation of ``fn(x, y[, t])`` at the Lagrange nodes."""
    x, y = ops.nodes[..., 0], ops.nodes[..., 1]
    vals = fn(x, y) if t is None else fn(x, y, t)
    return np.asarray(vals, dtype=float).ravel()


def compute_error(u_h, exact, mesh, ref, norm="L2", t=None):
    """``L2`` or ``Linf`` error of the DG function ``u_h`` against ``exact``.

    The L2 norm uses a quadrature rule of order ``2k + 2`` on every element;
    the max norm is taken over the quadrature points and the nodes.
    """
    k = ref.degree
    qp, qw = triangle_quadrature(2 * k + 2)
    phi = ref.lagrange_basis(qp)  # (nq, nk)
    u = np.asarray(u_h, dtype=float).reshape(mesh.n_elements, ref.n_dofs)
    uq = u @ phi.T
    xq = mesh.physical_points(qp)

    def ev(x, y):
        return exact(x, y) if t is None else exact(x, y, t)

    diff = uq - ev(xq[..., 0], xq[..., 1])
    norm = norm.lower()
    if norm == "l2":
        per = (diff ** 2) @ qw / mesh.det_jacobian
        return float(np.sqrt(per.sum()))
    if norm == "linf":
        xn = mesh.physical_points(ref.nodes)
        dn = u - ev(xn[..., 0], xn[..., 1])
        return float(max(np.abs(diff).max(), np.abs(dn).max()))
    raise ConfigError(f"unknown norm {norm!r}")
