"""ETD-RK1..4 with the Rosenbrock split, SSP-RK(5,4), DIRK(4,4), and the time loop.

The exponential updates are evaluated in increment form,
``u_{n+1} = u_n + sum_k tau^k phi_k(tau L) b_k``, so every Krylov vector
lies in the range of the operator. Under periodic boundary conditions this
keeps ``w^T u`` constant to rounding error.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigError, DivergenceError, KrylovAccuracyError, SolverError
from .phi import DEFAULT_M_INIT, DEFAULT_M_MAX, DEFAULT_TOL, phipm_action
from .system import jacobian_diffusion, rhs, split_for_etd

ETD_SCHEMES = ("etdrk1", "etdrk2", "etdrk3", "etdrk4")
SCHEMES = ETD_SCHEMES + ("ssprk54", "dirk44")

# fourth-order five-stage explicit SSP-RK
SSP54_GAMMA = {
    (1, 0): 1.0,
    (2, 0): 0.44437049406734, (2, 1): 0.55562950593266,
    (3, 0): 0.62010185138540, (3, 2): 0.37989814861460,
    (4, 0): 0.17807995410773, (4, 3): 0.82192004589227,
    (5, 0): 0.00683325884039, (5, 2): 0.51723167208978,
    (5, 3): 0.12759831133288, (5, 4): 0.34833675773694,
}
SSP54_A = {
    (1, 0): 0.39175222700392, (2, 1): 0.36841059262959, (3, 2): 0.25189177424738,
    (4, 3): 0.54497475021237, (5, 3): 0.08460416338212, (5, 4): 0.22600748319395,
}

# fourth-order four-stage diagonally implicit SSP-RK (row 5 is the update)
DIRK44_A = np.array([
    [0.119309657880174, 0.0, 0.0, 0.0],
    [0.345451290033902, 0.070605579799433, 0.0, 0.0],
    [0.2761333428381144, 0.23720218154772324, 0.070606483961727, 0.0],
    [0.25953180979776486, 0.2229412458210437, 0.2789071933072292, 0.119309875536981],
    [0.27664498628127077, 0.22335414879969517, 0.22335532068802738, 0.2766455442310059],
])


@dataclass
class StepperConfig:
    """Time stepping settings. Exactly one of ``tau`` and ``cfl`` is set
    (``tau = cfl * h``)."""

    scheme: str = "etdrk3"
    tau: float = None
    cfl: float = None
    krylov_tol: float = DEFAULT_TOL
    m_max: int = DEFAULT_M_MAX
    m_init: int = DEFAULT_M_INIT
    limiter: bool = False
    tvb_M: float = 20.0
    newton_tol: float = 1e-10
    newton_maxit: int = 50
    lifted_jacobian: bool = False

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {', '.join(SCHEMES)}")
        if (self.tau is None) == (self.cfl is None):
            raise ConfigError("give exactly one of tau and cfl")
        if (self.tau if self.tau is not None else self.cfl) <= 0:
            raise ConfigError("tau/cfl must be positive")
        if self.tvb_M < 0:
            raise ConfigError("TVB constant M must be >= 0")

    def step_size(self, h=None):
        if self.tau is not None:
            return float(self.tau)
        if h is None:
            raise ConfigError("cfl given but no mesh size h")
        return float(self.cfl * h)


@dataclass
class StepStats:
    krylov_m: int = 0
    krylov_substeps: int = 0
    newton_iterations: int = 0

    def add(self, info):
        self.krylov_m = max(self.krylov_m, info.m)
        self.krylov_substeps += info.substeps


def _phi(tau, L, bs, cfg, stats, floor=0.0):
    w, info = phipm_action(tau, L, bs, tol=cfg.krylov_tol, m_max=cfg.m_max,
                           m_init=cfg.m_init, return_info=True, norm_floor=floor)
    stats.add(info)
    return w


def _check(u, step, t):
    if not np.all(np.isfinite(u)):
        raise DivergenceError(f"non-finite state after step {step} (t={t:g})", step=step, t=t)
    return u


def step_etdrk(order, system, u, t, tau, config=None, stats=None, step=None):
    """One ETD-RK step of the given order (1..4)."""
    cfg = config or StepperConfig(scheme=f"etdrk{order}", tau=tau)
    stats = stats if stats is not None else StepStats()
    L, N = split_for_etd(system, u, cfg.lifted_jacobian)
    Lu = L @ u
    Nu = N(t, u, step)
    F0 = Lu + Nu
    # increments are accurate relative to the state they are added to
    unorm = float(np.linalg.norm(u))
    if order == 1:
        out = u + _phi(tau, L, [None, F0], cfg, stats, unorm)
    elif order == 2:
        a = u + _phi(tau, L, [None, F0], cfg, stats, unorm)
        Na = N(t + tau, a, step)
        out = a + _phi(tau, L, [None, None, (Na - Nu) / tau], cfg, stats, unorm)
    elif order == 3:
        a = u + _phi(tau / 2, L, [None, F0], cfg, stats, unorm)
        Na = N(t + tau / 2, a, step)
        b = u + _phi(tau, L, [None, Lu - Nu + 2 * Na], cfg, stats, unorm)
        Nb = N(t + tau, b, step)
        out = u + _phi(tau, L, [None, F0,
                                (-3 * Nu + 4 * Na - Nb) / tau,
                                (4 * Nu - 8 * Na + 4 * Nb) / tau ** 2], cfg, stats, unorm)
    elif order == 4:
        a = u + _phi(tau / 2, L, [None, F0], cfg, stats, unorm)
        Na = N(t + tau / 2, a, step)
        b = u + _phi(tau / 2, L, [None, Lu + Na], cfg, stats, unorm)
        Nb = N(t + tau / 2, b, step)
        c = a + _phi(tau / 2, L, [None, L @ a - Nu + 2 * Nb], cfg, stats, unorm)
        Nc = N(t + tau, c, step)
        out = u + _phi(tau, L, [None, F0,
                                (-3 * Nu + 2 * Na + 2 * Nb - Nc) / tau,
                                (4 * Nu - 4 * Na - 4 * Nb + 4 * Nc) / tau ** 2], cfg, stats, unorm)
    else:
        raise ConfigError(f"ETD-RK order must be 1..4, got {order}")
    return _check(out, step, t + tau)


def step_ssprk54(system, u, t, tau, config=None, stats=None, step=None):
    """One step of the five-stage fourth-order explicit SSP-RK method."""
    g, a = SSP54_GAMMA, SSP54_A
    R0 = rhs(system, t, u, step)
    u1 = g[1, 0] * u + a[1, 0] * tau * R0
    # stage abscissae of the method, used for time-dependent data
    c1 = a[1, 0]
    R1 = rhs(system, t + c1 * tau, u1, step)
    u2 = g[2, 0] * u + g[2, 1] * u1 + a[2, 1] * tau * R1
    c2 = g[2, 1] * c1 + a[2, 1]
    R2 = rhs(system, t + c2 * tau, u2, step)
    u3 = g[3, 0] * u + g[3, 2] * u2 + a[3, 2] * tau * R2
    c3 = g[3, 2] * c2 + a[3, 2]
    R3 = rhs(system, t + c3 * tau, u3, step)
    u4 = g[4, 0] * u + g[4, 3] * u3 + a[4, 3] * tau * R3
    c4 = g[4, 3] * c3 + a[4, 3]
    R4 = rhs(system, t + c4 * tau, u4, step)
    out = (g[5, 0] * u + g[5, 2] * u2 + g[5, 3] * u3 + g[5, 4] * u4
           + a[5, 3] * tau * R3 + a[5, 4] * tau * R4)
    return _check(out, step, t + tau)


def step_dirk44(system, u, t, tau, config=None, stats=None, step=None):
    """One step of the four-stage fourth-order diagonally implicit SSP-RK method.

    Each stage ``x = known + tau a_ii R(x)`` is solved by Newton's method
    with the diffusion Jacobian frozen at the stage's starting guess.
    """
    cfg = config or StepperConfig(scheme="dirk44", tau=tau)
    stats = stats if stats is not None else StepStats()
    A = DIRK44_A
    c = A[:4].sum(axis=1)
    n = u.shape[0]
    eye = sp.identity(n, format="csc")
    Rs = []
    x = u.copy()
    for i in range(4):
        known = u + tau * sum(A[i, j] * Rs[j] for j in range(i))
        ti = t + c[i] * tau
        J = jacobian_diffusion(system, x)
        lu = spla.splu((eye - tau * A[i, i] * J).tocsc())
        hist = []
        for it in range(cfg.newton_maxit):
            Rx = rhs(system, ti, x, step)
            res = x - known - tau * A[i, i] * Rx
            rn = float(np.linalg.norm(res, np.inf))
            hist.append(rn)
            scale = max(1.0, float(np.linalg.norm(x, np.inf)))
            if rn <= cfg.newton_tol * scale:
                break
            x = x - lu.solve(res)
            stats.newton_iterations += 1
            if not np.all(np.isfinite(x)):
                raise DivergenceError(f"Newton iterate became non-finite in stage {i + 1}",
                                      step=step, t=t)
        else:
            raise SolverError(f"Newton did not converge in stage {i + 1} "
                              f"after {cfg.newton_maxit} iterations", residuals=hist)
        Rs.append(Rx)
    out = u + tau * sum(A[4, j] * Rs[j] for j in range(4))
    return _check(out, step, t + tau)


def make_stepper(scheme):
    if scheme in ETD_SCHEMES:
        order = int(scheme[-1])

        def stepper(system, u, t, tau, config=None, stats=None, step=None):
            return step_etdrk(order, system, u, t, tau, config, stats, step)
        return stepper
    if scheme == "ssprk54":
        return step_ssprk54
    if scheme == "dirk44":
        return step_dirk44
    raise ConfigError(f"unknown scheme {scheme!r}")


DIAGNOSTICS_HEADER = "step,t,tau,alpha,umin,umax,krylov_m,krylov_substeps"


@dataclass
class IntegrationResult:
    u: np.ndarray
    t: float
    steps: int
    diagnostics: list = field(default_factory=list)
    runtime: float = 0.0

    def diagnostics_csv(self):
        lines = [DIAGNOSTICS_HEADER]
        for d in self.diagnostics:
            lines.append(f"{d['step']},{d['t']:.12e},{d['tau']:.12e},{d['alpha']:.12e},"
                         f"{d['umin']:.12e},{d['umax']:.12e},{d['krylov_m']},{d['krylov_substeps']}")
        return "\n".join(lines) + "\n"


def n_steps(t0, t_end, tau):
    """``ceil((t_end - t0) / tau)``, ignoring a rounding-level remainder."""
    ratio = (t_end - t0) / tau
    return max(0, int(math.ceil(ratio - 1e-9 * max(1.0, ratio))))


def integrate(system, u0, t0, t_end, config, h=None, limiter=None, callback=None,
              blowup=1e8):
    """Advance ``u0`` from ``t0`` to ``t_end`` with fixed steps.

    The last step is clipped to land on ``t_end``. ``limiter(u) -> u`` is
    applied after every step when ``config.limiter`` is set. ``callback``
    receives ``(step, t, u)`` after each step. A state whose max norm
    exceeds ``blowup * max(1, |u0|_inf)`` counts as divergence.
    """
    if t_end < t0:
        raise ConfigError(f"t_end={t_end} precedes t0={t0}")
    tau = config.step_size(h)
    nsteps = n_steps(t0, t_end, tau)
    stepper = make_stepper(config.scheme)
    u = np.array(u0, dtype=float)
    t = float(t0)
    bound = blowup * max(1.0, float(np.abs(u).max(initial=0.0)))
    diags = []
    start = time.perf_counter()
    for k in range(1, nsteps + 1):
        dt = tau if k < nsteps else t_end - t
        sysk = system.refresh_alpha(u)
        stats = StepStats()
        try:
            unew = stepper(sysk, u, t, dt, config, stats, k)
        except DivergenceError as exc:
            raise DivergenceError(f"diverged at step {k} (t={t:g}): {exc}",
                                  step=k, state=u, t=t) from exc
        except KrylovAccuracyError as exc:
            raise KrylovAccuracyError(f"step {k} (t={t:g}): {exc}", estimate=exc.estimate) from exc
        if config.limiter and limiter is not None:
            unew = limiter(unew)
        if float(np.abs(unew).max(initial=0.0)) > bound:
            raise DivergenceError(f"solution blew up at step {k} (t={t + dt:g}): "
                                  f"max|u| = {np.abs(unew).max():.3e}", step=k, state=u, t=t)
        u = unew
        t = t0 + k * tau if k < nsteps else float(t_end)
        diags.append(dict(step=k, t=t, tau=dt, alpha=sysk.ops.alpha,
                          umin=float(u.min()), umax=float(u.max()),
                          krylov_m=stats.krylov_m, krylov_substeps=stats.krylov_substeps))
        if callback is not None:
            callback(k, t, u)
    return IntegrationResult(u, t, nsteps, diags, time.perf_counter() - start)
