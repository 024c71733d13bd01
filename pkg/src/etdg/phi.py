"""Matrix exponential and phi-function actions.

``phipm_action(tau, L, [b0, b1, ..., bp])`` returns

    w = exp(tau L) b0 + sum_{k>=1} tau^k phi_k(tau L) b_k

using Arnoldi projections with adaptive Krylov dimension and internal
substepping (the phipm strategy of Niesen and Wright).
"""

from dataclasses import dataclass
from math import factorial

import numpy as np
import scipy.linalg as sla

from .errors import DomainError, KrylovAccuracyError

DEFAULT_TOL = 1e-8
DEFAULT_M_MAX = 128
DEFAULT_M_INIT = 20
MAX_ORDER = 3


def expm_dense(A):
    """Matrix exponential of a small dense matrix (Pade 13 scaling and squaring)."""
    A = np.asarray(A)
    if not np.all(np.isfinite(A)):
        raise DomainError("expm_dense: matrix has non-finite entries")
    return sla.expm(A)


def _augmented(A, bs, tau):
    n = A.shape[0]
    p = len(bs) - 1
    dtype = np.result_type(A, *bs, float)
    C = np.zeros((n + p, n + p), dtype=dtype)
    C[:n, :n] = tau * A
    for j in range(1, p + 1):
        # column n + (p - j) holds b_j
        C[:n, n + p - j] = tau * bs[j]
    for i in range(p - 1):
        C[n + i, n + i + 1] = tau
    v = np.zeros(n + p, dtype=dtype)
    v[:n] = bs[0]
    if p:
        v[-1] = 1.0
    return C, v


def phi_combination_dense(A, bs, tau=1.0):
    """``exp(tau A) b0 + sum_k tau^k phi_k(tau A) b_k`` with one dense exponential.

    ``bs[0]`` may be None (treated as zero).
    """
    A = np.atleast_2d(np.asarray(A))
    n = A.shape[0]
    bs = [np.zeros(n) if b is None else np.asarray(b) for b in bs]
    C, v = _augmented(A, bs, tau)
    return (expm_dense(C) @ v)[:n]


def phi_dense(A, k):
    """``phi_k(A)`` as a dense matrix (``phi_0 = exp``)."""
    A = np.atleast_2d(np.asarray(A))
    A = A.astype(np.result_type(A, float))
    n = A.shape[0]
    if k == 0:
        return expm_dense(A)
    C = np.zeros((n * (k + 1), n * (k + 1)), dtype=A.dtype)
    C[:n, :n] = A
    C[:n, n:2 * n] = np.eye(n)
    for i in range(1, k):
        C[i * n:(i + 1) * n, (i + 1) * n:(i + 2) * n] = np.eye(n)
    return expm_dense(C)[:n, k * n:(k + 1) * n]


def phi_scalar(z, k):
    """Scalar ``phi_k(z)`` with a Taylor branch for small ``|z|``."""
    z = np.asarray(z, dtype=complex if np.iscomplexobj(z) else float)
    small = np.abs(z) < 1e-4
    zs = np.where(small, 1.0, z)
    out = np.exp(zs)
    for j in range(k):
        out = (out - 1.0 / factorial(j)) / zs
    series = sum(z ** j / factorial(j + k) for j in range(6))
    return np.where(small, series, out)


# ---------------------------------------------------------------------------
# Arnoldi

class _Arnoldi:
    """Incrementally extended Arnoldi factorisation ``L V_m = V_{m+1} H``."""

    def __init__(self, L, v, m_max):
        self.L = L
        n = v.shape[0]
        self.beta = float(np.linalg.norm(v))
        if self.beta == 0.0:
            raise DomainError("arnoldi: starting vector is zero")
        self.V = np.zeros((m_max + 1, n))  # rows are basis vectors
        self.H = np.zeros((m_max + 1, m_max))
        self.V[0] = v / self.beta
        self.m = 0
        self.breakdown = False
        self.scale = 0.0

    def extend(self, m):
        V, H = self.V, self.H
        while self.m < m and not self.breakdown:
            j = self.m
            w = self.L @ V[j]
            wnorm0 = np.linalg.norm(w)
            # classical Gram-Schmidt, applied twice
            Vj = V[:j + 1]
            for _ in range(2):
                c = Vj @ w
                w -= c @ Vj
                H[:j + 1, j] += c
            hn = float(np.linalg.norm(w))
            H[j + 1, j] = hn
            self.scale = max(self.scale, wnorm0)
            self.m = j + 1
            if hn <= 1e-12 * max(self.scale, 1e-300):
                H[j + 1, j] = 0.0
                self.breakdown = True
                break
            V[j + 1] = w / hn
        return self.m


def arnoldi(L, v, m):
    """Arnoldi factorisation with twice-applied classical Gram-Schmidt.

    Returns ``(V, H, h_next, exact)``: ``V`` is ``(N, m')`` orthonormal,
    ``H`` the ``m' x m'`` Hessenberg matrix, ``h_next`` the residual entry
    ``h_{m'+1, m'}`` and ``exact`` flags a happy breakdown (then
    ``m' <= m``).
    """
    v = np.asarray(v, dtype=float)
    arn = _Arnoldi(L, v, m)
    mm = arn.extend(m)
    return arn.V[:mm].T.copy(), arn.H[:mm, :mm].copy(), float(arn.H[mm, mm - 1]), arn.breakdown


# ---------------------------------------------------------------------------
# phipm

@dataclass
class KrylovInfo:
    m: int = 0
    substeps: int = 0
    estimate: float = 0.0
    matvecs: int = 0


def _phi_columns(H, tau, p):
    """Columns ``tau^j phi_j(tau H) e1`` for ``j = 0..p+1`` via one exponential."""
    m = H.shape[0]
    C = np.zeros((m + p + 1, m + p + 1))
    C[:m, :m] = tau * H
    C[0, m] = tau
    for i in range(p):
        C[m + i, m + i + 1] = tau
    E = expm_dense(C)
    cols = [E[:m, 0]] + [E[:m, m + j] for j in range(p + 1)]
    return cols  # cols[j] = tau^j phi_j(tau H) e1


def phipm_action(tau, L, bs, tol=DEFAULT_TOL, m_max=DEFAULT_M_MAX, m_init=DEFAULT_M_INIT,
                 return_info=False, max_substeps=10000, norm_floor=0.0):
    """Evaluate ``exp(tau L) b0 + sum_{k=1}^p tau^k phi_k(tau L) b_k``.

    Parameters
    ----------
    tau : float
    L : sparse or dense (N, N) operator supporting ``@``
    bs : list of vectors ``[b0, b1, ..., bp]``, ``p <= 3``; ``b0`` may be None
    tol : relative accuracy target in ``[1e-14, 1e-2]``
    m_max, m_init : Krylov dimension bounds
    norm_floor : error is measured relative to ``max(|w|, norm_floor)``;
        callers adding ``w`` to a state pass that state's norm

    Returns
    -------
    w, or ``(w, KrylovInfo)`` when ``return_info``.
    """
    if not 1e-14 <= tol <= 1e-2:
        raise DomainError(f"tol must lie in [1e-14, 1e-2], got {tol}")
    p = len(bs) - 1
    if p < 0 or p > MAX_ORDER:
        raise DomainError(f"need 1 to {MAX_ORDER + 1} vectors, got {len(bs)}")
    n = L.shape[0]
    bs = [np.zeros(n) if b is None else np.asarray(b, dtype=float) for b in bs]
    info = KrylovInfo()
    w = bs[0].copy()
    if tau == 0.0:
        return (w, info) if return_info else w

    t = 0.0
    tau_sub = tau
    m = min(m_init, m_max)
    sign = 1.0 if tau > 0 else -1.0
    total = abs(tau)
    while abs(t) < total * (1 - 1e-14):
        if info.substeps >= max_substeps:
            raise KrylovAccuracyError("phipm: substep budget exhausted", estimate=info.estimate)
        tau_sub = sign * min(abs(tau_sub), total - abs(t))
        # w_j = L w_{j-1} + sum_l t^l / l! b_{j+l}
        ws = [w]
        for j in range(1, p + 1):
            shifted = sum(t ** l / factorial(l) * bs[j + l] for l in range(p - j + 1))
            ws.append(L @ ws[-1] + shifted)
            info.matvecs += 1
        wp = ws[p]
        if np.linalg.norm(wp) == 0.0:
            w = sum(tau_sub ** j / factorial(j) * ws[j] for j in range(p)) if p else w
            t += tau_sub
            info.substeps += 1
            continue

        arn = _Arnoldi(L, wp, m_max)
        while True:
            before = arn.m
            mm = arn.extend(m)
            info.matvecs += mm - before
            cols = _phi_columns(arn.H[:mm, :mm], tau_sub, p)
            if arn.breakdown:
                err = 0.0
            else:
                err = arn.beta * abs(arn.H[mm, mm - 1]) * abs(cols[p + 1][mm - 1])
            if not np.isfinite(err):
                err = np.inf
            base = sum(tau_sub ** j / factorial(j) * ws[j] for j in range(p)) if p else 0.0
            cand = base + arn.beta * (arn.V[:mm].T @ cols[p])
            scale = max(np.linalg.norm(cand), norm_floor, 1e-300)
            allowed = tol * scale * abs(tau_sub) / total
            if err <= allowed:
                break
            if mm < m_max and not arn.breakdown:
                m = min(m_max, max(mm + 5, int(1.3 * mm)))
                continue
            # Krylov dimension exhausted: shrink the substep, reuse the basis
            fac = 0.9 * (allowed / err) ** (1.0 / (mm / 2.0 + 1.0)) if np.isfinite(err) else 0.2
            tau_sub *= min(0.9, max(0.2, fac))
            if abs(tau_sub) < 1e-14 * total:
                raise KrylovAccuracyError("phipm: substep underflow", estimate=err)
        w = cand
        t += tau_sub
        info.substeps += 1
        info.m = max(info.m, mm)
        info.estimate += err
        if not np.all(np.isfinite(w)):
            raise KrylovAccuracyError("phipm: non-finite result", estimate=err)
        if err < 0.1 * allowed:
            tau_sub *= 2.0
    return (w, info) if return_info else w
