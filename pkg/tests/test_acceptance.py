"""End-to-end acceptance checks, one test per criterion.

Run with ``pytest -v tests/test_acceptance.py``; the terminal summary lists
PASS/FAIL per criterion with the measured numbers.
"""

import io
import time

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.linalg import expm

from etdg.assembly import assemble_global, diffusion_scaled_beta
from etdg.cli import verify_appendix_c
from etdg.errors import DivergenceError, EtdgError
from etdg.integrators import ETD_SCHEMES, StepperConfig, integrate
from etdg.limiter import TriangleLimiter
from etdg.mesh import load_mesh, refine_uniform, structured_rect_mesh
from etdg.phi import phipm_action
from etdg.problems import compute_error, disk_mesh_path, get_problem, interpolate
from etdg.reference import build_reference_element
from etdg.stability import H_LIST, max_spectral_radius, theta_threshold
from etdg.system import SemiDiscreteSystem

pytestmark = pytest.mark.slow


def setup(problem, mesh, k, scaled_beta=False, **params):
    prob = get_problem(problem, **params)
    ref = build_reference_element(k)
    beta = None
    if scaled_beta:
        xy = mesh.physical_points(ref.nodes)
        beta = diffusion_scaled_beta(mesh, k, prob.functions.dg, prob.initial(xy[..., 0], xy[..., 1]))
    ops = assemble_global(mesh, ref, beta=beta, bc=prob.bc)
    return prob, ref, ops, SemiDiscreteSystem(ops, prob.functions, mesh)


def refinement_orders(problem, scheme, k, cfl, n0, tol, levels=4):
    """L2 errors on ``levels`` uniformly refined periodic squares, ``tau = cfl h``,
    integrated over ``[0, h_0]``."""
    mesh = structured_rect_mesh(n0, n0, periodic=True)
    T = mesh.h_max
    errs = []
    for _ in range(levels):
        prob, ref, ops, system = setup(problem, mesh, k)
        cfg = StepperConfig(scheme=scheme, cfl=cfl, krylov_tol=tol)
        res = integrate(system, interpolate(prob.initial, ops), 0.0, T, cfg, h=mesh.h_max)
        errs.append(compute_error(res.u, prob.exact, mesh, ref, t=T))
        mesh = refine_uniform(mesh)
    errs = np.array(errs)
    return errs, np.log2(errs[:-1] / errs[1:])


def test_criterion_01_appendix_c(record_property):
    t = time.perf_counter()
    ok, worst = verify_appendix_c(stream=io.StringIO())
    elapsed = time.perf_counter() - t
    record_property("detail", f"worst rel dev {worst:.2e}, {elapsed:.2f} s")
    assert ok and worst <= 1e-10
    assert elapsed < 1.0


def test_criterion_02_theta_thresholds(record_property):
    want = {"etdrk1": 0.5, "etdrk2": 0.5, "etdrk3": 0.6034, "etdrk4": 0.5}
    t = time.perf_counter()
    got = {s: theta_threshold(s) for s in ETD_SCHEMES}
    elapsed = time.perf_counter() - t
    record_property("detail", " ".join(f"{s}={v:.4f}" for s, v in got.items()) + f", {elapsed:.1f} s")
    for s in ETD_SCHEMES:
        assert got[s] == pytest.approx(want[s], abs=1e-3)
    assert elapsed < 10


def test_criterion_03_full_discrete_scan(record_property):
    t = time.perf_counter()
    worst_above, best_below = {}, {}
    for scheme in ETD_SCHEMES:
        theta0 = theta_threshold(scheme)
        for k in (1, 2, 3):
            above = max(max_spectral_radius(scheme, theta0 + 0.01, k, h, 1001) for h in H_LIST)
            below = max(max_spectral_radius(scheme, theta0 - 0.05, k, h, 1001) for h in H_LIST)
            worst_above[scheme, k] = above
            best_below[scheme, k] = below
    elapsed = time.perf_counter() - t
    record_property("detail", f"max rho above {max(worst_above.values()) - 1:+.2e}, "
                              f"min of max rho below {min(best_below.values()):.4f}, {elapsed:.0f} s")
    assert all(v <= 1 + 1e-10 for v in worst_above.values())
    assert all(v > 1 for v in best_below.values())
    assert elapsed < 120


def test_criterion_04_linear_orders(record_property):
    cases = [("etdrk1", 1, 16, (0.8, 1.2)), ("etdrk2", 1, 8, (1.8, 2.2)),
             ("etdrk3", 2, 8, (2.7, 3.3)), ("etdrk4", 3, 8, (3.7, 4.3))]
    t = time.perf_counter()
    got = {}
    for scheme, k, n0, _ in cases:
        _, orders = refinement_orders("example1_linear", scheme, k, 1.0, n0, 1e-10)
        got[scheme] = orders[-1]
    elapsed = time.perf_counter() - t
    record_property("detail", " ".join(f"{s}+P{k}={got[s]:.2f}" for s, k, _, _ in cases)
                    + f", {elapsed:.0f} s")
    for scheme, _, _, (lo, hi) in cases:
        assert lo <= got[scheme] <= hi, scheme
    assert elapsed < 600


def test_criterion_05_nonlinear_orders(record_property):
    cases = [("etdrk2", 1, 16), ("etdrk3", 2, 8), ("etdrk4", 3, 8)]
    t = time.perf_counter()
    got = {}
    for scheme, k, n0 in cases:
        _, orders = refinement_orders("example1_nonlinear", scheme, k, 0.2, n0, 1e-8)
        got[scheme] = orders[-1]
    elapsed = time.perf_counter() - t
    record_property("detail", " ".join(f"{s}+P{k}={got[s]:.2f}" for s, k, _ in cases)
                    + f", {elapsed:.0f} s")
    assert 1.8 <= got["etdrk2"] <= 2.2
    assert got["etdrk3"] >= 2.6
    assert got["etdrk4"] >= 3.3
    assert elapsed < 900


def test_criterion_06_exponential_reduction(record_property):
    mesh = refine_uniform(structured_rect_mesh(4, 4, periodic=True))
    prob, ref, ops, system = setup("heat", mesh, 2)
    assert ops.n_dofs <= 2000
    u0 = interpolate(prob.initial, ops)
    tol = 1e-10
    tau, T = 0.25, 1.0
    L = (ops.G + ops.penalty() * ops.P).toarray()
    exact = expm(T * L) @ u0
    outs = {}
    for scheme in ETD_SCHEMES:
        res = integrate(system, u0, 0.0, T, StepperConfig(scheme=scheme, tau=tau, krylov_tol=tol))
        outs[scheme] = res.u
    scale = np.linalg.norm(exact)
    dev = max(np.linalg.norm(u - exact) for u in outs.values()) / scale
    spread = max(np.linalg.norm(outs[a] - outs[b]) for a in outs for b in outs) / scale
    record_property("detail", f"N={ops.n_dofs}, max dev from expm {dev:.2e}, spread {spread:.2e}")
    assert dev <= 10 * tol and spread <= 10 * tol


def augmented_oracle(A, bs, tau):
    """``exp(tau A) b0 + sum tau^k phi_k(tau A) b_k`` from one exponential of the
    block matrix ``[[A, W], [0, J]]`` with ``W = [b_p .. b_1]`` and ``J`` the shift."""
    n, p = A.shape[0], len(bs) - 1
    if p == 0:
        return expm(tau * A) @ bs[0]
    big = np.zeros((n + p, n + p))
    big[:n, :n] = A
    big[:n, n:] = np.column_stack(bs[:0:-1])
    big[n:, n:] = np.eye(p, k=1)
    v = np.concatenate([bs[0], np.eye(p)[-1]])
    return (expm(tau * big) @ v)[:n]


def test_criterion_07_krylov_kernel(record_property):
    rng = np.random.default_rng(2024)
    t = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(100, 201))
        p = int(rng.integers(0, 4))
        A = sp.random(n, n, density=0.03, random_state=rng)
        A = (A - A.T) * rng.uniform(0, 20) + sp.diags(-rng.uniform(0, rng.uniform(1, 1000), n))
        A = (A + sp.random(n, n, density=0.02, random_state=rng) * rng.uniform(0, 30)).tocsr()
        bs = [rng.standard_normal(n) for _ in range(p + 1)]
        tau = rng.uniform(0.01, 1.0)
        want = augmented_oracle(A.toarray(), bs, tau)
        got = phipm_action(tau, A, bs, tol=1e-8)
        worst = max(worst, np.linalg.norm(got - want) / np.linalg.norm(want))
    elapsed = time.perf_counter() - t
    record_property("detail", f"worst relative error {worst:.2e}, {elapsed:.1f} s")
    assert worst <= 1e-7
    assert elapsed < 60


def test_criterion_08_conservation(record_property):
    mesh = refine_uniform(structured_rect_mesh(4, 4, periodic=True))
    drifts = {}
    for m in (2, 3):
        # g'(u0) reaches 6.75 for m = 3, so the penalty is scaled with the diffusion slope
        prob, ref, ops, system = setup("pme_periodic", mesh, 2, scaled_beta=True, m=m)
        lim = TriangleLimiter(mesh, ref)
        u0 = lim(interpolate(prob.initial, ops))
        tau = 0.5 * mesh.h_max
        cfg = StepperConfig(scheme="etdrk3", tau=tau, limiter=True)
        res = integrate(system, u0, 0.0, 100 * tau, cfg, limiter=lim)
        assert res.steps == 100
        w = ops.weights
        drifts[m] = abs(w @ res.u - w @ u0) / abs(w @ u0)
    record_property("detail", ", ".join(f"m={m} drift {d:.2e}" for m, d in drifts.items())
                    + " over 100 steps")
    assert max(drifts.values()) <= 1e-9


def test_criterion_09_stability_advantage(record_property):
    mesh = load_mesh(disk_mesh_path())
    for _ in range(2):
        mesh = refine_uniform(mesh)
    prob, ref, ops, system = setup("barenblatt2d", mesh, 2, m=2)
    lim = TriangleLimiter(mesh, ref, M=0.0, positivity=True)
    u0 = lim(interpolate(prob.initial, ops))
    h = mesh.h_max
    bound = 2 * np.abs(u0).max()
    t1, t2 = prob.t0, prob.t0 + 1.0

    def run(scheme, tau, lifted=False):
        cfg = StepperConfig(scheme=scheme, tau=tau, limiter=True, tvb_M=0.0, lifted_jacobian=lifted)
        return integrate(system, u0, t1, t2, cfg, limiter=lim)

    start = time.perf_counter()
    etd = run("etdrk3", 0.5 * h, lifted=True)
    etd_max = np.abs(etd.u).max()
    assert np.all(np.isfinite(etd.u)) and etd_max <= bound
    with pytest.raises(DivergenceError):
        run("ssprk54", 0.5 * h)

    def explicit_stable(c):
        try:
            res = run("ssprk54", c * h * h)
        except EtdgError:
            return False
        return bool(np.abs(res.u).max() <= bound)

    lo, hi = 1e-3, 1e-2
    assert explicit_stable(lo) and not explicit_stable(hi)
    for _ in range(5):
        c = np.sqrt(lo * hi)
        if explicit_stable(c):
            lo = c
        else:
            hi = c
    elapsed = time.perf_counter() - start
    record_property("detail", f"etdrk3 tau=0.5h ({etd.steps} steps) max|u|={etd_max:.4f}; "
                              f"ssprk54 diverges at 0.5h, stable for tau <= c h^2 with "
                              f"c in [{lo:.3e}, {hi:.3e}] (h={h:.3f}); {elapsed:.0f} s")
    assert elapsed < 600


def test_criterion_10_barenblatt(record_property):
    mesh = load_mesh(disk_mesh_path())
    errs, final_min, step_min = [], [], []
    for _ in range(3):
        prob, ref, ops, system = setup("barenblatt2d", mesh, 2, m=3)
        lim = TriangleLimiter(mesh, ref, M=0.0, positivity=True)
        u0 = lim(interpolate(prob.initial, ops))
        mins = [u0.min()]
        cfg = StepperConfig(scheme="etdrk3", cfl=0.2, limiter=True, tvb_M=0.0)
        res = integrate(system, u0, prob.t0, prob.t_end, cfg, h=mesh.h_max, limiter=lim,
                        callback=lambda n, t, u: mins.append(u.min()))
        errs.append(compute_error(res.u, prob.exact, mesh, ref, t=prob.t_end))
        final_min.append(res.u.min())
        step_min.append(min(mins))
        mesh = refine_uniform(mesh)
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    record_property("detail", "errors " + ", ".join(f"{e:.4f}" for e in errs)
                    + " ratios " + ", ".join(f"{r:.2f}" for r in ratios)
                    + f"; final min {min(final_min):.2e}, min over all steps {min(step_min):.2e}")
    assert np.all(ratios >= 2)
    assert min(final_min) >= -1e-2
