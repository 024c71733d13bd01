"""
Spatial-temporal convergence on the periodic square
===================================================

Linear convection-diffusion u_t + u_x + u_y = lap u with the exact solution
exp(-2t) sin(x - t) sin(y - t). The time step is tied to the mesh (tau = h)
and the final time is the coarse mesh size, so each scheme shows its
combined order when the degree matches the time order.
"""

import time

import numpy as np

from etdg.assembly import assemble_global
from etdg.integrators import StepperConfig, integrate
from etdg.mesh import refine_uniform, structured_rect_mesh
from etdg.problems import compute_error, example1_linear, interpolate
from etdg.reference import build_reference_element
from etdg.system import SemiDiscreteSystem

prob = example1_linear()

for scheme, k in (("etdrk2", 1), ("etdrk3", 2)):
    ref = build_reference_element(k)
    mesh = structured_rect_mesh(8, 8, periodic=True)
    T = mesh.h_max
    prev = None
    print(f"\n{scheme} + P{k}")
    print(" level  elements   L2 error    order   time")
    for level in range(3):
        t = time.perf_counter()
        ops = assemble_global(mesh, ref)
        system = SemiDiscreteSystem(ops, prob.functions, mesh)
        cfg = StepperConfig(scheme=scheme, cfl=1.0, krylov_tol=1e-10)
        res = integrate(system, interpolate(prob.initial, ops), 0.0, T, cfg, h=mesh.h_max)
        err = compute_error(res.u, prob.exact, mesh, ref, t=T)
        order = "" if prev is None else f"{np.log2(prev / err):.2f}"
        print(f"{level:6d} {mesh.n_elements:9d} {err:10.3e} {order:>8} {time.perf_counter() - t:6.1f}s")
        prev = err
        mesh = refine_uniform(mesh)
