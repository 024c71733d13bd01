"""
Krylov evaluation of phi-function combinations
==============================================

``phipm_action`` evaluates exp(tau L) b0 + sum_k tau^k phi_k(tau L) b_k with
an adaptive Arnoldi process and substepping. Here it is compared against a
dense evaluation on the Jacobian of a small DG heat problem, and the Krylov
statistics are printed for several tolerances.
"""

import numpy as np

from etdg.assembly import assemble_global
from etdg.mesh import refine_uniform, structured_rect_mesh
from etdg.phi import phi_combination_dense, phipm_action
from etdg.reference import build_reference_element

mesh = refine_uniform(structured_rect_mesh(4, 4, periodic=True))
ops = assemble_global(mesh, build_reference_element(2))
L = ops.G + ops.penalty() * ops.P
print("state size:", ops.n_dofs, " nonzeros:", L.nnz)

rng = np.random.default_rng(0)
bs = [rng.standard_normal(ops.n_dofs) for _ in range(3)]
tau = 0.5
dense = phi_combination_dense(L.toarray(), bs, tau)

for tol in (1e-4, 1e-8, 1e-12):
    w, info = phipm_action(tau, L, bs, tol=tol, return_info=True)
    err = np.linalg.norm(w - dense) / np.linalg.norm(dense)
    print(f"tol={tol:.0e}: relative error {err:.2e}, m={info.m}, substeps={info.substeps}, "
          f"matvecs={info.matvecs}")
