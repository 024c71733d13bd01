"""
Fourier stability of the split ETD-RK schemes
=============================================

For u_t = u_xx split as theta u_xx (integrated exactly) plus
(1 - theta) u_xx (treated explicitly), each scheme has a growth factor
G(theta, xi). The smallest theta with |G| <= 1 for all xi is theta_0.
The fully discrete check replaces -xi^2 by the DG block symbol.
"""

import numpy as np

from etdg.stability import (
    H_LIST,
    growth_limit,
    max_spectral_radius,
    semi_growth,
    theta_threshold,
)

for scheme in ("etdrk1", "etdrk2", "etdrk3", "etdrk4"):
    theta0 = theta_threshold(scheme)
    print(f"{scheme}: theta_0 = {theta0:.4f}, limit of G at theta_0: {growth_limit(scheme, theta0):+.4f}")

# a few values of the ETD-RK3 growth factor below and above the threshold
xi = np.array([0.0, 1.0, 2.0, 5.0, 50.0])
for theta in (0.55, 0.61):
    print(f"etdrk3 theta={theta}: G =", np.round(semi_growth("etdrk3", theta, xi), 4))

# fully discrete: P2 blocks on three cell widths
theta0 = theta_threshold("etdrk3")
for theta in (theta0 - 0.05, theta0 + 0.01):
    rho = [max_spectral_radius("etdrk3", theta, 2, h, n_xi=201) for h in H_LIST]
    print(f"P2, theta={theta:.4f}: max spectral radius per h =", np.round(rho, 6))
