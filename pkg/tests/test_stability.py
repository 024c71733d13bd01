import numpy as np
import pytest

from etdg.errors import ConfigError, DomainError
from etdg.stability import (
    H_LIST,
    full_growth,
    growth_limit,
    max_spectral_radius,
    scan_stability,
    scan_to_csv,
    semi_growth,
    theta_threshold,
)

SCHEMES = ("etdrk1", "etdrk2", "etdrk3", "etdrk4")
THETA0 = {"etdrk1": 0.5, "etdrk2": 0.5, "etdrk3": 0.6034, "etdrk4": 0.5}


def phis(z):
    """phi_1..phi_3 for moderate nonzero z by the closed forms."""
    e = np.exp(z)
    p1 = (e - 1) / z
    p2 = (e - 1 - z) / z ** 2
    p3 = (e - 1 - z - z ** 2 / 2) / z ** 3
    return p1, p2, p3


def closed_form(scheme, theta, xi):
    """Growth factors written out stage by stage for u_t = u_xx with the theta split."""
    s = xi ** 2
    nu = (1 - theta) * s
    p1, p2, p3 = phis(-theta * s)
    h1 = phis(-0.5 * theta * s)[0]
    if scheme == "etdrk1":
        return np.exp(-theta * s) + (1 - theta) / theta * (np.exp(-theta * s) - 1)
    if scheme == "etdrk2":
        a = 1 - p1 * s
        return a + p2 * (nu - nu * a)
    if scheme == "etdrk3":
        a = 1 - 0.5 * h1 * s
        b = 1 + p1 * (-(2 * theta - 1) * s - 2 * nu * a)
        return 1 - p1 * s + p2 * (3 * nu - 4 * nu * a + nu * b) + p3 * (-4 * nu + 8 * nu * a - 4 * nu * b)
    a = 1 - 0.5 * h1 * s
    b = 1 + 0.5 * h1 * (-theta * s - nu * a)
    c = a + 0.5 * h1 * (nu - theta * s * a - 2 * nu * b)
    return (1 - p1 * s + p2 * (3 * nu - 2 * nu * a - 2 * nu * b + nu * c)
            + p3 * (-4 * nu + 4 * nu * a + 4 * nu * b - 4 * nu * c))


@pytest.mark.parametrize("scheme", SCHEMES)
@pytest.mark.parametrize("theta", [0.3, 0.6034, 1.0])
def test_semi_growth_matches_closed_form(scheme, theta):
    xi = np.linspace(0.5, 6.0, 200)
    got = semi_growth(scheme, theta, xi)
    assert np.abs(got - closed_form(scheme, theta, xi)).max() <= 1e-11


@pytest.mark.parametrize("scheme", SCHEMES)
def test_growth_at_zero_and_limits(scheme):
    for theta in (0.2, 0.5, 0.8, 1.0):
        assert semi_growth(scheme, theta, 0.0) == 1.0
        lim = growth_limit(scheme, theta)
        # the limit is approached like 1 / (theta xi)^2 for the multistage schemes
        scale = max(1.0, abs(lim))
        assert abs(semi_growth(scheme, theta, 1e3) - lim) <= 10 * scale / (theta * 1e3) ** 2
        assert semi_growth(scheme, theta, 1e6) == pytest.approx(lim, rel=1e-8, abs=1e-8)
    with pytest.raises(DomainError):
        semi_growth(scheme, 0.0, 1.0)


def test_etdrk1_special_cases():
    xi = np.linspace(0, 5, 101)
    assert np.allclose(semi_growth("etdrk1", 1.0, xi), np.exp(-xi ** 2), rtol=1e-14)
    assert growth_limit("etdrk1", 0.5) == -1.0
    for theta in (0.3, 0.7):
        G = semi_growth("etdrk1", theta, np.linspace(0.01, 4, 2000))
        assert np.all(np.diff(G) < 0)
        assert np.array_equal(semi_growth("etdrk1", theta, -xi), semi_growth("etdrk1", theta, xi))


@pytest.mark.parametrize("scheme", SCHEMES)
def test_theta_thresholds(scheme):
    assert theta_threshold(scheme) == pytest.approx(THETA0[scheme], abs=1e-3)


def test_full_growth_constant_mode():
    for scheme in SCHEMES:
        for k in (1, 2, 3):
            G, rho = full_growth(scheme, 0.7, k, 0.3, 0.0)
            assert rho >= 1 - 1e-12
            one = np.ones(k + 1)
            assert np.allclose(G @ one, one, atol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_full_threshold_brackets(k):
    theta0 = theta_threshold("etdrk3")
    for h in H_LIST:
        assert max_spectral_radius("etdrk3", theta0 + 0.01, k, h, n_xi=101) <= 1 + 1e-10
    assert max(max_spectral_radius("etdrk3", theta0 - 0.05, k, h, n_xi=101) for h in H_LIST) > 1


def test_scan_rows_and_csv():
    rows = scan_stability("etdrk2", 1, [0.4, 1.0], n_xi=51)
    assert len(rows) == 2 * len(H_LIST)
    assert all(r[4] <= 1 + 1e-10 for r in rows if r[2] == 1.0)
    text = scan_to_csv(rows)
    lines = text.splitlines()
    assert lines[0] == "scheme,k,theta,h,max_rho"
    assert len(lines) == 1 + len(rows)
    assert scan_to_csv(scan_stability("etdrk2", 1, [0.4, 1.0], n_xi=51)) == text
    with pytest.raises(ConfigError):
        scan_stability("ssprk54", 1, [0.5])
