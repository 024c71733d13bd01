import numpy as np
import pytest
from scipy.integrate import quad

from etdg.assembly import assemble_global
from etdg.errors import ConfigError, DomainError
from etdg.mesh import refine_uniform, structured_rect_mesh
from etdg.problems import (
    PROBLEMS,
    barenblatt,
    barenblatt2d,
    barenblatt_exponent,
    barenblatt_radius,
    compute_error,
    example1_linear,
    example1_nonlinear,
    get_problem,
    interpolate,
    pme_periodic,
)
from etdg.reference import build_reference_element

RNG = np.random.default_rng(11)
PTS = RNG.uniform(0, 2 * np.pi, (20, 2))
TS = RNG.uniform(0.1, 2.0, 20)
H = 1e-4


def lap(f, x, y, t):
    return (f(x + H, y, t) + f(x - H, y, t) + f(x, y + H, t) + f(x, y - H, t) - 4 * f(x, y, t)) / H ** 2


def dt(f, x, y, t):
    return (f(x, y, t + H) - f(x, y, t - H)) / (2 * H)


def test_barenblatt_values():
    assert barenblatt(np.zeros(2), 1.0, 2) == 1.0
    assert barenblatt(0.0, 1.0, 3, d=1) == 1.0
    x = np.linspace(-3, 3, 41)
    assert np.allclose(barenblatt(x, 1.0, 3, d=1), np.sqrt(np.maximum(1 - x ** 2 / 12, 0)), atol=1e-14)
    for m, d, t in ((2, 1, 1.5), (3, 2, 1.0), (2.5, 2, 3.0)):
        R = barenblatt_radius(t, m, d)
        pts = np.array([[1.0001 * R, 0.0], [-1.01 * R, 0.0], [2 * R, R]])[:, :d]
        assert np.all(barenblatt(pts if d == 2 else pts[:, 0], t, m, d) == 0)
        inside = np.array([[0.99 * R, 0.0]])[:, :d]
        assert barenblatt(inside if d == 2 else inside[:, 0], t, m, d) > 0
    for kw in ({"t": 0.0, "m": 2}, {"t": 1.0, "m": 1.0}):
        with pytest.raises(DomainError):
            barenblatt(np.zeros(2), **kw)


@pytest.mark.parametrize("m,d", [(2, 1), (3, 1), (2, 2), (3, 2)])
def test_barenblatt_self_similarity_and_mass(m, d):
    p = barenblatt_exponent(m, d)
    r = np.linspace(0, 6, 50)
    pts = r if d == 1 else np.column_stack([r, np.zeros_like(r)])
    for t in (1.7, 2.0):
        scaled = pts * t ** (p / d)
        assert np.allclose(barenblatt(scaled, t, m, d), t ** (-p) * barenblatt(pts, 1.0, m, d),
                           rtol=1e-12, atol=1e-14)

    def mass(t):
        R = barenblatt_radius(t, m, d)
        if d == 1:
            return 2 * quad(lambda x: barenblatt(x, t, m, 1), 0, R, epsabs=1e-12)[0]
        return 2 * np.pi * quad(lambda s: s * barenblatt(np.array([s, 0.0]), t, m, 2), 0, R,
                                epsabs=1e-12)[0]

    assert mass(2.0) == pytest.approx(mass(1.0), abs=1e-6)


def test_barenblatt_solves_pme_inside_support():
    m = 3
    prob = barenblatt2d(m=m)
    f = prob.exact
    g = lambda x, y, t: f(x, y, t) ** m  # noqa: E731
    for t in (1.2, 1.8):
        R = barenblatt_radius(t, m, 2)
        for rad in (0.2 * R, 0.6 * R):
            x, y = rad * np.cos(0.7), rad * np.sin(0.7)
            assert abs(dt(f, x, y, t) - lap(g, x, y, t)) <= 1e-5


def test_example1_linear():
    prob = example1_linear()
    f = prob.exact
    x, y = PTS.T
    assert np.array_equal(f(x, y, 0.0), prob.initial(x, y))
    assert np.allclose(prob.initial(x, y), np.sin(x) * np.sin(y), atol=1e-15)
    res = dt(f, x, y, TS) + (f(x + H, y, TS) - f(x - H, y, TS)) / (2 * H) \
        + (f(x, y + H, TS) - f(x, y - H, TS)) / (2 * H) - lap(f, x, y, TS)
    assert np.abs(res).max() <= 1e-6
    g = np.linspace(0, 2 * np.pi, 201)
    X, Y = np.meshgrid(g, g)
    assert np.abs(f(X + 1.0, Y + 1.0, 1.0)).max() == pytest.approx(np.exp(-2), rel=1e-4)


def test_example1_nonlinear():
    prob = example1_nonlinear()
    f = prob.exact
    x, y = PTS.T
    g = lambda x, y, t: f(x, y, t) ** 2  # noqa: E731
    u = f(x, y, TS)
    reaction = (u ** 2 - 2) * (2 - 1 / u)
    assert np.abs(dt(f, x, y, TS) - lap(g, x, y, TS) - reaction).max() <= 1e-6
    assert np.allclose(prob.functions.r(u), reaction, rtol=1e-14)
    assert np.all((u >= 1) & (u <= np.sqrt(3)))
    assert np.abs(f(x, y, 40.0) - np.sqrt(2)).max() <= 1e-15 * 1e3
    assert np.allclose(f(x, y, 0.0), prob.initial(x, y), atol=1e-12)


def test_catalog():
    for name in PROBLEMS:
        prob = get_problem(name)
        if prob.exact is not None:
            x, y = PTS.T * 0.5
            assert np.abs(prob.exact(x, y, prob.t0) - prob.initial(x, y)).max() <= 1e-12
    assert get_problem("barenblatt2d", m=2).params["m"] == 2
    assert pme_periodic(3).exact is None
    with pytest.raises(ConfigError):
        get_problem("burgers")
    with pytest.raises(ConfigError):
        get_problem("heat", m=2)
    with pytest.raises(ConfigError):
        barenblatt2d(m=1)


def unit_square(n=2, level=0):
    mesh = structured_rect_mesh(n, n, ((0, 1), (0, 1)))
    for _ in range(level):
        mesh = refine_uniform(mesh)
    return mesh


@pytest.mark.parametrize("k", [1, 2, 3])
def test_error_of_polynomial_interpolant(k):
    mesh = unit_square()
    ref = build_reference_element(k)
    ops = assemble_global(mesh, ref)
    poly = lambda x, y, t: x ** k - 2 * x * y ** (k - 1) + 0.3  # noqa: E731
    u = interpolate(poly, ops, t=0.0)
    for norm in ("L2", "Linf"):
        assert compute_error(u, poly, mesh, ref, norm=norm, t=0.0) <= 1e-12
    c = 0.37
    assert compute_error(u + c, poly, mesh, ref, t=0.0) == pytest.approx(c, rel=1e-12)
    assert compute_error(u - c, poly, mesh, ref, norm="linf", t=0.0) == pytest.approx(c, rel=1e-12)
    with pytest.raises(ConfigError):
        compute_error(u, poly, mesh, ref, norm="H1", t=0.0)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_interpolation_order(k):
    f = lambda x, y: np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)  # noqa: E731
    ref = build_reference_element(k)
    errs = []
    for level in range(3):
        mesh = unit_square(2, level)
        ops = assemble_global(mesh, ref)
        errs.append(compute_error(interpolate(f, ops), f, mesh, ref))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders[-1] == pytest.approx(k + 1, abs=0.3)
