import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from etdg.assembly import assemble_global
from etdg.errors import ConfigError, DivergenceError
from etdg.mesh import refine_uniform, structured_rect_mesh
from etdg.problems import example1_linear, interpolate
from etdg.reference import build_reference_element
from etdg.system import (
    ProblemFunctions,
    SemiDiscreteSystem,
    jacobian_diffusion,
    lift_coefficient,
    make_functions,
    power_law,
    rhs,
    split_for_etd,
    tabulated,
)
from oracle import weak_form_operators


def periodic_system(fn, k=2, n=2, beta=None, alpha=0.0):
    mesh = refine_uniform(structured_rect_mesh(n, n, periodic=True))
    ops = assemble_global(mesh, build_reference_element(k), beta=beta, alpha=alpha)
    return SemiDiscreteSystem(ops, fn, mesh)


@pytest.mark.parametrize("m", [1, 2, 3, 2.5])
def test_constants_are_steady(m):
    s = periodic_system(make_functions("power", m=m, flux=(1.0, -2.0), flux_kind="burgers"))
    u = np.full(s.n_dofs, 1.7)
    assert np.abs(rhs(s.refresh_alpha(u), 0.0, u)).max() <= 1e-12 * abs(s.ops.G).max()


def test_linear_problem_matches_dense_oracle():
    prob = example1_linear()
    mesh = structured_rect_mesh(1, 1, periodic=True)
    k = 2
    ops = assemble_global(mesh, build_reference_element(k), beta=4.0, alpha=1.3)
    s = SemiDiscreteSystem(ops, prob.functions, mesh)
    u = interpolate(prob.exact, ops, t=0.3)
    M, G, F1, F2, P, _ = weak_form_operators(mesh, ops.nodes, k)
    want = np.linalg.solve(M, G @ u + F1 @ u + F2 @ u + (4.0 + 0.65) * (P @ u))
    assert np.abs(rhs(s, 0.3, u) - want).max() <= 1e-10 * np.abs(want).max()


def test_reaction_only():
    mesh = structured_rect_mesh(1, 1, periodic=True)
    ops = assemble_global(mesh, build_reference_element(1))
    zero = type(ops.G)(ops.G.shape)
    ops = type(ops)(zero, zero, zero, zero, zero, 1.0, 0.0, ops.weights, ops.nodes, ops.n_local)
    fn = ProblemFunctions(r=lambda u: u ** 3 - 1)
    u = np.linspace(0.5, 2, ops.n_dofs)
    assert np.array_equal(rhs(SemiDiscreteSystem(ops, fn), 0.0, u), u ** 3 - 1)


def test_nonfinite_state_raises_with_step():
    s = periodic_system(make_functions("linear"))
    u = np.zeros(s.n_dofs)
    u[3] = np.nan
    with pytest.raises(DivergenceError) as exc:
        rhs(s, 0.0, u, step=7)
    assert exc.value.step == 7


def test_linear_jacobian_is_exact():
    s = periodic_system(make_functions("linear"), alpha=0.4)
    L = jacobian_diffusion(s, np.random.default_rng(0).normal(size=s.n_dofs))
    want = s.ops.G + s.ops.penalty() * s.ops.P
    assert abs(L - want).max() == 0


def test_degenerate_jacobian_at_zero():
    s = periodic_system(make_functions("power", m=2))
    L = jacobian_diffusion(s, np.zeros(s.n_dofs))
    assert abs(L - s.ops.penalty() * s.ops.P).max() == 0


@pytest.mark.parametrize("m", [2, 3])
def test_jacobian_finite_difference_slope(m):
    s = periodic_system(make_functions("power", m=m), k=2)
    rng = np.random.default_rng(m)
    u = 1 + 0.3 * rng.random(s.n_dofs)
    v = rng.normal(size=s.n_dofs)
    Lv = jacobian_diffusion(s, u) @ v
    errs = []
    for eps in (1e-2, 5e-3, 2.5e-3):
        fd = (s.diffusion(u + eps * v) - s.diffusion(u - eps * v)) / (2 * eps)
        errs.append(np.linalg.norm(fd - Lv))
    slopes = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    if m == 2:
        # quadratic g: central differences are exact
        assert max(errs) <= 1e-9 * np.linalg.norm(Lv)
    else:
        assert np.all(np.abs(slopes - 2) < 0.1)
    fwd = (s.diffusion(u + 1e-6 * v) - s.diffusion(u)) / 1e-6
    assert np.linalg.norm(fwd - Lv) <= 1e-4 * np.linalg.norm(Lv)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([1, 2, 3]), st.booleans())
def test_split_identity(seed, m, lifted):
    rng = np.random.default_rng(seed)
    s = periodic_system(make_functions("power", m=m, flux=(0.5, 1.0), flux_kind="burgers"), k=1)
    u_n, u = rng.normal(size=(2, s.n_dofs))
    s = s.refresh_alpha(u_n)
    L, N = split_for_etd(s, u_n, lifted)
    r = rhs(s, 0.0, u)
    assert np.linalg.norm(L @ u + N(0.0, u) - r) <= 1e-12 * max(np.linalg.norm(r), 1.0)


def test_lifted_coefficient():
    s = periodic_system(make_functions("power", m=2), k=1, n=1)
    ne = s.mesh.n_elements
    gp = np.zeros(s.n_dofs)
    gp[0] = 3.0  # one node of element 0
    gp[5] = -4.0  # negative values never lift
    lifted = lift_coefficient(s, gp).reshape(ne, -1)
    assert np.all(lifted.min(axis=1) == lifted.max(axis=1))
    expect = np.zeros(ne)
    expect[0] = 3.0
    expect[s.mesh.neighbors[0]] = 3.0
    assert np.array_equal(lifted[:, 0], expect)
    L = jacobian_diffusion(s, np.zeros(s.n_dofs), lifted=True)
    assert abs(L - s.ops.penalty() * s.ops.P).max() == 0


def test_power_law_clamp_only_for_fractional_exponents():
    g, dg = power_law(2)
    assert g(np.array(-0.5)) == pytest.approx(0.25)
    assert dg(np.array(-0.5)) == pytest.approx(-1.0)
    g, dg = power_law(2.5)
    assert g(np.array(-0.5)) == 0.0 and dg(np.array(-0.5)) == 0.0
    assert g(np.array(4.0)) == pytest.approx(32.0)
    with pytest.raises(ConfigError):
        power_law(0.5)


def test_tabulated_and_catalog_errors():
    g, dg = tabulated([0, 1, 2], [0, 1, 3])
    assert g(np.array(1.5)) == pytest.approx(2.0)
    assert np.allclose(dg(np.array([0.5, 1.5, 3.0])), [1, 2, 0])
    with pytest.raises(ConfigError):
        tabulated([0, 1], [1, 0])
    for kw in ({"diffusion": "cubic"}, {"flux_kind": "weird"}, {"reaction": "exp"},
               {"diffusion": "tabulated"}):
        with pytest.raises(ConfigError):
            make_functions(**kw)
