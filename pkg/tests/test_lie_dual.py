import numpy as np
import pytest
from scipy.linalg import expm

from psgroupoid import lie_dual as ld
from psgroupoid import pathspace as ps
from psgroupoid import poisson as po


@pytest.fixture(scope="module")
def su2():
    return ld.builtin_spec("su2")


def _random_group(spec, rng, scale=0.8):
    return spec.project(expm(spec.rho(scale * rng.standard_normal(spec.n))))


@pytest.mark.parametrize("name", ["su2", "so3", "heisenberg3"])
def test_basis_is_a_homomorphism(name):
    spec = ld.builtin_spec(name)
    assert spec.homomorphism_defect() < 1e-13


@pytest.mark.parametrize("name", ["su2", "so3", "heisenberg3"])
def test_convention_contract(name):
    # (a) geodesic representatives solve the constraint,
    # (b) concatenation maps to the group product in path order
    result = ld.convention_self_test(ld.builtin_spec(name), N=600)
    assert result["gauss_residual"] < 1e-4
    assert result["product_order_defect"] < 1e-4


def test_kk_structure_is_poisson(su2):
    s = ld.kk_structure(su2)
    rng = np.random.default_rng(0)
    for x in rng.standard_normal((20, 3)):
        assert po.jacobi_residual(s, x) < 1e-13


def test_quaternion_matrix_algebra():
    q1 = np.array([0.5, 0.5, 0.5, 0.5])
    q2 = np.array([0.0, 1.0, 0.0, 0.0])
    m = ld.quat_to_matrix(q1) @ ld.quat_to_matrix(q2)
    # quaternion product (0.5+0.5i+0.5j+0.5k) * i = -0.5 + 0.5i + 0.5j - 0.5k
    assert np.allclose(ld.matrix_to_quat(m), [-0.5, 0.5, 0.5, -0.5])


def test_holonomy_constant_eta_matches_expm(su2):
    # constant eta: holonomy = exp(eta_hat)
    comps = np.array([0.3, -0.2, 0.5])
    N = 800
    eta = np.tile(comps, (N + 1, 1))
    X = np.tile([1.0, 0.0, 0.0], (N + 1, 1))  # X irrelevant for holonomy
    m = ps.DiscretizedMorphism(n=3, X=X, eta=eta)
    hol = ld.holonomy(su2, m)
    assert np.max(np.abs(hol - expm(su2.rho(comps)))) < 1e-8


def test_holonomy_stays_on_group(su2):
    rng = np.random.default_rng(1)
    u = np.linspace(0, 1, 501)
    eta = np.stack([0.4 * np.sin(np.pi * u * (k + 1)) for k in range(3)],
                   axis=1)
    m = ps.DiscretizedMorphism(n=3, X=np.ones((501, 3)), eta=eta)
    hol = ld.holonomy(su2, m)
    assert abs(np.linalg.norm(ld.matrix_to_quat(hol)) - 1.0) < 1e-12


def test_from_groupoid_roundtrip(su2):
    rng = np.random.default_rng(2)
    s = ld.kk_structure(su2)
    for _ in range(5):
        xi = rng.standard_normal(3)
        g = _random_group(su2, rng, scale=0.5)
        m = ld.from_groupoid(su2, xi, g, N=2000)
        assert ps.gauss_residual(s, m) < 1e-6
        back = ld.to_groupoid(su2, m)
        assert np.max(np.abs(back.xi - xi)) < 1e-8
        assert np.max(np.abs(back.g - g)) < 1e-8


def test_casimir_constant_along_representatives(su2):
    rng = np.random.default_rng(3)
    xi = rng.standard_normal(3)
    g = _random_group(su2, rng)
    m = ld.from_groupoid(su2, xi, g, N=500)
    radii = np.linalg.norm(m.X, axis=1)
    assert np.max(radii) - np.min(radii) < 1e-10


def test_from_groupoid_rejects_antipode(su2):
    with pytest.raises(ValueError):
        ld.from_groupoid(su2, [1.0, 0.0, 0.0],
                         ld.quat_to_matrix([-1.0, 0.0, 0.0, 0.0]), N=100)


def test_coadjoint_is_action(su2):
    rng = np.random.default_rng(4)
    xi = rng.standard_normal(3)
    g1 = _random_group(su2, rng)
    g2 = _random_group(su2, rng)
    lhs = ld.coadjoint(su2, g1 @ g2, xi)
    rhs = ld.coadjoint(su2, g1, ld.coadjoint(su2, g2, xi))
    assert np.max(np.abs(lhs - rhs)) < 1e-12
    # identity acts trivially
    assert np.allclose(ld.coadjoint(su2, np.eye(4), xi), xi)


def test_coadjoint_preserves_casimir(su2):
    rng = np.random.default_rng(5)
    xi = rng.standard_normal(3)
    g = _random_group(su2, rng)
    assert abs(np.linalg.norm(ld.coadjoint(su2, g, xi))
               - np.linalg.norm(xi)) < 1e-12


def test_multiply_lie_and_inverse(su2):
    rng = np.random.default_rng(6)
    xi = rng.standard_normal(3)
    g1 = _random_group(su2, rng)
    g2 = _random_group(su2, rng)
    a = ld.LieGroupoidPoint(xi, g1)
    b = ld.LieGroupoidPoint(ld.right_lie(su2, a), g2)
    prod = ld.multiply_lie(su2, a, b)
    assert np.allclose(prod.xi, xi)
    assert np.max(np.abs(prod.g - g1 @ g2)) < 1e-12
    # non-composable pairs are rejected
    with pytest.raises(ValueError):
        ld.multiply_lie(su2, a, ld.LieGroupoidPoint(xi + 1.0, g2))
    inv = ld.inverse_lie(su2, a)
    unit = ld.multiply_lie(su2, a, inv)
    assert np.max(np.abs(unit.g - np.eye(4))) < 1e-12
    assert np.allclose(unit.xi, xi)


def test_right_lie_matches_path_endpoint(su2):
    rng = np.random.default_rng(7)
    xi = rng.standard_normal(3)
    g = _random_group(su2, rng)
    m = ld.from_groupoid(su2, xi, g, N=400)
    r = ld.right_lie(su2, ld.LieGroupoidPoint(xi, g))
    assert np.max(np.abs(m.X[-1] - r)) < 1e-10


def test_concatenation_maps_to_group_product(su2):
    rng = np.random.default_rng(8)
    s = ld.kk_structure(su2)
    xi = rng.standard_normal(3)
    g1 = _random_group(su2, rng)
    g2 = _random_group(su2, rng)
    m1 = ld.from_groupoid(su2, xi, g1, N=1000, tapered=True)
    xi2 = ld.right_lie(su2, ld.LieGroupoidPoint(xi, g1))
    m2 = ld.from_groupoid(su2, xi2, g2, N=1000, tapered=True)
    glued = ps.concatenate(m1, m2)
    assert ps.gauss_residual(s, glued) < 5e-4
    back = ld.to_groupoid(su2, glued, residual_tol=1e-3)
    assert np.max(np.abs(back.xi - xi)) < 1e-12
    assert np.max(np.abs(back.g - su2.project(g1 @ g2))) < 1e-5


def test_heisenberg_holonomy_upper_triangular():
    spec = ld.builtin_spec("heisenberg3")
    u = np.linspace(0, 1, 401)
    eta = np.stack([np.sin(np.pi * u), np.cos(2 * np.pi * u) - 1, 0 * u],
                   axis=1)
    m = ps.DiscretizedMorphism(n=3, X=np.ones((401, 3)), eta=eta)
    hol = ld.holonomy(spec, m)
    assert np.allclose(np.diag(hol), 1.0)
    assert abs(hol[1, 0]) + abs(hol[2, 0]) + abs(hol[2, 1]) == 0.0


def test_builtin_spec_unknown_name():
    with pytest.raises(ValueError):
        ld.builtin_spec("e8")
