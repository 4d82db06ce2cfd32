import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nkakeya.errors import DimensionMismatch, NonPositiveScale, NonSymmetricForm
from nkakeya.grassmann import gr_distance
from nkakeya.manifold import QuadraticManifold, codim2_example, flat, parabola

coords = st.floats(-0.5, 0.5, allow_nan=False)


def test_parabola_lift_by_hand(par):
    assert np.allclose(par.F([0.3]), [0.3, 0.09])
    assert np.allclose(par.F([[0.5], [-1.0]]), [[0.5, 0.25], [-1.0, 1.0]])


def test_codim2_lift_by_hand(c2):
    # (xi1^2 - xi2^2, 2 xi1 xi2) is z -> z^2 in complex notation
    xi = np.array([0.3, -0.2])
    z = complex(*xi) ** 2
    assert np.allclose(c2.F(xi), [0.3, -0.2, z.real, z.imag], atol=1e-15)


@given(st.tuples(coords, coords), st.tuples(coords, coords))
def test_shear_identity_codim2(xi, eta):
    m = codim2_example()
    lhs = m.F(np.add(xi, eta)) - m.F(eta)
    rhs = m.shear_matrix(eta) @ m.F(xi)
    assert np.abs(lhs - rhs).max() <= 1e-12


@given(coords, st.floats(0.1, 8.0))
def test_dilation_identity(xi, alpha):
    m = parabola()
    assert np.allclose(m.F([alpha * xi]), m.dilation_matrix(alpha) @ m.F([xi]), rtol=1e-13, atol=1e-15)


def test_shear_is_unipotent(c2):
    A = c2.shear_matrix([0.2, -0.1])
    assert np.allclose(np.diag(A), 1.0)
    assert np.allclose(np.triu(A, 1), 0.0)


def test_normal_plane_orthogonal_to_tangent(c2):
    for eta in ([0.0, 0.0], [0.3, -0.4]):
        T = c2.tangent_plane(eta).basis
        N = c2.normal_plane(eta).basis
        assert np.abs(T.T @ N).max() < 1e-14
        assert N.shape == (4, 2)


def test_normal_plane_at_origin_is_reference(par):
    # free axis first, normal axis last
    assert np.allclose(np.abs(par.normal_plane([0.0]).basis[:, 0]), [0.0, 1.0])


def test_parabola_normal_direction_closed_form(par):
    # the tangent at eta is (1, 2 eta), so the normal is (-2 eta, 1)/sqrt(1 + 4 eta^2)
    eta = 0.37
    u = par.normal_plane([eta]).basis[:, 0]
    ref = np.array([-2 * eta, 1.0]) / np.hypot(2 * eta, 1.0)
    assert min(np.linalg.norm(u - ref), np.linalg.norm(u + ref)) < 1e-14


def test_normal_planes_vary(par):
    assert gr_distance(par.normal_plane([0.0]), par.normal_plane([0.25])) > 0.1


@pytest.mark.parametrize("m, rank", [(parabola(), 1), (codim2_example(), 2), (flat(1, 2), 0), (flat(2, 4), 0)])
def test_normal_rank(m, rank):
    assert m.normal_rank(np.full(m.n, 0.1)) == rank


def test_degenerate_codim2_has_low_rank():
    # both forms equal: the normal planes sweep only a one-parameter family
    m = QuadraticManifold(2, 4, [[[1.0, 0.0], [0.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]])
    assert m.normal_rank([0.1, 0.2]) == 1


def test_config_round_trip(c2):
    back = QuadraticManifold.from_config(c2.to_config())
    assert np.array_equal(back.Q, c2.Q) and back.d == 4 and back.n == 2


def test_rejects_asymmetric_form():
    with pytest.raises(NonSymmetricForm):
        QuadraticManifold(2, 3, [[[1.0, 0.5], [0.0, 1.0]]])


def test_symmetrizes_tiny_asymmetry():
    m = QuadraticManifold(2, 3, [[[1.0, 1e-12], [0.0, 1.0]]])
    assert m.Q[0, 0, 1] == m.Q[0, 1, 0] == 5e-13


@pytest.mark.parametrize("n, d, Q", [(2, 2, np.zeros((0, 2, 2))), (1, 3, [[[1.0]]]), (0, 2, [])])
def test_dimension_errors(n, d, Q):
    with pytest.raises(DimensionMismatch):
        QuadraticManifold(n, d, Q)


def test_dilation_rejects_nonpositive(par):
    with pytest.raises(NonPositiveScale):
        par.dilation_matrix(0.0)


def test_missing_config_key():
    with pytest.raises(DimensionMismatch):
        QuadraticManifold.from_config({"n": 1, "d": 2})
