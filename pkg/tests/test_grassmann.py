import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st
from oracles import sampled_gr_distance

from nkakeya.errors import DimensionMismatch, DomainNotReduced
from nkakeya.grassmann import (
    PROXIMITY_BOUND,
    Box,
    NormalFamily,
    Plane,
    ball_cover,
    gr_distance,
    gram_schmidt,
    net_on_box,
    normal_net,
    principal_angles,
    reduce_box,
)
from nkakeya.manifold import codim2_example, parabola


def random_plane(rng, k, d):
    return Plane(np.linalg.qr(rng.standard_normal((d, k)))[0])


seeds = st.integers(0, 2**32 - 1)
dims = st.sampled_from([(1, 2), (1, 3), (2, 3), (2, 4), (3, 5)])


def test_gram_schmidt_drops_dependent_columns():
    Q = gram_schmidt(np.array([[1.0, 2.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]]))
    assert Q.shape == (3, 2)
    assert np.allclose(Q.T @ Q, np.eye(2))


def test_lines_in_plane_closed_form():
    # for lines at angle theta the slices are antipodal pairs: each side is 2 sin(theta/2)
    for theta in (0.0, 0.3, math.pi / 4, math.pi / 2):
        V = Plane.span([1.0, 0.0])
        W = Plane.span([math.cos(theta), math.sin(theta)])
        assert gr_distance(V, W) == pytest.approx(4 * math.sin(theta / 2), abs=1e-15)


def test_orthogonal_lines_hit_the_bound():
    d = gr_distance(Plane.span([1.0, 0.0]), Plane.span([0.0, 1.0]))
    assert d == pytest.approx(2 * PROXIMITY_BOUND, abs=1e-15)


@given(seeds, dims)
def test_principal_angles_match_scipy(seed, kd):
    rng = np.random.default_rng(seed)
    V, W = random_plane(rng, *kd), random_plane(rng, *kd)
    ref = np.sort(scipy.linalg.subspace_angles(V.basis, W.basis))
    # scipy's arccos branch bottoms out near sqrt(eps) for tiny angles
    assert np.allclose(principal_angles(V, W), ref, atol=5e-8)


def test_forced_intersection_gives_exact_zero_angle(rng):
    # two 3-planes of R^5 share a line
    V, W = random_plane(rng, 3, 5), random_plane(rng, 3, 5)
    assert principal_angles(V, W)[0] < 1e-12


@given(seeds, dims)
def test_metric_axioms(seed, kd):
    rng = np.random.default_rng(seed)
    U, V, W = (random_plane(rng, *kd) for _ in range(3))
    assert gr_distance(U, U) < 1e-7
    assert gr_distance(U, V) == pytest.approx(gr_distance(V, U), abs=1e-12)
    assert gr_distance(U, W) <= gr_distance(U, V) + gr_distance(V, W) + 1e-12
    assert 0.0 <= gr_distance(U, V) <= 2 * PROXIMITY_BOUND + 1e-12


@given(seeds, dims)
def test_orthogonal_invariance(seed, kd):
    rng = np.random.default_rng(seed)
    V, W = random_plane(rng, *kd), random_plane(rng, *kd)
    O = np.linalg.qr(rng.standard_normal((kd[1], kd[1])))[0]
    assert gr_distance(Plane(O @ V.basis), Plane(O @ W.basis)) == pytest.approx(gr_distance(V, W), abs=1e-12)


def test_basis_independence(rng):
    V = random_plane(rng, 2, 4)
    W = random_plane(rng, 2, 4)
    rot = np.array([[0.6, -0.8], [0.8, 0.6]])
    assert gr_distance(Plane(V.basis @ rot), W) == pytest.approx(gr_distance(V, W), abs=1e-12)


@pytest.mark.parametrize("k, d", [(1, 2), (2, 3), (2, 4)])
def test_against_sampled_oracle(rng, k, d):
    for _ in range(5):
        V, W = random_plane(rng, k, d), random_plane(rng, k, d)
        assert gr_distance(V, W) == pytest.approx(sampled_gr_distance(V.basis, W.basis, 20_000), abs=2e-3)


def test_mismatched_grassmannians():
    with pytest.raises(DimensionMismatch):
        gr_distance(Plane.span([1.0, 0.0, 0.0]), Plane.coordinate(3, [0, 1]))


def test_complement_is_orthogonal(rng):
    V = random_plane(rng, 2, 5)
    C = V.complement()
    assert C.k == 3 and np.abs(V.basis.T @ C.basis).max() < 1e-13


@given(st.floats(0.02, 0.3))
def test_net_separated_and_maximal(delta):
    box = Box.interval(-0.25, 0.25)
    net = net_on_box(box, delta)
    diffs = np.abs(net[:, None, 0] - net[None, :, 0]) + np.eye(len(net)) * 10
    assert diffs.min() >= delta - 1e-12
    # every lattice point of the box is within delta of the net
    fine = box.lattice(delta / 4)
    assert np.abs(fine[:, None, 0] - net[None, :, 0]).min(axis=1).max() < delta


def test_net_cardinality_one_parameter():
    # a 1/R net of an interval of length 1/2 has about R/2 + 1 points
    for R in (4, 16, 64):
        assert len(net_on_box(Box.interval(-0.25, 0.25), 1.0 / R)) == R // 2 + 1


def test_net_two_parameter_separation():
    net = net_on_box(Box(np.zeros(2), 0.25), 0.1)
    dist = np.linalg.norm(net[:, None] - net[None], axis=2) + np.eye(len(net))
    assert dist.min() >= 0.1 - 1e-12
    assert np.all(np.linalg.norm(net, axis=1) <= 0.25 + 1e-12)


def test_normal_net_pairs(par):
    net = normal_net(NormalFamily(par, Box.interval(-0.25, 0.25)), 0.125)
    assert [float(e[0]) for e, _ in net] == [-0.25, -0.125, 0.0, 0.125, 0.25]
    assert all(P.same_span(par.normal_plane(e)) for e, P in net)


def test_reference_distance_parabola():
    fam = NormalFamily(parabola(), Box.interval(-0.25, 0.25))
    # normal at eta = 1/4 is (-1/2, 1)/|.|: angle atan(1/2) from the vertical
    assert fam.reference_distance() == pytest.approx(4 * math.sin(math.atan(0.5) / 2), abs=1e-12)
    assert fam.is_reduced()


def test_codim2_large_box_not_reduced():
    fam = NormalFamily(codim2_example(), Box(np.zeros(2), 0.5))
    assert not fam.is_reduced()
    reduced = reduce_box(fam)
    assert reduced.box.radius == 0.25 and reduced.is_reduced()


def test_reduce_box_gives_up():
    fam = NormalFamily(parabola(), Box.interval(-0.5, 0.5))
    with pytest.raises(DomainNotReduced):
        reduce_box(fam, bound=1e-6, max_halvings=2)


def test_box_outside_domain():
    with pytest.raises(ValueError):
        NormalFamily(parabola(), Box.interval(0.5, 1.5))


def test_ball_cover_covers_every_sample():
    fam = NormalFamily(parabola(), Box.interval(-0.25, 0.25))
    cov = ball_cover(fam, 0.2, 1.0)
    _, planes = fam.samples(0.05)
    assert all(any(b.contains(P) for b in cov) for P in planes)
    assert cov.c_cover == pytest.approx(len(cov) * 0.1)
    assert sorted(i for m in cov.members for i in m) == list(range(cov.samples))
