import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nkakeya.errors import AnchorInfeasible, BudgetExhausted, DomainNotReduced, EmptyNet
from nkakeya.grassmann import Box, GrassmannBall, NormalFamily, normal_net
from nkakeya.kakeya import (
    Assignment,
    Budget,
    Slab,
    build_prop_one_family,
    build_small_union_assignment,
    density_step,
    fiber_spread,
    init_assignment,
    module_constant,
    neighborhood_measure,
    perron_levels,
    perron_schedule,
    raster_hausdorff,
    recentre,
    slab_measure,
    slab_raster,
    verification_res,
)
from nkakeya.manifold import codim2_example, parabola

BOX1 = Box.interval(-0.25, 0.25)


def bush(R, manifold=None, box=BOX1):
    return init_assignment(normal_net(NormalFamily(manifold or parabola(), box), 1.0 / R), R)


def test_bush_is_concurrent():
    a = bush(16)
    assert np.all(a.anchors == 0.0)
    assert len(a) == 9 and a.k == 1 and a.n == 1
    assert a.in_cube()


def test_crossings_lie_on_the_segment_planes():
    a = bush(8).with_anchors(np.random.default_rng(1).uniform(-0.3, 0.3, (5, 2)))
    pts, t = a.crossings([0.4])
    assert np.allclose(pts[:, 1], 0.4)
    for p, P, anc in zip(pts, a.planes, a.anchors):
        r = p - anc
        assert np.linalg.norm(r - P.projection() @ r) < 1e-14


def test_reach_of_the_bush():
    # the steepest normal (1/4 tilt on each side) reaches height cos(atan(1/2))
    assert bush(8).reach() == pytest.approx(1 / np.hypot(1, 0.5), rel=1e-12)


def test_density_step_makes_clusters_concurrent():
    a = bush(16).with_anchors(np.random.default_rng(2).uniform(-0.2, 0.2, (9, 2)) * [1, 0])
    levels = perron_levels(a)
    clusters = levels[0]
    balls = [GrassmannBall(a.planes[g[0]], 2.0) for g in clusters]
    h = 0.5
    out = density_step(a, Slab([h], 0.1), balls, clusters)
    pts, _ = out.crossings([h])
    for g in clusters:
        assert np.ptp(pts[g, 0]) < 1e-12
    # only free coordinates move
    assert np.array_equal(out.anchors[:, 1], a.anchors[:, 1])
    assert fiber_spread(out, Slab([h], 0.1), clusters) < 1.0


def test_perron_levels_refine():
    a = bush(32)
    levels = perron_levels(a)
    for coarse, fine in zip(levels, levels[1:]):
        parent = {i: j for j, g in enumerate(coarse) for i in g}
        for g in fine:
            assert len({parent[i] for i in g}) == 1
    assert all(sorted(i for g in lv for i in g) == list(range(len(a))) for lv in levels)
    assert len(levels[0]) == 2


def test_perron_levels_cycle_axes_in_two_parameters():
    a = bush(8, codim2_example(), Box(np.zeros(2), 0.25))
    levels = perron_levels(a)
    assert [len(lv) for lv in levels[:2]] == [2, 4]


def test_schedule_is_monotone():
    a = bush(32)
    sched = perron_schedule(a, 32, keep_snapshots=True)
    acc = [s.neighborhood for s in sched.stages if s.accepted]
    assert all(b <= a_ for a_, b in zip(acc, acc[1:]))
    assert acc[-1] < acc[0]
    assert sched.assignment.in_cube()
    assert all(s.anchors is not None for s in sched.stages if s.accepted)


def test_recentre_centres_free_axes():
    a = bush(8).with_anchors(np.tile([0.7, 0.0], (5, 1)))
    c = recentre(a).corners().reshape(-1, 2)[:, 0]
    assert c.min() == pytest.approx(-c.max())


def test_recentre_infeasible():
    anchors = np.zeros((5, 2))
    anchors[0, 0], anchors[1, 0] = -3.0, 3.0
    with pytest.raises(AnchorInfeasible):
        recentre(bush(8).with_anchors(anchors))


def test_serialization_round_trip():
    a = perron_schedule(bush(16), 16).assignment
    text = a.to_text()
    back = Assignment.from_text(text)
    assert back.to_text() == text
    assert back.R == 16
    assert np.array_equal(back.anchors, a.anchors)
    assert text.splitlines()[2] == f"# provenance = {a.provenance_hash()}"


def test_empty_assignment_text():
    with pytest.raises(EmptyNet):
        Assignment.from_text("# R = 4\n")
    with pytest.raises(EmptyNet):
        init_assignment([])


def test_slab_measure_of_bush():
    a = bush(8)
    # near the origin every segment crosses the slab; the slab measure shrinks with eps
    assert slab_measure(a, Slab([0.5], 0.25), res=256) > slab_measure(a, Slab([0.5], 0.05), res=256)
    r = slab_raster(a, Slab([0.5], 0.1), res=128)
    ys = r.occupied_points()[:, 1]
    assert ys.min() >= 0.4 - r.cell and ys.max() <= 0.6 + r.cell


def test_raster_hausdorff_zero_on_identical():
    r = slab_raster(bush(8), Slab([0.5], 0.2), res=64)
    assert raster_hausdorff(r, r) == 0.0


def test_verification_res_and_module_constant():
    assert verification_res(2.0, 64, 2) == 2048
    assert verification_res(2.0, 64, 4) == 1024
    assert verification_res(2.0, 64, 2, cap=512) == 512
    assert module_constant(2, 1.5) == 24.0


@given(st.sampled_from([8, 16, 32]))
def test_neighborhood_contains_segments(R):
    a = bush(R)
    assert neighborhood_measure(a, R) >= 2.0 / R


def test_small_union_reaches_target():
    fam = NormalFamily(parabola(), BOX1)
    a, sched = build_small_union_assignment(fam, 0.35, Budget(r_max=64))
    final = [s.neighborhood for s in sched.stages if s.accepted][-1]
    assert final <= 0.35 and a.R <= 64


def test_small_union_budget_exhausted():
    fam = NormalFamily(parabola(), BOX1)
    with pytest.raises(BudgetExhausted) as exc:
        build_small_union_assignment(fam, 0.05, Budget(r_max=16))
    assert exc.value.partial.R == 16 and exc.value.achieved > 0.05


def test_prop_one_family_ratio_is_verified():
    fam = build_prop_one_family(parabola(), BOX1, 0.6, Budget(r_max=64))
    p = fam.provenance
    assert p["ratio"] <= 0.6
    assert p["verification_res"] >= 4 * fam.R * 2 * p["half_width"]
    assert p["contained_in_neighborhood"]
    assert len(fam) == fam.R // 2 + 1
    # the recorded ratio is reproducible from the plates alone
    assert fam.ratio(p["half_width"], p["verification_res"]) == p["ratio"]


def test_prop_one_rejects_unreduced_box():
    with pytest.raises(DomainNotReduced):
        build_prop_one_family(codim2_example(), Box(np.zeros(2), 0.5), 0.5, Budget(r_max=8))


def test_codim2_construction_reaches_half():
    fam = build_prop_one_family(codim2_example(), Box(np.zeros(2), 0.25), 0.5, Budget(r_min=32, r_max=32), res=64)
    assert fam.provenance["ratio"] <= 0.5
