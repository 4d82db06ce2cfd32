"""Acceptance criteria 1-10, one test each (criterion 5 split by target).

Every test records a pass/fail line through the ``criterion`` fixture; the
lines are repeated in the terminal summary.
"""

import time
from pathlib import Path

import numpy as np
import pytest
from oracles import sampled_gr_distance

from nkakeya.config import load_config
from nkakeya.experiments import run_endpoint_experiment, run_kakeya_demo, run_symmetry_suite
from nkakeya.extension import BumpSpec, Field, verify_plate_lower_bound
from nkakeya.grassmann import Plane, gr_distance
from nkakeya.manifold import codim2_example, parabola
from nkakeya.norms import rademacher_test, weak_lq_norm


@pytest.fixture(scope="module")
def endpoint(tmp_path_factory):
    cfg = load_config(None, out=tmp_path_factory.mktemp("endpoint"))
    families = []
    t0 = time.perf_counter()
    rows, verdict = run_endpoint_experiment(cfg, families)
    return rows, verdict, families, time.perf_counter() - t0


def test_criterion_1_shear_identity(criterion):
    rng = np.random.Generator(np.random.Philox(1))
    t0 = time.perf_counter()
    worst = 0.0
    for m in (parabola(), codim2_example()):
        xi = rng.uniform(-0.5, 0.5, (1000, m.n))
        eta = rng.uniform(-0.5, 0.5, (1000, m.n))
        for a, b in zip(xi, eta):
            err = m.F(a + b) - m.F(b) - m.shear_matrix(b) @ m.F(a)
            worst = max(worst, float(np.abs(err).max()))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 1.0
    assert criterion(1, ok, f"max shear residual {worst:.2e} over 2 x 1000 pairs in {dt:.2f}s")


def test_criterion_2_symmetry_suite(criterion, tmp_path):
    t0 = time.perf_counter()
    worst = {}
    for name, preset, quad_n in (("parabola", "parabola", 2048), ("codim2", "codim2", 256)):
        cfg = load_config(None, manifold=preset, quad_n=quad_n, out=tmp_path / name)
        cfg.symmetry_cases = 20
        rows = run_symmetry_suite(cfg)
        assert len(rows) == 60
        worst[name] = max(r["residual"] for r in rows)
    dt = time.perf_counter() - t0
    ok = worst["parabola"] <= 1e-6 and worst["codim2"] <= 1e-5 and dt < 300
    assert criterion(2, ok, f"max residual parabola {worst['parabola']:.2e}, codim-2 {worst['codim2']:.2e} "
                            f"in {dt:.1f}s")


def test_criterion_3_grassmann_metric(criterion):
    rng = np.random.Generator(np.random.Philox(3))
    t0 = time.perf_counter()
    worst = 0.0
    for k, d in ((1, 2), (2, 3), (2, 4)):
        for _ in range(100):
            V = Plane(np.linalg.qr(rng.standard_normal((d, k)))[0])
            W = Plane(np.linalg.qr(rng.standard_normal((d, k)))[0])
            ref = sampled_gr_distance(V.basis, W.basis, 100_000, rng)
            worst = max(worst, abs(gr_distance(V, W) - ref))
    dt = time.perf_counter() - t0
    ok = worst <= 2e-3 and dt < 120
    assert criterion(3, ok, f"max |closed form - sampled oracle| {worst:.2e} over 300 pairs in {dt:.1f}s")


def test_criterion_4_plate_lower_bound(criterion):
    t0 = time.perf_counter()
    m = parabola()
    parts = []
    ok = True
    # eta = 0 is dilation-invariant, so c_min is flat in R; eta = 0.1 is a genuine tilt
    for eta in (0.0, 0.1):
        c = {R: verify_plate_lower_bound(m, [eta], R, quad_n=256) for R in (4.0, 8.0, 16.0)}
        lo, hi = min(c.values()), max(c.values())
        ok &= lo >= 1e-3 and hi / lo <= 4
        parts.append(f"eta={eta:g}: " + " ".join(f"{v:.5f}" for v in c.values()) + f" (spread {hi / lo:.4f})")
    dt = time.perf_counter() - t0
    ok &= dt < 600
    assert criterion(4, ok, f"c_min R^n at R=4,8,16; {'; '.join(parts)}; {dt:.1f}s")


def _res_per_unit(fam):
    p = fam.provenance
    return p["verification_res"] / (2 * p["half_width"])


def test_criterion_5a_ratio_quarter(endpoint, criterion):
    rows, _, fams, dt = endpoint
    fam = fams[0]
    ratio, R = fam.provenance["ratio"], fam.R
    ok = ratio <= 0.25 and R <= 2**10 and _res_per_unit(fam) >= 4 * R and not rows[0].error
    assert criterion("5a", ok, f"delta 0.25: verified ratio {ratio:.5f} at R={R:g}, "
                               f"{_res_per_unit(fam) / R:g} cells per 1/R (endpoint run {dt:.0f}s)")


def test_criterion_5b_ratio_eighth(endpoint, criterion):
    rows, _, fams, dt = endpoint
    fam = fams[1]
    ratio, R = fam.provenance["ratio"], fam.R
    ok = ratio <= 0.125 and R > fams[0].R and _res_per_unit(fam) >= 4 * R and dt < 900
    assert criterion("5b", ok, f"delta 0.125: best verified ratio {ratio:.5f} at R={R:g} "
                               f"({rows[1].error or 'target met'})")


def test_criterion_6_endpoint_trend(endpoint, criterion):
    rows, verdict, _, _ = endpoint
    lb = {r.delta_target: r.lb for r in rows}
    growth = lb[0.125] / lb[0.25]
    ok = growth >= 1.5
    assert criterion(6, ok, f"LB(0.125)/LB(0.25) = {lb[0.125]:.5f}/{lb[0.25]:.5f} = {growth:.4f} "
                            f"(needs 1.5); verdict {verdict}")


def test_criterion_7_weak_norm_oracle(criterion):
    rng = np.random.Generator(np.random.Philox(7))
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(100):
        size = int(rng.integers(1, 5000))
        v = rng.standard_normal(size) * rng.uniform(0.1, 10)
        if i % 3 == 0:
            v = np.round(v, 1)  # ties
        f = Field(np.zeros((size, 1)), v, float(rng.uniform(1e-4, 1)))
        q = float(rng.choice([1.0, 1.5, 2.0, 3.0, 4.0]))
        a = weak_lq_norm(f, q, "order").value
        b = weak_lq_norm(f, q, "sweep").value
        worst = max(worst, abs(a - b) / b)
    exact = True
    for count, cell, q in ((37, 0.01, 2.0), (1000, 1e-3, 1.5), (1, 0.5, 4.0)):
        f = Field(np.zeros((count + 9, 1)), np.r_[np.ones(count), np.zeros(9)], cell)
        exact &= weak_lq_norm(f, q).value == (count * cell) ** (1 / q)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and exact and dt < 60
    assert criterion(7, ok, f"max relative gap order vs sweep {worst:.2e}; indicators exact: {exact}; {dt:.2f}s")


def test_criterion_8_rademacher_window(criterion):
    m = parabola()
    specs = [BumpSpec([eta], 8.0) for eta in (-0.375, -0.125, 0.125, 0.375)]
    t0 = time.perf_counter()
    a = rademacher_test(m, specs, 100, 7, 256)
    b = rademacher_test(m, specs, 100, 7, 256)
    dt = time.perf_counter() - t0
    stable = a.median.hex() == b.median.hex()
    ok = a.within(8.0) and stable and dt < 300
    assert criterion(8, ok, f"median ratio {a.median:.6f} (min {a.min:.4f}, max {a.max:.4f}); "
                            f"bit-stable: {stable}; {dt:.1f}s")


def test_criterion_9_covering_and_area(criterion, tmp_path):
    cfg = load_config(None, out=tmp_path)
    a, stages = run_kakeya_demo(cfg)
    acc = [s for s in stages if s.accepted]
    track = [s.cover_energy_d / s.union_measure for s in acc]
    nb = [s.neighborhood_measure for s in acc]
    monotone = all(y <= x for x, y in zip(nb, nb[1:]))
    within = all(0.25 <= t <= 4 for t in track)
    ok = within and monotone and nb[-1] < 0.25 and a.d == 2
    assert criterion(9, ok, f"cover energy / union in [{min(track):.3f}, {max(track):.3f}], "
                            f"neighborhood {nb[0]:.4f} -> {nb[-1]:.4f} over {len(acc)} accepted stages "
                            f"(R={a.R:g})")


DETERMINISM = """
seed = 11
quad_n = 64
[endpoint]
schedule = [0.6, 0.45]
r_max = 64
[budget]
r_max = 64
[kakeya]
delta = 0.4
[symmetry]
cases = 3
"""


def _outputs(root: Path) -> dict:
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*"))
            if p.suffix in {".csv", ".svg", ".txt", ".pgm"}}


def test_criterion_10_determinism(criterion, tmp_path):
    conf = tmp_path / "c.toml"
    conf.write_text(DETERMINISM)
    runs = []
    for name in ("a", "b"):
        cfg = load_config(conf, out=tmp_path / name)
        run_endpoint_experiment(cfg)
        run_kakeya_demo(cfg)
        run_symmetry_suite(cfg)
        runs.append(_outputs(tmp_path / name))
    same = runs[0] == runs[1]
    kinds = sorted({Path(k).suffix for k in runs[0]})
    ok = same and ".csv" in kinds and ".svg" in kinds
    assert criterion(10, ok, f"{len(runs[0])} output files ({' '.join(kinds)}) byte-identical across reruns: {same}")
