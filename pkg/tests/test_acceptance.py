"""End-to-end acceptance checks, one test per criterion.

A per-criterion PASS/FAIL summary is printed at the end of the pytest run
(see conftest.py).
"""

import itertools
import math
import time
from pathlib import Path

import numpy as np
import pytest

from fairdice.calibration import (fair_height, fairness_test, fit_linear, parse_toss_csv,
                                  scale_height)
from fairdice.mesh import (TriangleMesh, export_stl, generate_bipyramid, generate_carved_sphere,
                           generate_cylinder, generate_prism)
from fairdice.models import (BipyramidSpec, BoxSpec, CoinSpec, PrismSpec, SharpenedPrismSpec,
                             dynamic_edge_probability, face_solid_angles, fair_thickness_dynamic,
                             fair_thickness_geometric, geometric_face_distribution)
from fairdice.simulate import simulate_dynamic, simulate_geometric
from fairdice.sphere_design import cap_volume, carve, cvt_optimize

DATA = Path(__file__).parent / "data"

KNOWN_THICKNESS = [0.577, 1.000, 1.376, 1.732, 2.077, 2.414, 2.747, 3.078, 3.406, 3.732, 4.057]


def test_criterion_1():
    start = time.perf_counter()
    got = [fair_thickness_dynamic(n) for n in range(3, 14)]
    elapsed = time.perf_counter() - start
    np.testing.assert_allclose(got, KNOWN_THICKNESS, atol=5e-4, rtol=0)
    assert elapsed < 1.0


def test_criterion_2():
    for n in range(3, 361):
        assert abs(dynamic_edge_probability(fair_thickness_dynamic(n)) - (n - 2) / n) <= 1e-12, n


def test_criterion_3():
    start = time.perf_counter()
    cyl = fit_linear(parse_toss_csv((DATA / "cylinders_500.csv").read_text()))
    pri = fit_linear(parse_toss_csv((DATA / "prisms11_500.csv").read_text()))
    assert cyl.a == pytest.approx(-5.30909, abs=1e-3)
    assert cyl.b == pytest.approx(188.473, abs=1e-2)
    assert pri.a == pytest.approx(-7.12121, abs=1e-3)
    assert pri.b == pytest.approx(221.17, abs=1e-2)
    h_cyl = fair_height(cyl, 13, 500)
    h_pri = fair_height(pri, 13, 500)
    assert h_cyl == pytest.approx(21.011, abs=5e-3)
    assert h_pri == pytest.approx(20.255, abs=5e-3)
    h_in = scale_height(21.011, 0.9595)
    assert h_in == pytest.approx(20.160, abs=5e-3)
    assert h_in < h_pri < h_cyl
    assert time.perf_counter() - start < 1.0


def test_criterion_4():
    d = geometric_face_distribution(CoinSpec(1 / math.sqrt(2), 1.0))
    assert abs(d.probability("edge") - 1 / 3) <= 1e-10
    for n in range(3, 21):
        assert abs(fair_thickness_geometric(n, "cylinder") - (n - 2) / math.sqrt(n - 1)) <= 1e-9


def test_criterion_5():
    solids = [BoxSpec(1, 1, 1)]
    solids += [PrismSpec(n, h) for n in range(3, 25) for h in (0.1, 1.0, 3.7)]
    grid = (0.5, 1.0, 1.7, 2.9, 4.0)
    solids += [BoxSpec(a, b, c) for a, b, c in itertools.product(grid, repeat=3)]
    for s in solids:
        total = sum(w for _, _, w in face_solid_angles(s))
        assert abs(total - 4 * math.pi) <= 1e-9, s


def test_criterion_6():
    for n in range(3, 13):
        r_in = math.cos(math.pi / n)
        for h in np.linspace(0.1, 6.0, 20):
            inner = geometric_face_distribution(CoinSpec(h, r_in)).end_probability
            prism = geometric_face_distribution(PrismSpec(n, h)).end_probability
            outer = geometric_face_distribution(CoinSpec(h, 1.0)).end_probability
            assert inner < prism < outer, (n, h)


MC_SOLIDS = [
    BoxSpec(1, 1, 1),
    BoxSpec(1, 2, 3),
    CoinSpec(1 / math.sqrt(2)),
    CoinSpec(0.25),
    PrismSpec(3, 1.0),
    PrismSpec(11, 2.0255),
    PrismSpec(6, 0.4),
    BipyramidSpec(5, 1.3),
    SharpenedPrismSpec(6, 6.0, 0.8),
    SharpenedPrismSpec(4, 2.0, 0.3),
]
DYNAMIC_T = [0.0, 0.577, 1.0, 2.414, 4.057]


def test_criterion_7():
    start = time.perf_counter()
    trials = 10 ** 6
    for i, solid in enumerate(MC_SOLIDS):
        res = simulate_geometric(solid, trials, seed=1000 + i, workers=4)
        dist = geometric_face_distribution(solid)
        for label, count in res.face_counts.items():
            p = dist.probability(label)
            assert abs(count / trials - p) <= 4 * math.sqrt(p * (1 - p) / trials) + 1e-12
        assert res == simulate_geometric(solid, trials, seed=1000 + i, workers=4)
    for i, t in enumerate(DYNAMIC_T):
        res = simulate_dynamic(t, trials, seed=2000 + i)
        p = dynamic_edge_probability(t)
        assert abs(res.frequency("edge") - p) <= 4 * math.sqrt(p * (1 - p) / trials) + 1e-12
        assert res == simulate_dynamic(t, trials, seed=2000 + i)
    assert time.perf_counter() - start < 60.0


def test_criterion_8():
    failures = []
    for n in (4, 6, 12, 20, 100):
        start = time.perf_counter()
        lay = cvt_optimize(n, seed=0, tol=1e-8)
        elapsed = time.perf_counter() - start
        if not lay.converged:
            failures.append(f"n={n}: did not converge")
        if not lay.area_spread < 0.01:
            failures.append(f"n={n}: area spread {lay.area_spread:.4f}")
        if not lay.max_centroid_offset < 1e-6:
            failures.append(f"n={n}: centroid offset {lay.max_centroid_offset:.2e}")
        if n == 100 and elapsed >= 120.0:
            failures.append(f"n=100: took {elapsed:.1f}s")

    octa = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], float)
    rng = np.random.default_rng(6)
    start_pts = octa + 0.05 * rng.standard_normal(octa.shape)
    lay = cvt_optimize(6, initial=start_pts, tol=1e-10)
    if not np.all(np.abs(lay.areas - 2 * math.pi / 3) <= 1e-6):
        failures.append(f"perturbed octahedron areas {lay.areas}")
    assert not failures, "; ".join(failures)


def test_criterion_9():
    spec = carve(cvt_optimize(13, seed=0, tol=1e-9), 0.2)
    m = generate_carved_sphere(spec, 5, radius=1.0)
    m.validate()
    expected = 4 * math.pi / 3 - 13 * cap_volume(spec.cap_angle)
    assert m.signed_volume() == pytest.approx(expected, rel=1e-2)
    assert abs(np.linalg.norm(m.centroid()) - spec.centroid_displacement) <= 1e-2
    assert np.linalg.norm(m.centroid() - spec.centroid) <= 1e-2


def _sweep():
    builds = []
    for n in (3, 4, 5, 7, 11, 13, 24):
        builds.append(lambda n=n: generate_prism(n, 0.7 * n, 10.0))
        builds.append(lambda n=n: generate_prism(n, 3.0 * n, 10.0, sharpened=True, tip_height=2.5))
        builds.append(lambda n=n: generate_bipyramid(n, 4.0 + n, 10.0))
    for seg in (16, 32, 64, 100, 128, 256, 400):
        builds.append(lambda s=seg: generate_cylinder(10.0, 21.011, s))
    for n, frac in [(4, 0.3), (6, 0.4), (8, 0.2), (10, 0.3), (12, 0.2),
                    (13, 0.2), (14, 0.25), (16, 0.15), (20, 0.2)]:
        builds.append(lambda n=n, f=frac: generate_carved_sphere(
            carve(cvt_optimize(n, seed=2, tol=1e-7), f, max_displacement=None), 3, 10.0))
    # squat and elongated prisms at assorted scales
    for k in range(13):
        builds.append(lambda k=k: generate_prism(3 + k, 0.05 + 0.5 * k, 1.0 + k))
    return builds


def test_criterion_10():
    builds = _sweep()
    assert len(builds) == 50
    for build in builds:
        m = build()
        assert m.is_watertight()
        assert m.euler_characteristic() == 2
        assert m.signed_volume() > 0
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], float)
    tet = TriangleMesh(v, [(0, 1, 2), (0, 3, 1), (0, 2, 3), (1, 3, 2)])
    assert len(export_stl(tet)) == 284


def test_criterion_11():
    five = fairness_test(51, 100, 5)
    seven = fairness_test(28, 100, 7)
    assert abs(five.z) > 1.96 and five.inconsistent
    assert abs(seven.z) <= 1.96 and not seven.inconsistent
