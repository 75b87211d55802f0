import math

import numpy as np
import pytest

from fairdice.calibration import (TossDataset, TossRecord, fair_height, fair_height_stderr,
                                  fit_linear, parse_toss_csv)
from fairdice.errors import DomainError
from fairdice.models import (BipyramidSpec, BoxSpec, CoinSpec, PrismSpec, SharpenedPrismSpec,
                             dynamic_edge_probability, fair_thickness_geometric,
                             geometric_face_distribution)
from fairdice.simulate import (chunk_generator, derived_seed, sample_directions,
                               simulate_dynamic, simulate_geometric, synthesize_dataset)

M = 10 ** 6


def sigma(p, n):
    return math.sqrt(p * (1 - p) / n)


def test_cube_faces():
    res = simulate_geometric(BoxSpec(1, 1, 1), M, seed=1)
    assert sum(res.face_counts.values()) == M
    for label in res.face_counts:
        assert abs(res.frequency(label) - 1 / 6) < 3 * sigma(1 / 6, M)


def test_coin_edge_third():
    res = simulate_geometric(CoinSpec(1 / math.sqrt(2)), M, seed=2)
    assert abs(res.frequency("edge") - 1 / 3) < 3 * sigma(1 / 3, M)


@pytest.mark.parametrize("solid", [
    BoxSpec(1, 2, 3),
    PrismSpec(5, 1.7),
    SharpenedPrismSpec(6, 3.0, 0.8),
    BipyramidSpec(5, 1.2),
    CoinSpec(0.3),
], ids=repr)
def test_agrees_with_analytic(solid):
    res = simulate_geometric(solid, M, seed=3)
    dist = geometric_face_distribution(solid)
    for label, count in res.face_counts.items():
        p = dist.probability(label)
        assert abs(count / M - p) <= 4 * sigma(p, M) + 1e-12, label


class TestDynamic:
    def test_zero_thickness(self):
        for seed in range(5):
            assert simulate_dynamic(0.0, 10_000, seed).face_counts["edge"] == 0

    @pytest.mark.parametrize("t,p", [(1.0, 0.5), (4.057, 11 / 13)])
    def test_reference_thicknesses(self, t, p):
        res = simulate_dynamic(t, M, seed=4)
        assert abs(res.frequency("edge") - p) < 3 * sigma(p, M)

    def test_heads_tails_symmetric(self):
        res = simulate_dynamic(0.5, M, seed=5)
        q = (1 - dynamic_edge_probability(0.5)) / 2
        assert abs(res.frequency("top") - q) < 4 * sigma(q, M)
        assert abs(res.frequency("bottom") - q) < 4 * sigma(q, M)

    def test_errors(self):
        with pytest.raises(DomainError):
            simulate_dynamic(-1.0, 10, 0)
        with pytest.raises(DomainError):
            simulate_dynamic(1.0, 0, 0)


class TestDeterminism:
    def test_same_seed_same_counts(self):
        a = simulate_geometric(PrismSpec(7, 2.0), 300_000, seed=9)
        b = simulate_geometric(PrismSpec(7, 2.0), 300_000, seed=9)
        assert a == b
        c = simulate_geometric(PrismSpec(7, 2.0), 300_000, seed=10)
        assert a.face_counts != c.face_counts

    @pytest.mark.parametrize("workers", [2, 3, 8])
    def test_independent_of_workers(self, workers):
        serial = simulate_geometric(BoxSpec(1, 1.5, 2), 700_001, seed=11, workers=1)
        parallel = simulate_geometric(BoxSpec(1, 1.5, 2), 700_001, seed=11, workers=workers)
        assert serial == parallel
        d1 = simulate_dynamic(2.0, 500_000, 12, workers=1)
        assert d1 == simulate_dynamic(2.0, 500_000, 12, workers=workers)

    def test_json_stable(self):
        a = simulate_dynamic(1.0, 1000, 3).to_json()
        assert a == simulate_dynamic(1.0, 1000, 3).to_json()


class TestDirections:
    def test_uniformity(self):
        d = sample_directions(chunk_generator(0, 0), M)
        np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0, atol=1e-12)
        assert np.linalg.norm(d.mean(axis=0)) < 0.005
        octant = (d[:, 0] > 0) * 4 + (d[:, 1] > 0) * 2 + (d[:, 2] > 0)
        counts = np.bincount(octant, minlength=8)
        assert np.all(np.abs(counts - M / 8) < 4 * math.sqrt(M * (1 / 8) * (7 / 8)))

    def test_polar_distribution(self):
        # z of a uniform direction is uniform on [-1, 1]
        d = sample_directions(chunk_generator(1, 0), 200_000)
        hist, _ = np.histogram(d[:, 2], bins=10, range=(-1, 1))
        expected = 20_000
        assert np.all(np.abs(hist - expected) < 5 * math.sqrt(expected))


def test_consistency_over_seeds():
    solid = PrismSpec(5, 1.0)
    dist = geometric_face_distribution(solid)
    p = dist.end_probability

    def mean_error(trials):
        errs = []
        for seed in range(10):
            res = simulate_geometric(solid, trials, seed=100 + seed)
            errs.append(abs(res.kind_count("end") / trials - p))
        return np.mean(errs)

    assert mean_error(100_000) < mean_error(1_000)


class TestSynthesize:
    def test_shape(self):
        ds = synthesize_dataset("geometric", "cylinder", range(20, 30), 10.0, 500, seed=0)
        assert len(ds) == 10
        assert all(r.total == 500 for r in ds)
        assert [r.height_mm for r in ds] == list(map(float, range(20, 30)))
        assert parse_toss_csv(ds.to_csv()) == ds

    def test_deterministic(self):
        a = synthesize_dataset("dynamic", "cylinder", [20, 25], 10.0, 1000, seed=5)
        b = synthesize_dataset("dynamic", "cylinder", [20, 25], 10.0, 1000, seed=5)
        assert a == b

    def test_flat_generator_slope(self):
        # fixed t at every nominal height: the fitted slope should be noise
        heights = np.linspace(20, 29, 10)
        t = 1.7
        records = tuple(TossRecord(float(h), simulate_dynamic(t, 20_000, derived_seed(8, i))
                                   .kind_count("end"), 20_000)
                        for i, h in enumerate(heights))
        fit = fit_linear(TossDataset(records))
        assert abs(fit.a) < 3 * fit.slope_stderr

    def test_geometric_fair_height_recovered(self):
        n, r = 13, 10.0
        target = fair_thickness_geometric(n) * r
        heights = np.linspace(target - 1.5, target + 1.5, 7)
        ds = synthesize_dataset("geometric", "cylinder", heights, r, 400_000, seed=21, workers=4)
        fit = fit_linear(ds)
        h = fair_height(fit, n, 400_000)
        se = fair_height_stderr(fit, n, 400_000)
        assert abs(h - target) < 3 * se
        assert se < 0.2

    def test_prism_family(self):
        ds = synthesize_dataset("geometric", "prism", [10.0, 30.0], 10.0, 20_000, seed=1, sides=11)
        assert ds.records[0].heads_tails > ds.records[1].heads_tails

    def test_errors(self):
        with pytest.raises(DomainError):
            synthesize_dataset("dynamic", "prism", [1.0], 10.0, 10, 0, sides=5)
        with pytest.raises(DomainError):
            synthesize_dataset("geometric", "cylinder", [], 10.0, 10, 0)
        with pytest.raises(DomainError):
            synthesize_dataset("geometric", "prism", [1.0], 10.0, 10, 0)
