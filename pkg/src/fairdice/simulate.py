"""Seeded Monte Carlo estimates of face frequencies under both landing models.

Trials are split into fixed-size chunks, each driven by its own counter-based
Philox stream keyed by ``(seed, chunk index)``. Results therefore do not
depend on how many worker threads run the chunks.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .calibration import TossDataset, TossRecord
from .errors import DomainError
from .models import CoinSpec, PrismSpec, Solid, polyhedron_faces

CHUNK = 1 << 17


@dataclass(frozen=True)
class SimulationResult:
    trials: int
    face_counts: dict
    seed: int
    model: str
    kinds: dict

    def frequency(self, label: str) -> float:
        return self.face_counts[label] / self.trials

    def kind_count(self, kind: str) -> int:
        return sum(c for label, c in self.face_counts.items() if self.kinds[label] == kind)

    def to_json(self) -> str:
        return json.dumps({"model": self.model, "seed": self.seed, "trials": self.trials,
                           "face_counts": self.face_counts}, indent=2)


def chunk_generator(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def sample_directions(rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform unit vectors from normalized standard Gaussians."""
    g = rng.standard_normal((size, 3))
    norm = np.linalg.norm(g, axis=1, keepdims=True)
    # a zero Gaussian vector has probability zero; redraw just in case
    while np.any(norm == 0):
        bad = norm[:, 0] == 0
        g[bad] = rng.standard_normal((int(bad.sum()), 3))
        norm = np.linalg.norm(g, axis=1, keepdims=True)
    return g / norm


def _run_chunks(work, trials, seed, workers):
    if int(trials) != trials or trials < 1:
        raise DomainError(f"trials must be a positive integer, got {trials}")
    sizes = [min(CHUNK, trials - start) for start in range(0, trials, CHUNK)]
    jobs = [(seed, i, size) for i, size in enumerate(sizes)]
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: work(*job), jobs))
    else:
        parts = [work(*job) for job in jobs]
    return np.sum(parts, axis=0)


def _coin_classifier(coin: CoinSpec):
    r, half = coin.radius, coin.thickness / 2.0

    def classify(d):
        rho = np.hypot(d[:, 0], d[:, 1])
        # the ray from the center leaves through the rim before reaching an end plane
        edge = r * np.abs(d[:, 2]) < half * rho
        face = np.where(edge, 2, np.where(d[:, 2] > 0, 0, 1))
        return face

    return ["top", "bottom", "edge"], ["end", "end", "side"], classify


def _polyhedron_classifier(solid: Solid):
    faces = polyhedron_faces(solid)
    labels = [f[0] for f in faces]
    kinds = [f[1] for f in faces]
    normals, offsets = [], []
    for _, _, v in faces:
        n = np.cross(v[1] - v[0], v[2] - v[0])
        n /= np.linalg.norm(n)
        normals.append(n)
        offsets.append(float(n @ v[0]))
    scaled = np.array(normals) / np.array(offsets)[:, None]

    def classify(d):
        # exit face: the plane the ray from the centroid reaches first
        return np.argmax(d @ scaled.T, axis=1)

    return labels, kinds, classify


def simulate_geometric(solid: Solid, trials: int, seed: int, workers: int = 1) -> SimulationResult:
    """Toss under the geometric model: a uniform direction from the centroid picks the face it exits through."""
    if isinstance(solid, CoinSpec):
        labels, kinds, classify = _coin_classifier(solid)
    else:
        labels, kinds, classify = _polyhedron_classifier(solid)

    def work(seed, index, size):
        d = sample_directions(chunk_generator(seed, index), size)
        return np.bincount(classify(d), minlength=len(labels))

    counts = _run_chunks(work, trials, seed, workers)
    return SimulationResult(trials, {lab: int(c) for lab, c in zip(labels, counts)}, seed,
                            "geometric", dict(zip(labels, kinds)))


def simulate_dynamic(t: float, trials: int, seed: int, workers: int = 1) -> SimulationResult:
    """Toss a coin of thickness ratio ``t`` under the dynamic model.

    A landing angle uniform on ``(0, pi/2)`` below ``atan(t)`` means the coin
    ends on its edge; otherwise heads and tails are equally likely.
    """
    if not (math.isfinite(t) and t >= 0):
        raise DomainError(f"thickness ratio must be finite and non-negative, got {t}")
    limit = math.atan(t)

    def work(seed, index, size):
        rng = chunk_generator(seed, index)
        theta = rng.uniform(0.0, math.pi / 2.0, size)
        heads = rng.random(size) < 0.5
        edge = theta < limit
        return np.array([np.sum(~edge & heads), np.sum(~edge & ~heads), np.sum(edge)])

    counts = _run_chunks(work, trials, seed, workers)
    labels = ["top", "bottom", "edge"]
    return SimulationResult(trials, {lab: int(c) for lab, c in zip(labels, counts)}, seed,
                            "dynamic", dict(zip(labels, ["end", "end", "side"])))


def derived_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, np.uint64)[0])


def synthesize_dataset(model: str, family: str, heights, radius_mm: float, trials: int,
                       seed: int, sides: int | None = None, workers: int = 1) -> TossDataset:
    """Simulated heads/tails counts for each height, in calibration-input form.

    ``family`` is ``"cylinder"`` (radius ``radius_mm``) or ``"prism"`` (``sides``
    lateral faces, circumradius ``radius_mm``). The dynamic model only applies
    to cylinders.
    """
    heights = list(heights)
    if not heights:
        raise DomainError("need at least one height")
    if model not in ("dynamic", "geometric"):
        raise DomainError(f"unknown model {model!r}")
    if family == "prism":
        if model == "dynamic":
            raise DomainError("the dynamic model is defined for cylinders only")
        if sides is None:
            raise DomainError("prism family needs a side count")
    elif family != "cylinder":
        raise DomainError(f"unknown solid family {family!r}")
    if not radius_mm > 0:
        raise DomainError(f"radius must be positive, got {radius_mm}")

    records = []
    for i, h in enumerate(heights):
        s = derived_seed(seed, i)
        t = h / radius_mm
        if model == "dynamic":
            res = simulate_dynamic(t, trials, s, workers)
        elif family == "cylinder":
            res = simulate_geometric(CoinSpec(t), trials, s, workers)
        else:
            res = simulate_geometric(PrismSpec(sides, t), trials, s, workers)
        records.append(TossRecord(float(h), res.kind_count("end"), trials))
    return TossDataset(tuple(records))
